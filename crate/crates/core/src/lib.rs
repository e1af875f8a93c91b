//! Approximate-hardware design flow for 4-tap angular intra prediction:
//! coefficient tables and their grouped approximations, prediction
//! geometry, a bit-exact software predictor, multiplierless constant
//! multiplication synthesis, combinational RTL emission with parse-back
//! verification, and an evaluation/throughput harness.

pub mod error;
pub mod eval;
pub mod filter_tables;
pub mod hdl_emit;
pub mod intra_geometry;
pub mod mcm_synth;
pub mod predictor;
pub mod report;
pub mod throughput;

pub use error::{Error, Result};
pub use eval::{
    bd_rate_percent, cost_sweep, error_eval, image_cases, load_pgm, mode_decision_divergence,
    synthetic_cases, BlockCase, DivergenceReport, ErrorReport, SweepRow,
};
pub use filter_tables::{
    distinct_value_count, load_builtin_tables, tap_demands, CoefficientTable, FilterId, TableSet,
    TapDemand, GROUPING_FACTORS,
};
pub use hdl_emit::{
    all_implementations, build_selection_table, emit_all, emit_mcm_module, emit_parallel_unit,
    emit_predictor_unit, parse_mcm_module, Architecture, EmitConfig, EmittedSet, Manifest,
    ParsedMcm, SelectionTable, Source, WindowDescriptor,
};
pub use intra_geometry::{
    extend_reference, inverse_angle, mode_angle, required_ref_range, sample_plan, BlockSpec,
    IntraMode, RefArray, SamplePlan,
};
pub use mcm_synth::{
    cost, normalize, synthesize, AdderGraph, CoefficientKind, CostReport, Heuristic,
    NormalizedCoefficient, NormalizedSet,
};
pub use predictor::{predict_block, predict_sample, PredictionConfig, SampleBlock};
pub use report::{EvalReport, OutputFormat};
pub use throughput::{ThroughputQuery, ThroughputReport};
