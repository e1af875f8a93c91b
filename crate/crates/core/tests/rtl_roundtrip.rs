//! RTL round-trip checks beyond the acceptance gate: golden-file
//! stability, parallel-unit simulation against the software predictor,
//! and width safety of the parallel datapaths.

use intra_mcm::filter_tables::{load_builtin_tables, FilterId};
use intra_mcm::hdl_emit::verilog::{check_widths, parse_design, simulate};
use intra_mcm::hdl_emit::{
    emit_all, emit_parallel_unit, unit_input_ranges, Architecture, EmitConfig, WindowDescriptor,
};
use intra_mcm::predictor::{predict_sample, PredictionConfig};
use intra_mcm::RefArray;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[test]
fn golden_mcm_module_is_stable() {
    let tables = load_builtin_tables();
    let config = EmitConfig::for_implementation(Architecture::Mcm { n: 32 }, 10);
    let set = emit_all(&config, &tables).unwrap();
    let emitted = set
        .files
        .iter()
        .find(|f| f.name == "mcm_n32_mcm2.v")
        .expect("tap-2 module present");
    let golden = include_str!("golden/mcm_n32_mcm2.v");
    assert_eq!(
        emitted.text, golden,
        "emitted tap-2 module for n=32 drifted from the checked-in golden file"
    );
}

#[test]
fn manifest_round_trips_through_json() {
    let tables = load_builtin_tables();
    let config = EmitConfig::for_implementation(Architecture::Mcm { n: 16 }, 10);
    let set = emit_all(&config, &tables).unwrap();
    let json = serde_json::to_string(&set.manifest).unwrap();
    let back: intra_mcm::Manifest = serde_json::from_str(&json).unwrap();
    assert_eq!(back.config_hash, set.manifest.config_hash);
    assert_eq!(back.modules.len(), set.manifest.modules.len());
}

fn check_parallel(arch: Architecture, m: u32, stimuli: usize) {
    let tables = load_builtin_tables();
    let config = EmitConfig::new(10, arch.impl_name(), arch, m).unwrap();
    let window = WindowDescriptor::consecutive(m);
    let text = emit_parallel_unit(&config, &tables, &window).unwrap();
    let design = parse_design(&text).unwrap();
    let module = format!("{}_par{m}", config.prefix);
    let num_refs = m + 3;

    let ranges = unit_input_ranges(&config, num_refs);
    check_widths(&design, &module, &ranges).unwrap();

    let approx = tables.approximated(arch.grouping()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7 + m as u64);
    for _ in 0..stimuli {
        let r: Vec<i64> = (0..num_refs).map(|_| rng.gen_range(0..1024)).collect();
        let filter = if rng.gen_bool(0.5) {
            FilterId::Fg
        } else {
            FilterId::Fc
        };
        let k = rng.gen_range(0..32usize);
        let mut inputs = BTreeMap::new();
        for (j, &v) in r.iter().enumerate() {
            inputs.insert(format!("r{j}"), v);
        }
        inputs.insert("filter".into(), (filter == FilterId::Fg) as i64);
        inputs.insert("k".into(), k as i64);
        let out = simulate(&design, &module, &inputs).unwrap();

        let refs = RefArray::new(r.iter().map(|&v| v as u32).collect(), 0);
        let sw = PredictionConfig::new(10, approx.clone(), filter).unwrap();
        for lane in 0..m {
            let expect = predict_sample(&refs, lane as i64, k, &sw).unwrap();
            assert_eq!(
                out[&format!("p{lane}")],
                expect as i64,
                "{module} lane {lane} filter {} k {k}",
                filter.name()
            );
        }
    }
}

#[test]
fn parallel_mcm_unit_matches_software_lane_by_lane() {
    check_parallel(Architecture::Mcm { n: 32 }, 4, 40);
    check_parallel(Architecture::Mcm { n: 16 }, 8, 20);
}

#[test]
fn parallel_multiplier_unit_matches_software_lane_by_lane() {
    check_parallel(Architecture::Multiplier, 4, 40);
}

#[test]
fn emitted_files_parse_as_a_whole() {
    let tables = load_builtin_tables();
    for arch in [Architecture::Mcm { n: 8 }, Architecture::Multiplier] {
        let mut config = EmitConfig::for_implementation(arch, 10);
        config.parallel_samples = 4;
        let set = emit_all(&config, &tables).unwrap();
        for f in &set.files {
            parse_design(&f.text).unwrap_or_else(|e| panic!("{}: {e}", f.name));
        }
        assert!(set.files.iter().any(|f| f.name.ends_with("_par4.v")));
    }
}
