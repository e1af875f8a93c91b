//! RTL emission for the prediction datapaths: per-tap MCM blocks, the
//! MCM-plus-multiplexer architecture, the multiplier/ROM baseline, and
//! fused parallel-sample variants, plus the parse-back verifier that turns
//! emitted text back into an adder graph for simulation.
//!
//! The output dialect is a combinational Verilog-2001 subset: continuous
//! assignments only, no always blocks. All datapath signals are signed;
//! sample inputs are zero-extended by one bit into signed ports.

pub mod verilog;

use crate::error::{Error, Result};
use crate::filter_tables::{tap_demands, FilterId, TableSet, ROWS, TAPS};
use crate::mcm_synth::{
    ceil_log2, demand_coefficients, fuse_parallel, normalize, synthesize, AdderGraph,
    CoefficientKind, Heuristic, NormalizedSet, INPUT,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use verilog::{parse_design, BinOp, Design, Dir, Expr};

pub const PARALLEL_CHOICES: [u32; 6] = [1, 4, 8, 16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    /// MCM blocks + multiplexers; n = 1 is the precise variant.
    Mcm { n: u32 },
    /// Conventional multipliers fed by a coefficient ROM; always precise.
    Multiplier,
}

impl Architecture {
    pub fn impl_name(&self) -> String {
        match self {
            Architecture::Mcm { n: 1 } => "mcm_precise".to_string(),
            Architecture::Mcm { n } => format!("mcm_n{n}"),
            Architecture::Multiplier => "mult".to_string(),
        }
    }

    pub fn grouping(&self) -> u32 {
        match self {
            Architecture::Mcm { n } => *n,
            Architecture::Multiplier => 1,
        }
    }
}

/// The seven implementation rows: five approximations, the precise MCM
/// variant, and the multiplier baseline.
pub fn all_implementations() -> Vec<Architecture> {
    vec![
        Architecture::Mcm { n: 32 },
        Architecture::Mcm { n: 16 },
        Architecture::Mcm { n: 8 },
        Architecture::Mcm { n: 4 },
        Architecture::Mcm { n: 2 },
        Architecture::Mcm { n: 1 },
        Architecture::Multiplier,
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmitConfig {
    pub input_width: u32,
    pub prefix: String,
    pub architecture: Architecture,
    pub parallel_samples: u32,
}

impl EmitConfig {
    pub fn new(
        input_width: u32,
        prefix: impl Into<String>,
        architecture: Architecture,
        parallel_samples: u32,
    ) -> Result<Self> {
        if !PARALLEL_CHOICES.contains(&parallel_samples) {
            return Err(Error::InvalidConfig(format!(
                "parallel_samples {parallel_samples} not in {{1,4,8,16,32,64}}"
            )));
        }
        if !(8..=16).contains(&input_width) {
            return Err(Error::InvalidConfig(format!(
                "input width {input_width} outside [8, 16]"
            )));
        }
        Ok(EmitConfig {
            input_width,
            prefix: prefix.into(),
            architecture,
            parallel_samples,
        })
    }

    pub fn for_implementation(arch: Architecture, input_width: u32) -> Self {
        EmitConfig {
            input_width,
            prefix: arch.impl_name(),
            architecture: arch,
            parallel_samples: 1,
        }
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{self:?}"));
        let digest = h.finalize();
        digest.iter().take(8).fold(String::new(), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        })
    }
}

/// Where one (filter, k, tap) term comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Zero,
    Bypass {
        negate: bool,
    },
    /// Power-of-two coefficient: pure wiring through the MCM block.
    ShiftOnly {
        original: i64,
        shift: u32,
        negate: bool,
    },
    /// Odd-fundamental coefficient computed by the adder graph.
    Mcm {
        original: i64,
        fundamental: u64,
        shift: u32,
        negate: bool,
    },
}

impl Source {
    fn of_coefficient(c: i64) -> Source {
        if c == 0 {
            return Source::Zero;
        }
        let negate = c < 0;
        let mag = c.unsigned_abs();
        if mag == 1 {
            return Source::Bypass { negate };
        }
        let shift = mag.trailing_zeros();
        let fundamental = mag >> shift;
        if fundamental == 1 {
            Source::ShiftOnly {
                original: c,
                shift,
                negate,
            }
        } else {
            Source::Mcm {
                original: c,
                fundamental,
                shift,
                negate,
            }
        }
    }

    /// The coefficient this source reconstructs.
    pub fn original(&self) -> i64 {
        match *self {
            Source::Zero => 0,
            Source::Bypass { negate } => {
                if negate {
                    -1
                } else {
                    1
                }
            }
            Source::ShiftOnly { original, .. } | Source::Mcm { original, .. } => original,
        }
    }
}

/// Per-(filter, k, tap) source descriptors driving the term multiplexers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionTable {
    /// Indexed [filter][k][tap], filter 0 = fC, 1 = fG.
    pub entries: [[[Source; TAPS]; ROWS]; 2],
}

impl SelectionTable {
    pub fn get(&self, filter: FilterId, k: usize, tap: usize) -> Source {
        let f = match filter {
            FilterId::Fc => 0,
            FilterId::Fg => 1,
        };
        self.entries[f][k][tap]
    }

    /// Coverage: every (filter, k, tap) maps to exactly one source (by
    /// construction), and every demanded coefficient is referenced by at
    /// least one entry.
    pub fn validate(&self, tables: &TableSet) -> Result<()> {
        let demands = tap_demands(tables);
        for demand in &demands {
            for &c in &demand.coefficients {
                let referenced = self.entries.iter().any(|filter| {
                    filter
                        .iter()
                        .any(|row| row[demand.tap].original() == c as i64)
                });
                if !referenced {
                    return Err(Error::Invariant(format!(
                        "coefficient {c} of tap {} never referenced",
                        demand.tap
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Derives the selection table from a table pair: zeros become zero
/// sources, +/-1 bypasses, powers of two pure shifts, everything else an
/// MCM output.
pub fn build_selection_table(tables: &TableSet) -> SelectionTable {
    let mut entries = [[[Source::Zero; TAPS]; ROWS]; 2];
    for (f, table) in [&tables.fc, &tables.fg].into_iter().enumerate() {
        for (k, row) in entries[f].iter_mut().enumerate() {
            for (tap, entry) in row.iter_mut().enumerate() {
                *entry = Source::of_coefficient(table.rows[k][tap] as i64);
            }
        }
    }
    SelectionTable { entries }
}

fn coeff_port_name(c: i64) -> String {
    if c < 0 {
        format!("out_m{}", -c)
    } else {
        format!("out_{c}")
    }
}

fn signed_decl(width_bits: u32) -> String {
    format!("signed [{}:0]", width_bits - 1)
}

/// Signed width for the product of |c| with a `input_width`-bit sample.
fn product_width(input_width: u32, magnitude: u64) -> u32 {
    input_width + ceil_log2(magnitude) + 1
}

/// Emits one combinational MCM module: a single sample input and one output
/// per original coefficient in the set. Graph nodes become adder wires;
/// shift-only and bypass coefficients become wiring; negation is applied at
/// the output assignment so all shared nodes stay positive.
pub fn emit_mcm_module(
    graph: &AdderGraph,
    set: &NormalizedSet,
    input_width: u32,
    module_name: &str,
) -> String {
    let w = input_width;
    let mut ports = vec![format!("  input {} x", signed_decl(w + 1))];
    for c in &set.items {
        let width = product_width(w, c.original.unsigned_abs());
        ports.push(format!(
            "  output {} {}",
            signed_decl(width),
            coeff_port_name(c.original)
        ));
    }
    let mut body = String::new();
    for (i, node) in graph.nodes.iter().enumerate() {
        let id = i + 1;
        let width = product_width(w, node.value);
        let opname = |op: usize| {
            if op == INPUT {
                "x".to_string()
            } else {
                format!("n{op}")
            }
        };
        let side = |op: usize, shift: u32| {
            if shift == 0 {
                opname(op)
            } else {
                format!("({} <<< {})", opname(op), shift)
            }
        };
        let sign = if node.subtract { '-' } else { '+' };
        let _ = writeln!(body, "  wire {} n{};", signed_decl(width), id);
        let _ = writeln!(
            body,
            "  assign n{} = {} {} {}; // {} * x",
            id,
            side(node.lhs, node.lshift),
            sign,
            side(node.rhs, node.rshift),
            node.value
        );
    }
    for c in &set.items {
        let base = match c.kind {
            CoefficientKind::Mcm => format!("n{}", graph.outputs[&c.fundamental]),
            CoefficientKind::Bypass | CoefficientKind::ShiftOnly => "x".to_string(),
        };
        let shifted = if c.shift == 0 {
            base
        } else {
            format!("({base} <<< {})", c.shift)
        };
        let rhs = if c.negate {
            format!("-{shifted}")
        } else {
            shifted
        };
        let _ = writeln!(
            body,
            "  assign {} = {};",
            coeff_port_name(c.original),
            rhs
        );
    }
    format!(
        "module {module_name} (\n{}\n);\n{body}endmodule\n",
        ports.join(",\n")
    )
}

struct TapBlock {
    set: NormalizedSet,
    graph: AdderGraph,
}

fn tap_blocks(tables: &TableSet) -> Result<Vec<TapBlock>> {
    tap_demands(tables)
        .iter()
        .map(|demand| {
            let set = normalize(&demand_coefficients(demand));
            let graph = synthesize(&set.fundamentals(), Heuristic::Hcub)?;
            Ok(TapBlock { set, graph })
        })
        .collect()
}

fn term_expr(source: Source, ref_name: &str, out_prefix: &str) -> String {
    match source {
        Source::Zero => "0".to_string(),
        Source::Bypass { negate } => {
            if negate {
                format!("-{ref_name}")
            } else {
                ref_name.to_string()
            }
        }
        Source::ShiftOnly { original, .. } | Source::Mcm { original, .. } => {
            format!("{out_prefix}{}", coeff_port_name(original))
        }
    }
}

/// `assign <target> = (sel == 0) ? e0 : ... : e63;`
fn emit_sel_mux(target: &str, exprs: &[String]) -> String {
    let mut rhs = String::new();
    for (sel, e) in exprs.iter().enumerate() {
        if sel + 1 == exprs.len() {
            let _ = write!(rhs, "{e}");
        } else {
            let _ = write!(rhs, "(sel == {sel}) ? {e} :\n      ");
        }
    }
    format!("  assign {target} = {rhs};\n")
}

fn mux_sources(selection: &SelectionTable, tap: usize) -> Vec<Source> {
    // sel = filter * 32 + k
    let mut out = Vec::with_capacity(64);
    for filter in [FilterId::Fc, FilterId::Fg] {
        for k in 0..ROWS {
            out.push(selection.get(filter, k, tap));
        }
    }
    out
}

fn emit_control_header(w: u32) -> String {
    let mut s = String::new();
    s.push_str("  wire [5:0] sel;\n");
    s.push_str("  assign sel = (filter == 1) ? (k + 32) : k;\n");
    let _ = w;
    s
}

fn emit_sum_shift_clip(w: u32, terms: &[String], out_name: &str) -> String {
    let mut s = String::new();
    let acc_w = signed_decl(w + 10);
    let max = (1u64 << w) - 1;
    let _ = writeln!(s, "  wire {acc_w} acc_{out_name};");
    let sum = terms.join(" + ");
    let _ = writeln!(s, "  assign acc_{out_name} = {sum} + 32;");
    let _ = writeln!(s, "  wire {acc_w} shifted_{out_name};");
    let _ = writeln!(s, "  assign shifted_{out_name} = acc_{out_name} >>> 6;");
    let _ = writeln!(
        s,
        "  assign {out_name} = (shifted_{out_name} < 0) ? 0 : ((shifted_{out_name} > {max}) ? {max} : shifted_{out_name});"
    );
    s
}

/// Declares instance-output wires and the instance for one MCM block.
fn emit_mcm_instance(
    module: &str,
    inst: &str,
    x_signal: &str,
    set: &NormalizedSet,
    w: u32,
    wire_prefix: &str,
) -> String {
    let mut s = String::new();
    let mut conns = vec![format!(".x({x_signal})")];
    for c in &set.items {
        let width = product_width(w, c.original.unsigned_abs());
        let port = coeff_port_name(c.original);
        let wire = format!("{wire_prefix}{port}");
        let _ = writeln!(s, "  wire {} {};", signed_decl(width), wire);
        conns.push(format!(".{port}({wire})"));
    }
    let _ = writeln!(s, "  {module} {inst} ( {} );", conns.join(", "));
    s
}

/// Architecture (a) (MCM + muxes + adder tree + round/shift/clip) or
/// architecture (b) (ROM-fed multipliers). `tables` must be precise; the
/// MCM variants approximate them internally to the configured grouping.
/// The returned text is self-contained (MCM module definitions included).
pub fn emit_predictor_unit(config: &EmitConfig, tables: &TableSet) -> Result<String> {
    if tables.approx_n != 1 {
        return Err(Error::InvalidConfig(
            "emit_predictor_unit expects precise tables".into(),
        ));
    }
    let w = config.input_width;
    let max = (1u64 << w) - 1;
    let unit_name = format!("{}_unit", config.prefix);
    let header_ports = |extra: &mut Vec<String>| {
        for t in 0..TAPS {
            extra.push(format!("  input {} r{t}", signed_decl(w + 1)));
        }
        extra.push("  input [0:0] filter".to_string());
        extra.push("  input [4:0] k".to_string());
        extra.push(format!("  output [{}:0] p", w - 1));
    };
    let _ = max;
    match config.architecture {
        Architecture::Mcm { n } => {
            let approx = tables.approximated(n)?;
            let selection = build_selection_table(&approx);
            selection.validate(&approx)?;
            let blocks = tap_blocks(&approx)?;
            let mut text = String::new();
            for (t, block) in blocks.iter().enumerate() {
                let name = format!("{}_mcm{t}", config.prefix);
                text.push_str(&emit_mcm_module(&block.graph, &block.set, w, &name));
                text.push('\n');
            }
            let mut ports = Vec::new();
            header_ports(&mut ports);
            let _ = write!(text, "module {unit_name} (\n{}\n);\n", ports.join(",\n"));
            text.push_str(&emit_control_header(w));
            for (t, block) in blocks.iter().enumerate() {
                text.push_str(&emit_mcm_instance(
                    &format!("{}_mcm{t}", config.prefix),
                    &format!("u_mcm{t}"),
                    &format!("r{t}"),
                    &block.set,
                    w,
                    &format!("t{t}_"),
                ));
            }
            let mut terms = Vec::new();
            for t in 0..TAPS {
                let sources = mux_sources(&selection, t);
                let exprs: Vec<String> = sources
                    .iter()
                    .map(|&s| term_expr(s, &format!("r{t}"), &format!("t{t}_")))
                    .collect();
                let term = format!("term{t}");
                let _ = writeln!(text, "  wire {} {term};", signed_decl(w + 7));
                text.push_str(&emit_sel_mux(&term, &exprs));
                terms.push(term);
            }
            text.push_str(&emit_sum_shift_clip(w, &terms, "p"));
            text.push_str("endmodule\n");
            Ok(text)
        }
        Architecture::Multiplier => {
            let mut ports = Vec::new();
            header_ports(&mut ports);
            let mut text = format!("module {unit_name} (\n{}\n);\n", ports.join(",\n"));
            text.push_str(&emit_control_header(w));
            let mut terms = Vec::new();
            for t in 0..TAPS {
                // ROM emitted as a constant lookup over (filter, k).
                let mut exprs = Vec::with_capacity(64);
                for table in [&tables.fc, &tables.fg] {
                    for k in 0..ROWS {
                        exprs.push(format!("{}", table.rows[k][t]));
                    }
                }
                let _ = writeln!(text, "  wire signed [7:0] c{t};");
                text.push_str(&emit_sel_mux(&format!("c{t}"), &exprs));
                let _ = writeln!(text, "  wire {} m{t};", signed_decl(w + 8));
                let _ = writeln!(text, "  assign m{t} = c{t} * r{t};");
                terms.push(format!("m{t}"));
            }
            text.push_str(&emit_sum_shift_clip(w, &terms, "p"));
            text.push_str("endmodule\n");
            Ok(text)
        }
    }
}

/// Which reference each parallel lane starts at. The default window covers
/// `m` consecutive samples of one prediction row, so lane l reads
/// references l .. l+3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowDescriptor {
    pub lane_offsets: Vec<u32>,
}

impl WindowDescriptor {
    pub fn consecutive(lanes: u32) -> Self {
        WindowDescriptor {
            lane_offsets: (0..lanes).collect(),
        }
    }
}

/// Fused-parallel unit: one shared MCM block per reference input covering
/// the union of the demands of every tap position it serves, feeding
/// per-lane sum/shift/clip datapaths.
pub fn emit_parallel_unit(
    config: &EmitConfig,
    tables: &TableSet,
    window: &WindowDescriptor,
) -> Result<String> {
    let m = config.parallel_samples;
    if m <= 1 {
        return Err(Error::InvalidConfig(
            "emit_parallel_unit needs parallel_samples > 1".into(),
        ));
    }
    if window.lane_offsets.len() != m as usize {
        return Err(Error::InvalidConfig(format!(
            "window describes {} lanes, config says {m}",
            window.lane_offsets.len()
        )));
    }
    if tables.approx_n != 1 {
        return Err(Error::InvalidConfig(
            "emit_parallel_unit expects precise tables".into(),
        ));
    }
    let w = config.input_width;
    let n = config.architecture.grouping();
    let working = tables.approximated(n)?;
    let selection = build_selection_table(&working);
    let demands = tap_demands(&working);
    let num_refs = window.lane_offsets.iter().max().unwrap() + 4;
    let unit_name = format!("{}_par{m}", config.prefix);

    // taps served by each reference input
    let taps_of_ref: Vec<Vec<usize>> = (0..num_refs)
        .map(|j| {
            (0..TAPS)
                .filter(|&t| {
                    window
                        .lane_offsets
                        .iter()
                        .any(|&off| off + t as u32 == j)
                })
                .collect()
        })
        .collect();

    let mut ports = Vec::new();
    for j in 0..num_refs {
        ports.push(format!("  input {} r{j}", signed_decl(w + 1)));
    }
    ports.push("  input [0:0] filter".to_string());
    ports.push("  input [4:0] k".to_string());
    for l in 0..m {
        ports.push(format!("  output [{}:0] p{l}", w - 1));
    }

    let mut text = String::new();
    match config.architecture {
        Architecture::Mcm { .. } => {
            // one fused demand (and module definition) per distinct tap set
            let mut fused_by_taps: BTreeMap<Vec<usize>, (String, NormalizedSet, AdderGraph)> =
                BTreeMap::new();
            for taps in &taps_of_ref {
                if taps.is_empty() || fused_by_taps.contains_key(taps) {
                    continue;
                }
                let fused = fuse_parallel(
                    &taps.iter().map(|&t| demands[t].clone()).collect::<Vec<_>>(),
                )?;
                let set = normalize(&demand_coefficients(&fused));
                let graph = synthesize(&set.fundamentals(), Heuristic::Hcub)?;
                let name = format!("{unit_name}_mcm_g{}", fused_by_taps.len());
                fused_by_taps.insert(taps.clone(), (name, set, graph));
            }
            for (name, set, graph) in fused_by_taps.values() {
                text.push_str(&emit_mcm_module(graph, set, w, name));
                text.push('\n');
            }
            let _ = write!(text, "module {unit_name} (\n{}\n);\n", ports.join(",\n"));
            text.push_str(&emit_control_header(w));
            for (j, taps) in taps_of_ref.iter().enumerate() {
                if taps.is_empty() {
                    continue;
                }
                let (name, set, _) = &fused_by_taps[taps];
                text.push_str(&emit_mcm_instance(
                    name,
                    &format!("u_ref{j}"),
                    &format!("r{j}"),
                    set,
                    w,
                    &format!("ref{j}_"),
                ));
            }
            for (l, &off) in window.lane_offsets.iter().enumerate() {
                let mut terms = Vec::new();
                for t in 0..TAPS {
                    let j = off as usize + t;
                    let sources = mux_sources(&selection, t);
                    let exprs: Vec<String> = sources
                        .iter()
                        .map(|&s| term_expr(s, &format!("r{j}"), &format!("ref{j}_")))
                        .collect();
                    let term = format!("l{l}_term{t}");
                    let _ = writeln!(text, "  wire {} {term};", signed_decl(w + 7));
                    text.push_str(&emit_sel_mux(&term, &exprs));
                    terms.push(term);
                }
                text.push_str(&emit_sum_shift_clip(w, &terms, &format!("p{l}")));
            }
            text.push_str("endmodule\n");
        }
        Architecture::Multiplier => {
            let _ = write!(text, "module {unit_name} (\n{}\n);\n", ports.join(",\n"));
            text.push_str(&emit_control_header(w));
            // the ROM is shared by all lanes
            for t in 0..TAPS {
                let mut exprs = Vec::with_capacity(64);
                for table in [&working.fc, &working.fg] {
                    for k in 0..ROWS {
                        exprs.push(format!("{}", table.rows[k][t]));
                    }
                }
                let _ = writeln!(text, "  wire signed [7:0] c{t};");
                text.push_str(&emit_sel_mux(&format!("c{t}"), &exprs));
            }
            for (l, &off) in window.lane_offsets.iter().enumerate() {
                let mut terms = Vec::new();
                for t in 0..TAPS {
                    let j = off as usize + t;
                    let _ = writeln!(text, "  wire {} l{l}_m{t};", signed_decl(w + 8));
                    let _ = writeln!(text, "  assign l{l}_m{t} = c{t} * r{j};");
                    terms.push(format!("l{l}_m{t}"));
                }
                text.push_str(&emit_sum_shift_clip(w, &terms, &format!("p{l}")));
            }
            text.push_str("endmodule\n");
        }
    }
    Ok(text)
}

// -------------------------------------------------------------- parse-back

/// Output wiring of one parsed MCM module: operand, left shift, sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputWiring {
    pub operand: usize,
    pub shift: u32,
    pub negate: bool,
}

/// An MCM module reconstructed from emitted text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedMcm {
    pub module_name: String,
    pub graph: AdderGraph,
    /// original coefficient -> wiring
    pub outputs: BTreeMap<i64, OutputWiring>,
}

impl ParsedMcm {
    /// Products original * x, by graph interpretation.
    pub fn evaluate(&self, x: i64) -> BTreeMap<i64, i64> {
        let vals = self.graph.node_values(x);
        self.outputs
            .iter()
            .map(|(&c, wiring)| {
                let mut v = vals[wiring.operand] << wiring.shift;
                if wiring.negate {
                    v = -v;
                }
                (c, v)
            })
            .collect()
    }
}

fn parse_coeff_port(name: &str) -> Option<i64> {
    let rest = name.strip_prefix("out_")?;
    if let Some(mag) = rest.strip_prefix('m') {
        mag.parse::<i64>().ok().map(|v| -v)
    } else {
        rest.parse::<i64>().ok()
    }
}

/// `ident` or `(ident <<< shift)`.
fn match_shifted_ref(e: &Expr) -> Option<(&str, u32)> {
    match e {
        Expr::Ident(s) => Some((s, 0)),
        Expr::Binary(BinOp::Shl, a, b) => match (a.as_ref(), b.as_ref()) {
            (Expr::Ident(s), Expr::Num(n)) => Some((s, *n as u32)),
            _ => None,
        },
        _ => None,
    }
}

/// Reconstructs the adder graph from text produced by [`emit_mcm_module`].
pub fn parse_mcm_module(text: &str) -> Result<ParsedMcm> {
    let design = parse_design(text)?;
    if design.modules.len() != 1 {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected one module, found {}", design.modules.len()),
        });
    }
    let module = design.modules.values().next().unwrap();
    let mut operands: BTreeMap<String, usize> = BTreeMap::new();
    operands.insert("x".to_string(), INPUT);
    let mut graph = AdderGraph {
        nodes: Vec::new(),
        outputs: BTreeMap::new(),
    };
    let mut outputs = BTreeMap::new();
    let bad = |msg: String| Error::Parse {
        line: 0,
        message: msg,
    };
    for (target, expr) in module.assigns() {
        if let Some(original) = parse_coeff_port(target) {
            let (inner, negate) = match expr {
                Expr::Neg(inner) => (inner.as_ref(), true),
                other => (other, false),
            };
            let (name, shift) = match_shifted_ref(inner)
                .ok_or_else(|| bad(format!("unrecognized output expression for {target}")))?;
            let &operand = operands
                .get(name)
                .ok_or_else(|| bad(format!("output {target} references unknown '{name}'")))?;
            outputs.insert(
                original,
                OutputWiring {
                    operand,
                    shift,
                    negate,
                },
            );
        } else {
            let (op, lhs, rhs) = match expr {
                Expr::Binary(op @ (BinOp::Add | BinOp::Sub), a, b) => (op, a, b),
                _ => return Err(bad(format!("wire {target} is not an add/sub node"))),
            };
            let (lname, lshift) = match_shifted_ref(lhs)
                .ok_or_else(|| bad(format!("bad left operand in {target}")))?;
            let (rname, rshift) = match_shifted_ref(rhs)
                .ok_or_else(|| bad(format!("bad right operand in {target}")))?;
            let &l = operands
                .get(lname)
                .ok_or_else(|| bad(format!("{target} references unknown '{lname}'")))?;
            let &r = operands
                .get(rname)
                .ok_or_else(|| bad(format!("{target} references unknown '{rname}'")))?;
            let subtract = *op == BinOp::Sub;
            let a = graph.operand_value(l) << lshift;
            let b = graph.operand_value(r) << rshift;
            let value = if subtract {
                a.checked_sub(b)
                    .ok_or_else(|| bad(format!("{target} computes a negative constant")))?
            } else {
                a + b
            };
            graph.nodes.push(crate::mcm_synth::AdderNode {
                lhs: l,
                lshift,
                rhs: r,
                rshift,
                subtract,
                value,
            });
            operands.insert(target.clone(), graph.nodes.len());
        }
    }
    // register graph outputs under fundamentals realized by adder nodes
    for wiring in outputs.values() {
        if wiring.operand != INPUT {
            let f = graph.operand_value(wiring.operand);
            graph.outputs.insert(f, wiring.operand);
        }
    }
    Ok(ParsedMcm {
        module_name: module.name.clone(),
        graph,
        outputs,
    })
}

// ------------------------------------------------------------ file bundles

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PortInfo {
    pub name: String,
    pub dir: String,
    pub width: u32,
    pub signed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModuleInfo {
    pub file: String,
    pub module: String,
    pub ports: Vec<PortInfo>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub implementation: String,
    pub input_width: u32,
    pub parallel_samples: u32,
    pub config_hash: String,
    pub modules: Vec<ModuleInfo>,
}

#[derive(Debug, Clone)]
pub struct EmittedFile {
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct EmittedSet {
    pub files: Vec<EmittedFile>,
    pub manifest: Manifest,
}

fn modules_of(file: &str, text: &str) -> Result<Vec<ModuleInfo>> {
    let design: Design = parse_design(text)?;
    Ok(design
        .modules
        .values()
        .map(|m| ModuleInfo {
            file: file.to_string(),
            module: m.name.clone(),
            ports: m
                .ports
                .iter()
                .map(|p| PortInfo {
                    name: p.name.clone(),
                    dir: match p.dir {
                        Dir::Input => "input".to_string(),
                        Dir::Output => "output".to_string(),
                    },
                    width: p.width,
                    signed: p.signed,
                })
                .collect(),
        })
        .collect())
}

/// Emits every file for a configuration: per-tap MCM modules (MCM
/// architectures only), the single-sample unit, the parallel unit when
/// requested, and a manifest describing modules, port widths, and the
/// config hash.
pub fn emit_all(config: &EmitConfig, tables: &TableSet) -> Result<EmittedSet> {
    let mut files = Vec::new();
    if let Architecture::Mcm { n } = config.architecture {
        let approx = tables.approximated(n)?;
        for (t, block) in tap_blocks(&approx)?.iter().enumerate() {
            let name = format!("{}_mcm{t}", config.prefix);
            files.push(EmittedFile {
                name: format!("{name}.v"),
                text: emit_mcm_module(&block.graph, &block.set, config.input_width, &name),
            });
        }
    }
    files.push(EmittedFile {
        name: format!("{}_unit.v", config.prefix),
        text: emit_predictor_unit(config, tables)?,
    });
    if config.parallel_samples > 1 {
        let window = WindowDescriptor::consecutive(config.parallel_samples);
        files.push(EmittedFile {
            name: format!("{}_par{}.v", config.prefix, config.parallel_samples),
            text: emit_parallel_unit(config, tables, &window)?,
        });
    }
    let mut modules = Vec::new();
    for f in &files {
        modules.extend(modules_of(&f.name, &f.text)?);
    }
    Ok(EmittedSet {
        manifest: Manifest {
            implementation: config.architecture.impl_name(),
            input_width: config.input_width,
            parallel_samples: config.parallel_samples,
            config_hash: config.hash(),
            modules,
        },
        files,
    })
}

/// Input ranges of a unit module, for simulation stimuli and width checks.
pub fn unit_input_ranges(config: &EmitConfig, num_refs: u32) -> BTreeMap<String, (i64, i64)> {
    let max = (1i64 << config.input_width) - 1;
    let mut ranges = BTreeMap::new();
    for j in 0..num_refs {
        ranges.insert(format!("r{j}"), (0, max));
    }
    ranges.insert("filter".to_string(), (0, 1));
    ranges.insert("k".to_string(), (0, 31));
    ranges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter_tables::load_builtin_tables;

    #[test]
    fn selection_k0_fc_row_is_zero_shift_zero_zero() {
        let tables = load_builtin_tables();
        let sel = build_selection_table(&tables);
        assert_eq!(sel.get(FilterId::Fc, 0, 0), Source::Zero);
        assert_eq!(
            sel.get(FilterId::Fc, 0, 1),
            Source::ShiftOnly {
                original: 64,
                shift: 6,
                negate: false
            }
        );
        assert_eq!(sel.get(FilterId::Fc, 0, 2), Source::Zero);
        assert_eq!(sel.get(FilterId::Fc, 0, 3), Source::Zero);
    }

    #[test]
    fn selection_n16_k20_tap2_is_mcm_51() {
        let tables = load_builtin_tables().approximated(16).unwrap();
        let sel = build_selection_table(&tables);
        match sel.get(FilterId::Fc, 20, 2) {
            Source::Mcm {
                original: 51,
                fundamental: 51,
                shift: 0,
                negate: false,
            } => {}
            other => panic!("expected MCM source for 51, got {other:?}"),
        }
    }

    #[test]
    fn selection_covers_all_demands_for_every_n() {
        for n in [1u32, 2, 4, 8, 16, 32] {
            let tables = load_builtin_tables().approximated(n).unwrap();
            let sel = build_selection_table(&tables);
            sel.validate(&tables).unwrap();
        }
    }

    #[test]
    fn mcm_module_for_three_has_one_adder() {
        let set = normalize(&[3]);
        let graph = synthesize(&set.fundamentals(), Heuristic::Hcub).unwrap();
        let text = emit_mcm_module(&graph, &set, 10, "demo_mcm");
        assert_eq!(text.matches("assign n").count(), 1);
        assert!(text.contains("out_3"));
        let parsed = parse_mcm_module(&text).unwrap();
        assert_eq!(parsed.graph.adder_count(), 1);
        for x in [0i64, 1, 511, 1023] {
            assert_eq!(parsed.evaluate(x)[&3], 3 * x);
        }
    }

    #[test]
    fn mcm_module_outputs_named_for_grouped_constants() {
        let tables = load_builtin_tables().approximated(16).unwrap();
        let demand = &tap_demands(&tables)[2];
        let set = normalize(&demand_coefficients(demand));
        let graph = synthesize(&set.fundamentals(), Heuristic::Hcub).unwrap();
        let text = emit_mcm_module(&graph, &set, 10, "mcm_n16_mcm2");
        for name in ["out_16", "out_19", "out_27", "out_51"] {
            assert!(text.contains(name), "missing {name}");
        }
    }

    #[test]
    fn emission_is_deterministic() {
        let tables = load_builtin_tables();
        let config = EmitConfig::for_implementation(Architecture::Mcm { n: 16 }, 10);
        let a = emit_predictor_unit(&config, &tables).unwrap();
        let b = emit_predictor_unit(&config, &tables).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corrupted_shift_parses_but_evaluates_differently() {
        let set = normalize(&[51]);
        let graph = synthesize(&set.fundamentals(), Heuristic::Hcub).unwrap();
        let text = emit_mcm_module(&graph, &set, 10, "demo");
        let corrupted = text.replacen("<<< 4", "<<< 3", 1);
        assert_ne!(text, corrupted);
        let parsed = parse_mcm_module(&corrupted).unwrap();
        assert_ne!(parsed.evaluate(7)[&51], 51 * 7);
    }

    #[test]
    fn parallel_shares_one_mcm_instance_per_reference() {
        // Every reference of an interior position serves all four taps, so
        // identical demands share a single module definition; each
        // reference input gets exactly one instance.
        let tables = load_builtin_tables();
        let config = EmitConfig::new(10, "mcm_n32", Architecture::Mcm { n: 32 }, 4).unwrap();
        let window = WindowDescriptor::consecutive(4);
        let text = emit_parallel_unit(&config, &tables, &window).unwrap();
        let instances = text.matches("u_ref").count();
        assert_eq!(instances, 7); // 4 lanes -> 7 reference inputs
    }

    #[test]
    fn manifest_lists_all_modules_with_hash() {
        let tables = load_builtin_tables();
        let config = EmitConfig::for_implementation(Architecture::Mcm { n: 32 }, 10);
        let set = emit_all(&config, &tables).unwrap();
        assert_eq!(set.files.len(), 5); // 4 MCM files + unit
        assert!(!set.manifest.config_hash.is_empty());
        assert!(set
            .manifest
            .modules
            .iter()
            .any(|m| m.module == "mcm_n32_unit"));
    }

    #[test]
    fn width_safety_holds_for_all_single_units() {
        let tables = load_builtin_tables();
        for arch in all_implementations() {
            let config = EmitConfig::for_implementation(arch, 10);
            let text = emit_predictor_unit(&config, &tables).unwrap();
            let design = parse_design(&text).unwrap();
            let ranges = unit_input_ranges(&config, 4);
            verilog::check_widths(&design, &format!("{}_unit", config.prefix), &ranges)
                .unwrap_or_else(|e| panic!("{}: {e}", config.prefix));
        }
    }
}
