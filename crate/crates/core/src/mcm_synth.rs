//! Multiplierless multiple-constant-multiplication synthesis: coefficient
//! normalization to odd fundamentals, adder-shift graph construction with a
//! shared-subexpression heuristic and a canonical-signed-digit baseline, an
//! exact evaluation oracle, and cost proxies.

use crate::error::{Error, Result};
use crate::filter_tables::TapDemand;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoefficientKind {
    /// Needs an adder-graph output (odd fundamental >= 3).
    Mcm,
    /// +/-1: the reference is routed around the MCM block.
    Bypass,
    /// Power of two: pure wiring.
    ShiftOnly,
}

/// A signed coefficient decomposed as (-1)^negate * fundamental * 2^shift
/// with the fundamental odd and >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedCoefficient {
    pub original: i64,
    pub fundamental: u64,
    pub shift: u32,
    pub negate: bool,
    pub kind: CoefficientKind,
}

/// Result of [`normalize`]: one entry per distinct nonzero original, plus a
/// record of whether 0 appeared and was dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedSet {
    pub items: Vec<NormalizedCoefficient>,
    pub zero_dropped: bool,
}

impl NormalizedSet {
    /// Deduplicated odd fundamentals >= 3, ascending. This is the input to
    /// graph synthesis; coefficients sharing a fundamental are computed once.
    pub fn fundamentals(&self) -> Vec<u64> {
        let set: BTreeSet<u64> = self
            .items
            .iter()
            .filter(|c| c.kind == CoefficientKind::Mcm)
            .map(|c| c.fundamental)
            .collect();
        set.into_iter().collect()
    }
}

/// Decomposes each coefficient: 0 is removed, +/-1 becomes a bypass, powers
/// of two become shift-only wiring, everything else maps to its odd
/// fundamental. Multiplications by zeros and ones never reach the graph.
pub fn normalize(coefficients: &[i64]) -> NormalizedSet {
    let mut seen = BTreeSet::new();
    let mut items = Vec::new();
    let mut zero_dropped = false;
    for &c in coefficients {
        if c == 0 {
            zero_dropped = true;
            continue;
        }
        if !seen.insert(c) {
            continue;
        }
        let negate = c < 0;
        let mag = c.unsigned_abs();
        let shift = mag.trailing_zeros();
        let fundamental = mag >> shift;
        let kind = if mag == 1 {
            CoefficientKind::Bypass
        } else if fundamental == 1 {
            CoefficientKind::ShiftOnly
        } else {
            CoefficientKind::Mcm
        };
        items.push(NormalizedCoefficient {
            original: c,
            fundamental,
            shift,
            negate,
            kind,
        });
    }
    items.sort_by_key(|c| c.original);
    NormalizedSet {
        items,
        zero_dropped,
    }
}

pub const INPUT: usize = 0;

/// One add/sub node: value = (lhs << lshift) +/- (rhs << rshift). Operand 0
/// is the graph input; operand i + 1 is node i. Node values are always odd
/// and positive, so exactly one shift is nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdderNode {
    pub lhs: usize,
    pub lshift: u32,
    pub rhs: usize,
    pub rshift: u32,
    pub subtract: bool,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdderGraph {
    pub nodes: Vec<AdderNode>,
    /// fundamental -> operand id of the node computing it.
    pub outputs: BTreeMap<u64, usize>,
}

impl AdderGraph {
    pub fn adder_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn operand_value(&self, operand: usize) -> u64 {
        if operand == INPUT {
            1
        } else {
            self.nodes[operand - 1].value
        }
    }

    /// Node values at a concrete input, index 0 = input.
    pub fn node_values(&self, x: i64) -> Vec<i64> {
        let mut vals = Vec::with_capacity(self.nodes.len() + 1);
        vals.push(x);
        for n in &self.nodes {
            let a = vals[n.lhs] << n.lshift;
            let b = vals[n.rhs] << n.rshift;
            vals.push(if n.subtract { a - b } else { a + b });
        }
        vals
    }

    pub fn depth_of(&self, operand: usize) -> usize {
        let mut depths = vec![0usize];
        for n in &self.nodes {
            depths.push(depths[n.lhs].max(depths[n.rhs]) + 1);
        }
        depths[operand]
    }

    pub fn depth(&self) -> usize {
        (0..=self.nodes.len())
            .map(|op| self.depth_of(op))
            .max()
            .unwrap_or(0)
    }

    /// Structural checks: operands precede their node (acyclic by index),
    /// annotations match symbolic evaluation at input = 1, node values odd
    /// and positive, outputs covered.
    pub fn validate(&self, fundamentals: &[u64]) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            let id = i + 1;
            if n.lhs >= id || n.rhs >= id {
                return Err(Error::Invariant(format!("node {id} references itself or later")));
            }
            let a = self.operand_value(n.lhs) << n.lshift;
            let b = self.operand_value(n.rhs) << n.rshift;
            let v = if n.subtract {
                a.checked_sub(b)
                    .ok_or_else(|| Error::Invariant(format!("node {id} is negative")))?
            } else {
                a + b
            };
            if v != n.value {
                return Err(Error::Invariant(format!(
                    "node {id} annotated {} but computes {v}",
                    n.value
                )));
            }
            if v == 0 || v % 2 == 0 {
                return Err(Error::Invariant(format!("node {id} value {v} not odd positive")));
            }
        }
        for &f in fundamentals {
            match self.outputs.get(&f) {
                Some(&op) if self.operand_value(op) == f => {}
                _ => return Err(Error::MissingFundamental(f)),
            }
        }
        Ok(())
    }

    /// Textual adjacency listing, one node per line.
    pub fn dump(&self) -> String {
        let mut out = String::from("op0 = input  # 1\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let sign = if n.subtract { '-' } else { '+' };
            out.push_str(&format!(
                "op{} = (op{} << {}) {} (op{} << {})  # {}\n",
                i + 1,
                n.lhs,
                n.lshift,
                sign,
                n.rhs,
                n.rshift,
                n.value
            ));
        }
        for (f, op) in &self.outputs {
            out.push_str(&format!("out {f} = op{op}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heuristic {
    /// Shared-subexpression greedy search in the spirit of Hcub, taken
    /// against the CSD baseline (never worse than it).
    Hcub,
    /// Each constant built independently from its canonical signed digits.
    Csd,
}

/// A candidate single adder op producing `value` from existing operands.
#[derive(Debug, Clone, Copy)]
struct Op {
    lhs: usize,
    lshift: u32,
    rhs: usize,
    rshift: u32,
    subtract: bool,
}

/// Searches for a single add/sub op over `values` producing `target`.
/// Iteration order is fixed (ascending values, ascending shifts) so results
/// are deterministic.
fn find_op(values: &BTreeMap<u64, usize>, target: u64, bound: u64) -> Option<Op> {
    for (&u, &uid) in values {
        let mut s = 1u32;
        loop {
            let a = match u.checked_shl(s) {
                Some(a) if a <= target + bound => a,
                _ => break,
            };
            // (u << s) + v
            if a < target {
                if let Some(&vid) = values.get(&(target - a)) {
                    return Some(Op {
                        lhs: uid,
                        lshift: s,
                        rhs: vid,
                        rshift: 0,
                        subtract: false,
                    });
                }
            }
            // (u << s) - v
            if a > target {
                if let Some(&vid) = values.get(&(a - target)) {
                    return Some(Op {
                        lhs: uid,
                        lshift: s,
                        rhs: vid,
                        rshift: 0,
                        subtract: true,
                    });
                }
            }
            // v - (u << s)
            if let Some(&vid) = values.get(&(target + a)) {
                return Some(Op {
                    lhs: vid,
                    lshift: 0,
                    rhs: uid,
                    rshift: s,
                    subtract: true,
                });
            }
            s += 1;
        }
    }
    None
}

/// All odd values (<= bound) reachable from `values` with one adder.
fn successors(values: &BTreeMap<u64, usize>, bound: u64) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    for &u in values.keys() {
        for &v in values.keys() {
            let mut s = 1u32;
            loop {
                let a = match u.checked_shl(s) {
                    Some(a) if a <= 2 * bound => a,
                    _ => break,
                };
                for w in [a + v, a.abs_diff(v)] {
                    if w % 2 == 1 && w > 1 && w <= bound && !values.contains_key(&w) {
                        out.insert(w);
                    }
                }
                s += 1;
            }
        }
    }
    out
}

/// Odd values w such that `target` becomes one-op reachable from
/// `values` + {w}.
fn enabling_values(values: &BTreeMap<u64, usize>, target: u64, bound: u64) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    let mut push = |w: u64| {
        if w % 2 == 1 && w > 1 && w <= bound && !values.contains_key(&w) {
            out.insert(w);
        }
    };
    for &v in values.keys() {
        let mut s = 1u32;
        loop {
            let pow = 1u64 << s;
            if pow > target + bound {
                break;
            }
            // target = (w << s) + v  /  (w << s) - v
            if target > v && (target - v).is_multiple_of(pow) {
                push((target - v) / pow);
            }
            if (target + v).is_multiple_of(pow) {
                push((target + v) / pow);
            }
            // target = v - (w << s)
            if v > target && (v - target).is_multiple_of(pow) {
                push((v - target) / pow);
            }
            // target = (v << s) +/- w  /  w - (v << s)
            if let Some(a) = v.checked_shl(s) {
                if a < target + bound {
                    if a < target {
                        push(target - a);
                    }
                    if a > target {
                        push(a - target);
                    }
                    push(target + a);
                }
            }
            // target = w * (2^s +/- 1)
            if target.is_multiple_of(pow + 1) {
                push(target / (pow + 1));
            }
            if pow > 1 && target.is_multiple_of(pow - 1) {
                push(target / (pow - 1));
            }
            s += 1;
        }
    }
    out
}

/// Canonical signed digit recoding, least significant digit first.
pub fn csd_digits(mut c: u64) -> Vec<i8> {
    let mut digits = Vec::new();
    while c != 0 {
        if c % 2 == 1 {
            let d: i8 = if c % 4 == 3 { -1 } else { 1 };
            digits.push(d);
            c = (c as i64 - d as i64) as u64;
        } else {
            digits.push(0);
        }
        c >>= 1;
    }
    digits
}

/// Adders needed to build `c` alone from its CSD form: nonzero digits - 1.
pub fn csd_cost(c: u64) -> usize {
    csd_digits(c).iter().filter(|&&d| d != 0).count().saturating_sub(1)
}

/// Appends the CSD chain for `fundamental` to `nodes`, most significant
/// digit first so every partial sum stays odd and positive. Returns the
/// operand id of the final node. When `reuse` is given, existing values are
/// reused instead of rebuilt.
fn push_csd_chain(
    nodes: &mut Vec<AdderNode>,
    fundamental: u64,
    reuse: Option<&mut BTreeMap<u64, usize>>,
) -> usize {
    let digits = csd_digits(fundamental);
    let nz: Vec<(u32, i8)> = digits
        .iter()
        .enumerate()
        .filter(|(_, &d)| d != 0)
        .map(|(p, &d)| (p as u32, d))
        .rev()
        .collect();
    debug_assert_eq!(nz.first().map(|&(_, d)| d), Some(1));
    let mut local: BTreeMap<u64, usize> = BTreeMap::new();
    let known: &mut BTreeMap<u64, usize> = match reuse {
        Some(m) => m,
        None => &mut local,
    };
    known.entry(1).or_insert(INPUT);
    let mut acc_val = 1u64;
    let mut acc_op = INPUT;
    let mut prev_pos = nz[0].0;
    for &(pos, d) in &nz[1..] {
        let shift = prev_pos - pos;
        let next_val = if d > 0 {
            (acc_val << shift) + 1
        } else {
            (acc_val << shift) - 1
        };
        if let Some(&op) = known.get(&next_val) {
            acc_op = op;
        } else {
            nodes.push(AdderNode {
                lhs: acc_op,
                lshift: shift,
                rhs: INPUT,
                rshift: 0,
                subtract: d < 0,
                value: next_val,
            });
            acc_op = nodes.len();
            known.insert(next_val, acc_op);
        }
        acc_val = next_val;
        prev_pos = pos;
    }
    debug_assert_eq!(acc_val, fundamental);
    acc_op
}

fn synth_csd(fundamentals: &[u64]) -> AdderGraph {
    let mut nodes = Vec::new();
    let mut outputs = BTreeMap::new();
    for &f in fundamentals {
        let op = push_csd_chain(&mut nodes, f, None);
        outputs.insert(f, op);
    }
    AdderGraph { nodes, outputs }
}

fn synth_greedy(fundamentals: &[u64]) -> AdderGraph {
    let max_target = fundamentals.iter().copied().max().unwrap_or(1);
    let bound = (max_target.next_power_of_two() * 4).max(256);
    let mut values: BTreeMap<u64, usize> = BTreeMap::new();
    values.insert(1, INPUT);
    let mut nodes: Vec<AdderNode> = Vec::new();
    let mut remaining: BTreeSet<u64> = fundamentals.iter().copied().filter(|&f| f > 1).collect();

    while !remaining.is_empty() {
        // Realize every target currently one adder away, to a fixpoint.
        let mut progressed = true;
        while progressed {
            progressed = false;
            let ready: Vec<u64> = remaining
                .iter()
                .copied()
                .filter(|&t| find_op(&values, t, bound).is_some())
                .collect();
            for t in ready {
                let op = find_op(&values, t, bound).expect("checked above");
                nodes.push(AdderNode {
                    lhs: op.lhs,
                    lshift: op.lshift,
                    rhs: op.rhs,
                    rshift: op.rshift,
                    subtract: op.subtract,
                    value: t,
                });
                values.insert(t, nodes.len());
                remaining.remove(&t);
                progressed = true;
            }
        }
        if remaining.is_empty() {
            break;
        }

        // No target is directly reachable: insert one intermediate. Prefer
        // the candidate that makes the most targets one-op reachable,
        // smallest value on ties.
        let cands = successors(&values, bound);
        let mut best: Option<(usize, u64)> = None;
        for &w in &cands {
            let mut ext = values.clone();
            ext.insert(w, usize::MAX);
            let n1 = remaining
                .iter()
                .filter(|&&t| find_op(&ext, t, bound).is_some())
                .count();
            if n1 > 0 && best.is_none_or(|(bn, _)| n1 > bn) {
                best = Some((n1, w));
            }
        }
        let chosen = best.map(|(_, w)| w).or_else(|| {
            // Distance two: a candidate that enables the smallest target.
            let t = *remaining.iter().next().expect("nonempty");
            enabling_values(&values, t, bound)
                .intersection(&cands)
                .next()
                .copied()
        });
        match chosen {
            Some(w) => {
                let op = find_op(&values, w, bound)
                    .expect("successor must be one-op constructible");
                nodes.push(AdderNode {
                    lhs: op.lhs,
                    lshift: op.lshift,
                    rhs: op.rhs,
                    rshift: op.rshift,
                    subtract: op.subtract,
                    value: w,
                });
                values.insert(w, nodes.len());
            }
            None => {
                // Fall back to the CSD chain for the smallest target,
                // reusing anything already built.
                let t = *remaining.iter().next().expect("nonempty");
                push_csd_chain(&mut nodes, t, Some(&mut values));
                remaining.remove(&t);
            }
        }
    }

    let outputs = fundamentals
        .iter()
        .map(|&f| (f, *values.get(&f).expect("all fundamentals realized")))
        .collect();
    AdderGraph { nodes, outputs }
}

/// Builds an adder graph covering all requested odd fundamentals. The Hcub
/// mode runs the greedy shared-subexpression search and keeps whichever of
/// it and the CSD baseline uses fewer adders, so it never loses to CSD.
pub fn synthesize(fundamentals: &[u64], heuristic: Heuristic) -> Result<AdderGraph> {
    let mut fs: Vec<u64> = fundamentals.to_vec();
    fs.sort_unstable();
    fs.dedup();
    for &f in &fs {
        if f < 3 || f % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "fundamental {f} must be odd and >= 3"
            )));
        }
    }
    if fs.is_empty() {
        return Ok(AdderGraph {
            nodes: Vec::new(),
            outputs: BTreeMap::new(),
        });
    }
    let graph = match heuristic {
        Heuristic::Csd => synth_csd(&fs),
        Heuristic::Hcub => {
            let greedy = synth_greedy(&fs);
            let baseline = synth_csd(&fs);
            if baseline.adder_count() < greedy.adder_count() {
                baseline
            } else {
                greedy
            }
        }
    };
    graph.validate(&fs)?;
    Ok(graph)
}

/// Exact products original * x for every coefficient in the set,
/// reconstructed from graph outputs, bypasses, and shift wiring.
pub fn evaluate(
    graph: &AdderGraph,
    set: &NormalizedSet,
    x: i64,
) -> Result<BTreeMap<i64, i64>> {
    let vals = graph.node_values(x);
    let mut out = BTreeMap::new();
    for c in &set.items {
        let base = match c.kind {
            CoefficientKind::Mcm => {
                let &op = graph
                    .outputs
                    .get(&c.fundamental)
                    .ok_or(Error::MissingFundamental(c.fundamental))?;
                vals[op]
            }
            CoefficientKind::Bypass | CoefficientKind::ShiftOnly => x,
        };
        let mut product = base << c.shift;
        if c.negate {
            product = -product;
        }
        out.insert(c.original, product);
    }
    Ok(out)
}

/// Gate-proxy cost of one graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub adder_count: usize,
    pub depth: usize,
    pub gate_estimate: u64,
    pub per_output: Vec<OutputCost>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputCost {
    pub fundamental: u64,
    pub depth: usize,
    pub width_bits: u32,
}

pub fn ceil_log2(v: u64) -> u32 {
    if v <= 1 {
        0
    } else {
        64 - (v - 1).leading_zeros()
    }
}

/// Adder count, longest chain, and a gate-equivalent estimate of
/// kappa * (output bit width) per node, node width being
/// input_width + ceil(log2(constant)) + 1.
pub fn cost(graph: &AdderGraph, input_width: u32, kappa: u32) -> CostReport {
    let gate_estimate = graph
        .nodes
        .iter()
        .map(|n| kappa as u64 * (input_width + ceil_log2(n.value) + 1) as u64)
        .sum();
    let per_output = graph
        .outputs
        .iter()
        .map(|(&f, &op)| OutputCost {
            fundamental: f,
            depth: graph.depth_of(op),
            width_bits: input_width + ceil_log2(f) + 1,
        })
        .collect();
    CostReport {
        adder_count: graph.adder_count(),
        depth: graph.depth(),
        gate_estimate,
        per_output,
    }
}

/// Union of parallel demands: a shared MCM block driving several sample
/// lanes must cover every demanded coefficient exactly once.
pub fn fuse_parallel(demands: &[TapDemand]) -> Result<TapDemand> {
    let first = demands
        .first()
        .ok_or_else(|| Error::InvalidConfig("fuse_parallel needs at least one demand".into()))?;
    let mut coefficients: BTreeSet<i32> = BTreeSet::new();
    let mut bypass_ones = false;
    let mut zero_dropped = false;
    for d in demands {
        coefficients.extend(d.coefficients.iter().copied());
        bypass_ones |= d.bypass_ones;
        zero_dropped |= d.zero_dropped;
    }
    Ok(TapDemand {
        tap: first.tap,
        coefficients: coefficients.into_iter().collect(),
        bypass_ones,
        zero_dropped,
    })
}

/// Demand coefficients as i64 for normalization.
pub fn demand_coefficients(demand: &TapDemand) -> Vec<i64> {
    demand.coefficients.iter().map(|&c| c as i64).collect()
}
