//! The two 32x4 luma interpolation filter tables (fC, fG) used by angular
//! prediction, the group-averaging approximation, and extraction of the
//! per-tap coefficient demand sets that drive MCM synthesis.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub const ROWS: usize = 32;
pub const TAPS: usize = 4;

/// Grouping factors accepted by [`approximate_table`]. 1 means precise.
pub const GROUPING_FACTORS: [u32; 6] = [1, 2, 4, 8, 16, 32];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FilterId {
    /// DCT-based interpolation filter.
    Fc,
    /// 4-tap smoothing interpolation filter.
    Fg,
}

impl FilterId {
    pub fn name(self) -> &'static str {
        match self {
            FilterId::Fc => "fc",
            FilterId::Fg => "fg",
        }
    }
}

/// DCT-IF table, Q6 scale. Rows 17..31 mirror rows 15..1.
const FC: [[i32; TAPS]; ROWS] = [
    [0, 64, 0, 0],
    [-1, 63, 2, 0],
    [-2, 62, 4, 0],
    [-2, 60, 7, -1],
    [-2, 58, 10, -2],
    [-3, 57, 12, -2],
    [-4, 56, 14, -2],
    [-4, 55, 15, -2],
    [-4, 54, 16, -2],
    [-5, 53, 18, -2],
    [-6, 52, 20, -2],
    [-6, 49, 24, -3],
    [-6, 46, 28, -4],
    [-5, 44, 29, -4],
    [-4, 42, 30, -4],
    [-4, 39, 33, -4],
    [-4, 36, 36, -4],
    [-4, 33, 39, -4],
    [-4, 30, 42, -4],
    [-4, 29, 44, -5],
    [-4, 28, 46, -6],
    [-3, 24, 49, -6],
    [-2, 20, 52, -6],
    [-2, 18, 53, -5],
    [-2, 16, 54, -4],
    [-2, 15, 55, -4],
    [-2, 14, 56, -4],
    [-2, 12, 57, -3],
    [-2, 10, 58, -2],
    [-1, 7, 60, -2],
    [0, 4, 62, -2],
    [0, 2, 63, -1],
];

/// Smoothing filter table, Q6 scale. Piecewise linear, rows repeat in pairs.
const FG: [[i32; TAPS]; ROWS] = [
    [16, 32, 16, 0],
    [16, 32, 16, 0],
    [15, 31, 17, 1],
    [15, 31, 17, 1],
    [14, 30, 18, 2],
    [14, 30, 18, 2],
    [13, 29, 19, 3],
    [13, 29, 19, 3],
    [12, 28, 20, 4],
    [12, 28, 20, 4],
    [11, 27, 21, 5],
    [11, 27, 21, 5],
    [10, 26, 22, 6],
    [10, 26, 22, 6],
    [9, 25, 23, 7],
    [9, 25, 23, 7],
    [8, 24, 24, 8],
    [8, 24, 24, 8],
    [7, 23, 25, 9],
    [7, 23, 25, 9],
    [6, 22, 26, 10],
    [6, 22, 26, 10],
    [5, 21, 27, 11],
    [5, 21, 27, 11],
    [4, 20, 28, 12],
    [4, 20, 28, 12],
    [3, 19, 29, 13],
    [3, 19, 29, 13],
    [2, 18, 30, 14],
    [2, 18, 30, 14],
    [1, 17, 31, 15],
    [1, 17, 31, 15],
];

/// One 32-row by 4-column signed interpolation filter table, precise
/// (`approx_n == 1`) or group-averaged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub id: FilterId,
    pub rows: [[i32; TAPS]; ROWS],
    pub approx_n: u32,
}

impl CoefficientTable {
    pub fn coeff(&self, k: usize, tap: usize) -> i32 {
        self.rows[k][tap]
    }

    /// Distinct signed values in one column, ascending.
    pub fn column_values(&self, tap: usize) -> Vec<i32> {
        let set: BTreeSet<i32> = self.rows.iter().map(|r| r[tap]).collect();
        set.into_iter().collect()
    }
}

/// The fC/fG pair at a shared grouping factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSet {
    pub fc: CoefficientTable,
    pub fg: CoefficientTable,
    pub approx_n: u32,
}

impl TableSet {
    pub fn table(&self, id: FilterId) -> &CoefficientTable {
        match id {
            FilterId::Fc => &self.fc,
            FilterId::Fg => &self.fg,
        }
    }

    /// Precise tables approximated to grouping factor `n`.
    pub fn approximated(&self, n: u32) -> Result<TableSet> {
        Ok(TableSet {
            fc: approximate_table(&self.fc, n)?,
            fg: approximate_table(&self.fg, n)?,
            approx_n: n,
        })
    }
}

/// The coefficient set one tap's MCM block must produce. Zeros are dropped
/// and +/-1 is routed around the block, so `coefficients` never holds 0 or
/// +/-1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapDemand {
    pub tap: usize,
    pub coefficients: Vec<i32>,
    pub bypass_ones: bool,
    pub zero_dropped: bool,
}

/// Returns the precise table pair. The embedded constants are checked
/// against the row-sum invariant on every load; a bad transcription panics.
pub fn load_builtin_tables() -> TableSet {
    let fc = CoefficientTable {
        id: FilterId::Fc,
        rows: FC,
        approx_n: 1,
    };
    let fg = CoefficientTable {
        id: FilterId::Fg,
        rows: FG,
        approx_n: 1,
    };
    for table in [&fc, &fg] {
        for (k, row) in table.rows.iter().enumerate() {
            let sum: i32 = row.iter().sum();
            assert_eq!(
                sum,
                64,
                "builtin {} row {} sums to {}, expected 64",
                table.id.name(),
                k,
                sum
            );
        }
    }
    TableSet {
        fc,
        fg,
        approx_n: 1,
    }
}

fn check_grouping(n: u32) -> Result<()> {
    if GROUPING_FACTORS.contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "grouping factor {n} not in {{1,2,4,8,16,32}}"
        )))
    }
}

/// Replaces each column group of `n` consecutive rows by the floor of their
/// exact mean. Flooring (round toward negative infinity) applies to negative
/// means too: a group mean of -6.5 becomes -7.
pub fn approximate_table(table: &CoefficientTable, n: u32) -> Result<CoefficientTable> {
    check_grouping(n)?;
    if table.approx_n != 1 {
        return Err(Error::InvalidConfig(format!(
            "approximate_table expects a precise table, got approx_n = {}",
            table.approx_n
        )));
    }
    if n == 1 {
        return Ok(table.clone());
    }
    let n = n as usize;
    let mut rows = table.rows;
    for tap in 0..TAPS {
        for group in 0..(ROWS / n) {
            let base = group * n;
            let sum: i64 = (base..base + n).map(|k| table.rows[k][tap] as i64).sum();
            let avg = sum.div_euclid(n as i64) as i32;
            for row in rows.iter_mut().skip(base).take(n) {
                row[tap] = avg;
            }
        }
    }
    Ok(CoefficientTable {
        id: table.id,
        rows,
        approx_n: n as u32,
    })
}

/// Union of column `tap` across both filters, deduplicated, with 0 removed
/// and +/-1 flagged for bypass. Repeated values are kept only once.
pub fn tap_demands(tables: &TableSet) -> [TapDemand; TAPS] {
    std::array::from_fn(|tap| {
        let mut values: BTreeSet<i32> = BTreeSet::new();
        for table in [&tables.fc, &tables.fg] {
            for row in &table.rows {
                values.insert(row[tap]);
            }
        }
        let zero_dropped = values.remove(&0);
        let bypass_ones = values.remove(&1) | values.remove(&-1);
        TapDemand {
            tap,
            coefficients: values.into_iter().collect(),
            bypass_ones,
            zero_dropped,
        }
    })
}

/// Number of distinct signed coefficient values anywhere in fc union fg.
///
/// Counting convention: signed values, zero and 64 both included. Under this
/// convention the precise pair yields exactly 57.
pub fn distinct_value_count(tables: &TableSet) -> usize {
    let mut values: BTreeSet<i32> = BTreeSet::new();
    for table in [&tables.fc, &tables.fg] {
        for row in &table.rows {
            values.extend(row.iter().copied());
        }
    }
    values.len()
}
