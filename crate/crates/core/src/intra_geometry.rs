//! Angular mode geometry: maps a mode and sample position to the integer
//! reference offset, fractional filter row, and prediction axis, plus the
//! reference-range bookkeeping and inverse-angle side-reference extension.
//!
//! Horizontal modes are handled exclusively by transposition: the geometry
//! here always works on the vertical axis and callers swap x/y.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Validated angular/WAIP mode index: [-14,-1] or [2,80]. Planar (0) and
/// DC (1) are rejected. [2,66] are the regular angular modes, the rest are
/// the wide-angle extensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntraMode(i32);

impl IntraMode {
    pub fn new(index: i32) -> Result<Self> {
        match index {
            -14..=-1 | 2..=80 => Ok(IntraMode(index)),
            _ => Err(Error::InvalidMode(index)),
        }
    }

    pub fn index(self) -> i32 {
        self.0
    }

    pub fn is_waip(self) -> bool {
        !(2..=66).contains(&self.0)
    }

    /// Horizontal modes are computed as transposed vertical ones. The
    /// horizontal side is [2,34] plus its wide-angle extension [-14,-1].
    pub fn is_horizontal(self) -> bool {
        self.0 <= 34
    }

    /// The vertical mode with the same displacement angle. Identity for
    /// vertical modes; regular horizontal mode m maps to 68 - m, wide
    /// horizontal mode -j maps to 66 + j.
    pub fn transposed(self) -> IntraMode {
        if !self.is_horizontal() {
            self
        } else if self.0 >= 2 {
            IntraMode(68 - self.0)
        } else {
            IntraMode(66 - self.0)
        }
    }
}

/// intraPredAngle for modes -14..80 (entries for 0 and 1 unused).
const ANGLES: [i32; 95] = [
    512, 341, 256, 171, 128, 102, 86, 73, 64, 57, 51, 45, 39, 35, // -14..-1
    0, 0, // 0, 1 (invalid)
    32, 29, 26, 23, 20, 18, 16, 14, 12, 10, 8, 6, 4, 3, 2, 1, 0, // 2..18
    -1, -2, -3, -4, -6, -8, -10, -12, -14, -16, -18, -20, -23, -26, -29, -32, // 19..34
    -29, -26, -23, -20, -18, -16, -14, -12, -10, -8, -6, -4, -3, -2, -1, 0, // 35..50
    1, 2, 3, 4, 6, 8, 10, 12, 14, 16, 18, 20, 23, 26, 29, 32, // 51..66
    35, 39, 45, 51, 57, 64, 73, 86, 102, 128, 171, 256, 341, 512, // 67..80
];

/// Block dimensions: powers of two in [4, 64] with area >= 16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub width: u32,
    pub height: u32,
}

impl BlockSpec {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        for d in [width, height] {
            if !d.is_power_of_two() || !(4..=64).contains(&d) {
                return Err(Error::InvalidConfig(format!(
                    "block dimension {d} must be a power of two in [4, 64]"
                )));
            }
        }
        if width * height < 16 {
            return Err(Error::InvalidConfig(format!(
                "block {width}x{height} below the minimum area of 16"
            )));
        }
        Ok(BlockSpec { width, height })
    }

    pub fn transposed(self) -> BlockSpec {
        BlockSpec {
            width: self.height,
            height: self.width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Vertical,
    Horizontal,
}

/// Interpolation geometry for one predicted sample: the x-independent
/// reference offset, the fractional filter row, and the prediction axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub i0: i64,
    pub k: usize,
    pub axis: Axis,
}

/// The standard displacement angle for a mode.
pub fn mode_angle(mode: IntraMode) -> i32 {
    ANGLES[(mode.index() + 14) as usize]
}

/// Inverse angle for negative-angle modes: round(512 * 32 / |angle|).
pub fn inverse_angle(angle: i32) -> i64 {
    let a = angle.unsigned_abs() as i64;
    assert!(a > 0, "inverse angle undefined for zero displacement");
    (2 * 16384 + a) / (2 * a)
}

/// Geometry of the sample at (x, y). Horizontal modes return the transposed
/// plan: x and y swap roles and the axis flips.
pub fn sample_plan(mode: IntraMode, x: u32, y: u32) -> SamplePlan {
    let angle = mode_angle(mode) as i64;
    let (along, axis) = if mode.is_horizontal() {
        (x, Axis::Horizontal)
    } else {
        (y, Axis::Vertical)
    };
    let pos = (along as i64 + 1) * angle;
    SamplePlan {
        i0: pos >> 5,
        k: (pos & 31) as usize,
        axis,
    }
}

/// Tight inclusive bounds on main-reference indices touched by the 4-tap
/// filter over the whole block (index i0 + x + tap per sample).
pub fn required_ref_range(mode: IntraMode, block: BlockSpec) -> (i64, i64) {
    let b = if mode.is_horizontal() {
        block.transposed()
    } else {
        block
    };
    let angle = mode_angle(mode) as i64;
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for y in 0..b.height as i64 {
        let i0 = ((y + 1) * angle) >> 5;
        lo = lo.min(i0);
        hi = hi.max(i0 + (b.width as i64 - 1) + 3);
    }
    (lo, hi)
}

/// A linear reference-sample array with an explicit base offset: `get(base)`
/// is the first stored sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefArray {
    samples: Vec<u32>,
    base: i64,
}

impl RefArray {
    pub fn new(samples: Vec<u32>, base: i64) -> Self {
        RefArray { samples, base }
    }

    pub fn base(&self) -> i64 {
        self.base
    }

    pub fn top(&self) -> i64 {
        self.base + self.samples.len() as i64 - 1
    }

    pub fn get(&self, index: i64) -> Result<u32> {
        let off = index - self.base;
        if off < 0 || off >= self.samples.len() as i64 {
            return Err(Error::RefCoverage {
                missing_lo: index,
                missing_hi: index,
            });
        }
        Ok(self.samples[off as usize])
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        lo >= self.base && hi <= self.top()
    }
}

/// Projects a negative main-reference index onto the side reference: the
/// extension of index x < 0 reads side index (-x * inv_angle + 256) >> 9.
pub fn side_projection_index(x: i64, inv_angle: i64) -> i64 {
    (-x * inv_angle + 256) >> 9
}

/// Extends the main reference leftward over `required_ref_range` using the
/// inverse-angle projection onto the side reference. Non-negative-angle
/// modes return the main reference unchanged.
pub fn extend_reference(
    main_ref: &RefArray,
    side_ref: &RefArray,
    mode: IntraMode,
    block: BlockSpec,
) -> Result<RefArray> {
    let angle = mode_angle(mode);
    if angle >= 0 {
        return Ok(main_ref.clone());
    }
    let (lo, hi) = required_ref_range(mode, block);
    if hi > main_ref.top() {
        return Err(Error::RefCoverage {
            missing_lo: main_ref.top() + 1,
            missing_hi: hi,
        });
    }
    let inv = inverse_angle(angle);
    let mut samples = Vec::with_capacity((hi - lo + 1) as usize);
    for idx in lo..=hi {
        if idx >= main_ref.base() {
            samples.push(main_ref.get(idx)?);
        } else {
            let s = side_projection_index(idx, inv);
            samples.push(side_ref.get(s).map_err(|_| Error::RefCoverage {
                missing_lo: s,
                missing_hi: s,
            })?);
        }
    }
    Ok(RefArray::new(samples, lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mode(i: i32) -> IntraMode {
        IntraMode::new(i).unwrap()
    }

    #[test]
    fn planar_and_dc_rejected() {
        assert!(IntraMode::new(0).is_err());
        assert!(IntraMode::new(1).is_err());
        assert!(IntraMode::new(81).is_err());
        assert!(IntraMode::new(-15).is_err());
    }

    #[test]
    fn cardinal_angles() {
        assert_eq!(mode_angle(mode(50)), 0);
        assert_eq!(mode_angle(mode(18)), 0);
        assert_eq!(mode_angle(mode(2)), 32);
        assert_eq!(mode_angle(mode(66)), 32);
        assert_eq!(mode_angle(mode(34)), -32);
    }

    #[test]
    fn angle_symmetry() {
        for m in 2..=66 {
            assert_eq!(
                mode_angle(mode(m)),
                mode_angle(mode(68 - m)),
                "angle({m}) != angle({})",
                68 - m
            );
        }
    }

    #[test]
    fn angle_magnitude_increases_outward_from_vertical() {
        for m in 50..66 {
            assert!(mode_angle(mode(m + 1)).abs() > mode_angle(mode(m)).abs());
        }
        for m in 35..50 {
            assert!(mode_angle(mode(m)).abs() > mode_angle(mode(m + 1)).abs());
        }
    }

    #[test]
    fn inverse_angle_spot_values() {
        assert_eq!(inverse_angle(-32), 512);
        assert_eq!(inverse_angle(-29), 565);
        assert_eq!(inverse_angle(-6), 2731);
        assert_eq!(inverse_angle(-3), 5461);
        assert_eq!(inverse_angle(-1), 16384);
    }

    #[test]
    fn vertical_mode_plan_is_zero() {
        for (x, y) in [(0, 0), (3, 7), (63, 63)] {
            let p = sample_plan(mode(50), x, y);
            assert_eq!((p.i0, p.k), (0, 0));
            assert_eq!(p.axis, Axis::Vertical);
        }
    }

    #[test]
    fn mode66_plan_is_integer_diagonal() {
        for y in 0..64 {
            let p = sample_plan(mode(66), 5, y);
            assert_eq!(p.i0, y as i64 + 1);
            assert_eq!(p.k, 0);
        }
    }

    #[test]
    fn horizontal_plans_are_transposed() {
        for m in 2..=33 {
            for x in [0u32, 2, 9] {
                for y in [0u32, 5, 31] {
                    let h = sample_plan(mode(m), x, y);
                    let v = sample_plan(mode(68 - m), y, x);
                    assert_eq!((h.i0, h.k), (v.i0, v.k));
                    assert_eq!(h.axis, Axis::Horizontal);
                    assert_eq!(v.axis, Axis::Vertical);
                }
            }
        }
    }

    #[test]
    fn ref_range_mode50_4x4() {
        let b = BlockSpec::new(4, 4).unwrap();
        assert_eq!(required_ref_range(mode(50), b), (0, 6));
    }

    #[test]
    fn ref_range_mode66_4x4() {
        let b = BlockSpec::new(4, 4).unwrap();
        assert_eq!(required_ref_range(mode(66), b), (1, 10));
    }

    #[test]
    fn negative_angle_reaches_left_of_origin() {
        let b = BlockSpec::new(8, 8).unwrap();
        for m in [24, 34, 40] {
            let (lo, _) = required_ref_range(mode(m), b);
            assert!(lo < 0, "mode {m} should reach negative indices");
        }
    }

    #[test]
    fn ref_range_is_tight() {
        // Every index inside the range is touched by some (x, y, tap) and
        // none outside is.
        for m in [2, 20, 34, 40, 50, 66, -4, 72] {
            let b = BlockSpec::new(8, 4).unwrap();
            let bb = if mode(m).is_horizontal() {
                b.transposed()
            } else {
                b
            };
            let (lo, hi) = required_ref_range(mode(m), b);
            let mut touched = std::collections::BTreeSet::new();
            for y in 0..bb.height {
                let plan = sample_plan(mode(m), 0, if mode(m).is_horizontal() { 0 } else { y });
                let i0 = if mode(m).is_horizontal() {
                    sample_plan(mode(m), y, 0).i0
                } else {
                    plan.i0
                };
                for x in 0..bb.width as i64 {
                    for tap in 0..4 {
                        touched.insert(i0 + x + tap);
                    }
                }
            }
            assert_eq!(*touched.iter().min().unwrap(), lo, "mode {m} lo");
            assert_eq!(*touched.iter().max().unwrap(), hi, "mode {m} hi");
            // 4-tap footprints of consecutive x overlap, so coverage of the
            // full interval follows; assert it anyway.
            assert_eq!(touched.len() as i64, hi - lo + 1, "mode {m} has gaps");
        }
    }

    #[test]
    fn extend_noop_for_nonnegative_angles() {
        let b = BlockSpec::new(4, 4).unwrap();
        let main = RefArray::new((0..12).collect(), -1);
        let side = RefArray::new(vec![7; 8], 0);
        let out = extend_reference(&main, &side, mode(50), b).unwrap();
        assert_eq!(out, main);
    }

    #[test]
    fn extend_constant_side_gives_constant_extension() {
        let b = BlockSpec::new(4, 4).unwrap();
        let main = RefArray::new(vec![100; 8], -1);
        let side = RefArray::new(vec![42; 8], 0);
        let out = extend_reference(&main, &side, mode(34), b).unwrap();
        let (lo, _) = required_ref_range(mode(34), b);
        assert_eq!(lo, -4);
        for idx in lo..-1 {
            assert_eq!(out.get(idx).unwrap(), 42);
        }
        assert_eq!(out.get(-1).unwrap(), 100);
    }

    #[test]
    fn extend_ramp_side_follows_projection_formula() {
        let b = BlockSpec::new(4, 4).unwrap();
        let main = RefArray::new(vec![0; 8], -1);
        let side = RefArray::new((0..16).map(|s| 200 + s).collect(), 0);
        let out = extend_reference(&main, &side, mode(34), b).unwrap();
        let inv = inverse_angle(-32);
        for idx in -4..-1i64 {
            // Independent re-derivation of the projection index.
            let expected = 200 + ((-idx * inv + 256) >> 9) as u32;
            assert_eq!(out.get(idx).unwrap(), expected, "index {idx}");
        }
    }

    #[test]
    fn extend_reports_missing_side_range() {
        let b = BlockSpec::new(4, 4).unwrap();
        let main = RefArray::new(vec![0; 8], -1);
        let side = RefArray::new(vec![0; 2], 0); // too short
        let err = extend_reference(&main, &side, mode(34), b).unwrap_err();
        match err {
            Error::RefCoverage { .. } => {}
            other => panic!("expected coverage error, got {other}"),
        }
    }

    proptest! {
        #[test]
        fn fractional_index_in_range(m in prop_oneof![(-14i32..=-1), (2i32..=80)],
                                     x in 0u32..64, y in 0u32..64) {
            let p = sample_plan(mode(m), x, y);
            prop_assert!(p.k <= 31);
            // i0 and k decompose pos exactly.
            let angle = mode_angle(mode(m)) as i64;
            let along = if mode(m).is_horizontal() { x } else { y } as i64;
            prop_assert_eq!(p.i0 * 32 + p.k as i64, (along + 1) * angle);
        }
    }
}
