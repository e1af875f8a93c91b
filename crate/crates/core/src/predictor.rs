//! Bit-exact evaluation of the 4-tap angular interpolation: the weighted
//! reference sum with +32 rounding offset, arithmetic shift by 6, and clip
//! to the sample range.

use crate::error::{Error, Result};
use crate::filter_tables::{FilterId, TableSet};
use crate::intra_geometry::{mode_angle, BlockSpec, IntraMode, RefArray};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct PredictionConfig {
    pub bit_depth: u32,
    pub tables: TableSet,
    pub filter: FilterId,
}

impl PredictionConfig {
    pub fn new(bit_depth: u32, tables: TableSet, filter: FilterId) -> Result<Self> {
        if !(8..=12).contains(&bit_depth) {
            return Err(Error::InvalidConfig(format!(
                "bit depth {bit_depth} outside [8, 12]"
            )));
        }
        Ok(PredictionConfig {
            bit_depth,
            tables,
            filter,
        })
    }

    pub fn max_sample(&self) -> u32 {
        (1u32 << self.bit_depth) - 1
    }
}

/// Row-major block of unsigned samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBlock {
    pub width: u32,
    pub height: u32,
    pub samples: Vec<u32>,
}

impl SampleBlock {
    pub fn new(width: u32, height: u32) -> Self {
        SampleBlock {
            width,
            height,
            samples: vec![0; (width * height) as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.samples[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: u32) {
        self.samples[(y * self.width + x) as usize] = v;
    }

    pub fn transposed(&self) -> SampleBlock {
        let mut out = SampleBlock::new(self.height, self.width);
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(y, x, self.get(x, y));
            }
        }
        out
    }
}

pub fn clip(value: i64, bit_depth: u32) -> u32 {
    value.clamp(0, (1i64 << bit_depth) - 1) as u32
}

/// One interpolated sample: refs must cover i0..i0+3 (the x
/// term is already folded into i0 by the caller). The shift is arithmetic
/// on the signed accumulator, i.e. floor division by 64.
pub fn predict_sample(
    refs: &RefArray,
    i0: i64,
    k: usize,
    config: &PredictionConfig,
) -> Result<u32> {
    debug_assert!(k <= 31);
    let row = config.tables.table(config.filter).rows[k];
    let mut acc: i64 = 32;
    for (i, &f) in row.iter().enumerate() {
        acc += f as i64 * refs.get(i0 + i as i64)? as i64;
    }
    Ok(clip(acc >> 6, config.bit_depth))
}

/// Whole-block prediction. Horizontal modes produce the transposed result
/// of the equivalent vertical prediction, per the geometry module.
pub fn predict_block(
    refs: &RefArray,
    mode: IntraMode,
    block: BlockSpec,
    config: &PredictionConfig,
) -> Result<SampleBlock> {
    let b = if mode.is_horizontal() {
        block.transposed()
    } else {
        block
    };
    let angle = mode_angle(mode) as i64;
    let mut out = SampleBlock::new(b.width, b.height);
    for y in 0..b.height {
        let i0 = ((y as i64 + 1) * angle) >> 5;
        let k = (((y as i64 + 1) * angle) & 31) as usize;
        for x in 0..b.width {
            let v = predict_sample(refs, i0 + x as i64, k, config)?;
            out.set(x, y, v);
        }
    }
    if mode.is_horizontal() {
        Ok(out.transposed())
    } else {
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter_tables::load_builtin_tables;
    use proptest::prelude::*;

    fn cfg(filter: FilterId) -> PredictionConfig {
        PredictionConfig::new(10, load_builtin_tables(), filter).unwrap()
    }

    fn mode(i: i32) -> IntraMode {
        IntraMode::new(i).unwrap()
    }

    #[test]
    fn clip_edges() {
        assert_eq!(clip(-5, 10), 0);
        assert_eq!(clip(1040, 10), 1023);
        assert_eq!(clip(512, 10), 512);
    }

    #[test]
    fn k0_row_is_identity() {
        let refs = RefArray::new(vec![11, 22, 33, 44], 0);
        assert_eq!(predict_sample(&refs, 0, 0, &cfg(FilterId::Fc)).unwrap(), 22);
    }

    #[test]
    fn constant_refs_preserved_by_every_precise_row() {
        for filter in [FilterId::Fc, FilterId::Fg] {
            let config = cfg(filter);
            for v in [0u32, 1, 511, 1023] {
                let refs = RefArray::new(vec![v; 4], 0);
                for k in 0..32 {
                    assert_eq!(
                        predict_sample(&refs, 0, k, &config).unwrap(),
                        v,
                        "{} k={k} v={v}",
                        filter.name()
                    );
                }
            }
        }
    }

    #[test]
    fn clip_engages_on_overshoot() {
        // fC row 1 is (-1, 63, 2, 0): refs (0, 1023, 1023, 0) sum to
        // 63*1023 + 2*1023 + 32 = 66527, >> 6 = 1039, clipped to 1023.
        let refs = RefArray::new(vec![0, 1023, 1023, 0], 0);
        assert_eq!(predict_sample(&refs, 0, 1, &cfg(FilterId::Fc)).unwrap(), 1023);
    }

    #[test]
    fn coverage_violation_is_an_error() {
        let refs = RefArray::new(vec![1, 2, 3], 0);
        assert!(predict_sample(&refs, 1, 0, &cfg(FilterId::Fc)).is_err());
    }

    #[test]
    fn mode50_copies_reference_row() {
        let refs = RefArray::new(vec![10, 20, 30, 40, 50, 60, 70], 0);
        let block = BlockSpec::new(4, 4).unwrap();
        let out = predict_block(&refs, mode(50), block, &cfg(FilterId::Fc)).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(out.get(x, y), refs.get(x as i64 + 1).unwrap());
            }
        }
    }

    #[test]
    fn mode66_shifts_ramp_per_row() {
        let refs = RefArray::new((0..16).map(|i| 100 + 3 * i).collect(), 0);
        let block = BlockSpec::new(4, 4).unwrap();
        let out = predict_block(&refs, mode(66), block, &cfg(FilterId::Fc)).unwrap();
        for y in 0..4u32 {
            for x in 0..4u32 {
                // i0 = y + 1, identity tap at offset 1.
                let idx = (x + y + 2) as i64;
                assert_eq!(out.get(x, y), refs.get(idx).unwrap());
            }
        }
    }

    #[test]
    fn n1_approximation_is_bit_identical() {
        let tables = load_builtin_tables();
        let approx = tables.approximated(1).unwrap();
        let precise = PredictionConfig::new(10, tables, FilterId::Fg).unwrap();
        let approxed = PredictionConfig::new(10, approx, FilterId::Fg).unwrap();
        let refs = RefArray::new((0..32).map(|i| (i * 37) % 1024).collect(), -8);
        let block = BlockSpec::new(8, 8).unwrap();
        for m in [2, 35, 50, 66] {
            assert_eq!(
                predict_block(&refs, mode(m), block, &precise).unwrap(),
                predict_block(&refs, mode(m), block, &approxed).unwrap()
            );
        }
    }

    #[test]
    fn approximation_matches_precise_when_used_rows_agree() {
        // Mode 66 only uses k = 0; build an approximated table whose row 0
        // agrees with the precise one and check bit-identity.
        let tables = load_builtin_tables();
        let mut hybrid = tables.approximated(2).unwrap();
        // fG rows repeat in pairs, so n = 2 leaves fG unchanged; every used
        // row agrees with the precise table by construction.
        hybrid.fc = tables.fc.clone();
        let precise = PredictionConfig::new(10, tables, FilterId::Fg).unwrap();
        let approx = PredictionConfig::new(10, hybrid, FilterId::Fg).unwrap();
        let refs = RefArray::new((0..24).map(|i| (i * 91) % 1024).collect(), 0);
        let block = BlockSpec::new(4, 4).unwrap();
        for m in [50, 58, 66] {
            assert_eq!(
                predict_block(&refs, mode(m), block, &precise).unwrap(),
                predict_block(&refs, mode(m), block, &approx).unwrap()
            );
        }
    }

    proptest! {
        #[test]
        fn output_always_in_sample_range(
            seed in any::<u64>(),
            m in prop_oneof![(-14i32..=-1), (2i32..=80)],
            bit_depth in 8u32..=12,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let max = (1u32 << bit_depth) - 1;
            // wide-angle modes reach i0 = 128 on 8-tall blocks
            let refs = RefArray::new(
                (0..320).map(|_| rng.gen_range(0..=max)).collect(),
                -64,
            );
            let config = PredictionConfig::new(
                bit_depth,
                load_builtin_tables(),
                FilterId::Fc,
            ).unwrap();
            let block = BlockSpec::new(8, 4).unwrap();
            let out = predict_block(&refs, mode(m), block, &config).unwrap();
            for &s in &out.samples {
                prop_assert!(s <= max);
            }
        }

        #[test]
        fn transposition_is_bit_exact(seed in any::<u64>(), m in 2i32..=33) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let refs = RefArray::new(
                (0..320).map(|_| rng.gen_range(0..1024)).collect(),
                -64,
            );
            let config = cfg(FilterId::Fc);
            let block = BlockSpec::new(8, 4).unwrap();
            let horiz = predict_block(&refs, mode(m), block, &config).unwrap();
            let vert = predict_block(&refs, mode(68 - m), block.transposed(), &config).unwrap();
            prop_assert_eq!(horiz, vert.transposed());
        }
    }
}
