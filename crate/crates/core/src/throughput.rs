//! Exact-rational throughput model: cycle counts per region and per frame,
//! and the clock frequency needed for a real-time target. Regions do not
//! always divide the frame evenly, so frame-level figures are rationals.

use crate::error::{Error, Result};
use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThroughputQuery {
    /// Samples produced per cycle by the prediction engine.
    pub parallelism: u64,
    /// Pipeline cycles charged per angular mode evaluated on a region row.
    pub cycles_per_angular_mode: u64,
    /// Pipeline cycles charged per non-angular mode.
    pub cycles_per_other_mode: u64,
    pub angular_modes: u64,
    pub other_modes: u64,
    pub region_width: u64,
    pub region_height: u64,
    pub frame_width: u64,
    pub frame_height: u64,
    pub fps: u64,
}

impl Default for ThroughputQuery {
    fn default() -> Self {
        ThroughputQuery {
            parallelism: 512,
            cycles_per_angular_mode: 5,
            cycles_per_other_mode: 12,
            angular_modes: 65,
            other_modes: 28,
            region_width: 64,
            region_height: 64,
            frame_width: 1920,
            frame_height: 1080,
            fps: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub cycles_per_region: u64,
    /// Exact rational, as (numerator, denominator).
    pub cycles_per_frame: (u64, u64),
    /// Required clock in Hz for the fps target, as (numerator, denominator).
    pub frequency_hz: (u64, u64),
    /// Convenience rounding of `frequency_hz` to whole Hz.
    pub frequency_hz_ceil: u64,
}

impl ThroughputQuery {
    pub fn validate(&self) -> Result<()> {
        let region = self.region_width * self.region_height;
        if self.parallelism == 0 || region == 0 {
            return Err(Error::InvalidConfig(
                "parallelism and region size must be positive".into(),
            ));
        }
        if !region.is_multiple_of(self.parallelism) {
            return Err(Error::InvalidConfig(format!(
                "parallelism {} does not divide region size {region}",
                self.parallelism
            )));
        }
        if self.frame_width == 0 || self.frame_height == 0 {
            return Err(Error::InvalidConfig("frame must be non-empty".into()));
        }
        Ok(())
    }

    pub fn cycles_per_region(&self) -> u64 {
        let passes = self.region_width * self.region_height / self.parallelism;
        let mode_cycles = self.angular_modes * self.cycles_per_angular_mode
            + self.other_modes * self.cycles_per_other_mode;
        passes * mode_cycles
    }

    pub fn regions_per_frame(&self) -> Ratio<u64> {
        Ratio::new(
            self.frame_width * self.frame_height,
            self.region_width * self.region_height,
        )
    }

    pub fn cycles_per_frame(&self) -> Ratio<u64> {
        Ratio::from_integer(self.cycles_per_region()) * self.regions_per_frame()
    }

    pub fn frequency_hz(&self) -> Ratio<u64> {
        self.cycles_per_frame() * Ratio::from_integer(self.fps)
    }

    pub fn report(&self) -> Result<ThroughputReport> {
        self.validate()?;
        let cf = self.cycles_per_frame();
        let f = self.frequency_hz();
        Ok(ThroughputReport {
            cycles_per_region: self.cycles_per_region(),
            cycles_per_frame: (*cf.numer(), *cf.denom()),
            frequency_hz: (*f.numer(), *f.denom()),
            frequency_hz_ceil: f.ceil().to_integer().to_u64().unwrap_or(u64::MAX),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_region_cycles() {
        let q = ThroughputQuery::default();
        // 8 passes of 65*5 + 28*12 = 661 cycles.
        assert_eq!(q.cycles_per_region(), 5288);
    }

    #[test]
    fn default_frame_and_frequency_are_exact() {
        let q = ThroughputQuery::default();
        // 506.25 regions per frame, so both figures stay integral.
        assert_eq!(q.regions_per_frame(), Ratio::new(2025, 4));
        assert_eq!(q.cycles_per_frame(), Ratio::from_integer(2_677_050));
        assert_eq!(q.frequency_hz(), Ratio::from_integer(80_311_500));
        let r = q.report().unwrap();
        assert_eq!(r.cycles_per_frame, (2_677_050, 1));
        assert_eq!(r.frequency_hz, (80_311_500, 1));
        assert_eq!(r.frequency_hz_ceil, 80_311_500);
    }

    #[test]
    fn fractional_frame_count_is_kept_exact() {
        let q = ThroughputQuery {
            frame_width: 100,
            frame_height: 100,
            ..Default::default()
        };
        assert_eq!(q.regions_per_frame(), Ratio::new(625, 256));
        assert_eq!(
            q.cycles_per_frame(),
            Ratio::new(5288u64 * 625, 256)
        );
    }

    #[test]
    fn zero_fps_means_zero_frequency() {
        let q = ThroughputQuery {
            fps: 0,
            ..Default::default()
        };
        assert_eq!(q.frequency_hz(), Ratio::from_integer(0));
    }

    #[test]
    fn parallelism_must_divide_region() {
        let q = ThroughputQuery {
            parallelism: 500,
            ..Default::default()
        };
        assert!(q.report().is_err());
    }

    #[test]
    fn doubling_parallelism_halves_region_cycles() {
        let base = ThroughputQuery::default();
        let fast = ThroughputQuery {
            parallelism: 1024,
            ..Default::default()
        };
        assert_eq!(base.cycles_per_region(), 2 * fast.cycles_per_region());
    }
}
