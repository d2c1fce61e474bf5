use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hospital length of stay in days: a normal(mean, std) truncated to
/// [min, max], rounded to whole days.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LosDistribution {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for LosDistribution {
    fn default() -> Self {
        Self {
            mean: 3.0,
            std: 5.0,
            min: 1.0,
            max: 50.0,
        }
    }
}

impl LosDistribution {
    pub fn validate(&self) -> Result<()> {
        if !(self.std > 0.0) || !self.mean.is_finite() {
            return Err(Error::config("los.std must be positive and los.mean finite"));
        }
        if !(self.min >= 1.0 && self.min <= self.max) {
            return Err(Error::config("los requires 1 <= min <= max"));
        }
        Ok(())
    }

    /// Continuous draw by rejection from the parent normal.
    pub fn sample_continuous<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let normal = Normal::new(self.mean, self.std).expect("validated std");
        loop {
            let x = normal.sample(rng);
            if (self.min..=self.max).contains(&x) {
                return x;
            }
        }
    }

    /// Whole-day draw in `[min, max]`.
    pub fn sample_days<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let x = self.sample_continuous(rng).round();
        x.clamp(self.min.ceil(), self.max.floor()) as u32
    }

    /// Remaining stay for a patient already in hospital at day 0: a total
    /// stay `L` is drawn, then the remainder is uniform on `1..=L`.
    pub fn sample_remaining<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let total = self.sample_days(rng).max(1);
        rng.random_range(1..=total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RngStream, StreamTag};

    #[test]
    fn samples_stay_in_bounds() {
        let los = LosDistribution::default();
        let mut rng = RngStream::new(11).substream(StreamTag::Execute, 0);
        for _ in 0..20_000 {
            let d = los.sample_days(&mut rng);
            assert!((1..=50).contains(&d));
            let r = los.sample_remaining(&mut rng);
            assert!((1..=50).contains(&r));
        }
    }

    #[test]
    fn rejects_bad_params() {
        let mut los = LosDistribution::default();
        los.std = 0.0;
        assert!(los.validate().is_err());
        let los = LosDistribution {
            min: 10.0,
            max: 5.0,
            ..Default::default()
        };
        assert!(los.validate().is_err());
    }
}
