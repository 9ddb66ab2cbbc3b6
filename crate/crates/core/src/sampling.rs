//! Seeded random parameter and Chern-root points.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qtheta::{LogValue, ThetaContext};
use crate::weight::{ChernPoint, ParameterPoint};

/// Rejection threshold for theta denominators at sampled points.
pub const RESONANCE_THRESHOLD: f64 = 1e-4;

pub const MAX_ATTEMPTS: usize = 10_000;

/// Deterministic source of sample points.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// `Re ∈ [-1, 1]`, `Im ∈ [-π, π]`.
    pub fn log_value(&mut self) -> LogValue {
        LogValue::new(self.rng.gen_range(-1.0..=1.0), self.rng.gen_range(-PI..=PI))
    }

    pub fn log_values(&mut self, n: usize) -> Vec<LogValue> {
        (0..n).map(|_| self.log_value()).collect()
    }

    /// A point whose denominators all stay away from zero, see
    /// [`ParameterPoint::check_generic`].
    pub fn parameter_point(&mut self, n: usize, ctx: &ThetaContext) -> Result<ParameterPoint> {
        for _ in 0..MAX_ATTEMPTS {
            let p = ParameterPoint::new(self.log_values(n), self.log_values(n), self.log_value())?;
            match p.check_generic(ctx, RESONANCE_THRESHOLD) {
                Ok(()) => return Ok(p),
                Err(Error::Resonance { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::ResamplingExhausted { attempts: MAX_ATTEMPTS })
    }

    pub fn chern_point(&mut self, n: usize) -> ChernPoint {
        let levels = (1..n).map(|k| self.log_values(k)).collect();
        ChernPoint::new(levels).expect("levels have the right sizes")
    }

    /// A uniform log argument with `|Re| ≤ re_max`, `|Im| ≤ im_max`.
    pub fn log_in_box(&mut self, re_max: f64, im_max: f64) -> LogValue {
        LogValue::new(self.rng.gen_range(-re_max..=re_max), self.rng.gen_range(-im_max..=im_max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn same_seed_same_points() {
        let ctx = ThetaContext::new(Complex64::new(0.3, 0.0)).unwrap();
        let a = Sampler::new(7).parameter_point(3, &ctx).unwrap();
        let b = Sampler::new(7).parameter_point(3, &ctx).unwrap();
        assert_eq!(a, b);
        let c = Sampler::new(8).parameter_point(3, &ctx).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn samples_stay_in_box() {
        let mut s = Sampler::new(1);
        for _ in 0..200 {
            let l = s.log_value();
            assert!(l.0.re.abs() <= 1.0 && l.0.im.abs() <= PI);
        }
    }
}
