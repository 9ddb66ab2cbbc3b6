//! Skew Jacobi theta function and the q-Pochhammer product.
//!
//! Every multiplicative argument is carried as its logarithm ([`LogValue`]).
//! Half powers are taken as `exp(l / 2)`, so `θ(1/x) = -θ(x)` holds exactly
//! for every branch of the logarithm and inversion is plain negation.
//!
//! ```text
//! φ(x) = ∏_{s=0}^{trunc-1} (1 - q^s x)
//! θ(x) = (x^{1/2} - x^{-1/2}) φ(qx) φ(q/x)
//! ```

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for identity residuals.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Default bound on `|ln|x||` for theta arguments (x up to e^60).
pub const DEFAULT_LOG_MAGNITUDE_BOUND: f64 = 60.0;

/// Logarithm of a multiplicative parameter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogValue(pub Complex64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(Complex64::new(0.0, 0.0));

    pub fn new(re: f64, im: f64) -> Self {
        LogValue(Complex64::new(re, im))
    }

    /// Logarithm of a positive real number.
    pub fn of_real(x: f64) -> Self {
        LogValue(Complex64::new(x.ln(), 0.0))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    /// The represented quantity `x = exp(ℓ)`.
    pub fn exp(self) -> Complex64 {
        self.0.exp()
    }

    /// `x^{1/2} = exp(ℓ/2)`.
    pub fn half_power(self) -> Complex64 {
        (self.0 * 0.5).exp()
    }
}

impl From<Complex64> for LogValue {
    fn from(c: Complex64) -> Self {
        LogValue(c)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({}{:+}i)", self.0.re, self.0.im)
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, rhs: LogValue) -> LogValue {
        LogValue(self.0 + rhs.0)
    }
}

impl AddAssign for LogValue {
    fn add_assign(&mut self, rhs: LogValue) {
        self.0 += rhs.0;
    }
}

impl Sub for LogValue {
    type Output = LogValue;
    fn sub(self, rhs: LogValue) -> LogValue {
        LogValue(self.0 - rhs.0)
    }
}

impl SubAssign for LogValue {
    fn sub_assign(&mut self, rhs: LogValue) {
        self.0 -= rhs.0;
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue(-self.0)
    }
}

/// Integer (or real) powers: `x^k` is `k·ℓ`.
impl Mul<f64> for LogValue {
    type Output = LogValue;
    fn mul(self, k: f64) -> LogValue {
        LogValue(self.0 * k)
    }
}

/// Evaluation environment for all q-series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaContext {
    log_q: LogValue,
    trunc: usize,
    tol: f64,
    log_magnitude_bound: f64,
}

impl ThetaContext {
    /// Context for a modular parameter `q` with the automatic truncation and
    /// the default tolerance.
    pub fn new(q: Complex64) -> Result<Self> {
        if q.norm() == 0.0 || !q.norm().is_finite() {
            return Err(Error::InvalidContext(format!("q = {q} must be a nonzero point of the unit disk")));
        }
        Self::from_log_q(LogValue(q.ln()))
    }

    pub fn from_log_q(log_q: LogValue) -> Result<Self> {
        let trunc = Self::auto_trunc(log_q)?;
        Self::with_settings(log_q, trunc, DEFAULT_TOL)
    }

    /// Fully explicit construction; validates every invariant.
    pub fn with_settings(log_q: LogValue, trunc: usize, tol: f64) -> Result<Self> {
        let re = log_q.0.re;
        if !(re < 0.0) || !log_q.0.im.is_finite() {
            return Err(Error::InvalidContext(format!("|q| = exp({re}) must be < 1")));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidContext(format!("tol = {tol} must be positive")));
        }
        let minimum = Self::minimum_trunc(log_q);
        if trunc < minimum {
            return Err(Error::InvalidContext(format!(
                "trunc = {trunc} leaves a tail above machine epsilon (need >= {minimum})"
            )));
        }
        Ok(ThetaContext { log_q, trunc, tol, log_magnitude_bound: DEFAULT_LOG_MAGNITUDE_BOUND })
    }

    /// `max(24, ceil(36 / -log10|q|))`.
    pub fn auto_trunc(log_q: LogValue) -> Result<usize> {
        let re = log_q.0.re;
        if !(re < 0.0) {
            return Err(Error::InvalidContext(format!("|q| = exp({re}) must be < 1")));
        }
        let digits_per_factor = -re / std::f64::consts::LN_10;
        let needed = (36.0 / digits_per_factor).ceil();
        Ok(if needed.is_finite() { (needed as usize).max(24) } else { usize::MAX })
    }

    /// `ceil(ln ε / ln|q|)`: fewest factors for which the dropped tail is below ε.
    pub fn minimum_trunc(log_q: LogValue) -> usize {
        (f64::EPSILON.ln() / log_q.0.re).ceil().max(1.0) as usize
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidContext(format!("tol = {tol} must be positive")));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn with_trunc(self, trunc: usize) -> Result<Self> {
        Self::with_settings(self.log_q, trunc, self.tol).map(|c| ThetaContext {
            log_magnitude_bound: self.log_magnitude_bound,
            ..c
        })
    }

    pub fn with_log_magnitude_bound(mut self, bound: f64) -> Self {
        self.log_magnitude_bound = bound;
        self
    }

    pub fn log_q(&self) -> LogValue {
        self.log_q
    }

    pub fn q(&self) -> Complex64 {
        self.log_q.exp()
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn check_magnitude(&self, lx: LogValue) -> Result<()> {
        let m = lx.0.re.abs();
        if m > self.log_magnitude_bound || !m.is_finite() {
            return Err(Error::Range { log_magnitude: lx.0.re, bound: self.log_magnitude_bound });
        }
        Ok(())
    }

    /// Truncated product without the range guard.
    fn phi_unchecked(&self, lx: LogValue) -> Complex64 {
        let q = self.q();
        let mut power = lx.exp();
        let mut acc = Complex64::new(1.0, 0.0);
        for _ in 0..self.trunc {
            acc *= Complex64::new(1.0, 0.0) - power;
            power *= q;
        }
        acc
    }

    /// `φ(x) = ∏_{s<trunc} (1 - q^s x)`.
    pub fn phi(&self, lx: LogValue) -> Result<Complex64> {
        if lx.0.re > self.log_magnitude_bound || !lx.0.re.is_finite() {
            return Err(Error::Range { log_magnitude: lx.0.re, bound: self.log_magnitude_bound });
        }
        Ok(self.phi_unchecked(lx))
    }

    /// Skew theta `θ(x) = (x^{1/2} - x^{-1/2}) φ(qx) φ(q/x)`.
    pub fn theta(&self, lx: LogValue) -> Result<Complex64> {
        self.check_magnitude(lx)?;
        let half = lx.half_power();
        let prefactor = half - half.inv();
        if prefactor == Complex64::new(0.0, 0.0) {
            return Ok(prefactor);
        }
        Ok(prefactor * self.phi_unchecked(self.log_q + lx) * self.phi_unchecked(self.log_q - lx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(q: f64) -> ThetaContext {
        ThetaContext::new(Complex64::new(q, 0.0)).unwrap()
    }

    #[test]
    fn auto_truncation() {
        assert_eq!(ThetaContext::auto_trunc(LogValue::of_real(0.3)).unwrap(), 69);
        assert_eq!(ThetaContext::auto_trunc(LogValue::of_real(1e-3)).unwrap(), 24);
        assert_eq!(ThetaContext::auto_trunc(LogValue::of_real(0.5)).unwrap(), 120);
        // the automatic choice always satisfies the epsilon-tail invariant
        for q in [0.01, 0.1, 0.3, 0.5, 0.9] {
            let lq = LogValue::of_real(q);
            assert!(ThetaContext::auto_trunc(lq).unwrap() >= ThetaContext::minimum_trunc(lq));
        }
    }

    #[test]
    fn rejects_invalid_contexts() {
        assert!(ThetaContext::new(Complex64::new(1.0, 0.0)).is_err());
        assert!(ThetaContext::new(Complex64::new(0.0, 1.2)).is_err());
        assert!(ThetaContext::new(Complex64::new(0.0, 0.0)).is_err());
        assert!(ctx(0.3).with_tol(0.0).is_err());
        assert!(ctx(0.3).with_trunc(3).is_err());
        assert!(ctx(0.3).with_trunc(200).is_ok());
    }

    #[test]
    fn phi_golden_values() {
        let c = ctx(0.1).with_trunc(64).unwrap();
        // the s = 0 factor of φ(1) vanishes
        assert_eq!(c.phi(LogValue::ZERO).unwrap(), Complex64::new(0.0, 0.0));
        // φ(q) = (q; q)_∞ at q = 0.1, 40-digit truncated-product oracle
        let v = c.phi(c.log_q()).unwrap();
        assert!((v - Complex64::new(0.890_010_099_998_999_000_000_1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn theta_golden_values() {
        let c = ctx(0.1).with_trunc(64).unwrap();
        let v = c.theta(LogValue::of_real(2.0)).unwrap();
        assert!((v - Complex64::new(0.522_565_150_961_882_831_7, 0.0)).norm() < 1e-15);

        let c = ctx(0.3);
        let v = c.theta(LogValue::new(0.7, -0.4)).unwrap();
        let want = Complex64::new(0.259_832_483_738_220_970_7, -0.008_195_228_071_302_429_946);
        assert!((v - want).norm() < 1e-14);
    }

    #[test]
    fn theta_vanishes_at_one() {
        assert_eq!(ctx(0.3).theta(LogValue::ZERO).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn q_to_zero_degenerates() {
        let c = ThetaContext::from_log_q(LogValue::new(-800.0, 0.0)).unwrap();
        let lx = LogValue::new(0.4, 1.3);
        let x = lx.exp();
        assert!((c.phi(lx).unwrap() - (1.0 - x)).norm() < 1e-15);
        let want = lx.half_power() - lx.half_power().inv();
        assert!((c.theta(lx).unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn range_guard() {
        let c = ctx(0.3);
        assert!(matches!(c.theta(LogValue::new(61.0, 0.0)), Err(Error::Range { .. })));
        assert!(matches!(c.theta(LogValue::new(-61.0, 0.0)), Err(Error::Range { .. })));
        assert!(matches!(c.phi(LogValue::new(61.0, 0.0)), Err(Error::Range { .. })));
        let c = c.with_log_magnitude_bound(70.0);
        assert!(c.theta(LogValue::new(61.0, 0.0)).is_ok());
    }

    #[test]
    fn negation_inverts_half_power() {
        let l = LogValue::new(-3.1, 7.9);
        assert!(((-l).half_power() * l.half_power() - 1.0).norm() < 1e-15);
    }
}
