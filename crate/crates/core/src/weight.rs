//! Elliptic weight functions `W_I(t, z, ħ, μ)` of `T*Fl(n)`.
//!
//! `W_I` is the unnormalized symmetrization of the alternating theta product
//! `U_I` over each level of Chern roots:
//!
//! ```text
//! U_I = ∏_{k=1}^{n-1} ∏_{a≤k, c≤k+1} ψ_{I,k,a,c}(t_c^{(k+1)} / t_a^{(k)})
//!                   / ∏_{a<b≤k} θ(ħ t_a^{(k)} / t_b^{(k)}) θ(t_b^{(k)} / t_a^{(k)})
//! ```
//!
//! with `t^{(n)} = z`.

use itertools::Itertools;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permutation::{FixedPointTables, Permutation};
use crate::qtheta::{LogValue, ThetaContext};

/// Denominator thetas with modulus below this are treated as poles.
pub const POLE_THRESHOLD: f64 = 1e-13;

/// Logs of the equivariant parameters `z`, the Kähler parameters `μ` and `ħ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint {
    pub log_z: Vec<LogValue>,
    pub log_mu: Vec<LogValue>,
    pub log_h: LogValue,
}

impl ParameterPoint {
    pub fn new(log_z: Vec<LogValue>, log_mu: Vec<LogValue>, log_h: LogValue) -> Result<Self> {
        if log_z.len() != log_mu.len() {
            return Err(Error::SizeMismatch { expected: log_z.len(), found: log_mu.len() });
        }
        if log_z.is_empty() {
            return Err(Error::IndexOutOfRange("a parameter point needs n >= 1".into()));
        }
        Ok(ParameterPoint { log_z, log_mu, log_h })
    }

    pub fn n(&self) -> usize {
        self.log_z.len()
    }

    /// `z_σ = (z_{σ(1)}, …, z_{σ(n)})`.
    pub fn permute_z(&self, sigma: &Permutation) -> ParameterPoint {
        ParameterPoint {
            log_z: sigma.word().iter().map(|&s| self.log_z[s - 1]).collect(),
            ..self.clone()
        }
    }

    /// `μ_σ = (μ_{σ(1)}, …, μ_{σ(n)})`.
    pub fn permute_mu(&self, sigma: &Permutation) -> ParameterPoint {
        ParameterPoint {
            log_mu: sigma.word().iter().map(|&s| self.log_mu[s - 1]).collect(),
            ..self.clone()
        }
    }

    /// `z_k ↔ z_{k+1}`.
    pub fn swap_z(&self, k: usize) -> ParameterPoint {
        let mut out = self.clone();
        out.log_z.swap(k - 1, k);
        out
    }

    /// `μ_k ↔ μ_{k+1}`.
    pub fn swap_mu(&self, k: usize) -> ParameterPoint {
        let mut out = self.clone();
        out.log_mu.swap(k - 1, k);
        out
    }

    /// The same point with the Kähler slots replaced.
    pub fn with_log_mu(&self, log_mu: Vec<LogValue>) -> Result<ParameterPoint> {
        ParameterPoint::new(self.log_z.clone(), log_mu, self.log_h)
    }

    /// Every theta that can appear in a denominator (weight functions, the
    /// R-matrices and their duals) must have modulus at least `threshold`:
    /// `θ(ħ)`, and for `i ≠ j` the values `θ(z_i/z_j)`, `θ(ħ z_i/z_j)`,
    /// `θ(μ_i/μ_j)`, `θ(ħ μ_i/μ_j)`.
    pub fn check_generic(&self, ctx: &ThetaContext, threshold: f64) -> Result<()> {
        let guard = |what: String, lx: LogValue| -> Result<()> {
            let m = ctx.theta(lx)?.norm();
            if m < threshold || !m.is_finite() {
                return Err(Error::Resonance { context: what, modulus: m });
            }
            Ok(())
        };
        guard("θ(ħ)".into(), self.log_h)?;
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let dz = self.log_z[i] - self.log_z[j];
                let dm = self.log_mu[i] - self.log_mu[j];
                guard(format!("θ(z{}/z{})", i + 1, j + 1), dz)?;
                guard(format!("θ(ħz{}/z{})", i + 1, j + 1), dz + self.log_h)?;
                guard(format!("θ(μ{}/μ{})", i + 1, j + 1), dm)?;
                guard(format!("θ(ħμ{}/μ{})", i + 1, j + 1), dm + self.log_h)?;
            }
        }
        Ok(())
    }
}

/// Chern roots: level `k` (1-based, `k < n`) holds `t_1^{(k)}, …, t_k^{(k)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernPoint {
    levels: Vec<Vec<LogValue>>,
}

impl ChernPoint {
    pub fn new(levels: Vec<Vec<LogValue>>) -> Result<Self> {
        for (i, level) in levels.iter().enumerate() {
            if level.len() != i + 1 {
                return Err(Error::SizeMismatch { expected: i + 1, found: level.len() });
            }
        }
        Ok(ChernPoint { levels })
    }

    /// Number of tautological levels plus one.
    pub fn n(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn level(&self, k: usize) -> &[LogValue] {
        &self.levels[k - 1]
    }

    pub fn levels(&self) -> &[Vec<LogValue>] {
        &self.levels
    }

    /// Permute the entries within level `k`.
    pub fn permute_level(&self, k: usize, order: &[usize]) -> ChernPoint {
        let mut out = self.clone();
        out.levels[k - 1] = order.iter().map(|&i| self.levels[k - 1][i]).collect();
        out
    }
}

/// Offset `ω` in `ψ_{I,k,a,c}(x) = θ(x·e^ω)`, all indices 1-based.
fn psi_offset(tables: &FixedPointTables, perm: &Permutation, k: usize, a: usize, c: usize, p: &ParameterPoint) -> LogValue {
    let upper = tables.i(k + 1, c);
    let lower = tables.i(k, a);
    match upper.cmp(&lower) {
        std::cmp::Ordering::Less => p.log_h,
        std::cmp::Ordering::Greater => LogValue::ZERO,
        std::cmp::Ordering::Equal => {
            let shift = 1.0 - f64::from(u8::from(perm.at(k + 1) < lower));
            p.log_h * shift + p.log_mu[k] - p.log_mu[tables.j(k, a) - 1]
        }
    }
}

/// `ψ_{I,k,a,c}(x)`.
pub fn psi(
    perm: &Permutation,
    k: usize,
    a: usize,
    c: usize,
    lx: LogValue,
    p: &ParameterPoint,
    ctx: &ThetaContext,
) -> Result<Complex64> {
    let n = perm.n();
    if p.n() != n {
        return Err(Error::SizeMismatch { expected: n, found: p.n() });
    }
    if k == 0 || k >= n || a == 0 || a > k || c == 0 || c > k + 1 {
        return Err(Error::IndexOutOfRange(format!("psi(k={k}, a={a}, c={c}) for n = {n}")));
    }
    let tables = perm.fixed_point_tables();
    ctx.theta(lx + psi_offset(&tables, perm, k, a, c, p))
}

fn check_shapes(perm: &Permutation, t: &ChernPoint, p: &ParameterPoint) -> Result<()> {
    if p.n() != perm.n() {
        return Err(Error::SizeMismatch { expected: perm.n(), found: p.n() });
    }
    if t.n() != perm.n() {
        return Err(Error::SizeMismatch { expected: perm.n(), found: t.n() });
    }
    Ok(())
}

fn level_vars<'a>(t: &'a ChernPoint, p: &'a ParameterPoint, k: usize) -> &'a [LogValue] {
    if k == p.n() {
        &p.log_z
    } else {
        t.level(k)
    }
}

fn pole_checked(ctx: &ThetaContext, lx: LogValue) -> Result<Complex64> {
    let v = ctx.theta(lx)?;
    if v.norm() < POLE_THRESHOLD {
        return Err(Error::Pole { arg: lx.to_string(), modulus: v.norm() });
    }
    Ok(v)
}

/// `U_I` at `t` exactly as ordered, without symmetrization.
pub fn u_product(perm: &Permutation, t: &ChernPoint, p: &ParameterPoint, ctx: &ThetaContext) -> Result<Complex64> {
    check_shapes(perm, t, p)?;
    let n = perm.n();
    let tables = perm.fixed_point_tables();
    let mut acc = Complex64::new(1.0, 0.0);
    for k in 1..n {
        let lower = level_vars(t, p, k);
        let upper = level_vars(t, p, k + 1);
        for a in 1..=k {
            for c in 1..=k + 1 {
                let offset = psi_offset(&tables, perm, k, a, c, p);
                acc *= ctx.theta(upper[c - 1] - lower[a - 1] + offset)?;
            }
        }
        for a in 1..=k {
            for b in a + 1..=k {
                acc /= pole_checked(ctx, lower[a - 1] + p.log_h - lower[b - 1])?;
                acc /= pole_checked(ctx, lower[b - 1] - lower[a - 1])?;
            }
        }
    }
    Ok(acc)
}

/// A symmetrized sum together with the largest modulus among its terms,
/// which bounds the cancellation error of the sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summed {
    pub value: Complex64,
    pub scale: f64,
}

/// Precomputed theta values for one level `k` of the alternating product.
struct LevelTable {
    k: usize,
    /// `numer[slot(a,c)][u * (k+1) + v]` = ψ-factor with lower variable `u`, upper variable `v`.
    numer: Vec<Vec<Complex64>>,
    /// Which row of `numer` each `(a, c)` uses, row-major in `a`.
    slot: Vec<usize>,
    /// `denom[u * k + w] = θ(ħ t_u / t_w) θ(t_w / t_u)` for `u ≠ w`.
    denom: Vec<Complex64>,
}

impl LevelTable {
    fn build(
        perm: &Permutation,
        tables: &FixedPointTables,
        k: usize,
        t: &ChernPoint,
        p: &ParameterPoint,
        ctx: &ThetaContext,
    ) -> Result<Self> {
        let lower = level_vars(t, p, k);
        let upper = level_vars(t, p, k + 1);
        let mut offsets: Vec<LogValue> = Vec::new();
        let mut slot = Vec::with_capacity(k * (k + 1));
        for a in 1..=k {
            for c in 1..=k + 1 {
                let off = psi_offset(tables, perm, k, a, c, p);
                let idx = match offsets.iter().position(|&o| o == off) {
                    Some(i) => i,
                    None => {
                        offsets.push(off);
                        offsets.len() - 1
                    }
                };
                slot.push(idx);
            }
        }
        let mut numer = Vec::with_capacity(offsets.len());
        for &off in &offsets {
            let mut row = Vec::with_capacity(k * (k + 1));
            for u in lower {
                for v in upper {
                    row.push(ctx.theta(*v - *u + off)?);
                }
            }
            numer.push(row);
        }
        let mut denom = vec![Complex64::new(0.0, 0.0); k * k];
        for u in 0..k {
            for w in 0..k {
                if u != w {
                    denom[u * k + w] = pole_checked(ctx, lower[u] + p.log_h - lower[w])?
                        * pole_checked(ctx, lower[w] - lower[u])?;
                }
            }
        }
        Ok(LevelTable { k, numer, slot, denom })
    }

    /// Level factor for the arrangements `lower_perm` (of level k) and
    /// `upper_perm` (of level k+1).
    fn factor(&self, lower_perm: &[usize], upper_perm: &[usize]) -> Complex64 {
        let k = self.k;
        let mut num = Complex64::new(1.0, 0.0);
        for a in 0..k {
            let u = lower_perm[a];
            for c in 0..=k {
                let v = upper_perm[c];
                num *= self.numer[self.slot[a * (k + 1) + c]][u * (k + 1) + v];
            }
        }
        let mut den = Complex64::new(1.0, 0.0);
        for a in 0..k {
            for b in a + 1..k {
                den *= self.denom[lower_perm[a] * k + lower_perm[b]];
            }
        }
        num / den
    }
}

/// `W_I(t, z, ħ, μ)` with the largest symmetrization-term modulus.
pub fn weight_with_scale(perm: &Permutation, t: &ChernPoint, p: &ParameterPoint, ctx: &ThetaContext) -> Result<Summed> {
    check_shapes(perm, t, p)?;
    let n = perm.n();
    if n == 1 {
        return Ok(Summed { value: Complex64::new(1.0, 0.0), scale: 1.0 });
    }
    let tables = perm.fixed_point_tables();
    let levels = (1..n)
        .map(|k| LevelTable::build(perm, &tables, k, t, p, ctx))
        .collect::<Result<Vec<_>>>()?;
    let arrangements: Vec<Vec<Vec<usize>>> = (1..n).map(|k| (0..k).permutations(k).collect()).collect();
    let top: Vec<usize> = (0..n).collect();

    let mut value = Complex64::new(0.0, 0.0);
    let mut scale = 0.0_f64;
    for choice in arrangements.iter().map(|a| a.iter()).multi_cartesian_product() {
        let mut term = Complex64::new(1.0, 0.0);
        for (idx, table) in levels.iter().enumerate() {
            let upper = if idx + 1 < choice.len() { choice[idx + 1].as_slice() } else { top.as_slice() };
            term *= table.factor(choice[idx], upper);
        }
        scale = scale.max(term.norm());
        value += term;
    }
    Ok(Summed { value, scale })
}

/// `W_I(t, z, ħ, μ)`.
pub fn weight(perm: &Permutation, t: &ChernPoint, p: &ParameterPoint, ctx: &ThetaContext) -> Result<Complex64> {
    weight_with_scale(perm, t, p, ctx).map(|s| s.value)
}

/// `W_{σ,I}(t, z, ħ, μ) = W_{σ⁻¹∘I}(t, z_σ, ħ, μ)`.
pub fn weight_sigma_with_scale(
    sigma: &Permutation,
    perm: &Permutation,
    t: &ChernPoint,
    p: &ParameterPoint,
    ctx: &ThetaContext,
) -> Result<Summed> {
    let index = sigma.inverse().then(perm)?;
    if p.n() != sigma.n() {
        return Err(Error::SizeMismatch { expected: sigma.n(), found: p.n() });
    }
    weight_with_scale(&index, t, &p.permute_z(sigma), ctx)
}

pub fn weight_sigma(
    sigma: &Permutation,
    perm: &Permutation,
    t: &ChernPoint,
    p: &ParameterPoint,
    ctx: &ThetaContext,
) -> Result<Complex64> {
    weight_sigma_with_scale(sigma, perm, t, p, ctx).map(|s| s.value)
}

/// `P_I(w_1, …, w_n) = ∏_{k<l} θ(ħ^{[I_l<I_k]} w_{I_l} / w_{I_k})`.
pub fn p_product(perm: &Permutation, log_w: &[LogValue], log_h: LogValue, ctx: &ThetaContext) -> Result<Complex64> {
    let n = perm.n();
    if log_w.len() != n {
        return Err(Error::SizeMismatch { expected: n, found: log_w.len() });
    }
    let mut acc = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        for l in k + 1..=n {
            let (ik, il) = (perm.at(k), perm.at(l));
            let ratio = log_w[il - 1] - log_w[ik - 1];
            acc *= if il < ik { ctx.theta(ratio + log_h)? } else { ctx.theta(ratio)? };
        }
    }
    Ok(acc)
}
