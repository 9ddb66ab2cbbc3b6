//! `z ↔ μ` symmetry of the restriction matrix and the interpolation
//! function between the two sides.
//!
//! The identity checked is
//!
//! ```text
//! A_{I,J}(z, μ) = (-1)^{n(n-1)/2} A_{J⁻¹·σ₀, I⁻¹·σ₀}(μ_{σ₀(1)}, …, μ_{σ₀(n)}, z_1⁻¹, …, z_n⁻¹)
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permutation::Permutation;
use crate::qtheta::{LogValue, ThetaContext};
use crate::restriction::{build_direct, restriction_point, RestrictionMatrix};
use crate::weight::{weight_with_scale, ChernPoint, ParameterPoint, Summed};

/// `(-1)^{n(n-1)/2}`.
pub fn mirror_sign(n: usize) -> f64 {
    if (n * n.saturating_sub(1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Identification of the parameters of `X` with those of its mirror, and of
/// fixed points via `I ↦ I⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KappaMap {
    pub n: usize,
}

impl KappaMap {
    pub fn new(n: usize) -> Self {
        KappaMap { n }
    }

    /// `(z, μ) ↦ (μ_{σ₀}, 1/z)`, `ħ` unchanged.
    pub fn substitute(&self, p: &ParameterPoint) -> Result<ParameterPoint> {
        if p.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, found: p.n() });
        }
        Ok(kappa_substitute(p))
    }

    pub fn fixed_point(&self, perm: &Permutation) -> Permutation {
        perm.inverse()
    }
}

pub fn kappa_substitute(p: &ParameterPoint) -> ParameterPoint {
    ParameterPoint {
        log_z: p.log_mu.iter().rev().copied().collect(),
        log_mu: p.log_z.iter().map(|&z| -z).collect(),
        log_h: p.log_h,
    }
}

/// Index pair on the mirror side: `(J⁻¹·σ₀, I⁻¹·σ₀)`.
pub fn mirror_indices(row: &Permutation, col: &Permutation) -> (Permutation, Permutation) {
    let longest = Permutation::longest(row.n());
    (
        col.inverse().compose(&longest).expect("same n"),
        row.inverse().compose(&longest).expect("same n"),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirrorResidual {
    pub row: Permutation,
    pub col: Permutation,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

fn normalized(lhs: Complex64, rhs: Complex64, scale: f64) -> f64 {
    let diff = (lhs - rhs).norm();
    if diff == 0.0 {
        return 0.0;
    }
    diff / (lhs.norm() + rhs.norm() + scale)
}

fn residual_from(direct: &RestrictionMatrix, mirrored: &RestrictionMatrix, row: &Permutation, col: &Permutation) -> MirrorResidual {
    let (dr, dc) = mirror_indices(row, col);
    let lhs = direct.get(row, col);
    let rhs = mirrored.get(&dr, &dc) * mirror_sign(direct.n);
    let scale = direct.scale(row, col).max(mirrored.scale(&dr, &dc));
    MirrorResidual { row: row.clone(), col: col.clone(), lhs, rhs, residual: normalized(lhs, rhs, scale) }
}

/// Every one of the `n!²` identities at `p`.
pub fn mirror_residuals(p: &ParameterPoint, ctx: &ThetaContext) -> Result<Vec<MirrorResidual>> {
    let id = Permutation::identity(p.n());
    let direct = build_direct(&id, p, ctx)?;
    let mirrored = build_direct(&id, &kappa_substitute(p), ctx)?;
    let mut out = Vec::with_capacity(direct.size() * direct.size());
    for row in &direct.order {
        for col in &direct.order {
            out.push(residual_from(&direct, &mirrored, row, col));
        }
    }
    Ok(out)
}

/// `|LHS - RHS| / (|LHS| + |RHS| + S)` for one index pair, `S` the largest
/// symmetrization term met on either side.
pub fn mirror_residual(row: &Permutation, col: &Permutation, p: &ParameterPoint, ctx: &ThetaContext) -> Result<f64> {
    let id = Permutation::identity(p.n());
    let (dr, dc) = mirror_indices(row, col);
    let lhs = crate::restriction::a_direct_with_scale(&id, row, col, p, ctx)?;
    let rhs = crate::restriction::a_direct_with_scale(&id, &dr, &dc, &kappa_substitute(p), ctx)?;
    Ok(normalized(lhs.value, rhs.value * mirror_sign(p.n()), lhs.scale.max(rhs.scale)))
}

/// The interpolation function `m̃(t, t')` at fixed `(z, z', ħ)`, holding
/// the inverse restriction matrix `A(z, z')⁻¹`.
#[derive(Clone, Debug)]
pub struct Interface {
    order: Vec<Permutation>,
    /// `(z, μ = z', ħ)`
    point: ParameterPoint,
    /// `(z'_{σ₀}, μ = 1/z, ħ)`
    dual_point: ParameterPoint,
    inverse: DMatrix<Complex64>,
    condition: f64,
}

fn norm1(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

impl Interface {
    pub fn new(p: &ParameterPoint, z_dual: &[LogValue], ctx: &ThetaContext) -> Result<Self> {
        let n = p.n();
        let point = p.with_log_mu(z_dual.to_vec())?;
        let a = build_direct(&Permutation::identity(n), &point, ctx)?;
        let size = a.size();
        let dense = DMatrix::from_fn(size, size, |r, c| a.entries[r][c]);
        let inverse = dense.clone().lu().try_inverse().ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
        let condition = norm1(&dense) * norm1(&inverse);
        if !condition.is_finite() || condition > 1.0 / ctx.tol() {
            return Err(Error::IllConditioned { condition });
        }
        let dual_point = ParameterPoint {
            log_z: z_dual.iter().rev().copied().collect(),
            log_mu: p.log_z.iter().map(|&z| -z).collect(),
            log_h: p.log_h,
        };
        Ok(Interface { order: a.order, point, dual_point, inverse, condition })
    }

    /// `‖A‖₁ ‖A⁻¹‖₁`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `(z, μ = z', ħ)`: the point at which `W_J(t, z, ħ, z')` is evaluated.
    pub fn point(&self) -> &ParameterPoint {
        &self.point
    }

    /// `(z'_{σ₀}, 1/z, ħ)`: the point for the mirror-side weight functions.
    pub fn dual_point(&self) -> &ParameterPoint {
        &self.dual_point
    }

    /// `m̃(t, t') = (-1)^{n(n-1)/2} Σ_{I,J} (A⁻¹)_{I,J} W_J(t, z, ħ, z') W_{I⁻¹·σ₀}(t', z'_{σ₀}, ħ, 1/z)`.
    pub fn value(&self, t: &ChernPoint, t_prime: &ChernPoint, ctx: &ThetaContext) -> Result<Summed> {
        let n = self.point.n();
        let longest = Permutation::longest(n);
        let left = self
            .order
            .iter()
            .map(|j| weight_with_scale(j, t, &self.point, ctx))
            .collect::<Result<Vec<_>>>()?;
        let right = self
            .order
            .iter()
            .map(|i| weight_with_scale(&i.inverse().compose(&longest)?, t_prime, &self.dual_point, ctx))
            .collect::<Result<Vec<_>>>()?;
        let mut value = Complex64::new(0.0, 0.0);
        let mut scale: f64 = 0.0;
        for (r, wr) in right.iter().enumerate() {
            for (c, wl) in left.iter().enumerate() {
                let term = self.inverse[(r, c)] * wl.value * wr.value;
                let bound = self.inverse[(r, c)].norm() * wl.scale * wr.scale;
                scale = scale.max(bound);
                value += term;
            }
        }
        let sign = mirror_sign(n);
        Ok(Summed { value: value * sign, scale })
    }

    /// `z'_{L}`: the fixed-point substitution of `L` in the primed variables.
    pub fn dual_restriction_point(&self, fixed: &Permutation) -> ChernPoint {
        let primed = ParameterPoint { log_z: self.point.log_mu.clone(), ..self.point.clone() };
        restriction_point(fixed, &primed)
    }

    /// `z_{L}` in the unprimed variables.
    pub fn restriction_point(&self, fixed: &Permutation) -> ChernPoint {
        restriction_point(fixed, &self.point)
    }
}

/// One-shot evaluation of `m̃(t, t')`.
pub fn interface_value(
    t: &ChernPoint,
    t_prime: &ChernPoint,
    p: &ParameterPoint,
    z_dual: &[LogValue],
    ctx: &ThetaContext,
) -> Result<Complex64> {
    Interface::new(p, z_dual, ctx)?.value(t, t_prime, ctx).map(|s| s.value)
}
