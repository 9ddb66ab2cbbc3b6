//! Felder's elliptic dynamical R-matrix, its dual under `z ↔ μ`, and the two
//! recursions that rebuild the restriction matrix from its diagonal.
//!
//! Exchange relation (value swap `I·s_k`, `a = I⁻¹(k)`, `b = I⁻¹(k+1)`,
//! `x = z_k/z_{k+1}`):
//!
//! ```text
//! A_{I·s_k, J·s_k}(z^{k↔k+1}) = R^{ab}_{ab}(x) A_{I,J}(z) + R^{ba}_{ab}(x) A_{I·s_k, J}(z)
//! ```
//!
//! Writing it at `z` and at `z^{k↔k+1}` and eliminating the second unknown
//! gives the new row from the old one:
//!
//! ```text
//! A_{I·s_k, J}(z) = α A_{I, J·s_k}(z^{k↔k+1}) + β A_{I, J}(z)
//! α = R^{ab}_{ab}(1/x) / D,  β = R^{ba}_{ab}(1/x) R^{ab}_{ab}(x) / D,
//! D = 1 - R^{ba}_{ab}(x) R^{ba}_{ab}(1/x)
//! ```
//!
//! Dual relation (position swap `s_k·I`, `a = n - J_k + 1`, `b = n - J_{k+1} + 1`):
//!
//! ```text
//! A_{s_k·I, s_k·J}(μ^{k↔k+1}) = R̃^{ab}_{ab} A_{I,J}(μ) + R̃^{ba}_{ab} A_{I, s_k·J}(μ)
//! ```
//!
//! where `R̃` is `R` after `z_i ↦ μ_i⁻¹`, `μ_i ↦ z_{σ₀(i)}` (spectral
//! argument included). Both recursions need the previous row at permuted
//! points, so the drivers carry every row at every permutation of the
//! relevant parameter block.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permutation::Permutation;
use crate::qtheta::{LogValue, ThetaContext};
use crate::restriction::{a_diagonal, build_direct, relative_deviation, Provenance, RestrictionMatrix};
use crate::weight::{ParameterPoint, POLE_THRESHOLD};

/// Entries of the R-matrix in the `(j, k)` block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FelderKind {
    /// `R^{jj}_{jj}`
    DiagEqual,
    /// `R^{jk}_{jk}`
    Diag,
    /// `R^{jk}_{kj}`
    Exchange,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FelderEntry {
    pub kind: FelderKind,
    pub j: usize,
    pub k: usize,
    pub value: Complex64,
}

fn denominator(ctx: &ThetaContext, lx: LogValue) -> Result<Complex64> {
    let v = ctx.theta(lx)?;
    if v.norm() < POLE_THRESHOLD {
        return Err(Error::Pole { arg: lx.to_string(), modulus: v.norm() });
    }
    Ok(v)
}

/// Felder's R-matrix entry at spectral argument `x` (1-based `j`, `k`).
pub fn felder_r(
    kind: FelderKind,
    j: usize,
    k: usize,
    lx: LogValue,
    p: &ParameterPoint,
    ctx: &ThetaContext,
) -> Result<Complex64> {
    if kind == FelderKind::DiagEqual {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let n = p.n();
    if j == 0 || k == 0 || j > n || k > n || j == k {
        return Err(Error::IndexOutOfRange(format!("R^({j},{k}) for n = {n}")));
    }
    let dm = p.log_mu[j - 1] - p.log_mu[k - 1];
    let den = denominator(ctx, lx + p.log_h)? * denominator(ctx, dm)?;
    let num = match kind {
        FelderKind::Diag => ctx.theta(lx)? * ctx.theta(p.log_h + dm)?,
        FelderKind::Exchange => ctx.theta(lx + dm)? * ctx.theta(p.log_h)?,
        FelderKind::DiagEqual => unreachable!(),
    };
    Ok(num / den)
}

pub fn felder_entry(
    kind: FelderKind,
    j: usize,
    k: usize,
    lx: LogValue,
    p: &ParameterPoint,
    ctx: &ThetaContext,
) -> Result<FelderEntry> {
    Ok(FelderEntry { kind, j, k, value: felder_r(kind, j, k, lx, p, ctx)? })
}

/// The point `z_i ↦ μ_i⁻¹, μ_i ↦ z_{σ₀(i)}`.
pub fn dual_substitution(p: &ParameterPoint) -> ParameterPoint {
    ParameterPoint {
        log_z: p.log_mu.iter().map(|&m| -m).collect(),
        log_mu: p.log_z.iter().rev().copied().collect(),
        log_h: p.log_h,
    }
}

/// `R̃`: Felder's entry at the dual-substituted point.
pub fn dual_r(
    kind: FelderKind,
    j: usize,
    k: usize,
    lx: LogValue,
    p: &ParameterPoint,
    ctx: &ThetaContext,
) -> Result<Complex64> {
    felder_r(kind, j, k, lx, &dual_substitution(p), ctx)
}

fn resonance(context: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Pole { modulus, .. } => Error::Resonance { context: context.to_string(), modulus },
        other => other,
    }
}

/// `(α, β)` expressing row `I·s_k` through row `I`; `a`, `b` are the
/// positions of `k`, `k+1` in `I` and `lx = log(z_k/z_{k+1})`.
pub fn exchange_coefficients(
    a: usize,
    b: usize,
    lx: LogValue,
    p: &ParameterPoint,
    ctx: &ThetaContext,
) -> Result<(Complex64, Complex64)> {
    let on = resonance("exchange coefficient");
    let r1 = felder_r(FelderKind::Diag, a, b, lx, p, ctx).map_err(&on)?;
    let r2 = felder_r(FelderKind::Exchange, b, a, lx, p, ctx).map_err(&on)?;
    let r1_inv = felder_r(FelderKind::Diag, a, b, -lx, p, ctx).map_err(&on)?;
    let r2_inv = felder_r(FelderKind::Exchange, b, a, -lx, p, ctx).map_err(&on)?;
    let d = Complex64::new(1.0, 0.0) - r2 * r2_inv;
    if d.norm() < POLE_THRESHOLD {
        return Err(Error::Resonance { context: "1 - R^{ba}_{ab}(x) R^{ba}_{ab}(1/x)".into(), modulus: d.norm() });
    }
    Ok((r1_inv / d, r2_inv * r1 / d))
}

/// Which descents a recursion driver evaluates for each new row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentMode {
    /// The smallest valid `k` only.
    #[default]
    Smallest,
    /// Every valid `k`; disagreement beyond `10·tol` is a consistency error.
    CrossCheck,
}

/// Rows of a restriction matrix at every permutation of one parameter block.
struct RowTable {
    order: Vec<Permutation>,
    /// `rows[row][point][col]`
    rows: Vec<Vec<Vec<Complex64>>>,
    scales: Vec<Vec<Vec<f64>>>,
}

impl RowTable {
    fn new(n: usize) -> Self {
        let order = Permutation::all(n);
        let m = order.len();
        RowTable {
            rows: vec![Vec::new(); m],
            scales: vec![Vec::new(); m],
            order,
        }
    }

    fn idx(&self, p: &Permutation) -> usize {
        self.order.binary_search(p).expect("permutation belongs to S_n")
    }

    /// Row `id`: the diagonal entry, zeros elsewhere.
    fn seed(&mut self, points: &[ParameterPoint], ctx: &ThetaContext) -> Result<()> {
        let m = self.order.len();
        let id = self.order[0].clone();
        let mut rows = Vec::with_capacity(m);
        let mut scales = Vec::with_capacity(m);
        for p in points {
            let mut row = vec![Complex64::new(0.0, 0.0); m];
            row[0] = a_diagonal(&id, p, ctx)?;
            scales.push(row.iter().map(|z| z.norm()).collect());
            rows.push(row);
        }
        self.rows[0] = rows;
        self.scales[0] = scales;
        Ok(())
    }

    fn into_matrix(self, p: &ParameterPoint, provenance: Provenance) -> RestrictionMatrix {
        let n = p.n();
        RestrictionMatrix {
            n,
            sigma: Permutation::identity(n),
            entries: self.rows.into_iter().map(|mut r| r.swap_remove(0)).collect(),
            term_scale: self.scales.into_iter().map(|mut r| r.swap_remove(0)).collect(),
            order: self.order,
            provenance,
            point: p.clone(),
        }
    }
}

type RowAtPoints = (Vec<Vec<Complex64>>, Vec<Vec<f64>>);

fn cross_check(row: &Permutation, candidates: &[RowAtPoints], tol: f64) -> Result<()> {
    let (first, first_scale) = &candidates[0];
    for (other, other_scale) in &candidates[1..] {
        for ((ra, sa), (rb, sb)) in first.iter().zip(first_scale).zip(other.iter().zip(other_scale)) {
            for c in 0..ra.len() {
                let dev = relative_deviation(ra[c], rb[c], sa[c].max(sb[c]));
                if dev > 10.0 * tol {
                    return Err(Error::Consistency { row: row.clone(), deviation: dev });
                }
            }
        }
    }
    Ok(())
}

/// Restriction matrix from its first row and the exchange relation.
pub fn build_by_r_recursion(p: &ParameterPoint, ctx: &ThetaContext) -> Result<RestrictionMatrix> {
    build_by_r_recursion_with(p, ctx, DescentMode::Smallest)
}

pub fn build_by_r_recursion_with(p: &ParameterPoint, ctx: &ThetaContext, mode: DescentMode) -> Result<RestrictionMatrix> {
    let n = p.n();
    let mut table = RowTable::new(n);
    // point index π ↦ z_π, the same order as the rows
    let points: Vec<ParameterPoint> = table.order.iter().map(|pi| p.permute_z(pi)).collect();
    table.seed(&points, ctx)?;
    let m = table.order.len();

    for r in 1..m {
        let target = table.order[r].clone();
        let descents = target.value_descents();
        let chosen = match mode {
            DescentMode::Smallest => &descents[..1],
            DescentMode::CrossCheck => &descents[..],
        };
        let mut candidates: Vec<RowAtPoints> = Vec::with_capacity(chosen.len());
        for &k in chosen {
            let parent = target.swap_values(k);
            let pr = table.idx(&parent);
            let inv = parent.inverse();
            let (a, b) = (inv.at(k), inv.at(k + 1));
            let mut rows = Vec::with_capacity(m);
            let mut scales = Vec::with_capacity(m);
            for (pi_idx, pi) in table.order.iter().enumerate() {
                let at = &points[pi_idx];
                let swapped = table.idx(&pi.swap_positions(k));
                let lx = at.log_z[k - 1] - at.log_z[k];
                let (alpha, beta) = exchange_coefficients(a, b, lx, at, ctx)?;
                let mut row = Vec::with_capacity(m);
                let mut scale = Vec::with_capacity(m);
                for col in &table.order {
                    let c_here = table.idx(col);
                    let c_swap = table.idx(&col.swap_values(k));
                    let from_swapped = table.rows[pr][swapped][c_swap];
                    let from_here = table.rows[pr][pi_idx][c_here];
                    row.push(alpha * from_swapped + beta * from_here);
                    scale.push(
                        alpha.norm() * table.scales[pr][swapped][c_swap] + beta.norm() * table.scales[pr][pi_idx][c_here],
                    );
                }
                rows.push(row);
                scales.push(scale);
            }
            candidates.push((rows, scales));
        }
        if candidates.len() > 1 {
            cross_check(&target, &candidates, ctx.tol())?;
        }
        let (rows, scales) = candidates.swap_remove(0);
        table.rows[r] = rows;
        table.scales[r] = scales;
    }
    Ok(table.into_matrix(p, Provenance::RRecursion))
}

/// Restriction matrix from its first row and the dual relation.
pub fn build_by_dual_recursion(p: &ParameterPoint, ctx: &ThetaContext) -> Result<RestrictionMatrix> {
    build_by_dual_recursion_with(p, ctx, DescentMode::Smallest)
}

pub fn build_by_dual_recursion_with(p: &ParameterPoint, ctx: &ThetaContext, mode: DescentMode) -> Result<RestrictionMatrix> {
    let n = p.n();
    let mut table = RowTable::new(n);
    // point index ρ ↦ μ_ρ
    let points: Vec<ParameterPoint> = table.order.iter().map(|rho| p.permute_mu(rho)).collect();
    table.seed(&points, ctx)?;
    let m = table.order.len();
    let on = resonance("dual exchange coefficient");

    for r in 1..m {
        let target = table.order[r].clone();
        let descents = target.position_descents();
        let chosen = match mode {
            DescentMode::Smallest => &descents[..1],
            DescentMode::CrossCheck => &descents[..],
        };
        let mut candidates: Vec<RowAtPoints> = Vec::with_capacity(chosen.len());
        for &k in chosen {
            let parent = target.swap_positions(k);
            let pr = table.idx(&parent);
            let mut rows = Vec::with_capacity(m);
            let mut scales = Vec::with_capacity(m);
            for rho in &table.order {
                // the relation is applied at μ^{k↔k+1}, whose swap is the current point
                let swapped = table.idx(&rho.swap_positions(k));
                let at = &points[swapped];
                let lx = at.log_mu[k] - at.log_mu[k - 1];
                let mut row = Vec::with_capacity(m);
                let mut scale = Vec::with_capacity(m);
                for col in &table.order {
                    let source = col.swap_positions(k);
                    let (a, b) = (n + 1 - source.at(k), n + 1 - source.at(k + 1));
                    let r1 = dual_r(FelderKind::Diag, a, b, lx, at, ctx).map_err(&on)?;
                    let r2 = dual_r(FelderKind::Exchange, b, a, lx, at, ctx).map_err(&on)?;
                    let c_src = table.idx(&source);
                    let c_col = table.idx(col);
                    row.push(r1 * table.rows[pr][swapped][c_src] + r2 * table.rows[pr][swapped][c_col]);
                    scale.push(r1.norm() * table.scales[pr][swapped][c_src] + r2.norm() * table.scales[pr][swapped][c_col]);
                }
                rows.push(row);
                scales.push(scale);
            }
            candidates.push((rows, scales));
        }
        if candidates.len() > 1 {
            cross_check(&target, &candidates, ctx.tol())?;
        }
        let (rows, scales) = candidates.swap_remove(0);
        table.rows[r] = rows;
        table.scales[r] = scales;
    }
    Ok(table.into_matrix(p, Provenance::DualRecursion))
}

/// Residual of one instance of a three-term relation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationResidual {
    pub row: Permutation,
    pub col: Permutation,
    pub k: usize,
    pub residual: f64,
}

fn three_term_residual(
    lhs: (Complex64, f64),
    first: (Complex64, Complex64, f64),
    second: (Complex64, Complex64, f64),
) -> f64 {
    let rhs = first.0 * first.1 + second.0 * second.1;
    let scale = lhs.1.max(first.0.norm() * first.2 + second.0.norm() * second.2);
    relative_deviation(lhs.0, rhs, scale)
}

/// The exchange relation for every `(I, J, k)`, all entries evaluated directly.
pub fn exchange_relation_residuals(p: &ParameterPoint, ctx: &ThetaContext) -> Result<Vec<RelationResidual>> {
    let n = p.n();
    let id = Permutation::identity(n);
    let here = build_direct(&id, p, ctx)?;
    let mut out = Vec::new();
    for k in 1..n {
        let swapped = build_direct(&id, &p.swap_z(k), ctx)?;
        let lx = p.log_z[k - 1] - p.log_z[k];
        for i in &here.order {
            let inv = i.inverse();
            let (a, b) = (inv.at(k), inv.at(k + 1));
            let r1 = felder_r(FelderKind::Diag, a, b, lx, p, ctx)?;
            let r2 = felder_r(FelderKind::Exchange, b, a, lx, p, ctx)?;
            let i_s = i.swap_values(k);
            for j in &here.order {
                let j_s = j.swap_values(k);
                let residual = three_term_residual(
                    (swapped.get(&i_s, &j_s), swapped.scale(&i_s, &j_s)),
                    (r1, here.get(i, j), here.scale(i, j)),
                    (r2, here.get(&i_s, j), here.scale(&i_s, j)),
                );
                out.push(RelationResidual { row: i.clone(), col: j.clone(), k, residual });
            }
        }
    }
    Ok(out)
}

/// The dual relation for every `(I, J, k)`, all entries evaluated directly.
pub fn dual_relation_residuals(p: &ParameterPoint, ctx: &ThetaContext) -> Result<Vec<RelationResidual>> {
    let n = p.n();
    let id = Permutation::identity(n);
    let here = build_direct(&id, p, ctx)?;
    let mut out = Vec::new();
    for k in 1..n {
        let swapped = build_direct(&id, &p.swap_mu(k), ctx)?;
        let lx = p.log_mu[k] - p.log_mu[k - 1];
        for i in &here.order {
            let s_i = i.swap_positions(k);
            for j in &here.order {
                let s_j = j.swap_positions(k);
                let (a, b) = (n + 1 - j.at(k), n + 1 - j.at(k + 1));
                let r1 = dual_r(FelderKind::Diag, a, b, lx, p, ctx)?;
                let r2 = dual_r(FelderKind::Exchange, b, a, lx, p, ctx)?;
                let residual = three_term_residual(
                    (swapped.get(&s_i, &s_j), swapped.scale(&s_i, &s_j)),
                    (r1, here.get(i, j), here.scale(i, j)),
                    (r2, here.get(i, &s_j), here.scale(i, &s_j)),
                );
                out.push(RelationResidual { row: i.clone(), col: j.clone(), k, residual });
            }
        }
    }
    Ok(out)
}
