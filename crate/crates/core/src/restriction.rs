//! Restriction of weight functions to torus fixed points.
//!
//! The fixed point `J` is the substitution `t_a^{(k)} = z_{i_a^{(k)}(J)}`,
//! and `A^σ_{I,J}(z, μ) = W_{σ,I}(z_J, z, ħ, μ)`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permutation::Permutation;
use crate::qtheta::ThetaContext;
use crate::weight::{p_product, weight_sigma_with_scale, ChernPoint, ParameterPoint, Summed};

/// How a restriction matrix was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Direct,
    RRecursion,
    DualRecursion,
}

/// Square matrix indexed by `S_n` in canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictionMatrix {
    pub n: usize,
    pub sigma: Permutation,
    pub order: Vec<Permutation>,
    pub entries: Vec<Vec<Complex64>>,
    pub provenance: Provenance,
    pub point: ParameterPoint,
    /// Per-entry modulus bound of the intermediate terms that produced the
    /// entry; measures how much cancellation went into it.
    #[serde(skip)]
    pub term_scale: Vec<Vec<f64>>,
}

impl RestrictionMatrix {
    pub fn size(&self) -> usize {
        self.order.len()
    }

    /// Position of `perm` in the canonical order.
    pub fn index_of(&self, perm: &Permutation) -> usize {
        self.order.binary_search(perm).expect("permutation belongs to S_n")
    }

    pub fn get(&self, row: &Permutation, col: &Permutation) -> Complex64 {
        self.entries[self.index_of(row)][self.index_of(col)]
    }

    pub fn scale(&self, row: &Permutation, col: &Permutation) -> f64 {
        self.term_scale[self.index_of(row)][self.index_of(col)]
    }

    /// Largest modulus in a row.
    pub fn row_scale(&self, row: usize) -> f64 {
        self.entries[row].iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `|entry| < tol (1 + max row modulus)`.
    pub fn is_numerically_zero(&self, row: usize, col: usize, tol: f64) -> bool {
        self.entries[row][col].norm() < tol * (1.0 + self.row_scale(row))
    }

    /// Count of entries classified as zero, and how many of those lie at
    /// Bruhat-incomparable index pairs.
    pub fn support(&self, tol: f64) -> Support {
        let mut s = Support::default();
        for (r, i) in self.order.iter().enumerate() {
            for (c, j) in self.order.iter().enumerate() {
                if self.is_numerically_zero(r, c, tol) {
                    s.zeros += 1;
                    if !i.bruhat_leq(j) && !j.bruhat_leq(i) {
                        s.zeros_incomparable += 1;
                    }
                } else if !j.bruhat_leq(i) {
                    s.nonzero_outside_lower_interval += 1;
                }
            }
        }
        s
    }

    /// Largest entrywise relative deviation, measured against the larger of
    /// the two moduli and the two cancellation scales.
    pub fn max_deviation(&self, other: &RestrictionMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.size() {
            for c in 0..self.size() {
                worst = worst.max(relative_deviation(
                    self.entries[r][c],
                    other.entries[r][c],
                    self.term_scale[r][c].max(other.term_scale[r][c]),
                ));
            }
        }
        worst
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix serializes")
    }

    /// Moduli as CSV, header row and first column holding the permutation words.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let label = |p: &Permutation| p.word().iter().map(|v| v.to_string()).collect::<Vec<_>>().join("");
        let mut header = vec!["I\\J".to_string()];
        header.extend(self.order.iter().map(label));
        w.write_record(&header).map_err(csv_err)?;
        for (i, row) in self.order.iter().zip(&self.entries) {
            let mut rec = vec![label(i)];
            rec.extend(row.iter().map(|z| format!("{:e}", z.norm())));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `|a - b| / max(|a|, |b|, scale)`, zero when everything vanishes.
pub fn relative_deviation(a: Complex64, b: Complex64, scale: f64) -> f64 {
    let diff = (a - b).norm();
    if diff == 0.0 {
        return 0.0;
    }
    diff / a.norm().max(b.norm()).max(scale)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Support {
    pub zeros: usize,
    pub zeros_incomparable: usize,
    /// Nonzero entries at `(I, J)` with `J ≰ I`.
    pub nonzero_outside_lower_interval: usize,
}

/// `z_J`: level `k` holds `log z` at the sorted prefix `i_1^{(k)} < … < i_k^{(k)}` of `J`.
pub fn restriction_point(fixed: &Permutation, p: &ParameterPoint) -> ChernPoint {
    let tables = fixed.fixed_point_tables();
    let levels = (1..fixed.n())
        .map(|k| tables.ordered(k).iter().map(|&i| p.log_z[i - 1]).collect())
        .collect();
    ChernPoint::new(levels).expect("ordered sets have k entries at level k")
}

pub fn a_direct_with_scale(
    sigma: &Permutation,
    row: &Permutation,
    col: &Permutation,
    p: &ParameterPoint,
    ctx: &ThetaContext,
) -> Result<Summed> {
    weight_sigma_with_scale(sigma, row, &restriction_point(col, p), p, ctx)
}

/// `A^σ_{I,J}(z, μ)`.
pub fn a_direct(
    sigma: &Permutation,
    row: &Permutation,
    col: &Permutation,
    p: &ParameterPoint,
    ctx: &ThetaContext,
) -> Result<Complex64> {
    a_direct_with_scale(sigma, row, col, p, ctx).map(|s| s.value)
}

/// `(-1)^I P_I(z) P_{I^{-1}·σ₀}(μ_{σ₀(1)}, …, μ_{σ₀(n)})`.
pub fn a_diagonal(perm: &Permutation, p: &ParameterPoint, ctx: &ThetaContext) -> Result<Complex64> {
    let n = perm.n();
    let longest = Permutation::longest(n);
    let mu_reversed = p.permute_mu(&longest).log_mu;
    let dual_index = perm.inverse().compose(&longest)?;
    let value = p_product(perm, &p.log_z, p.log_h, ctx)? * p_product(&dual_index, &mu_reversed, p.log_h, ctx)?;
    Ok(value * f64::from(perm.sign()))
}

/// Factor `(-1)^{I'} P_{I'^{-1}·σ₀}(μ_{σ₀})`, `I' = σ⁻¹∘I`, relating `A^σ_{I,I}`
/// to the diagonal `P_{I'}(z_σ)` of the other normalization.
pub fn ao_normalization_factor(
    sigma: &Permutation,
    perm: &Permutation,
    p: &ParameterPoint,
    ctx: &ThetaContext,
) -> Result<Complex64> {
    let n = perm.n();
    let longest = Permutation::longest(n);
    let reduced = sigma.inverse().then(perm)?;
    let mu_reversed = p.permute_mu(&longest).log_mu;
    let dual_index = reduced.inverse().compose(&longest)?;
    Ok(p_product(&dual_index, &mu_reversed, p.log_h, ctx)? * f64::from(reduced.sign()))
}

/// Every `A^σ_{I,J}` by direct evaluation of the weight functions.
pub fn build_direct(sigma: &Permutation, p: &ParameterPoint, ctx: &ThetaContext) -> Result<RestrictionMatrix> {
    let n = p.n();
    if sigma.n() != n {
        return Err(Error::SizeMismatch { expected: n, found: sigma.n() });
    }
    let order = Permutation::all(n);
    let rows: Vec<Vec<Summed>> = order
        .par_iter()
        .map(|i| order.iter().map(|j| a_direct_with_scale(sigma, i, j, p, ctx)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(RestrictionMatrix {
        n,
        sigma: sigma.clone(),
        entries: rows.iter().map(|r| r.iter().map(|s| s.value).collect()).collect(),
        term_scale: rows.iter().map(|r| r.iter().map(|s| s.scale).collect()).collect(),
        order,
        provenance: Provenance::Direct,
        point: p.clone(),
    })
}

/// `A^σ` at `p` from the identity-chamber matrix `base` built at `z_σ`:
/// `A^σ_{I,J}(z) = A_{σ⁻¹∘I, σ⁻¹∘J}(z_σ)`.
pub fn reindex_for_sigma(base: &RestrictionMatrix, sigma: &Permutation, p: &ParameterPoint) -> Result<RestrictionMatrix> {
    if sigma.n() != base.n || !base.sigma.is_identity() {
        return Err(Error::SizeMismatch { expected: base.n, found: sigma.n() });
    }
    let inv = sigma.inverse();
    let map: Vec<usize> = base
        .order
        .iter()
        .map(|i| inv.then(i).map(|r| base.index_of(&r)))
        .collect::<Result<_>>()?;
    Ok(RestrictionMatrix {
        n: base.n,
        sigma: sigma.clone(),
        order: base.order.clone(),
        entries: map.iter().map(|&r| map.iter().map(|&c| base.entries[r][c]).collect()).collect(),
        term_scale: map.iter().map(|&r| map.iter().map(|&c| base.term_scale[r][c]).collect()).collect(),
        provenance: base.provenance,
        point: p.clone(),
    })
}
