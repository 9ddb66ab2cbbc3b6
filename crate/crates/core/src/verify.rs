//! Run configuration, verification suites and the JSON report.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mirror::{mirror_residuals, mirror_sign, Interface};
use crate::permutation::Permutation;
use crate::qtheta::{LogValue, ThetaContext, DEFAULT_TOL};
use crate::restriction::{a_diagonal, build_direct, reindex_for_sigma, relative_deviation, RestrictionMatrix};
use crate::rmatrix::{build_by_dual_recursion, build_by_r_recursion, dual_relation_residuals, exchange_relation_residuals};
use crate::sampling::Sampler;
use crate::weight::{p_product, weight_sigma_with_scale, weight_with_scale, ChernPoint, ParameterPoint};

pub const SCHEMA: u32 = 1;

/// Largest `n` accepted without an explicit override.
pub const DEFAULT_MAX_N: usize = 5;

/// Samples drawn by the theta suite.
pub const THETA_SAMPLES: usize = 1000;

// Independent streams so that enabling a suite never moves another suite's samples.
const POINT_STREAM: u64 = 0;
const THETA_STREAM: u64 = 0x7468_6574_6100_0001;
const CHERN_STREAM: u64 = 0x6368_6572_6e00_0002;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Theta,
    Triangular,
    Diagonal,
    Rmatrel,
    Dualrel,
    Mirror,
    Interface,
    Pprop,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Theta,
        Suite::Triangular,
        Suite::Diagonal,
        Suite::Rmatrel,
        Suite::Dualrel,
        Suite::Mirror,
        Suite::Interface,
        Suite::Pprop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theta => "theta",
            Suite::Triangular => "triangular",
            Suite::Diagonal => "diagonal",
            Suite::Rmatrel => "rmatrel",
            Suite::Dualrel => "dualrel",
            Suite::Mirror => "mirror",
            Suite::Interface => "interface",
            Suite::Pprop => "pprop",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Matrix,
    Weights,
    Verify,
}

/// A parameter point together with Chern roots, for `weights` mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightInput {
    pub point: ParameterPoint,
    pub t: ChernPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub q: Complex64,
    /// `None` picks the automatic depth.
    pub trunc: Option<usize>,
    pub tol: f64,
    pub seed: u64,
    pub points: usize,
    pub sigma: Option<Permutation>,
    pub mode: Mode,
    pub suites: Vec<Suite>,
    #[serde(skip)]
    pub allow_large_n: bool,
    #[serde(skip)]
    pub input: Option<WeightInput>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 3,
            q: Complex64::new(0.3, 0.0),
            trunc: None,
            tol: DEFAULT_TOL,
            seed: 0,
            points: 3,
            sigma: None,
            mode: Mode::Verify,
            suites: Suite::ALL.to_vec(),
            allow_large_n: false,
            input: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.n > DEFAULT_MAX_N && !self.allow_large_n {
            return Err(Error::Config(format!("n = {} exceeds {DEFAULT_MAX_N}; pass the override flag", self.n)));
        }
        if !(self.q.norm() < 1.0) || self.q.norm() == 0.0 {
            return Err(Error::Config(format!("need 0 < |q| < 1, got {}", self.q)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if let Some(s) = &self.sigma {
            if s.n() != self.n {
                return Err(Error::Config(format!("sigma {s} is not in S_{}", self.n)));
            }
        }
        if let Some(input) = &self.input {
            if input.point.n() != self.n || input.t.n() != self.n {
                return Err(Error::Config(format!("supplied point does not have n = {}", self.n)));
            }
        }
        Ok(())
    }

    pub fn context(&self) -> Result<ThetaContext> {
        let log_q = LogValue(self.q.ln());
        let trunc = match self.trunc {
            Some(t) => t,
            None => ThetaContext::auto_trunc(log_q)?,
        };
        ThetaContext::with_settings(log_q, trunc, self.tol)
    }

    fn sigma(&self) -> Permutation {
        self.sigma.clone().unwrap_or_else(|| Permutation::identity(self.n))
    }

    fn sample_points(&self, ctx: &ThetaContext) -> Result<Vec<ParameterPoint>> {
        let mut s = Sampler::new(self.seed ^ POINT_STREAM);
        (0..self.points).map(|_| s.parameter_point(self.n, ctx)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextSummary {
    pub q: Complex64,
    pub trunc: usize,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Index into the report's point list; absent for point-free checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<usize>,
    pub label: String,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: Suite,
    pub checks: Vec<Check>,
    pub max_residual: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub errors: Vec<String>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(name: Suite, checks: Vec<Check>, errors: Vec<String>, tol: f64) -> Self {
        let max_residual = max_of(checks.iter().map(|c| c.residual));
        let passed = errors.is_empty() && checks.iter().all(|c| c.residual < tol);
        SuiteReport { name, checks, max_residual, errors, passed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub point: usize,
    pub pair: String,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightValue {
    pub point: usize,
    pub perm: Permutation,
    pub value: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub mode: Mode,
    pub config: RunConfig,
    pub context: ContextSummary,
    pub points: Vec<ParameterPoint>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub chern_points: Vec<ChernPoint>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub suites: Vec<SuiteReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub matrices: Vec<RestrictionMatrix>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub deviations: Vec<Deviation>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub weights: Vec<WeightValue>,
    pub max_residual: f64,
    pub passed: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    // NaN propagates so that a broken residual is never hidden
    values.fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

fn word(p: &Permutation) -> String {
    p.word().iter().map(|v| v.to_string()).collect::<Vec<_>>().join("")
}

/// Runs the configured mode. Evaluation failures inside a suite are
/// recorded in the report; configuration and sampling failures are errors.
pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let ctx = config.context()?;
    let mut report = Report {
        schema: SCHEMA,
        mode: config.mode,
        config: config.clone(),
        context: ContextSummary { q: config.q, trunc: ctx.trunc(), tol: ctx.tol() },
        points: Vec::new(),
        chern_points: Vec::new(),
        suites: Vec::new(),
        matrices: Vec::new(),
        deviations: Vec::new(),
        weights: Vec::new(),
        max_residual: 0.0,
        passed: true,
    };
    match config.mode {
        Mode::Verify => run_verify(config, &ctx, &mut report)?,
        Mode::Matrix => run_matrix(config, &ctx, &mut report)?,
        Mode::Weights => run_weights(config, &ctx, &mut report)?,
    }
    Ok(report)
}

fn run_verify(config: &RunConfig, ctx: &ThetaContext, report: &mut Report) -> Result<()> {
    let needs_points = config.suites.iter().any(|s| *s != Suite::Theta);
    if needs_points {
        report.points = config.sample_points(ctx)?;
    }
    let mut suites = config.suites.clone();
    suites.sort();
    suites.dedup();
    if suites.contains(&Suite::Interface) {
        let mut s = Sampler::new(config.seed ^ CHERN_STREAM);
        report.chern_points = (0..2 * report.points.len()).map(|_| s.chern_point(config.n)).collect();
    }
    for suite in suites {
        let r = run_suite(suite, config, ctx, &report.points, &report.chern_points);
        report.suites.push(r);
    }
    report.max_residual = max_of(report.suites.iter().map(|s| s.max_residual));
    report.passed = report.suites.iter().all(|s| s.passed);
    Ok(())
}

type PointResult = std::result::Result<Vec<Check>, String>;

fn per_point<F>(points: &[ParameterPoint], f: F) -> (Vec<Check>, Vec<String>)
where
    F: Fn(usize, &ParameterPoint) -> Result<Vec<Check>> + Sync,
{
    let results: Vec<PointResult> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| f(i, p).map_err(|e| format!("point {i}: {e}")))
        .collect();
    let mut checks = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(c) => checks.extend(c),
            Err(e) => errors.push(e),
        }
    }
    (checks, errors)
}

pub fn run_suite(
    suite: Suite,
    config: &RunConfig,
    ctx: &ThetaContext,
    points: &[ParameterPoint],
    chern: &[ChernPoint],
) -> SuiteReport {
    let tol = ctx.tol();
    let (checks, errors) = match suite {
        Suite::Theta => match theta_checks(config.seed, ctx) {
            Ok(c) => (c, Vec::new()),
            Err(e) => (Vec::new(), vec![e.to_string()]),
        },
        Suite::Triangular => per_point(points, |i, p| triangular_checks(i, p, ctx)),
        Suite::Diagonal => per_point(points, |i, p| diagonal_checks(i, p, ctx)),
        Suite::Rmatrel => per_point(points, |i, p| {
            Ok(exchange_relation_residuals(p, ctx)?
                .into_iter()
                .map(|r| Check {
                    point: Some(i),
                    label: format!("{},{},{}", word(&r.row), word(&r.col), r.k),
                    residual: r.residual,
                })
                .collect())
        }),
        Suite::Dualrel => per_point(points, |i, p| {
            Ok(dual_relation_residuals(p, ctx)?
                .into_iter()
                .map(|r| Check {
                    point: Some(i),
                    label: format!("{},{},{}", word(&r.row), word(&r.col), r.k),
                    residual: r.residual,
                })
                .collect())
        }),
        Suite::Mirror => per_point(points, |i, p| {
            Ok(mirror_residuals(p, ctx)?
                .into_iter()
                .map(|r| Check {
                    point: Some(i),
                    label: format!("{},{}", word(&r.row), word(&r.col)),
                    residual: r.residual,
                })
                .collect())
        }),
        Suite::Interface => per_point(points, |i, p| interface_checks(i, p, &chern[2 * i], &chern[2 * i + 1], ctx)),
        Suite::Pprop => per_point(points, |i, p| pprop_checks(i, p, ctx)),
    };
    SuiteReport::new(suite, checks, errors, tol)
}

/// Oddness and quasi-periodicity over [`THETA_SAMPLES`] arguments with
/// `|Re| ≤ 2`, `|Im| ≤ 2π`.
pub fn theta_checks(seed: u64, ctx: &ThetaContext) -> Result<Vec<Check>> {
    let mut s = Sampler::new(seed ^ THETA_STREAM);
    let lq = ctx.log_q();
    let mut out = Vec::with_capacity(2 * THETA_SAMPLES);
    for k in 0..THETA_SAMPLES {
        let lx = s.log_in_box(2.0, 2.0 * std::f64::consts::PI);
        let th = ctx.theta(lx)?;
        let odd = (ctx.theta(-lx)? + th).norm() / (1.0 + th.norm());
        let shifted = ctx.theta(lq + lx)?;
        let expected = -(-(lq * 0.5) - lx).exp() * th;
        out.push(Check { point: None, label: format!("odd#{k}"), residual: odd });
        out.push(Check { point: None, label: format!("quasi#{k}"), residual: relative_deviation(shifted, expected, 0.0) });
    }
    Ok(out)
}

/// `|A_{I,J}| / max_row |A_{I,·}|` for every `J` strictly above `I`.
pub fn triangular_checks(point: usize, p: &ParameterPoint, ctx: &ThetaContext) -> Result<Vec<Check>> {
    let a = build_direct(&Permutation::identity(p.n()), p, ctx)?;
    let mut out = Vec::new();
    for (r, i) in a.order.iter().enumerate() {
        let scale = a.row_scale(r).max(f64::MIN_POSITIVE);
        for (c, j) in a.order.iter().enumerate() {
            if i.bruhat_lt(j) {
                out.push(Check {
                    point: Some(point),
                    label: format!("{},{}", word(i), word(j)),
                    residual: a.entries[r][c].norm() / scale,
                });
            }
        }
    }
    Ok(out)
}

pub fn diagonal_checks(point: usize, p: &ParameterPoint, ctx: &ThetaContext) -> Result<Vec<Check>> {
    let a = build_direct(&Permutation::identity(p.n()), p, ctx)?;
    a.order
        .iter()
        .enumerate()
        .map(|(r, i)| {
            let closed = a_diagonal(i, p, ctx)?;
            Ok(Check {
                point: Some(point),
                label: word(i),
                residual: relative_deviation(a.entries[r][r], closed, a.term_scale[r][r]),
            })
        })
        .collect()
}

/// `P_{σ₀·I·σ₀}(z⁻¹_{σ₀}) = P_I(z)` for every `I`.
pub fn pprop_checks(point: usize, p: &ParameterPoint, ctx: &ThetaContext) -> Result<Vec<Check>> {
    let n = p.n();
    let longest = Permutation::longest(n);
    let inverted: Vec<LogValue> = p.log_z.iter().rev().map(|&z| -z).collect();
    Permutation::all(n)
        .iter()
        .map(|i| {
            let conj = longest.compose(&i.compose(&longest)?)?;
            let lhs = p_product(&conj, &inverted, p.log_h, ctx)?;
            let rhs = p_product(i, &p.log_z, p.log_h, ctx)?;
            Ok(Check { point: Some(point), label: word(i), residual: relative_deviation(lhs, rhs, 0.0) })
        })
        .collect()
}

/// Both interpolation properties of `m̃` with `z' := μ` of the sampled point.
pub fn interface_checks(
    point: usize,
    p: &ParameterPoint,
    t: &ChernPoint,
    t_prime: &ChernPoint,
    ctx: &ThetaContext,
) -> Result<Vec<Check>> {
    let n = p.n();
    let interface = Interface::new(p, &p.log_mu, ctx)?;
    let longest = Permutation::longest(n);
    let mut out = Vec::new();
    for l in Permutation::all(n) {
        let m = interface.value(t, &interface.dual_restriction_point(&l.inverse()), ctx)?;
        let w = weight_with_scale(&l, t, interface.point(), ctx)?;
        out.push(Check {
            point: Some(point),
            label: format!("left,{}", word(&l)),
            residual: relative_deviation(m.value, w.value, m.scale.max(w.scale)),
        });
        let m = interface.value(&interface.restriction_point(&l.inverse()), t_prime, ctx)?;
        let w = weight_with_scale(&l.compose(&longest)?, t_prime, interface.dual_point(), ctx)?;
        out.push(Check {
            point: Some(point),
            label: format!("right,{}", word(&l)),
            residual: relative_deviation(m.value, w.value * mirror_sign(n), m.scale.max(w.scale)),
        });
    }
    Ok(out)
}

/// The three builds of `A^σ` at one point.
pub fn three_builds(sigma: &Permutation, p: &ParameterPoint, ctx: &ThetaContext) -> Result<[RestrictionMatrix; 3]> {
    let direct = build_direct(sigma, p, ctx)?;
    let moved = p.permute_z(sigma);
    let r = reindex_for_sigma(&build_by_r_recursion(&moved, ctx)?, sigma, p)?;
    let dual = reindex_for_sigma(&build_by_dual_recursion(&moved, ctx)?, sigma, p)?;
    Ok([direct, r, dual])
}

fn run_matrix(config: &RunConfig, ctx: &ThetaContext, report: &mut Report) -> Result<()> {
    report.points = match &config.input {
        Some(input) => vec![input.point.clone()],
        None => config.sample_points(ctx)?,
    };
    let sigma = config.sigma();
    for (i, p) in report.points.iter().enumerate() {
        let [direct, r, dual] = three_builds(&sigma, p, ctx)?;
        for (pair, dev) in [
            ("direct/r_recursion", direct.max_deviation(&r)),
            ("direct/dual_recursion", direct.max_deviation(&dual)),
            ("r_recursion/dual_recursion", r.max_deviation(&dual)),
        ] {
            report.deviations.push(Deviation { point: i, pair: pair.into(), deviation: dev });
        }
        report.matrices.extend([direct, r, dual]);
    }
    report.max_residual = max_of(report.deviations.iter().map(|d| d.deviation));
    report.passed = report.deviations.iter().all(|d| d.deviation < ctx.tol());
    Ok(())
}

fn run_weights(config: &RunConfig, ctx: &ThetaContext, report: &mut Report) -> Result<()> {
    let (points, chern) = match &config.input {
        Some(input) => (vec![input.point.clone()], vec![input.t.clone()]),
        None => {
            let points = config.sample_points(ctx)?;
            let mut s = Sampler::new(config.seed ^ CHERN_STREAM);
            let chern = points.iter().map(|_| s.chern_point(config.n)).collect();
            (points, chern)
        }
    };
    let sigma = config.sigma();
    for (i, (p, t)) in points.iter().zip(&chern).enumerate() {
        for perm in Permutation::all(config.n) {
            let value = if sigma.is_identity() {
                weight_with_scale(&perm, t, p, ctx)?.value
            } else {
                weight_sigma_with_scale(&sigma, &perm, t, p, ctx)?.value
            };
            report.weights.push(WeightValue { point: i, perm, value });
        }
    }
    report.points = points;
    report.chern_points = chern;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn config_validation() {
        let ok = RunConfig::default();
        assert!(ok.validate().is_ok());
        let bad = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            matches!(c.validate(), Err(Error::Config(_)))
        };
        assert!(bad(|c| c.n = 0));
        assert!(bad(|c| c.n = 6));
        assert!(bad(|c| c.q = Complex64::new(1.0, 0.0)));
        assert!(bad(|c| c.tol = 0.0));
        assert!(bad(|c| c.sigma = Some(Permutation::identity(2))));
        let mut big = RunConfig { n: 6, allow_large_n: true, ..RunConfig::default() };
        assert!(big.validate().is_ok());
        big.allow_large_n = false;
        assert!(big.validate().is_err());
    }

    #[test]
    fn auto_trunc_in_context() {
        assert_eq!(RunConfig::default().context().unwrap().trunc(), 69);
        let c = RunConfig { trunc: Some(80), ..RunConfig::default() };
        assert_eq!(c.context().unwrap().trunc(), 80);
    }

    #[test]
    fn matrix_mode_n1() {
        let c = RunConfig { n: 1, points: 1, mode: Mode::Matrix, ..RunConfig::default() };
        let r = run(&c).unwrap();
        assert_eq!(r.matrices.len(), 3);
        for m in &r.matrices {
            assert_eq!(m.entries, vec![vec![Complex64::new(1.0, 0.0)]]);
        }
        assert!(r.passed);
    }

    #[test]
    fn weights_mode_counts() {
        let c = RunConfig { n: 3, points: 2, mode: Mode::Weights, ..RunConfig::default() };
        let r = run(&c).unwrap();
        assert_eq!(r.weights.len(), 12);
        assert_eq!(r.chern_points.len(), 2);
    }

    #[test]
    fn max_keeps_nan() {
        assert!(max_of([1.0, f64::NAN, 0.5].into_iter()).is_nan());
        assert_eq!(max_of([1.0, 3.0].into_iter()), 3.0);
        assert_eq!(max_of(std::iter::empty()), 0.0);
    }
}
