use ellmirror::mirror::{kappa_substitute, mirror_indices, mirror_residual, mirror_residuals, mirror_sign, KappaMap};
use ellmirror::qtheta::{LogValue, ThetaContext};
use ellmirror::restriction::{a_direct, build_direct};
use ellmirror::rmatrix::{
    build_by_dual_recursion_with, build_by_r_recursion_with, exchange_coefficients, DescentMode,
};
use ellmirror::sampling::Sampler;
use ellmirror::{Error, ParameterPoint, Permutation};
use num_complex::Complex64;

fn ctx() -> ThetaContext {
    ThetaContext::new(Complex64::new(0.3, 0.0)).unwrap()
}

fn perm(w: &[usize]) -> Permutation {
    Permutation::new(w.to_vec()).unwrap()
}

fn point(n: usize, seed: u64) -> ParameterPoint {
    Sampler::new(seed).parameter_point(n, &ctx()).unwrap()
}

#[test]
fn cross_checked_recursions_agree_with_direct() {
    let c = ctx();
    for n in 2..=4 {
        let p = point(n, 100 + n as u64);
        let direct = build_direct(&Permutation::identity(n), &p, &c).unwrap();
        let r = build_by_r_recursion_with(&p, &c, DescentMode::CrossCheck).unwrap();
        let d = build_by_dual_recursion_with(&p, &c, DescentMode::CrossCheck).unwrap();
        assert!(direct.max_deviation(&r) < 1e-9, "n={n}");
        assert!(direct.max_deviation(&d) < 1e-9, "n={n}");
    }
}

#[test]
fn exchange_coefficients_solve_the_relation() {
    // A_{I·s,J}(z) = α A_{I,J·s}(z^{k↔k+1}) + β A_{I,J}(z)
    let c = ctx();
    let p = point(3, 11);
    let id = Permutation::identity(3);
    for i in Permutation::all(3) {
        for k in 1..3 {
            let inv = i.inverse();
            let (a, b) = (inv.at(k), inv.at(k + 1));
            let lx = p.log_z[k - 1] - p.log_z[k];
            let (alpha, beta) = exchange_coefficients(a, b, lx, &p, &c).unwrap();
            for j in Permutation::all(3) {
                let lhs = a_direct(&id, &i.swap_values(k), &j, &p, &c).unwrap();
                let first = alpha * a_direct(&id, &i, &j.swap_values(k), &p.swap_z(k), &c).unwrap();
                let second = beta * a_direct(&id, &i, &j, &p, &c).unwrap();
                let scale = lhs.norm() + first.norm() + second.norm();
                assert!((lhs - first - second).norm() <= 1e-12 * scale, "{i} {j} {k}");
            }
        }
    }
}

#[test]
fn resonant_spectral_argument_is_reported() {
    let c = ctx();
    let p = point(2, 12);
    // x ħ = 1 makes θ(xħ) vanish
    assert!(matches!(exchange_coefficients(1, 2, -p.log_h, &p, &c), Err(Error::Resonance { .. })));
}

#[test]
fn n2_identities_are_the_listed_four() {
    let w = |v: &[usize]| perm(v);
    let expected = [
        ((w(&[1, 2]), w(&[1, 2])), (w(&[2, 1]), w(&[2, 1]))),
        ((w(&[1, 2]), w(&[2, 1])), (w(&[1, 2]), w(&[2, 1]))),
        ((w(&[2, 1]), w(&[1, 2])), (w(&[2, 1]), w(&[1, 2]))),
        ((w(&[2, 1]), w(&[2, 1])), (w(&[1, 2]), w(&[1, 2]))),
    ];
    for ((i, j), dual) in expected {
        assert_eq!(mirror_indices(&i, &j), dual);
    }
    assert_eq!(mirror_sign(2), -1.0);
    let p = point(2, 13);
    let c = ctx();
    // A_{(1,2),(1,2)}(z, μ) = -A_{(2,1),(2,1)}(μ₂, μ₁, 1/z₁, 1/z₂)
    let lhs = a_direct(&Permutation::identity(2), &w(&[1, 2]), &w(&[1, 2]), &p, &c).unwrap();
    let k = ParameterPoint::new(vec![p.log_mu[1], p.log_mu[0]], vec![-p.log_z[0], -p.log_z[1]], p.log_h).unwrap();
    assert_eq!(kappa_substitute(&p), k);
    let rhs = -a_direct(&Permutation::identity(2), &w(&[2, 1]), &w(&[2, 1]), &k, &c).unwrap();
    assert!((lhs - rhs).norm() < 1e-13 * lhs.norm());
}

#[test]
fn n3_nontrivial_pairings() {
    let c = ctx();
    let p = point(3, 14);
    let id = perm(&[1, 2, 3]);
    for (i, j) in [(perm(&[3, 1, 2]), id.clone()), (perm(&[3, 2, 1]), id.clone()), (perm(&[3, 2, 1]), perm(&[2, 1, 3]))] {
        assert!(a_direct(&id, &i, &j, &p, &c).unwrap().norm() > 1e-6);
        assert!(mirror_residual(&i, &j, &p, &c).unwrap() < 1e-12, "{i} {j}");
    }
}

#[test]
fn mirror_holds_with_complex_q() {
    let c = ThetaContext::new(Complex64::new(0.1, 0.2)).unwrap();
    let p = Sampler::new(15).parameter_point(3, &c).unwrap();
    let worst = mirror_residuals(&p, &c).unwrap().iter().map(|r| r.residual).fold(0.0, f64::max);
    assert!(worst < 1e-11, "{worst:e}");
}

#[test]
fn kappa_twice_on_exponent_vectors() {
    // apply the substitution to exponent vectors over (z, μ) and compare with
    // the expected (z, μ) ↦ (z⁻¹_{σ₀}, μ⁻¹_{σ₀})
    let n = 4;
    let basis = |i: usize| LogValue::new((i + 1) as f64, 0.0);
    let p = ParameterPoint::new((0..n).map(basis).collect(), (n..2 * n).map(basis).collect(), LogValue::ZERO).unwrap();
    let k = KappaMap::new(n);
    let twice = k.substitute(&k.substitute(&p).unwrap()).unwrap();
    for i in 0..n {
        assert_eq!(twice.log_z[i], -p.log_z[n - 1 - i]);
        assert_eq!(twice.log_mu[i], -p.log_mu[n - 1 - i]);
    }
    for i in Permutation::all(n) {
        assert_eq!(k.fixed_point(&k.fixed_point(&i)), i);
    }
}
