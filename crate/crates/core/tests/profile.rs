use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use gkdv_core::dynamics::SolverConfig;
use gkdv_core::functionals::hsk_norm;
use gkdv_core::ground_state::ground_state_value;
use gkdv_core::profile::{
    divergence_statistic, extract_profiles, nonlinear_profile, synthesize, ProfileParams,
};
use gkdv_core::spectral::airy_propagate;
use gkdv_core::{Field, Grid1D};

const K: u32 = 5;

/// Odd, mean-zero bubble of unit scale.
fn bubble(g: Grid1D) -> Field {
    Field::from_fn(g, |x| x * (-x * x / 4.0).exp())
}

fn norm2(f: &Field) -> f64 {
    hsk_norm(f, K).unwrap().powi(2)
}

#[test]
fn identity_parameters_return_the_profile() {
    let g = Grid1D::new(1024, 60.0).unwrap();
    let psi = bubble(g);
    let p = ProfileParams::new(1.0, 0.0, 0.0, psi.clone()).unwrap();
    let v = synthesize(&[p], 0.0, g, K).unwrap();
    assert!(v.sup_distance(&psi).unwrap() <= 1e-12);
}

#[test]
fn disjoint_bubbles_add_in_square_norm() {
    let g = Grid1D::new(8192, 400.0).unwrap();
    let psi = bubble(g);
    let a = ProfileParams::new(1.0, -100.0, 0.0, psi.clone()).unwrap();
    let b = ProfileParams::new(0.5, 100.0, 0.0, psi).unwrap();
    let parts = norm2(&a.evaluate(0.0, K).unwrap()) + norm2(&b.evaluate(0.0, K).unwrap());
    let whole = norm2(&synthesize(&[a, b], 0.0, g, K).unwrap());
    assert!((whole - parts).abs() <= 1e-6 * parts, "{whole} vs {parts}");
}

#[test]
fn evaluated_profile_keeps_its_critical_norm() {
    let g = Grid1D::new(4096, 200.0).unwrap();
    // spectrum O(ξ²) at the origin keeps the critical quadrature exact
    let psi = Field::from_fn(g, |x| {
        let y = 0.5 * x;
        (y * y - 1.0) * (-y * y / 2.0).exp()
    });
    let n0 = hsk_norm(&psi, K).unwrap();
    for (x0, t0, t) in [(10.0, 0.3, 1.1), (-20.0, -0.2, 0.6), (0.0, 0.0, -0.9)] {
        let p = ProfileParams::new(1.0, x0, t0, psi.clone()).unwrap();
        let n = hsk_norm(&p.evaluate(t, K).unwrap(), K).unwrap();
        assert!((n - n0).abs() <= 1e-10 * n0, "t = {t}: {n} vs {n0}");
    }
    // off-unit scales go through interpolation
    for (h, t0, t) in [(0.5, 0.4, 0.4), (2.0, 0.0, 0.5)] {
        let p = ProfileParams::new(h, 5.0, t0, psi.clone()).unwrap();
        let n = hsk_norm(&p.evaluate(t, K).unwrap(), K).unwrap();
        assert!((n - n0).abs() <= 1e-7 * n0, "h = {h}: {n} vs {n0}");
    }
}

#[test]
fn single_bubble_is_recovered() {
    let g = Grid1D::new(2048, 80.0).unwrap();
    let v = bubble(g);
    let total = norm2(&v);
    let rep = extract_profiles(&v, K, 3, 1e-3).unwrap();
    assert!(!rep.profiles.is_empty());
    let p = &rep.profiles[0];
    assert!(p.h >= 0.5 && p.h <= 2.0, "h = {}", p.h);
    assert!(p.x0.abs() <= 0.5 * p.h, "x0 = {}", p.x0);
    assert_eq!(p.t0, 0.0);
    assert!(rep.pythagorean_defect.abs() <= 1e-3 * total, "defect {}", rep.pythagorean_defect);
}

#[test]
fn two_separated_bubbles_are_recovered() {
    let g = Grid1D::new(4096, 80.0).unwrap();
    let psi = bubble(g);
    let truth = [
        ProfileParams::new(1.0, -20.0, 0.0, psi.clone()).unwrap(),
        ProfileParams::new(1.0 / 16.0, 20.0, 0.0, psi).unwrap(),
    ];
    assert!(divergence_statistic(&truth[0], &truth[1]) >= 16.0);
    let v = synthesize(&truth, 0.0, g, K).unwrap();
    let total = norm2(&v);
    let rep = extract_profiles(&v, K, 2, 0.0).unwrap();
    assert_eq!(rep.profiles.len(), 2);
    for t in &truth {
        let found = rep
            .profiles
            .iter()
            .find(|p| (p.x0 - t.x0).abs() <= 0.5 * t.h.max(p.h))
            .unwrap_or_else(|| panic!("no profile near x0 = {}", t.x0));
        let ratio = found.h / t.h;
        assert!((0.5..=2.0).contains(&ratio), "h {} vs {}", found.h, t.h);
    }
    assert!(rep.pythagorean_defect.abs() <= 0.05 * total);
    assert_eq!(rep.pairwise_divergence.len(), 2);
    assert!(rep.pairwise_divergence[0][1] >= 16.0 * 0.5);
}

#[test]
fn noise_is_not_mistaken_for_bubbles() {
    let g = Grid1D::new(2048, 80.0).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let raw: Vec<f64> = (0..g.n_points()).map(|_| normal.sample(&mut rng)).collect();
    let v = Field::new(g, raw).unwrap().mean_removed();
    let total = norm2(&v);
    let rep = extract_profiles(&v, K, 3, 0.0).unwrap();
    let left = norm2(&rep.remainder);
    assert!(left >= 0.8 * total, "remainder keeps {}", left / total);
}

#[test]
fn extraction_never_increases_the_norm() {
    let g = Grid1D::new(2048, 80.0).unwrap();
    let psi = bubble(g);
    let truth = [
        ProfileParams::new(1.0, -20.0, 0.0, psi.clone()).unwrap(),
        ProfileParams::new(0.25, 0.0, 0.0, psi.clone()).unwrap(),
        ProfileParams::new(2.0, 15.0, 0.0, psi).unwrap(),
    ];
    let v = synthesize(&truth, 0.0, g, K).unwrap();
    let mut prev = hsk_norm(&v, K).unwrap();
    for j in 1..=4 {
        let rep = extract_profiles(&v, K, j, 0.0).unwrap();
        let r = hsk_norm(&rep.remainder, K).unwrap();
        assert!(r <= prev * (1.0 + 1e-12), "after {j}: {r} > {prev}");
        prev = r;
    }
}

#[test]
fn one_profile_with_zero_remainder_has_no_defect() {
    let g = Grid1D::new(2048, 80.0).unwrap();
    let v = bubble(g);
    let rep = extract_profiles(&v, K, 1, 0.0).unwrap();
    let total = norm2(&v);
    let recon = norm2(&rep.profiles[0].evaluate(0.0, K).unwrap()) + norm2(&rep.remainder);
    assert!((total - recon - rep.pythagorean_defect).abs() <= 1e-10 * total);
    if norm2(&rep.remainder) <= 1e-12 * total {
        assert!(rep.pythagorean_defect.abs() <= 1e-10 * total);
    }
}

#[test]
fn tiny_profile_matches_the_linear_flow_near_its_time() {
    let g = Grid1D::new(1024, 60.0).unwrap();
    let psi = Field::from_fn(g, |x| 0.01 * ground_state_value(K, x));
    let t_seq = [0.1, 0.01, 1e-3, 1e-4];
    let out = nonlinear_profile(&psi, &t_seq, 0.0, K, &SolverConfig::new(K)).unwrap();
    assert!(out.complete);
    for w in out.discrepancy.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9), "{:?}", out.discrepancy);
    }
    assert!(*out.discrepancy.last().unwrap() <= 1e-6);
}

#[test]
fn zero_profile_gives_zero_trajectory() {
    let g = Grid1D::new(256, 40.0).unwrap();
    let out = nonlinear_profile(&Field::zeros(g), &[0.5, -0.5, 0.1], 0.0, K, &SolverConfig::new(K)).unwrap();
    assert!(out.complete);
    assert!(out.discrepancy.iter().all(|&d| d == 0.0));
    assert!(out.trajectory.iter().all(|f| f.max_abs() == 0.0));
}

#[test]
fn discrepancy_decreases_toward_the_profile_time() {
    let g = Grid1D::new(2048, 200.0).unwrap();
    let psi = Field::from_fn(g, |x| 0.1 * ground_state_value(K, x));
    let out = nonlinear_profile(&psi, &[0.5, 0.25, 0.1], 0.0, K, &SolverConfig::new(K)).unwrap();
    assert!(out.complete);
    let d = &out.discrepancy;
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

#[test]
fn backward_times_use_the_reflected_flow() {
    let g = Grid1D::new(2048, 200.0).unwrap();
    let psi = Field::from_fn(g, |x| 0.1 * ground_state_value(K, x));
    let cfg = SolverConfig::new(K);
    let out = nonlinear_profile(&psi, &[-0.2, 0.2], 0.0, K, &cfg).unwrap();
    assert!(out.complete);
    // both sides sit at the same distance from the data time
    let lin = airy_propagate(&psi, -0.2).unwrap();
    assert!(out.trajectory[0].l2_distance(&lin).unwrap() <= 1e-3 * lin.l2_norm());
    assert!(out.discrepancy[0] > 0.0 && out.discrepancy[1] > 0.0);
}
