use num_complex::Complex64;

use gkdv_core::dynamics::{
    dealias, run, step, SimState, SolverConfig, Stepper, StopReason,
};
use gkdv_core::functionals::{checkpoint_increments, energy, hsk_norm, mass};
use gkdv_core::ground_state::{ground_state_value, soliton, GroundState};
use gkdv_core::spectral::{forward_transform, translate};
use gkdv_core::{Field, Grid1D};

/// `(k+1)`-fold cyclic convolution of a spectrum on `n` modes, summed
/// without any padding: the full product before truncation.
fn power_by_convolution(u_hat: &[Complex64], k: u32) -> Vec<Complex64> {
    let n = u_hat.len() as i64;
    let mode = |j: usize| if (j as i64) < n / 2 { j as i64 } else { j as i64 - n };
    // coefficients indexed by integer wavenumber, normalised as Fourier series
    let mut acc: Vec<(i64, Complex64)> = (0..u_hat.len())
        .map(|j| (mode(j), u_hat[j] / n as f64))
        .collect();
    for _ in 0..k {
        let mut next = std::collections::BTreeMap::new();
        for (m1, c1) in &acc {
            for (j, c) in u_hat.iter().enumerate() {
                let e = next.entry(m1 + mode(j)).or_insert(Complex64::new(0.0, 0.0));
                *e += c1 * (c / n as f64);
            }
        }
        acc = next.into_iter().filter(|(_, c): &(i64, Complex64)| c.norm() > 0.0).collect();
    }
    // keep the true coefficient of each resolved wavenumber
    (0..u_hat.len())
        .map(|j| {
            let m = mode(j);
            let c = acc.iter().find(|(w, _)| *w == m).map(|p| p.1).unwrap_or_default();
            c * n as f64
        })
        .collect()
}

#[test]
fn dealiased_power_matches_direct_convolution() {
    let n = 32;
    let g = Grid1D::new(n, 2.0 * std::f64::consts::PI).unwrap();
    let k = 5;
    // band-limited to |m| ≤ 4, well inside the retained band n/(2·pad)
    let f = Field::from_fn(g, |x| 0.4 * x.sin() + 0.3 * (2.0 * x).cos() - 0.2 * (4.0 * x).sin());
    let s = forward_transform(&f).unwrap();
    let mut stepper = Stepper::new(g, k, (k as f64 + 2.0) / 2.0, false);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    stepper.dealiased_power(s.coeffs(), &mut out);
    let oracle = power_by_convolution(s.coeffs(), k);
    for j in 0..n {
        if j == n / 2 {
            assert_eq!(out[j].norm(), 0.0);
            continue;
        }
        assert!((out[j] - oracle[j]).norm() < 1e-12, "mode {j}: {} vs {}", out[j], oracle[j]);
    }
}

#[test]
fn zeroed_band_contributes_nothing_below_it() {
    let n = 32;
    let g = Grid1D::new(n, 2.0 * std::f64::consts::PI).unwrap();
    let k = 5;
    let pad = 3.5;
    // m = 12 sits above the cutoff 32/7
    let f = Field::from_fn(g, |x| (12.0 * x).sin());
    let projected = dealias(&forward_transform(&f).unwrap(), pad);
    let mut stepper = Stepper::new(g, k, pad, false);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    stepper.dealiased_power(projected.coeffs(), &mut out);
    assert!(out.iter().all(|c| c.norm() < 1e-14));
    let twice = dealias(&projected, pad);
    assert_eq!(twice, projected);
}

#[test]
fn soliton_single_step_has_third_order_local_error() {
    // Strang splitting of the stiff Airy/transport pair: the one-step
    // error against the exact translate shrinks by ≈ 8 per halving
    let g = Grid1D::new(1024, 60.0).unwrap();
    let u0 = soliton(5, 1.0, g).unwrap();
    let mut stepper = Stepper::new(g, 5, 3.5, false);
    let err = |stepper: &mut Stepper, dt: f64| {
        let exact = Field::from_fn(g, |x| ground_state_value(5, x - dt));
        stepper.step_field(&u0, dt).unwrap().l2_distance(&exact).unwrap()
    };
    let e1 = err(&mut stepper, 1e-3);
    let e2 = err(&mut stepper, 5e-4);
    let e3 = err(&mut stepper, 2.5e-4);
    assert!(e1 < 2e-4, "{e1:e}");
    assert!(e1 / e2 > 6.0 && e2 / e3 > 7.0, "{e1:e} {e2:e} {e3:e}");

    // Richardson extrapolation from step doubling removes the leading term
    let dt = 2.5e-4;
    let one = stepper.step_field(&u0, dt).unwrap();
    let half = stepper.step_field(&u0, 0.5 * dt).unwrap();
    let two = stepper.step_field(&half, 0.5 * dt).unwrap();
    let rich = two.add(&two.sub(&one).unwrap().scaled(1.0 / 3.0)).unwrap();
    let exact = Field::from_fn(g, |x| ground_state_value(5, x - dt));
    assert!(rich.l2_distance(&exact).unwrap() < 0.5 * two.l2_distance(&exact).unwrap());
}

#[test]
fn fixed_steps_are_recorded_in_the_accumulator() {
    let g = Grid1D::new(256, 60.0).unwrap();
    let cfg = SolverConfig::new(5);
    let q = GroundState::new(5, g).unwrap();
    let mut s = SimState::new(q.profile().scaled(0.1), 5, 1e-2).unwrap();
    for _ in 0..5 {
        s = step(&s, &cfg).unwrap();
    }
    assert!((s.time - 0.05).abs() < 1e-15);
    assert_eq!(s.strichartz_acc.sample_count(), 6);
}

#[test]
fn fast_soliton_translates() {
    let g = Grid1D::new(1024, 60.0).unwrap();
    let u0 = soliton(5, 2.0, g).unwrap();
    let mut cfg = SolverConfig::new(5);
    cfg.t_end = 1.0;
    let out = run(&u0, &cfg).unwrap();
    assert_eq!(out.verdict.reason, StopReason::Completed);
    let exact = translate(&u0, 2.0).unwrap();
    let e = out.state.field.l2_distance(&exact).unwrap();
    assert!(e <= 1e-3, "shape error {e:e}");
}

#[test]
fn small_data_disperses() {
    let g = Grid1D::new(4096, 400.0).unwrap();
    let q = Field::from_fn(g, |x| ground_state_value(5, x - 100.0));
    let u0 = q.scaled(0.1);
    let mut cfg = SolverConfig::new(5);
    cfg.t_end = 5.0;
    cfg.report_interval = 1.0;
    let out = run(&u0, &cfg).unwrap();
    assert_eq!(out.verdict.reason, StopReason::Completed);
    assert!(!out.verdict.fired);
    let h0 = hsk_norm(&u0, 5).unwrap();
    let h1 = hsk_norm(&out.state.field, 5).unwrap();
    assert!((h1 - h0).abs() <= 0.01 * h0);
    let inc = checkpoint_increments(out.state.strichartz_acc.history(), 0, 1.0);
    assert_eq!(inc.len(), 5);
    for w in inc.windows(2) {
        assert!(w[1] <= w[0], "increments {inc:?}");
    }
    assert!(inc[4] <= 0.5 * inc[0], "increments {inc:?}");
}

#[test]
fn norm_reports_conserve_mass_and_energy() {
    let g = Grid1D::new(2048, 200.0).unwrap();
    let u0 = Field::from_fn(g, |x| 0.1 * ground_state_value(5, x - 60.0));
    let mut cfg = SolverConfig::new(5);
    cfg.t_end = 1.0;
    let out = run(&u0, &cfg).unwrap();
    assert_eq!(out.verdict.reason, StopReason::Completed);
    let m0 = mass(&u0);
    let e0 = energy(&u0, 5).unwrap();
    assert_eq!(out.reports.len(), 11);
    for r in &out.reports {
        assert!((r.mass - m0).abs() <= 1e-10 * m0);
        assert!((r.energy - e0).abs() <= 1e-6 * e0.abs());
    }
}
