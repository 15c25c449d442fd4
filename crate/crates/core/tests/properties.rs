use num_rational::Ratio;
use proptest::prelude::*;

use gkdv_core::concentration::{concentration_series, track_center, window_mass, WindowLaw};
use gkdv_core::functionals::{admissibility_defect, hsk_norm, is_admissible, sobolev_norm};
use gkdv_core::profile::{divergence_statistic, pairwise_divergence, ProfileParams};
use gkdv_core::spectral::{
    airy_propagate, forward_transform, fractional_derivative, inverse_transform, rescale,
};
use gkdv_core::{Field, Grid1D};

/// A smooth field: a few random Gaussian bumps.
fn bumps(g: Grid1D, spec: &[(f64, f64, f64)]) -> Field {
    Field::from_fn(g, |x| {
        spec.iter()
            .map(|(a, c, w)| a * (-((x - c) / w).powi(2)).exp())
            .sum()
    })
}

fn bump_spec() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, -6.0..6.0f64, 0.6..2.0f64), 1..4)
}

fn rel_sup(a: &Field, b: &Field) -> f64 {
    a.sup_distance(b).unwrap() / b.max_abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_round_trip(exp in 3u32..11, len in 1.0..100.0f64, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let n = 1usize << exp;
        let g = Grid1D::new(n, len).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let f = Field::new(g, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let back = inverse_transform(&forward_transform(&f).unwrap());
        prop_assert!(rel_sup(&back, &f) <= 1e-13);
    }

    #[test]
    fn airy_composes(spec in bump_spec(), t1 in -1.0..1.0f64, t2 in -1.0..1.0f64) {
        let g = Grid1D::new(256, 40.0).unwrap();
        let f = bumps(g, &spec);
        let two = airy_propagate(&airy_propagate(&f, t1).unwrap(), t2).unwrap();
        let one = airy_propagate(&f, t1 + t2).unwrap();
        prop_assert!(two.sup_distance(&one).unwrap() <= 1e-13 * f.max_abs().max(1.0));
    }

    #[test]
    fn airy_preserves_sobolev_norms(spec in bump_spec(), t in -2.0..2.0f64, k in 4u32..9) {
        let g = Grid1D::new(256, 40.0).unwrap();
        let f = bumps(g, &spec);
        let v = airy_propagate(&f, t).unwrap();
        for s in [0.0, (k as f64 - 4.0) / (2.0 * k as f64), 1.0] {
            let a = sobolev_norm(&f, s).unwrap();
            let b = sobolev_norm(&v, s).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        }
    }

    #[test]
    fn fractional_derivatives_compose(spec in bump_spec(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let g = Grid1D::new(256, 40.0).unwrap();
        let f = bumps(g, &spec).mean_removed();
        let ab = fractional_derivative(&fractional_derivative(&f, a).unwrap(), b).unwrap();
        let direct = fractional_derivative(&f, a + b).unwrap();
        prop_assert!(ab.sup_distance(&direct).unwrap() <= 1e-12 * direct.max_abs().max(1.0));
    }

    #[test]
    fn rescale_round_trip(amp in 0.5..2.0f64, width in 0.6..1.2f64, centre in -1.0..1.0f64, big in prop::bool::ANY) {
        let lam = if big { 4.0 } else { 2.0 };
        let g = Grid1D::new(2048, 60.0).unwrap();
        let f = bumps(g, &[(amp, centre, width)]);
        let there = rescale(&f, lam, 5).unwrap();
        let back = rescale(&there, 1.0 / lam, 5).unwrap();
        prop_assert!(back.sup_distance(&f).unwrap() <= 1e-8 * f.max_abs());
    }

    #[test]
    fn window_mass_is_monotone_in_width(spec in bump_spec(), x0 in -10.0..10.0f64, l1 in 0.1..10.0f64, l2 in 0.1..10.0f64) {
        let g = Grid1D::new(256, 40.0).unwrap();
        let f = bumps(g, &spec);
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let a = window_mass(&f, x0, lo, 5).unwrap();
        let b = window_mass(&f, x0, hi, 5).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-12));
    }

    #[test]
    fn tracked_centre_is_an_argmax(spec in bump_spec(), lam in 0.2..8.0f64) {
        let g = Grid1D::new(256, 40.0).unwrap();
        let f = bumps(g, &spec);
        let best = window_mass(&f, track_center(&f, lam, 6).unwrap(), lam, 6).unwrap();
        for i in (0..256).step_by(3) {
            let other = window_mass(&f, g.x(i), lam, 6).unwrap();
            prop_assert!(best >= other * (1.0 - 1e-12));
        }
    }

    #[test]
    fn concentration_fraction_is_bounded(spec in bump_spec(), c in 0.1..30.0f64, e in 0.0..0.33f64) {
        let g = Grid1D::new(128, 30.0).unwrap();
        let f = bumps(g, &spec);
        let snaps = vec![(0.0, f.clone()), (0.5, f)];
        let law = WindowLaw::Power { c, exponent: e };
        for entry in concentration_series(&snaps, &law, 1.0, 5).unwrap() {
            prop_assert!(entry.fraction >= 0.0 && entry.fraction <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn admissibility_is_exact(pn in 1i64..200, pd in 1i64..40, qn in 1i64..200, qd in 1i64..40, k in 4u32..12) {
        let p = Ratio::new(pn, pd);
        let q = Ratio::new(qn, qd);
        let lhs = Ratio::new(2, 1) / p + Ratio::new(1, 1) / q;
        prop_assert_eq!(is_admissible(p, q, k), lhs == Ratio::new(2, k as i64));
        prop_assert_eq!(admissibility_defect(p, q, k), lhs - Ratio::new(2, k as i64));
    }

    #[test]
    fn divergence_is_at_least_two(h1 in 0.01..10.0f64, h2 in 0.01..10.0f64, dx in -50.0..50.0f64, dt in -2.0..2.0f64) {
        let g = Grid1D::new(8, 1.0).unwrap();
        let a = ProfileParams::new(h1, 0.0, 0.0, Field::zeros(g)).unwrap();
        let b = ProfileParams::new(h2, dx, dt, Field::zeros(g)).unwrap();
        prop_assert_eq!(pairwise_divergence(&a, &a), 2.0);
        let s = divergence_statistic(&a, &b);
        prop_assert!(s >= 2.0 - 1e-12);
        prop_assert_eq!(s, divergence_statistic(&b, &a));
    }

    #[test]
    fn scaling_preserves_critical_norm(c in -3.0..3.0f64, w in 0.8..1.5f64) {
        // second derivative of a Gaussian, spectrum O(ξ²) at the origin
        let g = Grid1D::new(2048, 80.0).unwrap();
        let f = Field::from_fn(g, |x| {
            let y = (x - c) / w;
            (4.0 * y * y - 2.0) * (-y * y).exp()
        });
        let r = rescale(&f, 2.0, 5).unwrap();
        let n0 = hsk_norm(&f, 5).unwrap();
        prop_assert!((hsk_norm(&r, 5).unwrap() - n0).abs() <= 1e-6 * n0);
    }
}
