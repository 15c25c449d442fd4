//! Initial data from a run plan.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use gkdv_core::ground_state::{ground_state_value, soliton};
use gkdv_core::profile::{synthesize, ProfileParams};
use gkdv_core::snapshot::read_snapshot;
use gkdv_core::spectral::{forward_transform, interpolate, translate};
use gkdv_core::{Field, Grid1D, LabError, Result};

use crate::spec::{InitialData, RunPlan};

const NOISE_MODES: usize = 8;

/// Seeded smooth perturbation: random-phase cosines with `|ξ| < 2/width`.
fn smooth_noise(seed: u64, width: f64) -> impl Fn(f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64)> = (0..NOISE_MODES)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let xi = rng.random_range(0.0..2.0 / width);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (a / (NOISE_MODES as f64).sqrt(), xi, phase)
        })
        .collect();
    move |x| modes.iter().map(|(a, xi, p)| a * (xi * x + p).cos()).sum()
}

/// Spectral interpolation onto a finer grid of the same length.
fn resample(f: &Field, g: Grid1D) -> Option<Field> {
    let from = f.grid();
    if from.length() != g.length() || g.n_points() < from.n_points() {
        return None;
    }
    let spec = forward_transform(f).ok()?;
    Field::new(g, interpolate(&spec, &g.points())).ok()
}

/// Build `u0` on `grid` (ignored for snapshots, which carry their own).
pub fn initial_field(plan: &RunPlan, grid: Option<Grid1D>) -> Result<Field> {
    let k = plan.k;
    let need_grid = || grid.ok_or_else(|| LabError::Config("a grid is required".into()));
    match &plan.initial_data {
        InitialData::GroundStateMultiple { amplitude, center } => {
            let (a, c) = (*amplitude, *center);
            Ok(Field::from_fn(need_grid()?, |x| a * ground_state_value(k, x - c)))
        }
        InitialData::Soliton { c, center } => {
            let s = soliton(k, *c, need_grid()?)?;
            if *center == 0.0 {
                Ok(s)
            } else {
                translate(&s, *center)
            }
        }
        InitialData::Gaussian {
            width,
            amplitude,
            center,
            noise,
        } => {
            if !(*width > 0.0) {
                return Err(LabError::Config(format!("gaussian width must be positive, got {width}")));
            }
            let eta = smooth_noise(plan.seed, *width);
            let (w, a, c, e) = (*width, *amplitude, *center, *noise);
            Ok(Field::from_fn(need_grid()?, |x| {
                let y = (x - c) / w;
                (a + e * eta(x)) * (-y * y).exp()
            }))
        }
        InitialData::Snapshot { path } => {
            let (f, meta) = read_snapshot(path)?;
            if meta.k != k {
                return Err(LabError::Config(format!(
                    "snapshot {} was written for k = {}, spec has k = {k}",
                    path.display(),
                    meta.k
                )));
            }
            match grid {
                Some(g) if g != *f.grid() => resample(&f, g).ok_or_else(|| {
                    LabError::Config(format!(
                        "snapshot {} grid differs from the requested grid",
                        path.display()
                    ))
                }),
                _ => Ok(f),
            }
        }
        InitialData::Synthesis { profiles, t } => {
            let g = need_grid()?;
            let params = profiles
                .iter()
                .map(|b| {
                    let shape = b.shape;
                    ProfileParams::new(b.h, b.x0, b.t0, Field::from_fn(g, |x| shape.value(x)))
                })
                .collect::<Result<Vec<_>>>()?;
            synthesize(&params, *t, g, k)
        }
    }
}
