//! Bubble superpositions, the greedy profile extractor and nonlinear
//! profiles.
//!
//! A bubble with parameters `(h, x0, t0)` and profile `ψ` is
//! `h^{-2/k} [V((t - t0)/h³) ψ]((x - x0)/h)`; a configuration is a sum of
//! bubbles. Extraction runs the other way on a single field: it hunts for
//! the scale and position holding the most `Ḣ^{s_k}` energy on a dyadic
//! ladder, removes that content by `Ḣ^{s_k}`-orthogonal projection and
//! repeats. Because every subtraction is a projection, the remainder norm
//! never increases and the Pythagorean identity holds step by step up to
//! resampling error.
//!
//! Time shifts are not searched for: every extracted bubble has `t0 = 0`,
//! and dispersed content stays in the remainder.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{SolverConfig, Simulation, StopReason};
use crate::error::{LabError, Result};
use crate::functionals::{critical_exponent, hsk_norm, MixedPair, StrichartzAccumulator};
use crate::spectral::{
    airy_phase, airy_propagate, boundary_decay_ratio, forward_transform, inverse_transform,
    rescale, rescale_unchecked, translate, Field, Grid1D, SpectralField, BOUNDARY_DECAY_TOL,
};

/// Scale, translation, time shift and unit-scale profile of one bubble.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileParams {
    pub h: f64,
    pub x0: f64,
    pub t0: f64,
    pub psi: Field,
}

impl ProfileParams {
    pub fn new(h: f64, x0: f64, t0: f64, psi: Field) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(LabError::Contract(format!("bubble scale must be positive, got {h}")));
        }
        if !(x0.is_finite() && t0.is_finite()) {
            return Err(LabError::Contract("bubble translation and time must be finite".into()));
        }
        Ok(Self { h, x0, t0, psi })
    }

    pub fn hsk_norm(&self, k: u32) -> Result<f64> {
        hsk_norm(&self.psi, k)
    }

    /// This bubble alone at time `t`.
    pub fn evaluate(&self, t: f64, k: u32) -> Result<Field> {
        let s = (t - self.t0) / self.h.powi(3);
        let evolved = airy_propagate(&self.psi, s)?;
        let scaled = rescale(&evolved, 1.0 / self.h, k)?;
        let placed = translate(&scaled, self.x0)?;
        let ratio = boundary_decay_ratio(&placed);
        if ratio > BOUNDARY_DECAY_TOL {
            return Err(LabError::DomainOverflow(format!(
                "bubble (h={}, x0={}, t0={}) at t={t} has edge/peak ratio {ratio:.3e}",
                self.h, self.x0, self.t0
            )));
        }
        Ok(placed)
    }
}

/// `Σ_j h_j^{-2/k} [V((t - t_j)/h_j³) ψ_j]((x - x_j)/h_j)` on `grid`.
pub fn synthesize(profiles: &[ProfileParams], t: f64, grid: Grid1D, k: u32) -> Result<Field> {
    let mut sum = Field::zeros(grid);
    for p in profiles {
        if *p.psi.grid() != grid {
            return Err(LabError::Contract("profile lives on a different grid".into()));
        }
        sum = sum.add(&p.evaluate(t, k)?)?;
    }
    Ok(sum)
}

/// `h_a/h_b + h_b/h_a + |t_a - t_b|/h_a³ + |x_a - x_b|/h_a`.
pub fn pairwise_divergence(a: &ProfileParams, b: &ProfileParams) -> f64 {
    a.h / b.h + b.h / a.h + (a.t0 - b.t0).abs() / a.h.powi(3) + (a.x0 - b.x0).abs() / a.h
}

/// `min(Γ(a,b), Γ(b,a))`, the symmetric statistic that is reported.
pub fn divergence_statistic(a: &ProfileParams, b: &ProfileParams) -> f64 {
    pairwise_divergence(a, b).min(pairwise_divergence(b, a))
}

pub fn divergence_matrix(profiles: &[ProfileParams]) -> Vec<Vec<f64>> {
    profiles
        .iter()
        .map(|a| profiles.iter().map(|b| divergence_statistic(a, b)).collect())
        .collect()
}

/// `⟨f, g⟩_{Ḣ^s}` under the discrete Parseval normalisation.
pub fn sobolev_inner(f: &Field, g: &Field, s: f64) -> Result<f64> {
    f.same_grid(g)?;
    let a = forward_transform(f)?;
    let b = forward_transform(g)?;
    Ok(spectral_inner(&a, &b, s))
}

fn spectral_inner(a: &SpectralField, b: &SpectralField, s: f64) -> f64 {
    let grid = a.grid();
    let dx = grid.dx();
    let sum: f64 = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .enumerate()
        .skip(1)
        .map(|(j, (x, y))| grid.wavenumber(j).abs().powf(2.0 * s) * (x * y.conj()).re)
        .sum();
    sum * dx * dx / grid.length()
}

/// `‖V(t) f‖_{L^{5k/4}_x L^{5k/2}_t}` over `t ∈ [0, horizon]`, trapezoid
/// rule on `samples` equally spaced times.
pub fn linear_strichartz_proxy(f: &Field, k: u32, horizon: f64, samples: usize) -> Result<f64> {
    if samples < 2 || !(horizon > 0.0) {
        return Err(LabError::Contract(
            "proxy needs a positive horizon and at least two samples".into(),
        ));
    }
    let pair = MixedPair::blowup_pair(k);
    let mut acc = StrichartzAccumulator::new(*f.grid(), k, &[pair]);
    let spec = forward_transform(f)?;
    for i in 0..samples {
        let t = horizon * i as f64 / (samples - 1) as f64;
        let mut s = spec.clone();
        airy_phase(&mut s, t);
        acc.record(t, &inverse_transform(&s))?;
    }
    acc.mixed_norm(&pair)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    pub max_profiles: usize,
    pub strichartz_stop: f64,
    /// Horizon of the remainder's linear Strichartz proxy.
    pub horizon: f64,
    pub horizon_samples: usize,
    /// Search windows are `|x - x0| ≤ search_width · h`.
    pub search_width: f64,
    /// Frequency that a unit-scale bubble is centred on.
    pub xi_ref: f64,
    /// Stop once a candidate would capture less than this fraction of
    /// `‖v‖²_{Ḣ^{s_k}}`.
    pub min_capture: f64,
    /// Dyadic exponents `m` with `h = 2^m`; derived from the grid when absent.
    pub ladder: Option<(i32, i32)>,
}

impl ExtractConfig {
    pub fn new(max_profiles: usize, strichartz_stop: f64) -> Self {
        Self {
            max_profiles,
            strichartz_stop,
            horizon: 1.0,
            horizon_samples: 65,
            search_width: 2.0,
            xi_ref: 1.0,
            min_capture: 1e-3,
            ladder: None,
        }
    }

    fn ladder_for(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        let (lo, hi) = match self.ladder {
            Some(r) => r,
            None => {
                // the band must sit below Nyquist and the content window in the box
                let h_min = std::f64::consts::SQRT_2 * self.xi_ref / grid.max_wavenumber();
                let h_max = grid.length() / 32.0;
                (h_min.log2().ceil() as i32, h_max.log2().floor() as i32)
            }
        };
        if lo > hi {
            return Err(LabError::InvalidGrid(format!(
                "empty scale ladder 2^{lo}..2^{hi} on this grid"
            )));
        }
        Ok((lo..=hi).map(|m| 2f64.powi(m)).collect())
    }
}

#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub profiles: Vec<ProfileParams>,
    pub remainder: Field,
    /// `‖v‖² - Σ‖ψ_j‖² - ‖R‖²` in `Ḣ^{s_k}`, signed.
    pub pythagorean_defect: f64,
    pub pairwise_divergence: Vec<Vec<f64>>,
    pub remainder_strichartz: f64,
}

/// `1` on `|d| ≤ flat`, a `cos²` taper of width `taper`, then `0`; `d` is
/// the periodic distance to `x0`.
fn content_window(grid: &Grid1D, x0: f64, flat: f64, taper: f64) -> Vec<f64> {
    let len = grid.length();
    (0..grid.n_points())
        .map(|i| {
            let d = ((grid.x(i) - x0 + 0.5 * len).rem_euclid(len) - 0.5 * len).abs();
            if d <= flat {
                1.0
            } else if d < flat + taper {
                let r = (d - flat) / taper;
                (0.5 * std::f64::consts::PI * r).cos().powi(2)
            } else {
                0.0
            }
        })
        .collect()
}

fn windowed(f: &Field, x0: f64, h: f64) -> Field {
    let g = f.grid();
    let half = 0.5 * g.length();
    let flat = (8.0 * h).min(0.6 * half);
    let taper = (4.0 * h).min(half - flat);
    let w = content_window(g, x0, flat, taper);
    let values = f.values().iter().zip(&w).map(|(v, w)| v * w).collect();
    Field::new(*g, values).expect("window of a finite field is finite")
}

/// Best `(score, index)` of the band-passed critical density for scale `h`.
fn scan_scale(spec: &SpectralField, h: f64, s: f64, cfg: &ExtractConfig) -> (f64, usize) {
    let g = *spec.grid();
    let lo = cfg.xi_ref / (h * std::f64::consts::SQRT_2);
    let hi = cfg.xi_ref * std::f64::consts::SQRT_2 / h;
    let mut band = spec.clone();
    band.apply(|j, xi| {
        let a = xi.abs();
        if j != 0 && a >= lo && a < hi {
            Complex64::new(a.powf(s), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let rho: Vec<f64> = inverse_transform(&band).values().iter().map(|v| v * v).collect();
    let n = rho.len();
    let w = ((cfg.search_width * h) / g.dx()).floor() as usize;
    let w = w.min((n - 1) / 2);
    let mut prefix = Vec::with_capacity(3 * n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for i in 0..3 * n {
        acc += rho[i % n];
        prefix.push(acc);
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for i in 0..n {
        let v = prefix[n + i + w + 1] - prefix[n + i - w];
        if v > best.0 * (1.0 + 1e-12) + f64::MIN_POSITIVE {
            best = (v, i);
        }
    }
    (best.0 * g.dx(), best.1)
}

/// `D^s`-weighted mean `|ξ|` of `f`.
fn spectral_centroid(f: &Field, s: f64) -> Result<f64> {
    let spec = forward_transform(f)?;
    let g = spec.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for (j, c) in spec.coeffs().iter().enumerate().skip(1) {
        let a = g.wavenumber(j).abs();
        let w = a.powf(2.0 * s) * c.norm_sqr();
        num += a * w;
        den += w;
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

fn snap_to_ladder(h: f64, ladder: &[f64]) -> f64 {
    ladder
        .iter()
        .copied()
        .min_by(|a, b| {
            let da = (a.log2() - h.log2()).abs();
            let db = (b.log2() - h.log2()).abs();
            da.total_cmp(&db)
        })
        .expect("non-empty ladder")
}

/// Greedy extraction with default settings.
pub fn extract_profiles(
    v: &Field,
    k: u32,
    max_profiles: usize,
    strichartz_stop: f64,
) -> Result<DecompositionReport> {
    extract_profiles_with(v, k, &ExtractConfig::new(max_profiles, strichartz_stop))
}

pub fn extract_profiles_with(v: &Field, k: u32, cfg: &ExtractConfig) -> Result<DecompositionReport> {
    v.check_finite()?;
    let scale = v.max_abs().max(f64::MIN_POSITIVE);
    if v.mean().abs() > 1e-10 * scale {
        return Err(LabError::Contract(format!(
            "extraction needs mean-zero data, mean is {:e}",
            v.mean()
        )));
    }
    let grid = *v.grid();
    let s = critical_exponent(k);
    let ladder = cfg.ladder_for(&grid)?;
    let total = hsk_norm(v, k)?.powi(2);

    let mut remainder = v.clone();
    let mut profiles = Vec::new();
    let mut captured_sum = 0.0;
    let mut proxy = linear_strichartz_proxy(&remainder, k, cfg.horizon, cfg.horizon_samples)?;

    while profiles.len() < cfg.max_profiles && proxy >= cfg.strichartz_stop && total > 0.0 {
        let spec = forward_transform(&remainder)?;
        let scans: Vec<(f64, usize)> = ladder
            .par_iter()
            .map(|&h| scan_scale(&spec, h, s, cfg))
            .collect();
        let mut pick = 0;
        for (i, sc) in scans.iter().enumerate() {
            if sc.0 > scans[pick].0 * (1.0 + 1e-12) {
                pick = i;
            }
        }
        let x0 = grid.x(scans[pick].1);
        let h_probe = ladder[pick];

        let probe = windowed(&remainder, x0, h_probe);
        let centroid = spectral_centroid(&probe, s)?;
        if centroid == 0.0 {
            break;
        }
        let h = snap_to_ladder(cfg.xi_ref / centroid, &ladder);
        let content = if h > h_probe { windowed(&remainder, x0, h) } else { probe };

        let c_spec = forward_transform(&content)?;
        let c_norm2 = spectral_inner(&c_spec, &c_spec, s);
        if c_norm2 <= 0.0 {
            break;
        }
        let alpha = spectral_inner(&spec, &c_spec, s) / c_norm2;
        let captured = alpha * alpha * c_norm2;
        if captured < cfg.min_capture * total {
            break;
        }
        let piece = content.scaled(alpha);
        remainder = remainder.sub(&piece)?;
        captured_sum += captured;
        let centred = translate(&piece, -x0)?;
        let psi = rescale_unchecked(&centred, h, k)?;
        profiles.push(ProfileParams::new(h, x0, 0.0, psi)?);
        proxy = linear_strichartz_proxy(&remainder, k, cfg.horizon, cfg.horizon_samples)?;
    }
    debug_assert!(captured_sum <= total * (1.0 + 1e-9));

    let mut psi_sum = 0.0;
    for p in &profiles {
        psi_sum += p.hsk_norm(k)?.powi(2);
    }
    let rem_norm2 = hsk_norm(&remainder, k)?.powi(2);
    Ok(DecompositionReport {
        pairwise_divergence: divergence_matrix(&profiles),
        pythagorean_defect: total - psi_sum - rem_norm2,
        remainder_strichartz: proxy,
        profiles,
        remainder,
    })
}

/// Solver output for a nonlinear profile.
#[derive(Debug, Clone)]
pub struct NonlinearProfile {
    pub t_bar: f64,
    /// Requested times in input order; `trajectory[i]` is `U(times[i])`.
    pub times: Vec<f64>,
    pub trajectory: Vec<Field>,
    /// `‖U(t_n) - V(t_n)ψ‖_{Ḣ^{s_k}}` for each reached time.
    pub discrepancy: Vec<f64>,
    /// False when the solver stopped before reaching every requested time;
    /// `trajectory` then holds the times that were reached, in input order.
    pub complete: bool,
    pub stop: Option<StopReason>,
}

/// Evolve one leg of times all on the same side of `t_bar`, given as
/// distances `τ ≥ 0` from it, with `cfg.t_end` replaced by the largest.
fn evolve_leg(u_bar: &Field, taus: &[f64], cfg: &SolverConfig) -> Result<(Vec<Field>, Option<StopReason>)> {
    let Some(t_max) = taus.iter().copied().reduce(f64::max) else {
        return Ok((Vec::new(), None));
    };
    let mut leg_cfg = cfg.clone();
    leg_cfg.t_end = t_max;
    let mut sim = Simulation::new(u_bar, &leg_cfg)?;
    let mut out = Vec::with_capacity(taus.len());
    for &tau in taus {
        let stop = sim.advance_to(tau)?;
        let st = sim.state();
        if (st.time - tau).abs() > 1e-12 * tau.max(1.0) {
            return Ok((out, stop.or(Some(StopReason::Completed))));
        }
        out.push(st.field.clone());
        if matches!(stop, Some(r) if r != StopReason::Completed) {
            return Ok((out, stop));
        }
    }
    Ok((out, None))
}

/// Solve the nonlinear equation from `V(t_bar)ψ` at time `t_bar` and
/// compare with the linear flow at the requested times.
///
/// Times before `t_bar` are reached through the symmetry
/// `u(x, t) ↦ u(-x, -t)`, which maps solutions to solutions.
pub fn nonlinear_profile(
    psi: &Field,
    t_seq: &[f64],
    t_bar: f64,
    k: u32,
    cfg: &SolverConfig,
) -> Result<NonlinearProfile> {
    if !t_bar.is_finite() || t_seq.iter().any(|t| !t.is_finite()) {
        return Err(LabError::Contract("nonlinear profiles need finite times".into()));
    }
    let mut cfg = cfg.clone();
    cfg.k = k;
    let u_bar = airy_propagate(psi, t_bar)?;

    let mut forward: Vec<(usize, f64)> = Vec::new();
    let mut backward: Vec<(usize, f64)> = Vec::new();
    for (i, &t) in t_seq.iter().enumerate() {
        if t >= t_bar {
            forward.push((i, t - t_bar));
        } else {
            backward.push((i, t_bar - t));
        }
    }
    forward.sort_by(|a, b| a.1.total_cmp(&b.1));
    backward.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut slots: Vec<Option<Field>> = vec![None; t_seq.len()];
    let mut stop = None;

    let taus: Vec<f64> = forward.iter().map(|p| p.1).collect();
    let (fields, leg_stop) = if taus.iter().all(|&t| t == 0.0) {
        (vec![u_bar.clone(); taus.len()], None)
    } else {
        evolve_leg(&u_bar, &taus, &cfg)?
    };
    stop = stop.or(leg_stop);
    for ((i, _), f) in forward.iter().zip(fields) {
        slots[*i] = Some(f);
    }

    let taus: Vec<f64> = backward.iter().map(|p| p.1).collect();
    let (fields, leg_stop) = evolve_leg(&u_bar.reflected(), &taus, &cfg)?;
    stop = stop.or(leg_stop);
    for ((i, _), f) in backward.iter().zip(fields) {
        slots[*i] = Some(f.reflected());
    }

    let complete = slots.iter().all(Option::is_some);
    let mut times = Vec::new();
    let mut trajectory = Vec::new();
    let mut discrepancy = Vec::new();
    for (i, slot) in slots.into_iter().enumerate() {
        if let Some(u) = slot {
            let lin = airy_propagate(psi, t_seq[i])?;
            discrepancy.push(hsk_norm(&u.sub(&lin)?, k)?);
            times.push(t_seq[i]);
            trajectory.push(u);
        }
    }
    Ok(NonlinearProfile {
        t_bar,
        times,
        trajectory,
        discrepancy,
        complete,
        stop,
    })
}
