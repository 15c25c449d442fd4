//! Periodic pseudo-spectral foundation.
//!
//! Everything in the crate is discretised on a uniform periodic grid over
//! `[-L/2, L/2)`. Transform normalisation is fixed once, here:
//!
//! * the forward transform is the unscaled DFT
//!   `û_m = Σ_i u_i e^{-2πi m i / n}`, with phases referenced to the first
//!   grid point `x_0 = -L/2`;
//! * the inverse transform carries the factor `1/n`.
//!
//! With this choice `Σ_i |u_i|² dx = (1/L) Σ_m |û_m|² dx²`, and every norm
//! formula in [`crate::functionals`] carries its `dx` and `L` factors
//! explicitly so that reported values do not depend on the resolution.
//!
//! Multipliers with an odd symbol (derivatives, translations) and the Airy
//! phase `e^{iξ³t}` zero the Nyquist mode, whose sign is ambiguous. `D^s`
//! annihilates the mean mode for every `s`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Fraction of the box, at each end, watched by the boundary-decay monitor.
pub const BOUNDARY_FRACTION: f64 = 0.05;

/// Largest admissible ratio `max_{edge}|u| / max|u|`.
pub const BOUNDARY_DECAY_TOL: f64 = 1e-8;

thread_local! {
    // One planner per worker thread; plans are never shared across threads.
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

/// Uniform periodic grid on `[-L/2, L/2)` and its dual frequency lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n_points: usize,
    length: f64,
}

impl Grid1D {
    pub fn new(n_points: usize, length: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(LabError::InvalidGrid(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(LabError::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        Ok(Self { n_points, length })
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.length / self.n_points as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Signed mode number of DFT slot `j`: `0..n/2-1` then `-n/2..-1`.
    #[inline]
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.n_points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    #[inline]
    pub fn nyquist_index(&self) -> usize {
        self.n_points / 2
    }

    /// Wavenumber `ξ_m = 2πm/L` of DFT slot `j`.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.mode(j) as f64 / self.length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.wavenumber(j)).collect()
    }

    /// Largest resolved wavenumber `π/dx`.
    pub fn max_wavenumber(&self) -> f64 {
        PI / self.dx()
    }

    /// Same box, twice the points.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points,
            length: self.length,
        }
    }

    /// Nearest grid index to `x` (periodically wrapped).
    pub fn index_of(&self, x: f64) -> usize {
        let n = self.n_points as i64;
        let raw = ((x + 0.5 * self.length) / self.dx()).round() as i64;
        raw.rem_euclid(n) as usize
    }
}

/// Real-space samples `values[i] = u(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(LabError::Contract(format!(
                "field has {} samples but grid has {} points",
                values.len(),
                grid.n_points()
            )));
        }
        let field = Self { grid, values };
        field.check_finite()?;
        Ok(field)
    }

    pub(crate) fn from_raw(grid: Grid1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_points()],
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_points()).map(|i| f(grid.x(i))).collect();
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(LabError::Corrupted(format!(
                "non-finite sample {} at index {i}",
                self.values[i]
            ))),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| a * v).collect())
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Result<Self> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| u + a * v)
            .collect();
        Ok(Self::from_raw(self.grid, values))
    }

    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &Field) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(LabError::Contract(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Continuous L² norm `(Σ u_i² dx)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.dx()).sqrt()
    }

    pub fn sup_distance(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        Ok(self.sub(other)?.l2_norm())
    }

    /// Remove the mean so the zero mode vanishes.
    pub fn mean_removed(&self) -> Self {
        let m = self.mean();
        Self::from_raw(self.grid, self.values.iter().map(|v| v - m).collect())
    }

    /// `u(-x)`; on the grid this is the index map `i -> (n - i) mod n`.
    pub fn reflected(&self) -> Self {
        let n = self.values.len();
        let values = (0..n).map(|i| self.values[(n - i) % n]).collect();
        Self::from_raw(self.grid, values)
    }
}

/// Fourier coefficients in DFT slot order (see module docs for normalisation).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid1D,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid1D, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_points() {
            return Err(LabError::Contract(format!(
                "spectrum has {} coefficients but grid has {} points",
                coeffs.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_raw(grid: Grid1D, coeffs: Vec<Complex64>) -> Self {
        Self { grid, coeffs }
    }

    #[inline]
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of signed mode `m`.
    pub fn mode(&self, m: i64) -> Complex64 {
        let n = self.grid.n_points() as i64;
        self.coeffs[m.rem_euclid(n) as usize]
    }

    /// Largest violation of `û(-m) = conj(û(m))`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.coeffs.len();
        (1..n)
            .map(|j| (self.coeffs[j] - self.coeffs[n - j].conj()).norm())
            .fold(self.coeffs[0].im.abs(), f64::max)
    }

    /// Multiply every slot by `symbol(j, ξ_j)`.
    pub fn apply(&mut self, symbol: impl Fn(usize, f64) -> Complex64) {
        let grid = self.grid;
        for (j, c) in self.coeffs.iter_mut().enumerate() {
            *c *= symbol(j, grid.wavenumber(j));
        }
    }
}

pub fn forward_transform(f: &Field) -> Result<SpectralField> {
    f.check_finite()?;
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(buf.len(), true).process(&mut buf);
    Ok(SpectralField::from_raw(f.grid, buf))
}

/// Inverse DFT (with the `1/n` factor); the imaginary part is discarded.
pub fn inverse_transform(s: &SpectralField) -> Field {
    let n = s.coeffs.len();
    let mut buf = s.coeffs.clone();
    plan(n, false).process(&mut buf);
    let scale = 1.0 / n as f64;
    Field::from_raw(s.grid, buf.iter().map(|c| c.re * scale).collect())
}

fn apply_multiplier(
    f: &Field,
    symbol: impl Fn(usize, f64) -> Complex64,
) -> Result<Field> {
    let mut s = forward_transform(f)?;
    s.apply(symbol);
    Ok(inverse_transform(&s))
}

/// `D^s f`, the Fourier multiplier `|ξ|^s`; the mean mode is always
/// annihilated. Supported for `s >= -1`.
pub fn fractional_derivative(f: &Field, s: f64) -> Result<Field> {
    if !(s >= -1.0) {
        return Err(LabError::Unsupported(format!(
            "fractional order {s} below -1"
        )));
    }
    apply_multiplier(f, |j, xi| {
        if j == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(xi.abs().powf(s), 0.0)
        }
    })
}

/// Spectral `∂_x`.
pub fn derivative(f: &Field) -> Result<Field> {
    let nyq = f.grid.nyquist_index();
    apply_multiplier(f, |j, xi| {
        if j == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi)
        }
    })
}

/// Exact Airy flow `V(t)`: `û_m ↦ e^{iξ_m³ t} û_m`.
///
/// The sign makes `sin(x + t)` the solution of `∂_t u + ∂_x³ u = 0`.
pub fn airy_propagate(f: &Field, t: f64) -> Result<Field> {
    if t == 0.0 {
        f.check_finite()?;
        return Ok(f.clone());
    }
    let mut s = forward_transform(f)?;
    airy_phase(&mut s, t);
    Ok(inverse_transform(&s))
}

pub(crate) fn airy_phase(s: &mut SpectralField, t: f64) {
    let nyq = s.grid.nyquist_index();
    s.apply(|j, xi| {
        if j == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(1.0, xi * xi * xi * t)
        }
    });
}

/// `f(x - shift)` by spectral phase shift.
pub fn translate(f: &Field, shift: f64) -> Result<Field> {
    if shift == 0.0 {
        f.check_finite()?;
        return Ok(f.clone());
    }
    let nyq = f.grid.nyquist_index();
    apply_multiplier(f, |j, xi| {
        if j == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(1.0, -xi * shift)
        }
    })
}

/// Evaluate the trigonometric interpolant of `s` at arbitrary points.
pub fn interpolate(s: &SpectralField, points: &[f64]) -> Vec<f64> {
    let grid = s.grid;
    let n = grid.n_points();
    let half = n / 2;
    let x0 = grid.x(0);
    let inv_n = 1.0 / n as f64;
    let coeffs = &s.coeffs;
    let base_k = 2.0 * PI / grid.length();
    points
        .par_iter()
        .map(|&x| {
            let y = x - x0;
            let w = Complex64::from_polar(1.0, base_k * y);
            let mut z = Complex64::new(1.0, 0.0);
            let mut acc = 0.0;
            for m in 1..half {
                // Re-anchor periodically to keep the recurrence drift bounded.
                z = if m % 64 == 0 {
                    Complex64::from_polar(1.0, base_k * y * m as f64)
                } else {
                    z * w
                };
                acc += (coeffs[m] * z).re;
            }
            let nyq = coeffs[half].re * (base_k * y * half as f64).cos();
            (coeffs[0].re + 2.0 * acc + nyq) * inv_n
        })
        .collect()
}

/// Largest `|u|` in the outer [`BOUNDARY_FRACTION`] of the box relative to
/// the global maximum. Zero for the zero field.
pub fn boundary_decay_ratio(f: &Field) -> f64 {
    let n = f.values.len();
    let edge = ((n as f64 * BOUNDARY_FRACTION).ceil() as usize).max(1);
    let peak = f.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let outer = f.values[..edge]
        .iter()
        .chain(&f.values[n - edge..])
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    outer / peak
}

pub fn satisfies_boundary_decay(f: &Field) -> bool {
    boundary_decay_ratio(f) <= BOUNDARY_DECAY_TOL
}

/// Scaling map `λ^{2/k} f(λx)`, evaluated by spectral interpolation.
///
/// Samples whose preimage `λx` falls outside the box are set to zero, so
/// `f` is treated as a function on the line that vanishes outside the box.
pub fn rescale(f: &Field, lambda: f64, k: u32) -> Result<Field> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(LabError::Contract(format!(
            "scale factor must be positive, got {lambda}"
        )));
    }
    if k == 0 {
        return Err(LabError::Contract("nonlinearity power k must be positive".into()));
    }
    let out = rescale_unchecked(f, lambda, k)?;
    let ratio = boundary_decay_ratio(&out);
    if ratio > BOUNDARY_DECAY_TOL {
        return Err(LabError::DomainOverflow(format!(
            "rescaling by {lambda} leaves edge/peak ratio {ratio:.3e} (limit {BOUNDARY_DECAY_TOL:e})"
        )));
    }
    Ok(out)
}

/// [`rescale`] without the boundary-decay check.
pub(crate) fn rescale_unchecked(f: &Field, lambda: f64, k: u32) -> Result<Field> {
    if lambda == 1.0 {
        f.check_finite()?;
        return Ok(f.clone());
    }
    let spec = forward_transform(f)?;
    let grid = f.grid;
    let half_len = 0.5 * grid.length();
    let amp = lambda.powf(2.0 / k as f64);
    let targets: Vec<f64> = grid.points().iter().map(|x| lambda * x).collect();
    let inside: Vec<f64> = targets
        .iter()
        .copied()
        .filter(|y| y.abs() < half_len)
        .collect();
    let sampled = interpolate(&spec, &inside);
    let mut it = sampled.into_iter();
    let values: Vec<f64> = targets
        .iter()
        .map(|y| {
            if y.abs() < half_len {
                amp * it.next().unwrap_or(0.0)
            } else {
                0.0
            }
        })
        .collect();
    Field::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n: usize, l: f64) -> Grid1D {
        Grid1D::new(n, l).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(6, 1.0).is_err());
        assert!(Grid1D::new(4, 1.0).is_err());
        assert!(Grid1D::new(24, 1.0).is_err());
        assert!(Grid1D::new(16, 0.0).is_err());
        let g = grid(64, 3.0);
        assert!((g.dx() * 64.0 - 3.0).abs() <= f64::EPSILON * 3.0);
        // symmetric lattice apart from the Nyquist slot
        for j in 1..32 {
            assert_eq!(g.wavenumber(j), -g.wavenumber(64 - j));
        }
        assert_eq!(g.mode(32), -32);
    }

    #[test]
    fn zero_field_has_zero_spectrum() {
        let g = grid(32, 2.0 * PI);
        let s = forward_transform(&Field::zeros(g)).unwrap();
        assert!(s.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn single_sine_mode() {
        let g = grid(64, 10.0);
        let f = Field::from_fn(g, |x| (2.0 * PI * x / 10.0).sin());
        let s = forward_transform(&f).unwrap();
        for j in 0..64 {
            let m = g.mode(j);
            let mag = s.coeffs()[j].norm();
            if m.abs() == 1 {
                assert_relative_eq!(mag, 32.0, epsilon = 1e-10);
            } else {
                assert!(mag < 1e-10, "mode {m} has {mag}");
            }
        }
        assert!((s.mode(1) - s.mode(-1).conj()).norm() < 1e-12);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let g = grid(16, 1.0);
        let mut f = Field::zeros(g);
        f.values_mut()[3] = f64::NAN;
        assert!(matches!(forward_transform(&f), Err(LabError::Corrupted(_))));
        assert!(Field::new(g, vec![f64::INFINITY; 16]).is_err());
    }

    #[test]
    fn parseval_under_declared_normalisation() {
        let g = grid(128, 7.0);
        let f = Field::from_fn(g, |x| (-(x - 0.3).powi(2)).exp() * (3.0 * x).cos());
        let s = forward_transform(&f).unwrap();
        let lhs: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * g.dx();
        let rhs: f64 = s.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>() * g.dx().powi(2)
            / g.length();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
    }

    #[test]
    fn d_zero_removes_mean() {
        let g = grid(64, 2.0 * PI);
        let f = Field::from_fn(g, |x| 2.0 + x.sin() + 0.5 * (3.0 * x).cos());
        let d0 = fractional_derivative(&f, 0.0).unwrap();
        let expected = f.mean_removed();
        assert!(d0.sup_distance(&expected).unwrap() < 1e-13);
    }

    #[test]
    fn half_derivative_eigenfunction() {
        let g = grid(64, 2.0 * PI);
        let f = Field::from_fn(g, |x| (4.0 * x).sin());
        let d = fractional_derivative(&f, 0.5).unwrap();
        let expected = f.scaled(2.0);
        assert!(d.sup_distance(&expected).unwrap() < 1e-13);
    }

    #[test]
    fn fractional_order_below_minus_one_rejected() {
        let g = grid(16, 1.0);
        assert!(matches!(
            fractional_derivative(&Field::zeros(g), -1.5),
            Err(LabError::Unsupported(_))
        ));
        assert!(fractional_derivative(&Field::zeros(g), f64::NAN).is_err());
    }

    #[test]
    fn airy_identity_and_exact_sine() {
        let g = grid(256, 2.0 * PI);
        let f = Field::from_fn(g, f64::sin);
        assert_eq!(airy_propagate(&f, 0.0).unwrap(), f);
        let out = airy_propagate(&f, 0.7).unwrap();
        let exact = Field::from_fn(g, |x| (x + 0.7).sin());
        assert!(out.sup_distance(&exact).unwrap() <= 1e-10);
    }

    #[test]
    fn translate_moves_gaussian() {
        let g = grid(256, 40.0);
        let f = Field::from_fn(g, |x| (-x * x).exp());
        let out = translate(&f, 3.25).unwrap();
        let exact = Field::from_fn(g, |x| (-(x - 3.25) * (x - 3.25)).exp());
        assert!(out.sup_distance(&exact).unwrap() < 1e-12);
    }

    #[test]
    fn interpolation_reproduces_grid_values() {
        let g = grid(64, 9.0);
        let f = Field::from_fn(g, |x| (-x * x).exp() + 0.1 * (2.0 * PI * 3.0 * x / 9.0).sin());
        let s = forward_transform(&f).unwrap();
        let vals = interpolate(&s, &g.points());
        for (a, b) in vals.iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-13);
        }
        let off = interpolate(&s, &[0.123, -2.5]);
        assert!((off[0] - ((-0.123f64 * 0.123).exp() + 0.1 * (2.0 * PI * 3.0 * 0.123 / 9.0).sin())).abs() < 1e-9);
        assert!(off[1].is_finite());
    }

    #[test]
    fn rescale_gaussian_matches_closed_form() {
        let g = grid(512, 40.0);
        let f = Field::from_fn(g, |x| (-x * x).exp());
        let r = rescale(&f, 2.0, 5).unwrap();
        let amp = 2f64.powf(0.4);
        let exact = Field::from_fn(g, |x| amp * (-4.0 * x * x).exp());
        assert!(r.sup_distance(&exact).unwrap() < 1e-12);
        assert_eq!(rescale(&f, 1.0, 5).unwrap(), f);
    }

    #[test]
    fn rescale_overflow_detected() {
        let g = grid(256, 20.0);
        let f = Field::from_fn(g, |x| (-x * x).exp());
        assert!(matches!(rescale(&f, 0.1, 5), Err(LabError::DomainOverflow(_))));
        assert!(rescale(&f, -1.0, 5).is_err());
    }

    #[test]
    fn reflection_index_map() {
        let g = grid(16, 16.0);
        let f = Field::from_fn(g, |x| x * x * x + 0.5 * x);
        let r = f.reflected();
        for i in 1..16 {
            assert!((r.values()[i] + f.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_monitor() {
        let g = grid(256, 60.0);
        let narrow = Field::from_fn(g, |x| (-x * x).exp());
        assert!(satisfies_boundary_decay(&narrow));
        let wide = Field::from_fn(g, |x| (-x * x / 200.0).exp());
        assert!(!satisfies_boundary_decay(&wide));
        assert_eq!(boundary_decay_ratio(&Field::zeros(g)), 0.0);
    }
}
