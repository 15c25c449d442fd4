//! Ground state `Q` of `Q'' - Q + Q^{k+1} = 0` and the travelling waves
//! built from it.
//!
//! `Q(x) = [(k+2)/2 · sech²(kx/2)]^{1/k}`, centred at the origin. Speed-`c`
//! solitons are `Q_c(x) = c^{1/k} Q(√c x)`, and `u(x,t) = Q_c(x - ct)`
//! solves the focusing equation exactly.
//!
//! For `k = 4` the mass is `√3 π / 2` and the energy vanishes; in general the
//! Pohozaev identities give `E[Q] = (k-4)/(k+4) · M[Q]`.

use crate::error::{LabError, Result};
use crate::functionals::{energy, hsk_norm, mass};
use crate::spectral::{forward_transform, inverse_transform, Field, Grid1D};

/// Largest admissible `|Q|` at the box edge.
pub const EDGE_TOL: f64 = 1e-12;

/// Grid used when `Q`'s functionals are needed independently of any field.
pub const REFERENCE_POINTS: usize = 4096;
pub const REFERENCE_LENGTH: f64 = 80.0;

/// `ln sech(y)`, stable for large `|y|`.
fn ln_sech(y: f64) -> f64 {
    let a = y.abs();
    std::f64::consts::LN_2 - a - (-2.0 * a).exp().ln_1p()
}

/// Closed-form `Q(x)` for power `k`.
pub fn ground_state_value(k: u32, x: f64) -> f64 {
    let kf = k as f64;
    let log_q = (((kf + 2.0) / 2.0).ln() + 2.0 * ln_sech(0.5 * kf * x)) / kf;
    log_q.exp()
}

#[derive(Debug, Clone)]
pub struct GroundState {
    k: u32,
    profile: Field,
    mass_q: f64,
    energy_q: f64,
    hsk_norm_q: f64,
}

impl GroundState {
    pub fn new(k: u32, grid: Grid1D) -> Result<Self> {
        if k == 0 {
            return Err(LabError::Contract("k must be positive".into()));
        }
        let edge = ground_state_value(k, 0.5 * grid.length());
        if edge > EDGE_TOL {
            return Err(LabError::DomainOverflow(format!(
                "Q({}) = {edge:.3e} exceeds {EDGE_TOL:e}; enlarge the box",
                0.5 * grid.length()
            )));
        }
        let profile = Field::from_fn(grid, |x| ground_state_value(k, x));
        Ok(Self {
            k,
            mass_q: mass(&profile),
            energy_q: energy(&profile, k)?,
            hsk_norm_q: hsk_norm(&profile, k)?,
            profile,
        })
    }

    /// `Q` on the fixed reference grid.
    pub fn reference(k: u32) -> Result<Self> {
        Self::new(k, Grid1D::new(REFERENCE_POINTS, REFERENCE_LENGTH)?)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn profile(&self) -> &Field {
        &self.profile
    }

    pub fn mass(&self) -> f64 {
        self.mass_q
    }

    pub fn energy(&self) -> f64 {
        self.energy_q
    }

    pub fn hsk_norm(&self) -> f64 {
        self.hsk_norm_q
    }

    /// `sup |Q'' - Q + Q^{k+1}|` with spectral derivatives.
    pub fn residual(&self) -> Result<f64> {
        soliton_residual(&self.profile, self.k, 1.0)
    }
}

pub fn ground_state(k: u32, grid: Grid1D) -> Result<GroundState> {
    GroundState::new(k, grid)
}

/// `Q_c(x) = c^{1/k} Q(√c x)` sampled on `grid`, centred at the origin.
pub fn soliton(k: u32, c: f64, grid: Grid1D) -> Result<Field> {
    if !(c.is_finite() && c > 0.0) {
        return Err(LabError::Contract(format!("soliton speed must be positive, got {c}")));
    }
    if k == 0 {
        return Err(LabError::Contract("k must be positive".into()));
    }
    let amp = c.powf(1.0 / k as f64);
    let root = c.sqrt();
    let edge = amp * ground_state_value(k, root * 0.5 * grid.length());
    if edge > EDGE_TOL {
        return Err(LabError::DomainOverflow(format!(
            "soliton with c = {c} is {edge:.3e} at the box edge; enlarge the box"
        )));
    }
    if c == 1.0 {
        return Ok(Field::from_fn(grid, |x| ground_state_value(k, x)));
    }
    Ok(Field::from_fn(grid, |x| amp * ground_state_value(k, root * x)))
}

/// `sup |f'' - c f + f^{k+1}|`.
pub fn soliton_residual(f: &Field, k: u32, c: f64) -> Result<f64> {
    let mut s = forward_transform(f)?;
    let nyq = f.grid().nyquist_index();
    s.apply(|j, xi| {
        if j == nyq {
            0.0.into()
        } else {
            (-xi * xi).into()
        }
    });
    let fxx = inverse_transform(&s);
    let kp1 = k as i32 + 1;
    Ok(fxx
        .values()
        .iter()
        .zip(f.values())
        .map(|(d2, u)| (d2 - c * u + u.powi(kp1)).abs())
        .fold(0.0, f64::max))
}
