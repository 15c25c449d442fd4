//! Scalar functionals: conserved quantities, homogeneous Sobolev norms,
//! admissible-pair algebra and mixed space-time norms.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::ground_state::GroundState;
use crate::spectral::{derivative, forward_transform, fractional_derivative, Field, Grid1D};

/// Scale-invariant regularity `s_k = (k - 4) / 2k`.
pub fn critical_exponent(k: u32) -> f64 {
    (k as f64 - 4.0) / (2.0 * k as f64)
}

/// `M[u] = ∫ u² dx`.
pub fn mass(f: &Field) -> f64 {
    f.values().iter().map(|v| v * v).sum::<f64>() * f.grid().dx()
}

/// `E[u] = ∫ (u_x² - 2/(k+2) u^{k+2}) dx`, with `u_x` spectral.
pub fn energy(f: &Field, k: u32) -> Result<f64> {
    let ux = derivative(f)?;
    let c = 2.0 / (k as f64 + 2.0);
    let kp2 = k as i32 + 2;
    let sum: f64 = ux
        .values()
        .iter()
        .zip(f.values())
        .map(|(d, u)| d * d - c * u.powi(kp2))
        .sum();
    Ok(sum * f.grid().dx())
}

/// `‖f‖_{Ḣ^s} = (Σ_{m≠0} |ξ_m|^{2s} |û_m|² dx²/L)^{1/2}`.
pub fn sobolev_norm(f: &Field, s: f64) -> Result<f64> {
    let spec = forward_transform(f)?;
    let g = f.grid();
    let w = g.dx() * g.dx() / g.length();
    let sum: f64 = spec
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, c)| g.wavenumber(j).abs().powf(2.0 * s) * c.norm_sqr())
        .sum();
    Ok((sum * w).sqrt())
}

/// `‖f‖_{Ḣ^{s_k}}`.
pub fn hsk_norm(f: &Field, k: u32) -> Result<f64> {
    sobolev_norm(f, critical_exponent(k))
}

/// `2/p + 1/q - 2/k`, exactly.
pub fn admissibility_defect(p: Ratio<i64>, q: Ratio<i64>, k: u32) -> Ratio<i64> {
    Ratio::from_integer(2) / p + Ratio::from_integer(1) / q - Ratio::new(2, k as i64)
}

/// Whether `(p, q)` satisfies `2/p + 1/q = 2/k` (exact rational arithmetic).
pub fn is_admissible(p: Ratio<i64>, q: Ratio<i64>, k: u32) -> bool {
    let zero = Ratio::from_integer(0);
    if p <= zero || q <= zero || k == 0 {
        return false;
    }
    admissibility_defect(p, q, k) == zero
}

/// One time slice of monitored quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub hsk_norm: f64,
    pub dt: f64,
    pub window_mass: f64,
}

impl NormReport {
    pub fn measure(f: &Field, k: u32, time: f64, dt: f64) -> Result<Self> {
        Ok(Self {
            time,
            mass: mass(f),
            energy: energy(f, k)?,
            hsk_norm: hsk_norm(f, k)?,
            dt,
            window_mass: 0.0,
        })
    }
}

/// Exponents of a mixed norm `‖D^s u‖_{L^p_x L^q_t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedPair {
    pub p: Ratio<i64>,
    pub q: Ratio<i64>,
    pub s: f64,
}

impl MixedPair {
    pub fn new(p: Ratio<i64>, q: Ratio<i64>, s: f64) -> Self {
        Self { p, q, s }
    }

    /// `L^{5k/4}_x L^{5k/2}_t`, whose divergence characterises blow-up.
    pub fn blowup_pair(k: u32) -> Self {
        let k = k as i64;
        Self::new(Ratio::new(5 * k, 4), Ratio::new(5 * k, 2), 0.0)
    }

    /// Diagonal pair `‖D^{2/3k} u‖_{L^{3k/2}_{x,t}}`.
    pub fn diagonal(k: u32) -> Self {
        let kk = k as i64;
        Self::new(Ratio::new(3 * kk, 2), Ratio::new(3 * kk, 2), 2.0 / (3.0 * k as f64))
    }

    fn p_f64(&self) -> f64 {
        *self.p.numer() as f64 / *self.p.denom() as f64
    }

    fn q_f64(&self) -> f64 {
        *self.q.numer() as f64 / *self.q.denom() as f64
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p_f64(), self.q_f64(), self.s]
    }
}

#[derive(Debug, Clone)]
struct PairState {
    pair: MixedPair,
    // running ∫|D^s u(x,t)|^q dt per grid point
    integrals: Vec<f64>,
    last: Vec<f64>,
}

/// Running per-point time integrals for a set of mixed norms.
///
/// Stores `O(n)` per tracked pair: the inner `L^q_t` integral is advanced by
/// the trapezoid rule on whatever (nonuniform) sample times are recorded,
/// and the outer `L^p_x` norm is taken on demand.
#[derive(Debug, Clone)]
pub struct StrichartzAccumulator {
    k: u32,
    grid: Grid1D,
    pairs: Vec<PairState>,
    t_first: Option<f64>,
    t_last: Option<f64>,
    samples: usize,
    truncated: bool,
    history: Vec<(f64, Vec<f64>)>,
}

impl StrichartzAccumulator {
    pub fn new(grid: Grid1D, k: u32, pairs: &[MixedPair]) -> Self {
        let n = grid.n_points();
        Self {
            k,
            grid,
            pairs: pairs
                .iter()
                .map(|&pair| PairState {
                    pair,
                    integrals: vec![0.0; n],
                    last: vec![0.0; n],
                })
                .collect(),
            t_first: None,
            t_last: None,
            samples: 0,
            truncated: false,
            history: Vec::new(),
        }
    }

    /// Tracks the blow-up pair and the diagonal pair.
    pub fn standard(grid: Grid1D, k: u32) -> Self {
        Self::new(grid, k, &[MixedPair::blowup_pair(k), MixedPair::diagonal(k)])
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn tracked_pairs(&self) -> Vec<MixedPair> {
        self.pairs.iter().map(|p| p.pair).collect()
    }

    pub fn sample_count(&self) -> usize {
        self.samples
    }

    pub fn time_span(&self) -> Option<(f64, f64)> {
        Some((self.t_first?, self.t_last?))
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn mark_truncated(&mut self) {
        self.truncated = true;
    }

    /// Per-point accumulated integrals of pair `index`.
    pub fn partial_x_integrals(&self, index: usize) -> &[f64] {
        &self.pairs[index].integrals
    }

    /// Add the sample `u(·, t)`; `t` must exceed every earlier sample time.
    pub fn record(&mut self, t: f64, f: &Field) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(LabError::Contract("accumulator grid mismatch".into()));
        }
        if let Some(prev) = self.t_last {
            if !(t > prev) {
                return Err(LabError::Contract(format!(
                    "sample time {t} does not exceed previous {prev}"
                )));
            }
        }
        let dt = self.t_last.map(|prev| t - prev);
        for state in &mut self.pairs {
            let q = state.pair.q_f64();
            let src = if state.pair.s == 0.0 {
                f.clone()
            } else {
                fractional_derivative(f, state.pair.s)?
            };
            let cur: Vec<f64> = src.values().iter().map(|v| v.abs().powf(q)).collect();
            if let Some(dt) = dt {
                for ((acc, a), b) in state.integrals.iter_mut().zip(&state.last).zip(&cur) {
                    *acc += 0.5 * dt * (a + b);
                }
            }
            state.last = cur;
        }
        if self.t_first.is_none() {
            self.t_first = Some(t);
        }
        self.t_last = Some(t);
        self.samples += 1;
        Ok(())
    }

    fn find(&self, pair: &MixedPair) -> Result<&PairState> {
        self.pairs
            .iter()
            .find(|s| s.pair.p == pair.p && s.pair.q == pair.q && s.pair.s == pair.s)
            .ok_or_else(|| {
                LabError::Contract(format!(
                    "pair (p={}, q={}, s={}) is not tracked",
                    pair.p, pair.q, pair.s
                ))
            })
    }

    fn norm_of(&self, state: &PairState) -> f64 {
        let ratio = state.pair.p_f64() / state.pair.q_f64();
        let sum: f64 = state.integrals.iter().map(|i| i.powf(ratio)).sum();
        (sum * self.grid.dx()).powf(1.0 / state.pair.p_f64())
    }

    /// `(Σ_x (∫|D^s u(x,t)|^q dt)^{p/q} dx)^{1/p}` over the recorded samples.
    pub fn mixed_norm(&self, pair: &MixedPair) -> Result<f64> {
        if self.samples < 2 {
            return Err(LabError::Contract(
                "mixed norm needs at least two time samples".into(),
            ));
        }
        Ok(self.norm_of(self.find(pair)?))
    }

    /// Current value of every tracked norm (zero before two samples).
    pub fn values(&self) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|s| if self.samples < 2 { 0.0 } else { self.norm_of(s) })
            .collect()
    }

    /// Remember the current norms at the current time.
    pub fn checkpoint(&mut self) {
        if let Some(t) = self.t_last {
            let v = self.values();
            self.history.push((t, v));
        }
    }

    pub fn history(&self) -> &[(f64, Vec<f64>)] {
        &self.history
    }

    pub fn summary(&self) -> Vec<AccumulatorSummary> {
        self.pairs
            .iter()
            .map(|s| AccumulatorSummary {
                pair: s.pair.as_array(),
                value: if self.samples < 2 { 0.0 } else { self.norm_of(s) },
                truncation_flag: self.truncated,
            })
            .collect()
    }
}

/// Mixed norm `‖D^s u‖_{L^p_x L^q_t}` over the accumulator's time samples.
pub fn mixed_norm_xt(
    acc: &StrichartzAccumulator,
    p: Ratio<i64>,
    q: Ratio<i64>,
    s: f64,
) -> Result<f64> {
    acc.mixed_norm(&MixedPair::new(p, q, s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumulatorSummary {
    pub pair: [f64; 3],
    pub value: f64,
    pub truncation_flag: bool,
}

/// Increments of checkpointed norm `index` between consecutive multiples of
/// `interval`, starting from the first checkpoint.
pub fn checkpoint_increments(
    history: &[(f64, Vec<f64>)],
    index: usize,
    interval: f64,
) -> Vec<f64> {
    let Some((t0, _)) = history.first() else {
        return Vec::new();
    };
    let tol = 1e-9 * interval.max(1.0);
    let mut marks: Vec<f64> = Vec::new();
    let mut next = *t0;
    for (t, v) in history {
        if (t - next).abs() <= tol {
            marks.push(v[index]);
            next += interval;
        }
    }
    marks.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Outcome of the sub-threshold comparison against the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// `E^{s_k} M^{1-s_k}` of the data over that of `Q`; absent when `E < 0`.
    pub me_product_ratio: Option<f64>,
    /// `‖∂_x u‖^{s_k} ‖u‖^{1-s_k}` over that of `Q`.
    pub grad_mass_ratio: f64,
    pub below_threshold: bool,
    pub negative_energy: bool,
}

pub fn threshold_check(u0: &Field, k: u32) -> Result<ThresholdReport> {
    let s = critical_exponent(k);
    let q = GroundState::reference(k)?;
    let m = mass(u0);
    let e = energy(u0, k)?;
    let grad = sobolev_norm(u0, 1.0)?;
    let q_grad = sobolev_norm(q.profile(), 1.0)?;

    let grad_mass_ratio =
        grad.powf(s) * m.sqrt().powf(1.0 - s) / (q_grad.powf(s) * q.mass().sqrt().powf(1.0 - s));

    let negative_energy = e < 0.0;
    let me_product_ratio = if negative_energy {
        None
    } else {
        let eq = q.energy().max(0.0);
        Some(e.powf(s) * m.powf(1.0 - s) / (eq.powf(s) * q.mass().powf(1.0 - s)))
    };
    let below_threshold = match me_product_ratio {
        Some(r) => r < 1.0 && grad_mass_ratio < 1.0,
        None => false,
    };
    Ok(ThresholdReport {
        me_product_ratio,
        grad_mass_ratio,
        below_threshold,
        negative_energy,
    })
}
