//! Numerical laboratory for the focusing supercritical generalized KdV
//! equation `∂_t u + ∂_x³ u + ∂_x(u^{k+1}) = 0`.
//!
//! Modules, bottom-up:
//!
//! * [`spectral`]: periodic grids, transforms, Fourier multipliers, the
//!   exact Airy propagator and the scaling map;
//! * [`functionals`]: mass, energy, `Ḣ^s` norms, admissible pairs and the
//!   mixed-norm accumulator;
//! * [`ground_state`]: `Q` and the travelling solitons;
//! * [`dynamics`]: the split-step solver and the blow-up verdict;
//! * [`profile`]: bubble synthesis, extraction and nonlinear profiles;
//! * [`concentration`]: windowed critical-norm diagnostics.

pub mod concentration;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod ground_state;
pub mod profile;
pub mod snapshot;
pub mod spectral;

pub use error::{LabError, Result};
pub use spectral::{Field, Grid1D, SpectralField};
