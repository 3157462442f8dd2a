//! Locating and tracing bound states and resonances of coupled-channel
//! radial Schrödinger equations.
//!
//! The library propagates the coupled-channel solution matrix at complex
//! wavenumber `k` with a renormalized matrix Numerov scheme, extracts the
//! multichannel S-matrix from the asymptotic samples, and evaluates a
//! regularized determinant whose zeros coincide with the poles of the
//! S-matrix (bound states, virtual states, resonances). Zeros are polished
//! by complex Newton iteration and traced through the three-dimensional
//! space (Re k, Im k, λ) with a pseudo-arclength predictor-corrector,
//! including detection of simple branch points and switching onto the
//! crossing branch.
//!
//! Units are ħ = 1 with E = k²/(2μ); lengths are dimensionless.

// `!(x > 0.0)` in validation guards is deliberate: unlike `x <= 0.0` it
// also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod continuation;
pub mod error;
pub mod linalg;
pub mod oracles;
pub mod potentials;
pub mod rootfinding;
pub mod scattering;
pub mod solver;
pub mod special;
pub mod util;

pub use error::{Error, Result};
pub use potentials::{ChannelSet, PotentialFamily, PotentialModel};
pub use rootfinding::{newton_complex, scan_bound_states, Classification, RootResult};
pub use scattering::{extract_smatrix, regularized_det, residual, ResidualValue, SMatrix};
pub use solver::{propagate, AsymptoticSample, RadialGrid};
