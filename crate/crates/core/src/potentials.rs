//! Channel-potential matrix models V_{ll'}(r, λ) with one designated
//! continuation parameter and a declared finite range.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Angular momenta and reduced mass defining the coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub l_values: Vec<u32>,
    pub mu: f64,
}

impl ChannelSet {
    pub fn new(l_values: Vec<u32>, mu: f64) -> Result<Self> {
        if l_values.is_empty() {
            return Err(Error::Config {
                field: "channels.l".into(),
                message: "at least one channel required".into(),
            });
        }
        if !(mu > 0.0) {
            return Err(Error::Config {
                field: "channels.mu".into(),
                message: format!("reduced mass must be positive, got {mu}"),
            });
        }
        Ok(ChannelSet { l_values, mu })
    }

    /// Number of coupled channels.
    pub fn n(&self) -> usize {
        self.l_values.len()
    }
}

/// Radial shape of the channel potentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialFamily {
    /// V_ij(r) = -λ_ij e^{-r²}
    Gaussian,
    /// V_ij(r) = -λ_ij for r < radius, 0 beyond
    SquareWell { radius: f64 },
}

/// Symmetric channel-potential matrix with a single scalar continuation
/// parameter selected by `continuation_index` (0-based, mirrored across
/// the diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialModel {
    pub channels: ChannelSet,
    strengths: DMatrix<f64>,
    pub family: PotentialFamily,
    pub continuation_index: (usize, usize),
}

impl PotentialModel {
    pub fn new(
        channels: ChannelSet,
        strengths: DMatrix<f64>,
        family: PotentialFamily,
        continuation_index: (usize, usize),
    ) -> Result<Self> {
        let n = channels.n();
        if strengths.nrows() != n || strengths.ncols() != n {
            return Err(Error::Config {
                field: "potential.strengths".into(),
                message: format!(
                    "expected a {n}x{n} matrix, got {}x{}",
                    strengths.nrows(),
                    strengths.ncols()
                ),
            });
        }
        for i in 0..n {
            for j in 0..i {
                if (strengths[(i, j)] - strengths[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Config {
                        field: "potential.strengths".into(),
                        message: format!(
                            "matrix must be symmetric, entries ({i},{j})/({j},{i}) differ"
                        ),
                    });
                }
            }
        }
        let (ci, cj) = continuation_index;
        if ci >= n || cj >= n {
            return Err(Error::Config {
                field: "potential.continuation".into(),
                message: format!("index ({ci},{cj}) outside the {n}x{n} strength matrix"),
            });
        }
        if let PotentialFamily::SquareWell { radius } = family {
            if !(radius > 0.0) {
                return Err(Error::Config {
                    field: "potential.well_radius".into(),
                    message: format!("square well radius must be positive, got {radius}"),
                });
            }
        }
        Ok(PotentialModel {
            channels,
            strengths,
            family,
            continuation_index,
        })
    }

    /// Strength at the continuation slot as stored; continuation runs start
    /// from this value.
    pub fn lambda0(&self) -> f64 {
        self.strengths[self.continuation_index]
    }

    /// Strength matrix with the continuation entry (and its mirror)
    /// replaced by `lambda`.
    pub fn strength_matrix(&self, lambda: f64) -> DMatrix<f64> {
        let mut m = self.strengths.clone();
        let (i, j) = self.continuation_index;
        m[(i, j)] = lambda;
        m[(j, i)] = lambda;
        m
    }

    /// Scalar radial profile p(r) with V(r, λ) = -p(r) · Λ(λ). Both
    /// supported families factorize this way, which lets the propagator
    /// cache the profile along the grid.
    ///
    /// A grid node landing exactly on the square-well edge gets the
    /// midpoint weight 1/2; without it the discretized well radius is
    /// biased by half a step.
    pub fn radial_profile(&self, r: f64) -> f64 {
        match self.family {
            PotentialFamily::Gaussian => (-r * r).exp(),
            PotentialFamily::SquareWell { radius } => {
                if (r - radius).abs() <= 1e-12 * radius.max(1.0) {
                    0.5
                } else if r < radius {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Taylor coefficients p_s of the radial profile about r = 0,
    /// p(r) = Σ_s p_s r^{2s}; for the square well this is the expansion
    /// of the interior region.
    pub fn profile_series(&self, terms: usize) -> Vec<f64> {
        match self.family {
            PotentialFamily::Gaussian => {
                let mut out = Vec::with_capacity(terms);
                let mut c = 1.0;
                for s in 0..terms {
                    out.push(c);
                    c *= -1.0 / (s as f64 + 1.0);
                }
                out
            }
            PotentialFamily::SquareWell { .. } => {
                let mut out = vec![0.0; terms];
                if terms > 0 {
                    out[0] = 1.0;
                }
                out
            }
        }
    }

    /// Full channel-potential matrix V(r, λ).
    pub fn evaluate(&self, r: f64, lambda: f64) -> DMatrix<f64> {
        let p = self.radial_profile(r);
        -p * self.strength_matrix(lambda)
    }

    /// Smallest R with max_ij |V_ij(r)| < tol for all r ≥ R.
    pub fn effective_range(&self, tol: f64) -> f64 {
        assert!(tol > 0.0, "tolerance must be positive");
        match self.family {
            PotentialFamily::SquareWell { radius } => radius,
            PotentialFamily::Gaussian => {
                let lambda_max = self.strengths.iter().map(|v| v.abs()).fold(0.0, f64::max);
                if lambda_max <= tol {
                    0.0
                } else {
                    (lambda_max / tol).ln().sqrt()
                }
            }
        }
    }
}

/// Strength matrix builder for the common two-channel case.
pub fn coupling_matrix(l11: f64, l22: f64, l12: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[l11, l12, l12, l22])
}
