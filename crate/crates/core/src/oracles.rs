//! Independent reference implementations used by tests and the `check`
//! command: the closed-form s-wave square-well S-matrix and a dense
//! finite-difference bound-state eigensolver. Neither shares code with
//! the propagation/matching pipeline they validate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potentials::PotentialModel;

/// Closed-form s-wave S-matrix of the attractive square well
/// V(r) = -depth for r < radius:
///
///   S(k) = e^{-2ikR} (κ cos(κR) + ik sin(κR)) / (κ cos(κR) - ik sin(κR)),
///   κ = sqrt(k² + 2μ·depth).
///
/// Written with cos/sin instead of cot, the expression passes smoothly
/// through the points where cot(κR) has poles, and the branch of the
/// square root is irrelevant because the ratio is even in κ.
pub fn square_well_smatrix(depth: f64, radius: f64, mu: f64, k: Complex64) -> Result<Complex64> {
    if k == Complex64::ZERO {
        return Err(Error::Domain("square well S-matrix requires k != 0"));
    }
    if !(radius > 0.0) {
        return Err(Error::Domain("square well radius must be positive"));
    }
    let i = Complex64::new(0.0, 1.0);
    let kappa = (k * k + 2.0 * mu * depth).sqrt();
    let (s, c) = ((kappa * radius).sin(), (kappa * radius).cos());
    let numerator = kappa * c + i * k * s;
    let denominator = kappa * c - i * k * s;
    Ok((-2.0 * i * k * radius).exp() * numerator / denominator)
}

/// Bound-state wavenumbers from a second-order finite-difference
/// discretization.
#[derive(Debug, Clone)]
pub struct FDSpectrum {
    /// k = i sqrt(-2μE) for each negative eigenvalue E, sorted by Im k
    /// descending.
    pub bound_k: Vec<Complex64>,
    pub n_grid: usize,
    pub r_max: f64,
}

/// Assemble the real symmetric second-order FD matrix of the coupled
/// radial problem with Dirichlet ends (interior nodes r_j = j·h,
/// j = 1..n_grid-1) and extract its negative eigenvalues.
///
/// The matrix is block tridiagonal with bandwidth equal to the channel
/// count, so instead of a dense diagonalization the negative part of the
/// spectrum comes from shift-invert Lanczos backed by a banded Cholesky
/// factorization: with the shift σ below the whole spectrum, H - σI is
/// positive definite and the lowest eigenvalues of H are the extreme
/// (and rapidly converged) eigenvalues of (H - σI)^{-1}.
pub fn fd_bound_states(
    model: &PotentialModel,
    lambda: f64,
    n_grid: usize,
    r_max: f64,
) -> FDSpectrum {
    assert!(n_grid >= 200, "FD oracle needs at least 200 grid intervals");
    let n = model.channels.n();
    let mu = model.channels.mu;
    let h = r_max / n_grid as f64;
    let interior = n_grid - 1;
    let dim = n * interior;
    let bw = n; // (j, a) couples to (j±1, a) and (j, b)

    // Gershgorin lower bound on the spectrum: kinetic and centrifugal
    // parts are nonnegative, so any eigenvalue is above the most negative
    // the potential matrix can reach.
    let strengths = model.strength_matrix(lambda);
    let worst_row: f64 = (0..n)
        .map(|i| (0..n).map(|j| strengths[(i, j)].abs()).sum())
        .fold(0.0, f64::max);
    let sigma = -worst_row - 1.0;

    // banded lower storage: band[d][i] = H[i + d, i] - σ δ_{d0}
    let mut band = vec![vec![0.0f64; dim]; bw + 1];
    let kinetic_diag = 1.0 / (mu * h * h);
    let kinetic_off = -1.0 / (2.0 * mu * h * h);
    for j in 1..n_grid {
        let r = j as f64 * h;
        let p = model.radial_profile(r);
        let base = (j - 1) * n;
        for a in 0..n {
            let l = model.channels.l_values[a] as f64;
            band[0][base + a] =
                kinetic_diag + l * (l + 1.0) / (2.0 * mu * r * r) - p * strengths[(a, a)] - sigma;
            for b in a + 1..n {
                band[b - a][base + a] = -p * strengths[(a, b)];
            }
            if j < n_grid - 1 {
                band[n][base + a] = kinetic_off;
            }
        }
    }

    let chol = band_cholesky(&mut band, dim, bw);
    let eigenvalues = lowest_eigenvalues_shift_invert(&chol, dim, bw, sigma);

    let mut bound_k: Vec<Complex64> = eigenvalues
        .into_iter()
        .filter(|&e| e < 0.0)
        .map(|e| Complex64::new(0.0, (-2.0 * mu * e).sqrt()))
        .collect();
    bound_k.sort_by(|a, b| b.im.partial_cmp(&a.im).unwrap());
    FDSpectrum {
        bound_k,
        n_grid,
        r_max,
    }
}

/// In-place banded Cholesky L Lᵀ of a positive definite matrix in lower
/// band storage; returns the same layout holding L.
fn band_cholesky(band: &mut [Vec<f64>], dim: usize, bw: usize) -> Vec<Vec<f64>> {
    for j in 0..dim {
        let mut d = band[0][j];
        let start = j.saturating_sub(bw);
        for k in start..j {
            let l_jk = band[j - k][k];
            d -= l_jk * l_jk;
        }
        let d = d.max(1e-300).sqrt();
        band[0][j] = d;
        let row_end = (j + bw).min(dim - 1);
        for i in j + 1..=row_end {
            let mut v = band[i - j][j];
            let start = i.saturating_sub(bw).max(j.saturating_sub(bw));
            for k in start..j {
                if i - k <= bw && j - k <= bw {
                    v -= band[i - k][k] * band[j - k][k];
                }
            }
            band[i - j][j] = v / d;
        }
    }
    band.to_vec()
}

fn band_solve(chol: &[Vec<f64>], dim: usize, bw: usize, rhs: &mut [f64]) {
    // L y = rhs
    for i in 0..dim {
        let mut v = rhs[i];
        let start = i.saturating_sub(bw);
        for k in start..i {
            v -= chol[i - k][k] * rhs[k];
        }
        rhs[i] = v / chol[0][i];
    }
    // Lᵀ x = y
    for i in (0..dim).rev() {
        let mut v = rhs[i];
        let end = (i + bw).min(dim - 1);
        for k in i + 1..=end {
            v -= chol[k - i][i] * rhs[k];
        }
        rhs[i] = v / chol[0][i];
    }
}

/// Lanczos with full reorthogonalization on (H - σI)^{-1}; returns the
/// eigenvalues of H recovered from the converged extreme Ritz values.
fn lowest_eigenvalues_shift_invert(
    chol: &[Vec<f64>],
    dim: usize,
    bw: usize,
    sigma: f64,
) -> Vec<f64> {
    let max_iter = 140.min(dim);
    let mut rng = crate::util::SplitMix64::new(0x0f0e_b357);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.next_f64() - 0.5).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);

    let mut basis: Vec<Vec<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    for m in 0..max_iter {
        let mut w = basis[m].clone();
        band_solve(chol, dim, bw, &mut w);
        let alpha: f64 = w.iter().zip(&basis[m]).map(|(a, b)| a * b).sum();
        alphas.push(alpha);
        // w -= alpha v_m + beta v_{m-1}, then full reorthogonalization
        for (i, x) in w.iter_mut().enumerate() {
            *x -= alpha * basis[m][i];
            if m > 0 {
                *x -= betas[m - 1] * basis[m - 1][i];
            }
        }
        for prev in &basis {
            let overlap: f64 = w.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (x, p) in w.iter_mut().zip(prev) {
                *x -= overlap * p;
            }
        }
        let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if beta < 1e-13 || m + 1 == max_iter {
            break;
        }
        betas.push(beta);
        w.iter_mut().for_each(|x| *x /= beta);
        basis.push(w);
    }

    // spectrum of the Lanczos tridiagonal matrix
    let m = alphas.len();
    let mut t = nalgebra::DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(t);
    let mut out: Vec<f64> = Vec::new();
    for (idx, &theta) in eig.eigenvalues.iter().enumerate() {
        if theta <= 0.0 {
            continue;
        }
        let e = sigma + 1.0 / theta;
        // Ritz residual |β_m s_m| bounds the eigenvalue error of θ
        let tail = if m > 1 && !betas.is_empty() {
            betas.last().unwrap().abs() * eig.eigenvectors[(m - 1, idx)].abs()
        } else {
            0.0
        };
        if tail < 1e-8 * theta.abs().max(1e-30) {
            out.push(e);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * a.abs().max(1.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{coupling_matrix, ChannelSet, PotentialFamily};
    use crate::util::SplitMix64;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_limit_is_unit_smatrix() {
        for &k in &[c(0.4, 0.0), c(1.9, 0.3), c(0.1, -0.7)] {
            let s = square_well_smatrix(0.0, 1.0, 1.0, k).unwrap();
            assert!((s - Complex64::ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn unimodular_on_real_axis() {
        let mut rng = SplitMix64::new(21);
        for _ in 0..100 {
            let k = c(rng.range(0.05, 6.0), 0.0);
            let s = square_well_smatrix(3.7, 1.4, 1.0, k).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_through_cot_poles() {
        // κR crossing π: the cos/sin form must stay finite and unimodular
        let radius = 1.0;
        for depth in [PI * PI / 2.0 - 1e-9, PI * PI / 2.0, PI * PI / 2.0 + 1e-9] {
            let k = c(1e-8, 0.0);
            // κ = sqrt(k² + 2 depth) ≈ π at depth = π²/2
            let s = square_well_smatrix(depth, radius, 1.0, k).unwrap();
            assert!(s.is_finite());
        }
    }

    #[test]
    fn branch_of_kappa_square_root_is_irrelevant() {
        // evenness in κ: flipping the sqrt branch by perturbing k across a
        // branch cut leaves S continuous
        let k = c(0.0, 1.2);
        let s1 = square_well_smatrix(2.0, 1.0, 1.0, k + c(1e-12, 0.0)).unwrap();
        let s2 = square_well_smatrix(2.0, 1.0, 1.0, k - c(1e-12, 0.0)).unwrap();
        assert!((s1 - s2).norm() < 1e-6);
    }

    #[test]
    fn first_bound_state_appears_at_textbook_threshold() {
        // pole condition on the positive imaginary axis: κ cos(κR) + y... the
        // denominator κ cos(κR) - ik sin(κR) at k = iy reads
        // κ cos(κR) + y sin(κR); the first depth with a root at y → 0⁺
        // satisfies sqrt(2μ·depth)·R = π/2, i.e. depth = π²/8 for μ = R = 1.
        let has_bound = |depth: f64| -> bool {
            // for k = iy with y² < 2·depth, κ is real and the denominator
            // κ cos(κR) + y sin(κR) is real; binding needs y below the
            // well depth, so the scan stops there
            let denom = |y: f64| {
                let kappa = (2.0 * depth - y * y).sqrt();
                kappa * kappa.cos() + y * kappa.sin()
            };
            let y_top = (2.0 * depth).sqrt() * 0.999;
            let mut prev = denom(1e-9);
            let mut y = 1e-9;
            while y < y_top {
                y = (y + 1e-3).min(y_top);
                let cur = denom(y);
                if prev * cur < 0.0 {
                    return true;
                }
                prev = cur;
            }
            false
        };
        let threshold = PI * PI / 8.0;
        // bisect the transition and compare against the closed form
        let mut lo = 1.0;
        let mut hi = 1.5;
        assert!(!has_bound(lo) && has_bound(hi));
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if has_bound(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!(
            (0.5 * (lo + hi) - threshold).abs() < 1e-6,
            "threshold found at {}",
            0.5 * (lo + hi)
        );
    }

    #[test]
    fn fd_spectrum_free_potential_is_empty() {
        let model = PotentialModel::new(
            ChannelSet::new(vec![0, 1], 1.0).unwrap(),
            coupling_matrix(0.0, 0.0, 0.0),
            PotentialFamily::Gaussian,
            (1, 1),
        )
        .unwrap();
        let spec = fd_bound_states(&model, 0.0, 400, 10.0);
        assert!(spec.bound_k.is_empty());
    }

    #[test]
    fn fd_eigenvalues_single_gaussian_well() {
        // uncoupled s-wave, λ = 7: bound state near 2.1856i
        let model = PotentialModel::new(
            ChannelSet::new(vec![0], 1.0).unwrap(),
            DMatrix::from_row_slice(1, 1, &[7.0]),
            PotentialFamily::Gaussian,
            (0, 0),
        )
        .unwrap();
        let spec = fd_bound_states(&model, 7.0, 4000, 12.0);
        assert_eq!(spec.bound_k.len(), 1);
        assert!(
            (spec.bound_k[0].im - 2.185562).abs() < 2e-3,
            "k = {}",
            spec.bound_k[0]
        );
        assert!(spec.bound_k[0].re == 0.0);
    }

    #[test]
    fn fd_matches_harmonic_comparison() {
        // independent cross-check of the FD machinery itself: deep square
        // well ≈ particle in a box; lowest state E ≈ π²/(2 R²) - depth
        let model = PotentialModel::new(
            ChannelSet::new(vec![0], 1.0).unwrap(),
            DMatrix::from_row_slice(1, 1, &[500.0]),
            PotentialFamily::SquareWell { radius: 1.0 },
            (0, 0),
        )
        .unwrap();
        let spec = fd_bound_states(&model, 500.0, 4000, 3.0);
        assert!(!spec.bound_k.is_empty());
        let deepest = spec.bound_k[0].im;
        let e = -deepest * deepest / 2.0;
        let box_estimate = PI * PI / 2.0 - 500.0;
        assert!(
            (e - box_estimate).abs() < 2.0,
            "E = {e}, box estimate {box_estimate}"
        );
    }
}
