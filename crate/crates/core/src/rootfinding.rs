//! Zeros of det F in the complex k-plane at fixed λ: bound states,
//! virtual states and resonances.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potentials::PotentialModel;
use crate::scattering::{pole_indicator, residual};
use crate::solver::RadialGrid;

/// |Re k| below this counts as "on the imaginary axis".
pub const AXIS_TOL: f64 = 1e-6;

/// Physical character of a converged zero of det F.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Pole on the positive imaginary axis: real negative energy.
    Bound,
    /// Pole on the negative imaginary axis.
    Virtual,
    /// Fourth-quadrant pole (Re k > 0, Im k < 0).
    Resonance,
    /// Third-quadrant mirror partner of a resonance.
    UnphysicalMirror,
}

pub fn classify(k: Complex64) -> Classification {
    if k.re.abs() < AXIS_TOL {
        if k.im >= 0.0 {
            Classification::Bound
        } else {
            Classification::Virtual
        }
    } else if k.re > 0.0 {
        Classification::Resonance
    } else {
        Classification::UnphysicalMirror
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RootResult {
    pub k: Complex64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub classification: Classification,
}

/// Newton iteration on det F with the derivative from a central complex
/// finite difference (det F is analytic in k away from poles, so one
/// complex difference along the real direction captures the full
/// derivative). Steps that fail to reduce |det F| are halved up to eight
/// times.
///
/// |det F| spans many decades along the imaginary axis, so iteration does
/// not stop the moment |det F| ≤ tol: it continues until the Newton step
/// itself is negligible or no damped step reduces the residual, and the
/// tolerance is then checked on the final value. Stopping at first
/// crossing would accept points an O(tol / |d det F/dk|) distance from
/// the root, which for deeply bound states is far worse than the solver
/// accuracy.
pub fn newton_complex(
    model: &PotentialModel,
    lambda: f64,
    k0: Complex64,
    grid: &RadialGrid,
    tol: f64,
    max_iter: usize,
) -> Result<RootResult> {
    if k0 == Complex64::ZERO {
        return Err(Error::Domain("newton_complex requires k0 != 0"));
    }
    assert!(tol > 0.0);
    let mut k = k0;
    let mut f = residual(model, k, lambda, grid)?.det_f;
    let mut iterations = 0usize;
    while iterations < max_iter {
        iterations += 1;
        if f == Complex64::ZERO {
            break;
        }
        let delta = 1e-6 * k.norm().max(1.0);
        let fp = residual(model, k + delta, lambda, grid)?.det_f;
        let fm = residual(model, k - delta, lambda, grid)?.det_f;
        let df = (fp - fm) / (2.0 * delta);
        if df.norm() < 1e-14 * f.norm() {
            return Err(Error::DerivativeDegenerate { k });
        }
        let mut step = f / df;
        let mut accepted = false;
        for _ in 0..=8 {
            let k_try = k - step;
            if k_try == Complex64::ZERO {
                step *= 0.5;
                continue;
            }
            match residual(model, k_try, lambda, grid) {
                Ok(r) if r.det_f.norm() < f.norm() => {
                    k = k_try;
                    f = r.det_f;
                    accepted = true;
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            // stalled at the local noise floor; fine if already converged
            break;
        }
        if step.norm() <= 1e-10 * k.norm().max(1.0) {
            break;
        }
    }
    if f.norm() <= tol {
        Ok(RootResult {
            k,
            residual_norm: f.norm(),
            iterations,
            classification: classify(k),
        })
    } else {
        Err(Error::NoConvergence {
            iterations,
            residual: f.norm(),
        })
    }
}

/// A genuine simple zero of the pole indicator is surrounded by values
/// that grow linearly and flip phase across the root; points "converged"
/// inside a numerical noise floor have neighborhoods that do neither.
/// Probing the indicator instead of det F keeps the accidental poles of
/// det F (often within 1e-3 of a deep root) from spoiling the parity
/// test.
fn is_isolated_zero(
    model: &PotentialModel,
    lambda: f64,
    root: &RootResult,
    grid: &RadialGrid,
) -> bool {
    let delta = 5e-3 * root.k.norm().max(1.0);
    let at_root = match pole_indicator(model, root.k, lambda, grid) {
        Ok(v) => v.log2_abs(),
        Err(_) => return false,
    };
    let probe = |offset: Complex64| -> Option<crate::linalg::ScaledProduct> {
        pole_indicator(model, root.k + offset, lambda, grid).ok()
    };
    for dir in [Complex64::new(delta, 0.0), Complex64::new(0.0, delta)] {
        let (Some(vp), Some(vm)) = (probe(dir), probe(-dir)) else {
            return false;
        };
        // both neighbors well above the converged point on the log scale
        if vp.log2_abs() < at_root + 4.5 || vm.log2_abs() < at_root + 4.5 {
            return false;
        }
        // odd symmetry of a simple zero: v(+δ) ≈ -v(-δ), checked as
        // opposite phases at comparable magnitude
        if (vp.log2_abs() - vm.log2_abs()).abs() > 1.5 {
            return false;
        }
        if (vp.phase() + vm.phase()).norm() > 0.7 {
            return false;
        }
    }
    true
}

/// Walk the positive imaginary axis k = iy, y ∈ (0.05, k_max], step 0.02,
/// and polish every sign change or pronounced magnitude minimum of det F
/// with Newton iterations. Results are deduplicated within 1e-6 and
/// sorted by Im k descending. States closer to the origin than the scan
/// floor belong to continuation runs, not to the scan.
pub fn scan_bound_states(
    model: &PotentialModel,
    lambda: f64,
    k_max: f64,
    grid: &RadialGrid,
) -> Vec<RootResult> {
    const Y_MIN: f64 = 0.05;
    const STEP: f64 = 0.02;
    let newton_tol = 1e-6;
    let max_iter = 40;

    // Bound energies cannot drop below the most negative reach of the
    // potential matrix (Gershgorin); nothing above the corresponding k
    // can be a bound state, however small the (noise-floored) residual
    // looks out there.
    let strengths = model.strength_matrix(lambda);
    let n = model.channels.n();
    let worst_row: f64 = (0..n)
        .map(|i| (0..n).map(|j| strengths[(i, j)].abs()).sum())
        .fold(0.0, f64::max);
    let y_cap = (2.0 * model.channels.mu * worst_row).sqrt();
    if y_cap < Y_MIN {
        return Vec::new();
    }
    let y_top = k_max.min(y_cap + STEP);

    // On the axis the pole indicator has a fixed phase (-i)^{Σl} up to
    // noise; rotating it back gives a real detector whose sign changes
    // mark the S-matrix poles.
    let l_sum: u32 = model.channels.l_values.iter().sum();
    let phase = Complex64::new(0.0, 1.0).powu(l_sum % 4);
    // sign from the rotated mantissa, magnitude from the log scale
    let detector = |y: f64| -> Option<(f64, f64)> {
        pole_indicator(model, Complex64::new(0.0, y), lambda, grid)
            .ok()
            .map(|d| ((d.mantissa() * phase).re, d.log2_abs()))
    };

    let mut ys = Vec::new();
    let mut y = Y_MIN;
    while y <= y_top + 1e-12 {
        ys.push(y);
        y += STEP;
    }
    let values: Vec<Option<(f64, f64)>> = ys.iter().map(|&y| detector(y)).collect();

    // sign-change brackets plus pronounced magnitude dips
    let mut brackets: Vec<(f64, f64)> = Vec::new();
    let mut dips: Vec<f64> = Vec::new();
    for i in 0..ys.len() {
        let Some((sign_i, log_i)) = values[i] else {
            continue;
        };
        if i + 1 < ys.len() {
            if let Some((sign_j, _)) = values[i + 1] {
                if sign_i * sign_j < 0.0 {
                    brackets.push((ys[i], ys[i + 1]));
                    continue;
                }
            }
        }
        if i > 0 && i + 1 < ys.len() {
            if let (Some((_, log_a)), Some((_, log_b))) = (values[i - 1], values[i + 1]) {
                if log_i < log_a - 1.0 && log_i < log_b - 1.0 {
                    dips.push(ys[i]);
                }
            }
        }
    }

    // bisect each bracket down to the root before Newton sees it: det F
    // may carry an accidental pole within ~1e-3 of a deep root, so the
    // polish has to start inside the pole-free basin
    let mut starts: Vec<f64> = Vec::new();
    for (mut lo, mut hi) in brackets {
        let (Some((mut sign_lo, _)), Some(_)) = (detector(lo), detector(hi)) else {
            continue;
        };
        for _ in 0..45 {
            if hi - lo < 1e-11 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let Some((sign_mid, _)) = detector(mid) else {
                break;
            };
            if sign_lo * sign_mid <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
                sign_lo = sign_mid;
            }
        }
        starts.push(0.5 * (lo + hi));
    }
    starts.extend(dips);

    let mut roots: Vec<RootResult> = Vec::new();
    for y0 in starts {
        let Ok(root) = newton_complex(
            model,
            lambda,
            Complex64::new(0.0, y0),
            grid,
            newton_tol,
            max_iter,
        ) else {
            continue;
        };
        if root.classification != Classification::Bound {
            continue;
        }
        if root.k.im <= 0.0 || root.k.im > k_max + STEP || root.k.im > y_cap + STEP {
            continue;
        }
        if roots.iter().any(|r| (r.k - root.k).norm() <= 1e-6) {
            continue;
        }
        if is_isolated_zero(model, lambda, &root, grid) {
            roots.push(root);
        }
    }
    roots.sort_by(|a, b| b.k.im.partial_cmp(&a.k.im).unwrap());
    roots
}
