//! Pseudo-arclength predictor-corrector tracing of det F = 0 curves in
//! the three-dimensional space x = (Re k, Im k, λ), with detection of
//! simple branch points and switching onto the crossing branch.
//!
//! The continuation treats G(x) = (Re det F, Im det F) as a real map
//! R³ → R²; its Jacobian is evaluated by central differences. A predictor
//! steps along the unit tangent (the null vector of the Jacobian), and
//! the corrector runs Newton iterations on the bordered system
//!
//!   [ J(x) ]        [ G(x) ]
//!   [ tᵀ   ] δ  = - [  0   ],
//!
//! which constrains the update to the plane orthogonal to the tangent.
//! Branch points - where the Jacobian null space becomes two-dimensional -
//! are flagged by a sign change of the bordered determinant
//! τ(x) = det [J(x); tᵀ] and located by secant refinement along the arc.

use nalgebra::{Matrix2x3, Matrix3, Vector2, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potentials::PotentialModel;
use crate::rootfinding::RootResult;
use crate::scattering::residual;
use crate::solver::RadialGrid;

/// Residual map G: R³ → R² whose zero set is traced. The scattering
/// pipeline provides the physical one; tests drive the engine with
/// closed-form maps.
pub trait ResidualMap {
    fn eval(&self, x: &Vector3<f64>) -> Result<Vector2<f64>>;
}

impl<F> ResidualMap for F
where
    F: Fn(&Vector3<f64>) -> Result<Vector2<f64>>,
{
    fn eval(&self, x: &Vector3<f64>) -> Result<Vector2<f64>> {
        self(x)
    }
}

/// (Re det F, Im det F) for a model at x = (Re k, Im k, λ).
pub struct ScatteringMap<'a> {
    pub model: &'a PotentialModel,
    pub grid: &'a RadialGrid,
}

impl ResidualMap for ScatteringMap<'_> {
    fn eval(&self, x: &Vector3<f64>) -> Result<Vector2<f64>> {
        let mut k = Complex64::new(x[0], x[1]);
        if k == Complex64::ZERO {
            k = Complex64::new(1e-9, 0.0);
        }
        let r = residual(self.model, k, x[2], self.grid)?;
        Ok(Vector2::new(r.det_f.re, r.det_f.im))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFlag {
    Regular,
    Start,
    BranchPoint,
    Boundary,
}

impl PointFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointFlag::Regular => "regular",
            PointFlag::Start => "start",
            PointFlag::BranchPoint => "branch_point",
            PointFlag::Boundary => "boundary",
        }
    }
}

/// One accepted point on a branch: position, oriented unit tangent,
/// converged residual norm and its role on the branch.
#[derive(Debug, Clone)]
pub struct ContinuationPoint {
    pub x: Vector3<f64>,
    pub tangent: Vector3<f64>,
    pub residual_norm: f64,
    pub flag: PointFlag,
}

impl ContinuationPoint {
    pub fn k(&self) -> Complex64 {
        Complex64::new(self.x[0], self.x[1])
    }

    pub fn lambda(&self) -> f64 {
        self.x[2]
    }
}

/// Ordered trace of one solution curve.
#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<ContinuationPoint>,
    pub branch_id: u32,
    /// (branch id, point index) this branch was switched from.
    pub parent: Option<(u32, usize)>,
}

#[derive(Debug, Clone, Copy)]
pub struct ContinuationOpts {
    pub h_min: f64,
    pub h_max: f64,
    /// Corrector tolerance on the residual norm.
    pub tol: f64,
    pub max_corrector: usize,
    pub max_points: usize,
    pub lambda_bounds: (f64, f64),
}

impl Default for ContinuationOpts {
    fn default() -> Self {
        ContinuationOpts {
            h_min: 1e-4,
            h_max: 1e-2,
            tol: 1e-6,
            max_corrector: 12,
            max_points: 20_000,
            lambda_bounds: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

impl ContinuationOpts {
    pub fn with_lambda_bounds(lo: f64, hi: f64) -> Self {
        ContinuationOpts {
            lambda_bounds: (lo, hi),
            ..Default::default()
        }
    }
}

/// Central-difference Jacobian of the residual map: rows are the
/// gradients of (Re det F, Im det F), columns the three coordinates.
/// Six map evaluations.
pub fn jacobian_map(map: &dyn ResidualMap, x: &Vector3<f64>) -> Result<Matrix2x3<f64>> {
    let mut j = Matrix2x3::zeros();
    for col in 0..3 {
        let step = 1e-6 * x[col].abs().max(1.0);
        let mut xp = *x;
        xp[col] += step;
        let mut xm = *x;
        xm[col] -= step;
        let gp = map.eval(&xp)?;
        let gm = map.eval(&xm)?;
        for row in 0..2 {
            j[(row, col)] = (gp[row] - gm[row]) / (2.0 * step);
        }
    }
    Ok(j)
}

/// Spec-shaped wrapper for the physical map.
pub fn jacobian(
    model: &PotentialModel,
    x: &Vector3<f64>,
    grid: &RadialGrid,
) -> Result<Matrix2x3<f64>> {
    jacobian_map(&ScatteringMap { model, grid }, x)
}

/// Unit null vector of the 2x3 Jacobian via the cross product of its
/// rows; None when the rows are (nearly) parallel, i.e. near a branch
/// point.
fn null_tangent(j: &Matrix2x3<f64>) -> Option<Vector3<f64>> {
    let r0 = Vector3::new(j[(0, 0)], j[(0, 1)], j[(0, 2)]);
    let r1 = Vector3::new(j[(1, 0)], j[(1, 1)], j[(1, 2)]);
    let cross = r0.cross(&r1);
    let scale = r0.norm() * r1.norm();
    if cross.norm() <= 1e-10 * scale.max(1e-300) {
        return None;
    }
    Some(cross / cross.norm())
}

/// Bifurcation test function: determinant of the Jacobian bordered with
/// the oriented tangent. Changes sign across a simple branch point.
pub fn bordered_det(j: &Matrix2x3<f64>, tangent: &Vector3<f64>) -> f64 {
    Matrix3::new(
        j[(0, 0)],
        j[(0, 1)],
        j[(0, 2)],
        j[(1, 0)],
        j[(1, 1)],
        j[(1, 2)],
        tangent[0],
        tangent[1],
        tangent[2],
    )
    .determinant()
}

/// Corrector: bordered Newton iterations from `x_pred` in the hyperplane
/// orthogonal to `tangent`. Returns the converged point and the residual
/// norm there.
fn correct(
    map: &dyn ResidualMap,
    x_pred: &Vector3<f64>,
    tangent: &Vector3<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vector3<f64>, f64)> {
    let mut x = *x_pred;
    let mut best_norm = f64::INFINITY;
    for iteration in 0..max_iter {
        let g = map.eval(&x)?;
        let g_norm = g.norm();
        if g_norm <= tol {
            return Ok((x, g_norm));
        }
        if g_norm > 1e3 * best_norm.max(1.0) {
            return Err(Error::CorrectorDiverged {
                iterations: iteration,
                residual: g_norm,
            });
        }
        best_norm = best_norm.min(g_norm);
        let j = jacobian_map(map, &x)?;
        let bordered = Matrix3::new(
            j[(0, 0)],
            j[(0, 1)],
            j[(0, 2)],
            j[(1, 0)],
            j[(1, 1)],
            j[(1, 2)],
            tangent[0],
            tangent[1],
            tangent[2],
        );
        let rhs = Vector3::new(-g[0], -g[1], 0.0);
        let delta = bordered.lu().solve(&rhs).ok_or(Error::CorrectorDiverged {
            iterations: iteration,
            residual: g_norm,
        })?;
        x += delta;
        // step placement keeps the corrector away from the k = 0 puncture
        if x.fixed_rows::<2>(0).norm() < 1e-9 {
            x += 1e-9 * *tangent;
        }
    }
    let g = map.eval(&x)?;
    if g.norm() <= tol {
        Ok((x, g.norm()))
    } else {
        Err(Error::CorrectorDiverged {
            iterations: max_iter,
            residual: g.norm(),
        })
    }
}

/// One predictor-corrector step, also returning the bifurcation test
/// value at the new point so tracing does not pay for a second Jacobian.
fn step_with_tau(
    map: &dyn ResidualMap,
    current: &ContinuationPoint,
    h: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(ContinuationPoint, f64)> {
    let x_pred = current.x + h * current.tangent;
    let (x, residual_norm) = correct(map, &x_pred, &current.tangent, tol, max_iter)?;
    let j = jacobian_map(map, &x)?;
    let tangent = match null_tangent(&j) {
        Some(t) => {
            if t.dot(&current.tangent) >= 0.0 {
                t
            } else {
                -t
            }
        }
        // rows near-parallel (branch point vicinity): keep the incoming
        // direction rather than amplifying noise
        None => current.tangent,
    };
    let point = ContinuationPoint {
        x,
        tangent,
        residual_norm,
        flag: PointFlag::Regular,
    };
    let tau = bordered_det(&j, &point.tangent);
    Ok((point, tau))
}

/// One predictor-corrector step of length `h` from a converged point;
/// returns the new point with its oriented tangent.
pub fn predict_correct_map(
    map: &dyn ResidualMap,
    current: &ContinuationPoint,
    h: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ContinuationPoint> {
    Ok(step_with_tau(map, current, h, tol, max_iter)?.0)
}

/// Spec-shaped wrapper for the physical map.
pub fn predict_correct(
    model: &PotentialModel,
    current: &ContinuationPoint,
    h: f64,
    grid: &RadialGrid,
    tol: f64,
    max_iter: usize,
) -> Result<ContinuationPoint> {
    predict_correct_map(&ScatteringMap { model, grid }, current, h, tol, max_iter)
}

/// Locate a branch point between two consecutive converged points by
/// secant refinement of the bordered determinant along the arc. Returns
/// None when the test function keeps its sign. On refinement trouble the
/// best available interior point is returned, still flagged as a branch
/// point; it is within one step of the crossing.
pub fn detect_branch_point_map(
    map: &dyn ResidualMap,
    prev: &ContinuationPoint,
    next: &ContinuationPoint,
    tol: f64,
    max_iter: usize,
) -> Result<Option<ContinuationPoint>> {
    let tau_prev = bordered_det(&jacobian_map(map, &prev.x)?, &prev.tangent);
    let tau_next = bordered_det(&jacobian_map(map, &next.x)?, &next.tangent);
    if tau_prev * tau_next >= 0.0 {
        return Ok(None);
    }
    Ok(Some(refine_branch_point(
        map, prev, next, tau_prev, tau_next, tol, max_iter,
    )))
}

/// Secant refinement of the bifurcation test function along the arc
/// between two points with opposite τ.
fn refine_branch_point(
    map: &dyn ResidualMap,
    prev: &ContinuationPoint,
    next: &ContinuationPoint,
    tau_prev: f64,
    tau_next: f64,
    tol: f64,
    max_iter: usize,
) -> ContinuationPoint {
    let h_total = (next.x - prev.x).norm();

    // walk along the curve from `prev` by arclength s, correcting onto
    // the branch, and secant the bordered determinant in s
    let mut s_lo = 0.0;
    let mut tau_lo = tau_prev;
    let mut s_hi = h_total;
    let mut tau_hi = tau_next;
    let mut best: Option<(f64, ContinuationPoint)> = None;

    for _ in 0..20 {
        if (s_hi - s_lo).abs() <= 1e-4 * h_total.max(1.0) && best.is_some() {
            break;
        }
        // secant estimate, guarded to stay inside the bracket
        let mut s_new = s_lo - tau_lo * (s_hi - s_lo) / (tau_hi - tau_lo);
        let margin = 0.05 * (s_hi - s_lo);
        if !(s_lo + margin..=s_hi - margin).contains(&s_new) {
            s_new = 0.5 * (s_lo + s_hi);
        }
        let Ok((p, tau)) = step_with_tau(map, prev, s_new, tol, max_iter) else {
            break;
        };
        match &best {
            Some((tau_best, _)) if tau.abs() >= *tau_best => {}
            _ => best = Some((tau.abs(), p.clone())),
        }
        if tau * tau_lo <= 0.0 {
            s_hi = s_new;
            tau_hi = tau;
        } else {
            s_lo = s_new;
            tau_lo = tau;
        }
    }

    match best {
        Some((_, mut p)) => {
            p.flag = PointFlag::BranchPoint;
            p
        }
        None => {
            // refinement never produced a point; fall back to the nearer
            // endpoint of the bracketing pair
            let mut p = if tau_prev.abs() <= tau_next.abs() {
                prev.clone()
            } else {
                next.clone()
            };
            p.flag = PointFlag::BranchPoint;
            p
        }
    }
}

/// Spec-shaped wrapper for the physical map.
pub fn detect_branch_point(
    prev: &ContinuationPoint,
    next: &ContinuationPoint,
    model: &PotentialModel,
    grid: &RadialGrid,
) -> Result<Option<ContinuationPoint>> {
    detect_branch_point_map(&ScatteringMap { model, grid }, prev, next, 1e-6, 12)
}

/// Tangent directions of the branch crossing a simple branch point,
/// both orientations.
///
/// The two-dimensional null space {φ1, φ2} of the Jacobian comes from the
/// eigenvectors of JᵀJ; the left null vector ψ from J Jᵀ. Writing a branch
/// direction as t = α φ1 + β φ2, the second-order expansion of G = 0 along
/// the solution set gives the algebraic branching equation
///
///   a α² + 2b αβ + c β² = 0,
///   a = ψᵀ G_xx[φ1, φ1],  b = ψᵀ G_xx[φ1, φ2],  c = ψᵀ G_xx[φ2, φ2],
///
/// whose two real root ratios are the tangents of the two curves through
/// the point. The one parallel to the incoming tangent is the branch
/// already being traced; the other is returned. If the quadratic
/// degenerates numerically, the null direction orthogonal to the incoming
/// tangent is used instead (exact for the symmetric threshold crossings
/// of the scattering problem).
pub fn switch_branch_map(
    map: &dyn ResidualMap,
    bp: &ContinuationPoint,
) -> Result<Vec<Vector3<f64>>> {
    let j = jacobian_map(map, &bp.x)?;
    // right singular structure from JᵀJ (3x3 symmetric)
    let jtj = j.transpose() * j;
    let eig = nalgebra::SymmetricEigen::new(jtj);
    // ascending by eigenvalue
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[p].partial_cmp(&eig.eigenvalues[q]).unwrap());
    let sigma = |idx: usize| eig.eigenvalues[order[idx]].max(0.0).sqrt();
    if sigma(1) > 1e-3 * sigma(2).max(1e-300) {
        return Err(Error::NullSpaceRank {
            sigma1: sigma(2),
            sigma2: sigma(1),
        });
    }
    let phi1: Vector3<f64> = eig.eigenvectors.column(order[0]).into();
    let phi2: Vector3<f64> = eig.eigenvectors.column(order[1]).into();
    // left null vector from JJᵀ (2x2 symmetric)
    let jjt = j * j.transpose();
    let left = nalgebra::SymmetricEigen::new(jjt);
    let lidx = if left.eigenvalues[0] <= left.eigenvalues[1] {
        0
    } else {
        1
    };
    let psi: Vector2<f64> = left.eigenvectors.column(lidx).into();

    // second directional derivatives ψᵀ G_xx[u, v] by central differences
    let second = |u: &Vector3<f64>, v: &Vector3<f64>| -> Result<f64> {
        let delta = 1e-4;
        let q = if u == v {
            let gp = map.eval(&(bp.x + delta * u))?;
            let g0 = map.eval(&bp.x)?;
            let gm = map.eval(&(bp.x - delta * u))?;
            (gp - 2.0 * g0 + gm) / (delta * delta)
        } else {
            let gpp = map.eval(&(bp.x + delta * (u + v)))?;
            let gpm = map.eval(&(bp.x + delta * (u - v)))?;
            let gmp = map.eval(&(bp.x - delta * (u - v)))?;
            let gmm = map.eval(&(bp.x - delta * (u + v)))?;
            (gpp - gpm - gmp + gmm) / (4.0 * delta * delta)
        };
        Ok(psi.dot(&q))
    };
    let a = second(&phi1, &phi1)?;
    let b = second(&phi1, &phi2)?;
    let c = second(&phi2, &phi2)?;

    let disc = b * b - a * c;
    let scale = a.abs().max(b.abs()).max(c.abs());
    let mut crossing: Option<Vector3<f64>> = None;
    if disc > 1e-8 * scale * scale && scale > 0.0 {
        // two real directions α:β; pick the one not parallel to the
        // incoming tangent
        let sqrt_disc = disc.sqrt();
        let candidates = if a.abs() >= c.abs() {
            // solve a r² + 2b r + c = 0 for r = α/β
            [(-b + sqrt_disc) / a, (-b - sqrt_disc) / a].map(|r| (r * phi1 + phi2).normalize())
        } else {
            // solve c s² + 2b s + a = 0 for s = β/α
            [(-b + sqrt_disc) / c, (-b - sqrt_disc) / c].map(|s| (phi1 + s * phi2).normalize())
        };
        if candidates.iter().all(|t| t.iter().all(|v| v.is_finite())) {
            let alignment = |t: &Vector3<f64>| t.dot(&bp.tangent).abs();
            crossing = Some(if alignment(&candidates[0]) <= alignment(&candidates[1]) {
                candidates[0]
            } else {
                candidates[1]
            });
        }
    }
    let crossing = match crossing {
        Some(t) => t,
        None => {
            // degenerate or ill-scaled quadratic: orthogonal complement of
            // the incoming tangent inside the null plane
            let t_in = bp.tangent;
            let p1 = phi1 - t_in.dot(&phi1) * t_in;
            let p2 = phi2 - t_in.dot(&phi2) * t_in;
            let best = if p1.norm() >= p2.norm() { p1 } else { p2 };
            if best.norm() < 1e-12 {
                return Err(Error::NullSpaceRank {
                    sigma1: sigma(2),
                    sigma2: sigma(1),
                });
            }
            best.normalize()
        }
    };
    Ok(vec![crossing, -crossing])
}

/// Spec-shaped wrapper for the physical map.
pub fn switch_branch(
    bp: &ContinuationPoint,
    model: &PotentialModel,
    grid: &RadialGrid,
) -> Result<Vec<Vector3<f64>>> {
    switch_branch_map(&ScatteringMap { model, grid }, bp)
}

/// Trace one branch from a converged start point with a given initial
/// tangent. Step length adapts within [h_min, h_max]: three fast
/// corrector successes double it, a failure halves it; the trace stops at
/// the λ bounds, the point budget or step underflow, flagging the final
/// point as the boundary.
pub fn trace_from(
    map: &dyn ResidualMap,
    start: ContinuationPoint,
    opts: &ContinuationOpts,
    branch_id: u32,
    parent: Option<(u32, usize)>,
) -> Branch {
    let mut points = vec![start];
    let mut h = (1e-3f64).clamp(opts.h_min, opts.h_max);
    let mut fast_successes = 0usize;
    let (lam_lo, lam_hi) = opts.lambda_bounds;
    // τ at the last accepted point; None until first computed
    let mut prev_tau: Option<f64> = None;

    loop {
        if points.len() >= opts.max_points {
            points.last_mut().unwrap().flag = PointFlag::Boundary;
            break;
        }
        let current = points.last().unwrap().clone();
        match step_with_tau(map, &current, h, opts.tol, opts.max_corrector) {
            Ok((next, tau)) => {
                // branch point passed between current and next?
                if let Some(tp) = prev_tau {
                    if tp * tau < 0.0 {
                        let bp = refine_branch_point(
                            map,
                            &current,
                            &next,
                            tp,
                            tau,
                            opts.tol,
                            opts.max_corrector,
                        );
                        points.push(bp);
                    }
                }
                prev_tau = Some(tau);
                let lambda = next.x[2];
                points.push(next);
                if lambda < lam_lo || lambda > lam_hi {
                    points.last_mut().unwrap().flag = PointFlag::Boundary;
                    break;
                }
                fast_successes += 1;
                if fast_successes >= 3 {
                    h = (2.0 * h).min(opts.h_max);
                    fast_successes = 0;
                }
            }
            Err(_) => {
                fast_successes = 0;
                h *= 0.5;
                if h < opts.h_min {
                    points.last_mut().unwrap().flag = PointFlag::Boundary;
                    break;
                }
            }
        }
    }
    Branch {
        points,
        branch_id,
        parent,
    }
}

/// Convert a polished root into a continuation start point and trace in
/// the λ direction given by `direction` (±1).
pub fn trace_branch(
    model: &PotentialModel,
    start: &RootResult,
    lambda0: f64,
    direction: f64,
    grid: &RadialGrid,
    opts: &ContinuationOpts,
) -> Result<Branch> {
    let map = ScatteringMap { model, grid };
    trace_branch_map(&map, start, lambda0, direction, opts, 0, None)
}

pub fn trace_branch_map(
    map: &dyn ResidualMap,
    start: &RootResult,
    lambda0: f64,
    direction: f64,
    opts: &ContinuationOpts,
    branch_id: u32,
    parent: Option<(u32, usize)>,
) -> Result<Branch> {
    let x0 = Vector3::new(start.k.re, start.k.im, lambda0);
    let g0 = map.eval(&x0)?;
    let j = jacobian_map(map, &x0)?;
    let mut tangent = null_tangent(&j).ok_or(Error::NullSpaceRank {
        sigma1: 1.0,
        sigma2: 1.0,
    })?;
    // orient the initial tangent so λ moves in the requested direction
    if tangent[2] * direction < 0.0 {
        tangent = -tangent;
    }
    let start_point = ContinuationPoint {
        x: x0,
        tangent,
        residual_norm: g0.norm(),
        flag: PointFlag::Start,
    };
    Ok(trace_from(map, start_point, opts, branch_id, parent))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec3(a: f64, b: f64, c: f64) -> Vector3<f64> {
        Vector3::new(a, b, c)
    }

    /// G(x) = (x0² - x2, x1): solution set is the parabola x0² = x2 in
    /// the x1 = 0 plane.
    fn parabola_map(x: &Vector3<f64>) -> Result<Vector2<f64>> {
        Ok(Vector2::new(x[0] * x[0] - x[2], x[1]))
    }

    /// G(x) = (x0² - x2·x0, x1): two lines x0 = 0 and x0 = x2 crossing at
    /// the origin, a simple branch point.
    fn transcritical_map(x: &Vector3<f64>) -> Result<Vector2<f64>> {
        Ok(Vector2::new(x[0] * x[0] - x[2] * x[0], x[1]))
    }

    /// G(x) = (x0 - x2, x1): straight-line solution set.
    fn line_map(x: &Vector3<f64>) -> Result<Vector2<f64>> {
        Ok(Vector2::new(x[0] - x[2], x[1]))
    }

    #[test]
    fn jacobian_matches_closed_form() {
        let x = vec3(1.3, -0.4, 0.7);
        let j = jacobian_map(&parabola_map, &x).unwrap();
        let exact = Matrix2x3::new(2.0 * x[0], 0.0, -1.0, 0.0, 1.0, 0.0);
        assert!((j - exact).norm() < 1e-6);
    }

    #[test]
    fn predictor_is_exact_on_a_line() {
        let map = line_map;
        let t = vec3(1.0, 0.0, 1.0) / 2.0f64.sqrt();
        let start = ContinuationPoint {
            x: vec3(0.5, 0.0, 0.5),
            tangent: t,
            residual_norm: 0.0,
            flag: PointFlag::Start,
        };
        let next = predict_correct_map(&map, &start, 1e-2, 1e-12, 4).unwrap();
        assert!(next.residual_norm <= 1e-12);
        assert!((next.x[0] - next.x[2]).abs() < 1e-12);
        assert!(((next.x - start.x).norm() - 1e-2).abs() < 1e-9);
    }

    #[test]
    fn traces_a_parabola_through_the_fold() {
        // start on the branch at x2 = 1, x0 = -1, heading toward the fold
        // at the origin and through to positive x0
        let map = parabola_map;
        let j = jacobian_map(&map, &vec3(-1.0, 0.0, 1.0)).unwrap();
        let mut t = null_tangent(&j).unwrap();
        if t[2] > 0.0 {
            t = -t;
        }
        let start = ContinuationPoint {
            x: vec3(-1.0, 0.0, 1.0),
            tangent: t,
            residual_norm: 0.0,
            flag: PointFlag::Start,
        };
        let opts = ContinuationOpts {
            max_points: 2000,
            h_max: 5e-2,
            ..Default::default()
        };
        let branch = trace_from(&map, start, &opts, 0, None);
        let last = branch.points.last().unwrap();
        // passed through the fold: x0 ended positive with λ growing again
        assert!(
            last.x[0] > 0.5,
            "end = {:?} after {} points",
            last.x,
            branch.points.len()
        );
        for p in &branch.points {
            assert!(p.residual_norm <= 1e-6);
        }
        // orientation is preserved along the way
        for w in branch.points.windows(2) {
            assert!(w[0].tangent.dot(&w[1].tangent) > 0.0);
        }
    }

    #[test]
    fn detects_and_locates_transcritical_branch_point() {
        let map = transcritical_map;
        // trace the x0 = 0 line upward in λ through the origin
        let start = ContinuationPoint {
            x: vec3(0.0, 0.0, -0.5),
            tangent: vec3(0.0, 0.0, 1.0),
            residual_norm: 0.0,
            flag: PointFlag::Start,
        };
        let opts = ContinuationOpts {
            lambda_bounds: (-1.0, 0.5),
            h_max: 1e-2,
            max_points: 400,
            ..Default::default()
        };
        let branch = trace_from(&map, start, &opts, 0, None);
        let bp: Vec<_> = branch
            .points
            .iter()
            .filter(|p| p.flag == PointFlag::BranchPoint)
            .collect();
        assert_eq!(bp.len(), 1, "branch points: {bp:?}");
        assert!(bp[0].x.norm() < 1e-6, "bp at {:?}", bp[0].x);
    }

    #[test]
    fn switch_recovers_crossing_tangent() {
        let map = transcritical_map;
        let bp = ContinuationPoint {
            x: vec3(0.0, 0.0, 0.0),
            tangent: vec3(0.0, 0.0, 1.0),
            residual_norm: 0.0,
            flag: PointFlag::BranchPoint,
        };
        let dirs = switch_branch_map(&map, &bp).unwrap();
        assert_eq!(dirs.len(), 2);
        // crossing branch x0 = x2 has tangent (1, 0, 1)/sqrt(2)
        let exact = vec3(1.0, 0.0, 1.0) / 2.0f64.sqrt();
        let angle = dirs[0].dot(&exact).abs().min(1.0).acos();
        assert!(
            angle < 1e-4 || (std::f64::consts::PI - angle) < 1e-4,
            "angle = {angle}, dir = {:?}",
            dirs[0]
        );
        assert!((dirs[0] + dirs[1]).norm() < 1e-14);
    }

    #[test]
    fn switch_rejects_regular_points() {
        let map = parabola_map;
        let p = ContinuationPoint {
            x: vec3(1.0, 0.0, 1.0),
            tangent: vec3(0.0, 0.0, 1.0),
            residual_norm: 0.0,
            flag: PointFlag::BranchPoint,
        };
        assert!(matches!(
            switch_branch_map(&map, &p),
            Err(Error::NullSpaceRank { .. })
        ));
    }

    #[test]
    fn no_branch_point_on_regular_segment() {
        let map = parabola_map;
        let j = jacobian_map(&map, &vec3(1.0, 0.0, 1.0)).unwrap();
        let t = null_tangent(&j).unwrap();
        let a = ContinuationPoint {
            x: vec3(1.0, 0.0, 1.0),
            tangent: t,
            residual_norm: 0.0,
            flag: PointFlag::Regular,
        };
        let b = predict_correct_map(&map, &a, 1e-2, 1e-10, 8).unwrap();
        assert!(detect_branch_point_map(&map, &a, &b, 1e-10, 8)
            .unwrap()
            .is_none());
    }

    #[test]
    fn reversing_returns_to_the_start() {
        let map = parabola_map;
        let j = jacobian_map(&map, &vec3(-1.0, 0.0, 1.0)).unwrap();
        let t = null_tangent(&j).unwrap();
        let start = ContinuationPoint {
            x: vec3(-1.0, 0.0, 1.0),
            tangent: t,
            residual_norm: 0.0,
            flag: PointFlag::Start,
        };
        let mut forward = vec![start.clone()];
        for _ in 0..20 {
            let next = predict_correct_map(&map, forward.last().unwrap(), 1e-3, 1e-10, 8).unwrap();
            forward.push(next);
        }
        let mut back = forward.last().unwrap().clone();
        back.tangent = -back.tangent;
        let mut reversed = vec![back];
        for _ in 0..20 {
            let next = predict_correct_map(&map, reversed.last().unwrap(), 1e-3, 1e-10, 8).unwrap();
            reversed.push(next);
        }
        assert!(
            (reversed.last().unwrap().x - start.x).norm() <= 1e-4,
            "returned to {:?}",
            reversed.last().unwrap().x
        );
    }

    #[test]
    fn arclength_stays_within_step_bounds() {
        let map = parabola_map;
        let j = jacobian_map(&map, &vec3(-1.0, 0.0, 1.0)).unwrap();
        let mut t = null_tangent(&j).unwrap();
        if t[2] > 0.0 {
            t = -t;
        }
        let start = ContinuationPoint {
            x: vec3(-1.0, 0.0, 1.0),
            tangent: t,
            residual_norm: 0.0,
            flag: PointFlag::Start,
        };
        let opts = ContinuationOpts {
            max_points: 300,
            ..Default::default()
        };
        let branch = trace_from(&map, start, &opts, 0, None);
        for w in branch.points.windows(2) {
            if w[1].flag == PointFlag::BranchPoint || w[0].flag == PointFlag::BranchPoint {
                continue;
            }
            let step = (w[1].x - w[0].x).norm();
            assert!(
                step <= 1.5 * opts.h_max && step >= 0.25 * opts.h_min,
                "step = {step}"
            );
        }
    }
}
