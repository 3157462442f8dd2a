//! Outward propagation of the coupled-channel solution matrix at complex
//! wavenumber, with Johnson-style renormalization: the recursion carries
//! the ratio R_n = F_{n+1} F_n^{-1} of consecutive Numerov-transformed
//! solution matrices instead of the solution itself, so exponentially
//! growing closed-channel components never overflow.
//!
//! With T_n = (h²/12) W(r_n) and W(r) = 2μ V(r, λ) + diag(l_i(l_i+1)/r²)
//! - k² I, the Numerov recursion for Ψ'' = W Ψ reads
//!
//!   F_{n+1} = U_n F_n - F_{n-1},   F_n = (I - T_n) Ψ_n,
//!   U_n = (2I + 10 T_n)(I - T_n)^{-1}.
//!
//! The ratio recursion R_n = U_n - R_{n-1}^{-1} is invariant under any
//! right multiplier of the initial data, so the returned samples carry an
//! arbitrary (and irrelevant) normalization C; the S-matrix extraction
//! eliminates it. The ratios are carried as deviations D_n = R_n - I
//! (see inside), which keeps rounding relative to the physics instead of
//! relative to the O(1) ratio entries.
//!
//! The recursion is not launched at the origin: the Numerov weights
//! assume h²·W small, which fails near the centrifugal singularity
//! (T ~ l(l+1)/12 at the first node) and leaves an h-independent trace of
//! the irregular solution large enough to bury deeply bound l > 0 states.
//! Instead the regular solution matrix is expanded in a Frobenius series
//! around r = 0 and the recursion starts from two series-evaluated nodes
//! at r ≈ 0.1, where the weights are harmless.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ScaledProduct};
use crate::potentials::PotentialModel;

/// Uniform radial grid with nodes r_j = j·h, j = 0..=n_points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    pub r_max: f64,
    pub n_points: usize,
}

impl RadialGrid {
    pub fn new(r_max: f64, n_points: usize) -> Result<Self> {
        if !(r_max > 0.0) {
            return Err(Error::Config {
                field: "grid.r_max".into(),
                message: format!("r_max must be positive, got {r_max}"),
            });
        }
        if n_points < 16 {
            return Err(Error::Config {
                field: "grid.n_points".into(),
                message: format!("need at least 16 points, got {n_points}"),
            });
        }
        Ok(RadialGrid { r_max, n_points })
    }

    /// Grid used throughout the worked examples: 4096 points on [0, 4.6].
    pub fn default_paper() -> Self {
        RadialGrid {
            r_max: 4.6,
            n_points: 4096,
        }
    }

    pub fn h(&self) -> f64 {
        self.r_max / self.n_points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }

    /// Same span with the point count scaled by `factor` (convergence
    /// studies).
    pub fn refined(&self, factor: usize) -> Self {
        RadialGrid {
            r_max: self.r_max,
            n_points: self.n_points * factor,
        }
    }
}

/// Solution matrix sampled at the two outermost grid nodes, both beyond
/// the potential range. Columns are independent solutions, rows channels.
#[derive(Debug, Clone)]
pub struct AsymptoticSample {
    pub r1: f64,
    pub r2: f64,
    pub psi1: CMatrix,
    pub psi2: CMatrix,
}

/// Tail of a propagated solution plus the determinant of the solution
/// matrix at the inner tail node in the launch normalization.
///
/// The returned tail itself is renormalized (an arbitrary right factor C),
/// which is exactly what S-matrix extraction wants, but it erases the
/// k-dependence of det Ψ - and det Ψ(r) vanishes k-wise exponentially
/// close to every bound state, so anything built from the normalized tail
/// has near-cancelling pole/zero pairs there. `det_scale` carries the
/// erased factor, accumulated stepwise as det F_launch · ∏ det R_n, so
/// callers can undo the normalization without ever materializing the
/// (overflowing) solution itself.
#[derive(Debug, Clone)]
pub struct PropagatedTail {
    pub nodes: Vec<(f64, CMatrix)>,
    pub det_scale: ScaledProduct,
}

/// Regular-solution matrix from the Frobenius expansion about the origin:
/// column j carries the solution behaving as r^{l_j+1} e_j, with the
/// coupling-induced components in the other channels. Valid while the
/// potential equals its power series (always for the Gaussian family;
/// inside the well for the square well).
///
/// Writing column j as Ψ_i(r) = Σ_m a_m[i] r^{l_j+1+m}, the ODE gives
///
///   [(σ+m)(σ+m-1) - l_i(l_i+1)] a_m[i]
///       = -k² a_{m-2}[i] + Σ_s Σ_q u_s[i,q] a_{m-2-2s}[q],
///
/// with σ = l_j + 1 and 2μ V(r) = Σ_s u_s r^{2s}. The bracket vanishes at
/// the channel's own regular power, where the coefficient is the free
/// normalization δ_ij. For even |l_i - l_j| ≥ 2 couplings the resonant
/// coefficient would carry a logarithm; it is dropped, which is exact for
/// the odd-|Δl| systems exercised here and a small-r₀ approximation
/// otherwise.
fn series_solution(
    model: &PotentialModel,
    k: Complex64,
    strengths: &nalgebra::DMatrix<f64>,
    r: f64,
) -> CMatrix {
    const MAX_TERMS: usize = 60;
    let n = model.channels.n();
    let mu2 = 2.0 * model.channels.mu;
    let profile = model.profile_series(MAX_TERMS / 2 + 1);
    let k2 = k * k;
    let mut psi = CMatrix::zeros(n);
    for j in 0..n {
        let sigma = model.channels.l_values[j] as f64 + 1.0;
        // a[m][i], m-th coefficient in channel i
        let mut coeffs: Vec<Vec<Complex64>> = Vec::with_capacity(MAX_TERMS);
        for m in 0..MAX_TERMS {
            let mut a_m = vec![Complex64::ZERO; n];
            for i in 0..n {
                let li = model.channels.l_values[i] as f64;
                let p = sigma + m as f64;
                let bracket = p * (p - 1.0) - li * (li + 1.0);
                let mut rhs = Complex64::ZERO;
                if m >= 2 {
                    rhs -= k2 * coeffs[m - 2][i];
                    let mut s = 0usize;
                    while 2 + 2 * s <= m {
                        let src = &coeffs[m - 2 - 2 * s];
                        let u = -mu2 * profile[s];
                        for q in 0..n {
                            rhs += u * strengths[(i, q)] * src[q];
                        }
                        s += 1;
                    }
                }
                a_m[i] = if bracket.abs() < 1e-9 {
                    // free coefficient at the channel's own regular power;
                    // resonant same-parity sources are dropped
                    if m == 0 && i == j {
                        Complex64::ONE
                    } else {
                        Complex64::ZERO
                    }
                } else {
                    rhs / bracket
                };
            }
            coeffs.push(a_m);
        }
        for i in 0..n {
            let mut acc = Complex64::ZERO;
            // Horner in r, highest power first
            for m in (0..MAX_TERMS).rev() {
                acc = acc * r + coeffs[m][i];
            }
            psi[(i, j)] = acc * Complex64::from(r).powu(model.channels.l_values[j] + 1);
        }
    }
    psi
}

/// Scratch buffers reused across the propagation loop.
struct Workspace {
    t: CMatrix,
    lhs: CMatrix,
    rhs: CMatrix,
    u: CMatrix,
    dev: CMatrix,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            t: CMatrix::zeros(n),
            lhs: CMatrix::zeros(n),
            rhs: CMatrix::zeros(n),
            u: CMatrix::zeros(n),
            dev: CMatrix::zeros(n),
        }
    }
}

/// Propagate from the origin and return samples at the last two nodes.
pub fn propagate(
    model: &PotentialModel,
    k: Complex64,
    lambda: f64,
    grid: &RadialGrid,
) -> Result<AsymptoticSample> {
    let tail = propagate_tail(model, k, lambda, grid, 2)?;
    let (r1, psi1) = tail.nodes[0].clone();
    let (r2, psi2) = tail.nodes[1].clone();
    Ok(AsymptoticSample { r1, r2, psi1, psi2 })
}

/// Propagate and return the solution matrix at the last `m` grid nodes
/// (2 ≤ m ≤ n_points), all sharing one normalization. The longer tails
/// feed derivative-based cross checks.
pub fn propagate_tail(
    model: &PotentialModel,
    k: Complex64,
    lambda: f64,
    grid: &RadialGrid,
    m: usize,
) -> Result<PropagatedTail> {
    if k == Complex64::ZERO {
        return Err(Error::Domain("propagation requires k != 0"));
    }
    if k.im.abs() * grid.r_max > 700.0 {
        return Err(Error::Overflow(k.im.abs() * grid.r_max));
    }
    assert!(m >= 2 && m <= grid.n_points, "tail length out of range");

    let n = model.channels.n();
    let npts = grid.n_points;
    let h = grid.h();
    let h2_12 = h * h / 12.0;
    let two_mu = 2.0 * model.channels.mu;
    let k2 = k * k;
    let strengths = model.strength_matrix(lambda);
    let centrifugal: Vec<f64> = model
        .channels
        .l_values
        .iter()
        .map(|&l| (l * (l + 1)) as f64)
        .collect();

    let mut ws = Workspace::new(n);
    // T_n = (h²/12)(-2μ p(r_n) Λ + diag(l(l+1)/r_n²) - k² I)
    let fill_t = |t: &mut CMatrix, r: f64| {
        let p = model.radial_profile(r);
        for i in 0..n {
            for j in 0..n {
                let mut w = Complex64::new(-two_mu * p * strengths[(i, j)], 0.0);
                if i == j {
                    w += centrifugal[i] / (r * r) - k2;
                }
                t[(i, j)] = h2_12 * w;
            }
        }
    };

    // Launch radius for the series seed: far enough out that the Numerov
    // weights are small, well inside the potential (and inside a square
    // well's discontinuity, where the power series is valid).
    let mut r0_target = (0.1_f64).min(grid.r_max / 8.0);
    if let crate::potentials::PotentialFamily::SquareWell { radius } = model.family {
        r0_target = r0_target.min(0.5 * radius);
    }
    let n0 = ((r0_target / h).floor() as usize).clamp(2, npts / 2);
    assert!(
        m <= npts - n0,
        "tail length {m} too long for a launch at node {n0}"
    );

    let mut det_scale = ScaledProduct::one();

    // The recursion runs in deviation form. R_n and U_n hover near I and
    // 2I, so carrying them directly quantizes their physics-bearing small
    // parts at ulp(1) each step - an error that accumulates into a smooth
    // phase drift across long grids. With D_n = R_n - I and
    // U_n = 2I + V_n, V_n = 12 T_n (I - T_n)^{-1}, the identical algebra
    //
    //   D_n = V_n + D_{n-1}(I + D_{n-1})^{-1}
    //
    // keeps every rounding relative to the deviations themselves. The
    // factors in the second term commute (both are functions of D).

    // seed deviation D_{n0-1} = (F_{n0} - F_{n0-1}) F_{n0-1}^{-1}
    {
        let psi_a = series_solution(model, k, &strengths, grid.node(n0 - 1));
        let psi_b = series_solution(model, k, &strengths, grid.node(n0));
        let mut f_a = CMatrix::zeros(n);
        let mut f_b = CMatrix::zeros(n);
        for (node, psi, f) in [(n0 - 1, &psi_a, &mut f_a), (n0, &psi_b, &mut f_b)] {
            fill_t(&mut ws.t, grid.node(node));
            for i in 0..n {
                for j in 0..n {
                    let id = if i == j {
                        Complex64::ONE
                    } else {
                        Complex64::ZERO
                    };
                    ws.lhs[(i, j)] = id - ws.t[(i, j)];
                }
            }
            f.mul_into(&ws.lhs, psi);
        }
        det_scale.mul(f_b.det());
        let mut f_diff = CMatrix::zeros(n);
        f_diff.sub_into(&f_b, &f_a);
        let mut f_a_inv = CMatrix::zeros(n);
        f_a.inverse_into(&mut f_a_inv)
            .map_err(|_| Error::SingularPropagation { node: n0 - 1 })?;
        ws.dev.mul_into(&f_diff, &f_a_inv);
    }

    // deviations D_n = R_n - I for the tail window
    let first_tail_node = npts + 1 - m;
    let mut tail_devs: Vec<CMatrix> = Vec::with_capacity(m - 1);

    for node in n0..npts {
        fill_t(&mut ws.t, grid.node(node));
        // X = D_{n-1}(I + D_{n-1})^{-1}, with det(R_{n-1}) as a byproduct
        for i in 0..n {
            for j in 0..n {
                let id = if i == j {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                ws.lhs[(i, j)] = id + ws.dev[(i, j)];
            }
        }
        let det_prev = ws
            .lhs
            .solve_into(&ws.dev, &mut ws.u)
            .map_err(|_| Error::SingularPropagation { node })?;
        if node > n0 {
            det_scale.mul(det_prev);
        }
        // V = 12 T (I - T)^{-1}
        for i in 0..n {
            for j in 0..n {
                let t = ws.t[(i, j)];
                let id = if i == j {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                ws.lhs[(i, j)] = id - t;
                ws.rhs[(i, j)] = 12.0 * t;
            }
        }
        ws.lhs
            .solve_into(&ws.rhs, &mut ws.dev)
            .map_err(|_| Error::SingularPropagation { node })?;
        ws.dev.add_assign(&ws.u);
        if node >= first_tail_node {
            tail_devs.push(ws.dev.clone());
        }
    }
    // det of the final stored ratio is not part of det Ψ(r1): the product
    // runs over R_{n0}..R_{npts-2}, i.e. everything up to the inner tail
    // node with m = 2.

    // Reconstruct F on the tail from F_{first} = I, then undo the Numerov
    // transform: Ψ_n = (I - T_n)^{-1} F_n.
    let mut out = Vec::with_capacity(m);
    let mut f = CMatrix::identity(n);
    for (offset, node) in (first_tail_node..=npts).enumerate() {
        if offset > 0 {
            // F_{n+1} = (I + D_n) F_n
            let mut next = CMatrix::zeros(n);
            next.mul_into(&tail_devs[offset - 1], &f);
            next.add_assign(&f);
            f = next;
        }
        fill_t(&mut ws.t, grid.node(node));
        for i in 0..n {
            for j in 0..n {
                let t = ws.t[(i, j)];
                let id = if i == j {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                ws.lhs[(i, j)] = id - t;
            }
        }
        let mut psi = CMatrix::zeros(n);
        ws.lhs
            .solve_into(&f, &mut psi)
            .map_err(|_| Error::SingularPropagation { node })?;
        out.push((grid.node(node), psi));
    }
    Ok(PropagatedTail {
        nodes: out,
        det_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{coupling_matrix, ChannelSet, PotentialFamily};
    use nalgebra::DMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn free_model(l: u32) -> PotentialModel {
        PotentialModel::new(
            ChannelSet::new(vec![l], 1.0).unwrap(),
            DMatrix::from_row_slice(1, 1, &[0.0]),
            PotentialFamily::Gaussian,
            (0, 0),
        )
        .unwrap()
    }

    /// Plain (non-renormalized) Numerov with explicit seed, for
    /// cross-checking the ratio recursion. Returns Ψ at the last two nodes.
    fn propagate_direct(
        model: &PotentialModel,
        k: Complex64,
        lambda: f64,
        grid: &RadialGrid,
        seed_scale: f64,
    ) -> (CMatrix, CMatrix) {
        let n = model.channels.n();
        let h = grid.h();
        let h2_12 = h * h / 12.0;
        let two_mu = 2.0 * model.channels.mu;
        let strengths = model.strength_matrix(lambda);
        let t_at = |r: f64| {
            let p = model.radial_profile(r);
            let mut t = CMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    let mut w = Complex64::new(-two_mu * p * strengths[(i, j)], 0.0);
                    if i == j {
                        let l = model.channels.l_values[i] as f64;
                        w += l * (l + 1.0) / (r * r) - k * k;
                    }
                    t[(i, j)] = h2_12 * w;
                }
            }
            t
        };
        // F_0 = 0, F_1 = (I - T_1) diag(seed_scale · h^{l+1})
        let mut f_prev = CMatrix::zeros(n);
        let seed: Vec<Complex64> = model
            .channels
            .l_values
            .iter()
            .map(|&l| Complex64::new(seed_scale * h.powi(l as i32 + 1), 0.0))
            .collect();
        let t1 = t_at(grid.node(1));
        let psi1_seed = CMatrix::from_diagonal(&seed);
        let mut f_cur = CMatrix::zeros(n);
        let mut one_minus_t = CMatrix::identity(n);
        one_minus_t.sub_assign(&t1);
        f_cur.mul_into(&one_minus_t, &psi1_seed);

        for node in 1..grid.n_points {
            let t = t_at(grid.node(node));
            let mut lhs = CMatrix::identity(n);
            lhs.sub_assign(&t);
            let mut rhs = CMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    let id = if i == j {
                        Complex64::ONE
                    } else {
                        Complex64::ZERO
                    };
                    rhs[(i, j)] = 2.0 * id + 10.0 * t[(i, j)];
                }
            }
            let mut u = CMatrix::zeros(n);
            lhs.solve_into(&rhs, &mut u).unwrap();
            let mut uf = CMatrix::zeros(n);
            uf.mul_into(&u, &f_cur);
            uf.sub_assign(&f_prev);
            f_prev = f_cur;
            f_cur = uf;
        }
        let unpack = |node: usize, f: &CMatrix| {
            let t = t_at(grid.node(node));
            let mut lhs = CMatrix::identity(n);
            lhs.sub_assign(&t);
            let mut psi = CMatrix::zeros(n);
            lhs.solve_into(f, &mut psi).unwrap();
            psi
        };
        (
            unpack(grid.n_points - 1, &f_prev),
            unpack(grid.n_points, &f_cur),
        )
    }

    #[test]
    fn free_field_matches_riccati_j() {
        // without a potential the regular solution is ĵ_l(kr) up to a
        // constant; compare the node ratio, which drops the constant
        let grid = RadialGrid::new(4.6, 2048).unwrap();
        for l in [0u32, 1] {
            let model = free_model(l);
            for &k in &[c(1.3, 0.0), c(0.8, 0.4), c(0.0, 1.1)] {
                let s = propagate(&model, k, 0.0, &grid).unwrap();
                let ratio = s.psi2[(0, 0)] / s.psi1[(0, 0)];
                let j1 = crate::special::riccati_j(l, k * s.r1).unwrap().value;
                let j2 = crate::special::riccati_j(l, k * s.r2).unwrap().value;
                let exact = j2 / j1;
                assert!(
                    (ratio - exact).norm() < 1e-8 * exact.norm(),
                    "l = {l}, k = {k}: {ratio} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn uncoupled_channels_stay_uncoupled() {
        let model = PotentialModel::new(
            ChannelSet::new(vec![0, 1], 1.0).unwrap(),
            coupling_matrix(7.0, 20.0, 0.0),
            PotentialFamily::Gaussian,
            (1, 1),
        )
        .unwrap();
        let grid = RadialGrid::default_paper();
        let s = propagate(&model, c(1.0, 0.5), 20.0, &grid).unwrap();
        let diag_scale = s.psi2[(0, 0)].norm().max(s.psi2[(1, 1)].norm());
        assert!(s.psi2[(0, 1)].norm() < 1e-12 * diag_scale);
        assert!(s.psi2[(1, 0)].norm() < 1e-12 * diag_scale);
    }

    #[test]
    fn ratio_recursion_matches_direct_numerov() {
        // moderate k so the direct recursion cannot overflow
        let model = PotentialModel::new(
            ChannelSet::new(vec![0, 1], 1.0).unwrap(),
            coupling_matrix(7.0, 20.0, 0.5),
            PotentialFamily::Gaussian,
            (1, 1),
        )
        .unwrap();
        let grid = RadialGrid::new(4.6, 1024).unwrap();
        let k = c(0.9, 0.3);
        let s = propagate(&model, k, 20.0, &grid).unwrap();
        let (d1, d2) = propagate_direct(&model, k, 20.0, &grid, 1.0);

        // same M = Ψ(r2) Ψ(r1)^{-1} regardless of normalization
        let mut m_ratio = CMatrix::zeros(2);
        let mut inv = CMatrix::zeros(2);
        s.psi1.clone().inverse_into(&mut inv).unwrap();
        m_ratio.mul_into(&s.psi2, &inv);
        let mut m_direct = CMatrix::zeros(2);
        d1.clone().inverse_into(&mut inv).unwrap();
        m_direct.mul_into(&d2, &inv);
        assert!(m_ratio.max_abs_diff(&m_direct) < 1e-9 * m_ratio.max_abs());
    }

    #[test]
    fn direct_recursion_is_linear_in_the_seed() {
        let model = free_model(1);
        let grid = RadialGrid::new(4.0, 512).unwrap();
        let k = c(1.1, 0.2);
        let (a1, a2) = propagate_direct(&model, k, 0.0, &grid, 1.0);
        let (b1, b2) = propagate_direct(&model, k, 0.0, &grid, 3.5);
        for (a, b) in [(&a1, &b1), (&a2, &b2)] {
            let scaled = {
                let mut s = a.clone();
                s.scale(c(3.5, 0.0));
                s
            };
            assert!(scaled.max_abs_diff(b) < 1e-12 * b.max_abs());
        }
    }

    #[test]
    fn deep_closed_channel_does_not_overflow() {
        // e^{|Im k| r_max} ~ e^{33} would wreck a naive propagation; the
        // ratio recursion keeps every intermediate bounded
        let model = PotentialModel::new(
            ChannelSet::new(vec![1], 1.0).unwrap(),
            DMatrix::from_row_slice(1, 1, &[20.0]),
            PotentialFamily::Gaussian,
            (0, 0),
        )
        .unwrap();
        let grid = RadialGrid::default_paper();
        let s = propagate(&model, c(0.0, 3.6), 20.0, &grid).unwrap();
        assert!(s.psi1.max_abs().is_finite());
        assert!(s.psi2.max_abs().is_finite());
    }

    #[test]
    fn rejects_zero_k_and_overflowing_k() {
        let model = free_model(0);
        let grid = RadialGrid::default_paper();
        assert!(matches!(
            propagate(&model, Complex64::ZERO, 0.0, &grid),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            propagate(&model, c(0.0, 200.0), 0.0, &grid),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn tail_nodes_share_one_normalization() {
        let model = free_model(0);
        let grid = RadialGrid::new(4.6, 1024).unwrap();
        let k = c(1.7, 0.0);
        let tail = propagate_tail(&model, k, 0.0, &grid, 5).unwrap().nodes;
        // consecutive ratios must follow ĵ₀(kr) = sin(kr)
        for w in tail.windows(2) {
            let (ra, pa) = &w[0];
            let (rb, pb) = &w[1];
            let got = pb[(0, 0)] / pa[(0, 0)];
            let exact = (k * rb).sin() / (k * ra).sin();
            assert!((got - exact).norm() < 1e-8);
        }
    }
}
