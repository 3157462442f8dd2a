//! Acceptance suite: every numbered criterion runs at its stated
//! tolerance and prints one pass/fail line. Criteria that compare against
//! published table values use those values verbatim; where an entry is
//! known to disagree with independent references, the line still asserts
//! the published number so the discrepancy stays visible.

mod common;

use std::time::Instant;

use ccres::continuation::{
    predict_correct_map, trace_branch, ContinuationOpts, ContinuationPoint, PointFlag,
    ScatteringMap,
};
use ccres::linalg::CMatrix;
use ccres::oracles::{fd_bound_states, square_well_smatrix};
use ccres::potentials::PotentialModel;
use ccres::rootfinding::{newton_complex, scan_bound_states};
use ccres::scattering::{extract_smatrix, residual};
use ccres::solver::{propagate, RadialGrid};
use ccres::util::SplitMix64;
use common::{pd_model, single_gaussian, sp_model, square_well};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "{}  criterion {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn nearest(roots: &[ccres::rootfinding::RootResult], target: Complex64) -> (Complex64, f64) {
    roots
        .iter()
        .map(|r| (r.k, (r.k - target).norm()))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap_or((Complex64::ZERO, f64::INFINITY))
}

#[test]
fn criterion_1_uncoupled_gaussian_tables() {
    let grid = RadialGrid::default_paper();
    let t0 = Instant::now();
    let s_roots = scan_bound_states(&single_gaussian(0, 7.0), 7.0, 5.0, &grid);
    let p_roots = scan_bound_states(&single_gaussian(1, 20.0), 20.0, 5.0, &grid);
    let elapsed = t0.elapsed();

    let mut pass = true;
    for (roots, target) in [
        (&s_roots, c(0.0, 2.185562)),
        (&p_roots, c(0.0, 3.617543)),
        (&p_roots, c(0.0, 0.8938842)),
    ] {
        let (found, dist) = nearest(roots, target);
        let ok = dist <= 1e-4;
        pass &= ok;
        println!("  {target} -> {found} (|Δ| = {dist:.2e}, tol 1e-4)");
    }
    let in_time = elapsed.as_secs_f64() < 1.0;
    report(
        "1",
        pass && in_time,
        &format!(
            "uncoupled bound states, {} found, {elapsed:.2?} (budget 1 s)",
            s_roots.len() + p_roots.len()
        ),
    );
    assert!(pass, "criterion 1 value mismatch");
    assert!(in_time, "criterion 1 exceeded 1 s: {elapsed:?}");
}

#[test]
fn criterion_2_coupled_sp_table() {
    let grid = RadialGrid::default_paper();
    let t0 = Instant::now();
    let roots = scan_bound_states(&sp_model(), 20.0, 5.0, &grid);
    let elapsed = t0.elapsed();

    let mut pass = true;
    for target in [c(0.0, 3.623677), c(0.0, 2.178012), c(0.0, 0.9035406)] {
        let (found, dist) = nearest(&roots, target);
        let ok = dist <= 1e-4;
        pass &= ok;
        println!("  {target} -> {found} (|Δ| = {dist:.2e}, tol 1e-4)");
    }
    let in_time = elapsed.as_secs_f64() < 5.0;
    report(
        "2",
        pass && in_time,
        &format!("coupled s/p bound states, {elapsed:.2?} (budget 5 s)"),
    );
    assert!(in_time, "criterion 2 exceeded 5 s: {elapsed:?}");
    assert!(pass, "criterion 2 value mismatch");
}

#[test]
fn criterion_3_coupled_pd_table() {
    let grid = RadialGrid::default_paper();
    let t0 = Instant::now();
    let roots = scan_bound_states(&pd_model(), 30.0, 5.0, &grid);
    let elapsed = t0.elapsed();

    let mut pass = true;
    for target in [c(0.0, 3.796532), c(0.0, 1.600083), c(0.0, 0.6599123)] {
        let (found, dist) = nearest(&roots, target);
        let ok = dist <= 1e-4;
        pass &= ok;
        println!("  {target} -> {found} (|Δ| = {dist:.2e}, tol 1e-4)");
    }
    let in_time = elapsed.as_secs_f64() < 5.0;
    report(
        "3",
        pass && in_time,
        &format!("coupled p/d bound states, {elapsed:.2?} (budget 5 s)"),
    );
    assert!(pass, "criterion 3 value mismatch");
    assert!(in_time, "criterion 3 exceeded 5 s: {elapsed:?}");
}

fn branch_points(
    model: &PotentialModel,
    start_k: Complex64,
    lambda0: f64,
    bounds: (f64, f64),
    max_points: usize,
    grid: &RadialGrid,
) -> (Vec<ContinuationPoint>, std::time::Duration) {
    let start = newton_complex(model, lambda0, start_k, grid, 1e-8, 60).unwrap();
    let opts = ContinuationOpts {
        lambda_bounds: bounds,
        max_points,
        ..Default::default()
    };
    let t0 = Instant::now();
    let branch = trace_branch(model, &start, lambda0, -1.0, grid, &opts).unwrap();
    let elapsed = t0.elapsed();
    (
        branch
            .points
            .into_iter()
            .filter(|p| p.flag == PointFlag::BranchPoint)
            .collect(),
        elapsed,
    )
}

#[test]
fn criterion_4_sp_branch_points() {
    let grid = RadialGrid::default_paper();
    let model = sp_model();

    // shallow state exits at λ ≈ 17.42, the next one at λ ≈ 6.09
    let (bps_shallow, t_shallow) =
        branch_points(&model, c(0.0, 0.9035406), 20.0, (16.5, 20.5), 1200, &grid);
    let (bps_deep, t_deep) =
        branch_points(&model, c(0.0, 2.178012), 20.0, (5.8, 20.5), 2600, &grid);

    let mut pass = true;
    for (bps, lambda_t, im_k_ref) in [
        (&bps_shallow, 17.42094, -1.589331e-2),
        (&bps_deep, 6.091215, -7.999927e-4),
    ] {
        let found = bps
            .iter()
            .min_by(|a, b| {
                (a.lambda() - lambda_t)
                    .abs()
                    .partial_cmp(&(b.lambda() - lambda_t).abs())
                    .unwrap()
            })
            .cloned();
        match found {
            Some(p) => {
                let ok = (p.lambda() - lambda_t).abs() <= 0.05
                    && p.k().re.abs() < 1e-6
                    && (p.k().im - im_k_ref).abs() <= 5e-3;
                pass &= ok;
                println!(
                    "  λ_t {lambda_t}: found λ = {:.6}, k = {:+.3e}{:+.6e}i",
                    p.lambda(),
                    p.k().re,
                    p.k().im
                );
            }
            None => {
                pass = false;
                println!("  λ_t {lambda_t}: no branch point detected");
            }
        }
    }
    let in_time = t_shallow.as_secs_f64() < 120.0 && t_deep.as_secs_f64() < 120.0;
    report(
        "4",
        pass && in_time,
        &format!(
            "s/p threshold branch points, {t_shallow:.1?} / {t_deep:.1?} (budget 2 min per branch)"
        ),
    );
    assert!(pass, "criterion 4 branch point mismatch");
    assert!(in_time, "criterion 4 exceeded 2 min per branch");
}

#[test]
fn criterion_5_pd_threshold() {
    let grid = RadialGrid::default_paper();
    let model = pd_model();
    let (bps, elapsed) = branch_points(&model, c(0.0, 1.600083), 30.0, (13.0, 30.5), 2600, &grid);
    // the trace may flag additional (genuine) virtual-state collisions on
    // the deep negative axis; the threshold crossing is the one near the
    // origin
    let origin_bp = bps
        .iter()
        .find(|p| p.k().norm() < 5e-3 && (13.4..13.5).contains(&p.lambda()));
    match origin_bp {
        Some(p) => {
            report(
                "5",
                elapsed.as_secs_f64() < 120.0,
                &format!(
                    "p/d origin branching at λ = {:.6}, |k| = {:.2e}, {elapsed:.1?} (budget 2 min)",
                    p.lambda(),
                    p.k().norm()
                ),
            );
        }
        None => {
            report(
                "5",
                false,
                "no branch point with λ ∈ (13.4, 13.5) and |k| < 5e-3",
            );
            for p in &bps {
                println!("  candidate: λ = {:.4}, k = {}", p.lambda(), p.k());
            }
        }
    }
    assert!(
        origin_bp.is_some(),
        "criterion 5: threshold branch point not found"
    );
    assert!(elapsed.as_secs_f64() < 120.0, "criterion 5 exceeded 2 min");
}

#[test]
fn criterion_6_fd_cross_oracle() {
    let grid = RadialGrid::default_paper();
    let mut pass = true;
    let mut worst = 0.0f64;
    for (model, lambda) in [(sp_model(), 20.0), (pd_model(), 30.0)] {
        let roots = scan_bound_states(&model, lambda, 5.0, &grid);
        let spectrum = fd_bound_states(&model, lambda, 4000, 12.0);
        for r in &roots {
            let d = spectrum
                .bound_k
                .iter()
                .map(|k| (k - r.k).norm())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
            pass &= d <= 2e-3;
            println!("  k = {} vs fd (|Δ| = {d:.2e}, tol 2e-3)", r.k);
        }
    }
    report(
        "6",
        pass,
        &format!("finite-difference cross-oracle, max |Δ| = {worst:.2e}"),
    );
    assert!(pass, "criterion 6 oracle disagreement");
}

#[test]
fn criterion_7_property_suite() {
    let t0 = Instant::now();
    let grid = RadialGrid::default_paper();
    let model = sp_model();
    let n = model.channels.n();
    let mut failures: Vec<String> = Vec::new();

    // unitarity on 50 random real k
    {
        let mut rng = SplitMix64::new(3);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let k = c(rng.range(0.1, 5.0), 0.0);
            let s = extract_smatrix(
                &propagate(&model, k, 20.0, &grid).unwrap(),
                k,
                20.0,
                &model.channels,
            )
            .unwrap()
            .s;
            let mut sdag = CMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    sdag[(i, j)] = s[(j, i)].conj();
                }
            }
            let mut prod = CMatrix::zeros(n);
            prod.mul_into(&s, &sdag);
            worst = worst.max(prod.max_abs_diff(&CMatrix::identity(n)));
        }
        let ok = worst <= 1e-7;
        println!("  unitarity: max |S S† - I| = {worst:.2e} (tol 1e-7)");
        if !ok {
            failures.push(format!("unitarity {worst:.2e}"));
        }
    }

    // S(k*) = (S(k)†)^{-1} on 20 random complex k
    {
        let mut rng = SplitMix64::new(5);
        let mut worst = 0.0f64;
        let mut tested = 0;
        while tested < 20 {
            let k = c(rng.range(0.1, 2.8), rng.range(-1.0, 1.0));
            if !(0.1..=3.0).contains(&k.norm()) {
                continue;
            }
            tested += 1;
            let at = |kk: Complex64| {
                extract_smatrix(
                    &propagate(&model, kk, 20.0, &grid).unwrap(),
                    kk,
                    20.0,
                    &model.channels,
                )
                .unwrap()
                .s
            };
            let s = at(k);
            let s_conj = at(k.conj());
            let mut inv = CMatrix::zeros(n);
            s.clone().inverse_into(&mut inv).unwrap();
            let mut expected = CMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    expected[(i, j)] = inv[(i, j)].conj();
                }
            }
            worst = worst.max(s_conj.max_abs_diff(&expected));
        }
        let ok = worst <= 1e-5;
        println!("  conjugation symmetry: max deviation = {worst:.2e} (tol 1e-5)");
        if !ok {
            failures.push(format!("conjugation symmetry {worst:.2e}"));
        }
    }

    // free potential S = I
    {
        let free = single_gaussian(0, 0.0);
        let mut worst = 0.0f64;
        for i in 1..=5 {
            let k = c(0.8 * i as f64, 0.0);
            let s = extract_smatrix(
                &propagate(&free, k, 0.0, &grid).unwrap(),
                k,
                0.0,
                &free.channels,
            )
            .unwrap()
            .s;
            worst = worst.max((s[(0, 0)] - Complex64::ONE).norm());
        }
        let ok = worst <= 1e-8;
        println!("  free potential: max |S - 1| = {worst:.2e} (tol 1e-8)");
        if !ok {
            failures.push(format!("free potential {worst:.2e}"));
        }
    }

    // square-well pipeline vs the analytic oracle
    {
        let well = square_well(2.0, 1.0);
        let fine = RadialGrid::new(1.6, 10004).unwrap();
        let mut rng = SplitMix64::new(11);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let k = c(rng.range(0.5, 4.0), 0.0);
            let s = extract_smatrix(
                &propagate(&well, k, 2.0, &fine).unwrap(),
                k,
                2.0,
                &well.channels,
            )
            .unwrap()
            .s;
            let exact = square_well_smatrix(2.0, 1.0, 1.0, k).unwrap();
            worst = worst.max((s[(0, 0)] - exact).norm());
        }
        let ok = worst <= 1e-8;
        println!("  square-well oracle: max |ΔS| = {worst:.2e} (tol 1e-8)");
        if !ok {
            failures.push(format!("square-well oracle {worst:.2e}"));
        }
    }

    // Numerov convergence order on the uncoupled s-wave state
    {
        let s_model = single_gaussian(0, 7.0);
        let polish = |n_points: usize| {
            let g = RadialGrid::new(4.6, n_points).unwrap();
            newton_complex(&s_model, 7.0, c(0.0, 2.18), &g, 1e-12, 60)
                .unwrap()
                .k
        };
        let k1 = polish(1024);
        let k2 = polish(2048);
        let k4 = polish(4096);
        let ratio = (k1 - k2).norm() / (k2 - k4).norm().max(1e-300);
        let ok = (8.0..=24.0).contains(&ratio);
        println!("  convergence order: Richardson ratio = {ratio:.1} (expect 16 ± 50%)");
        if !ok {
            failures.push(format!("convergence order ratio {ratio:.1}"));
        }
    }

    // resonance mirror symmetry below the s/p threshold
    {
        let lambda = 5.0;
        let mut best = (c(0.0, 0.0), f64::INFINITY);
        for i in 1..=20 {
            for j in 1..=10 {
                let k = c(0.06 * i as f64 + 0.2, -0.05 * j as f64);
                if let Ok(r) = residual(&model, k, lambda, &grid) {
                    if r.det_f.norm() < best.1 {
                        best = (k, r.det_f.norm());
                    }
                }
            }
        }
        let res = newton_complex(&model, lambda, best.0, &grid, 1e-8, 60).unwrap();
        let mirror = newton_complex(&model, lambda, -res.k.conj(), &grid, 1e-8, 60).unwrap();
        let dist = (mirror.k - (-res.k.conj())).norm();
        let ok = dist <= 1e-6 && res.k.re.abs() > 1e-3 && res.k.im < 0.0;
        println!(
            "  resonance mirror: k = {}, partner offset = {dist:.2e} (tol 1e-6)",
            res.k
        );
        if !ok {
            failures.push(format!("resonance mirror {dist:.2e} at {}", res.k));
        }
    }

    // no spurious zeros of det F on a 60×40 rectangle of the k-plane
    {
        let (nx, ny) = (60usize, 40usize);
        let values: Vec<Vec<f64>> = (0..ny)
            .map(|iy| {
                (0..nx)
                    .map(|ix| {
                        let k = c(
                            -3.0 + 6.0 * ix as f64 / (nx - 1) as f64,
                            -1.0 + 4.0 * iy as f64 / (ny - 1) as f64,
                        );
                        residual(&model, k, 20.0, &grid)
                            .map(|r| r.det_f.norm())
                            .unwrap_or(f64::INFINITY)
                    })
                    .collect()
            })
            .collect();
        let mut zeros_found = 0usize;
        let mut unpaired = 0usize;
        for iy in 1..ny - 1 {
            for ix in 1..nx - 1 {
                let v = values[iy][ix];
                let mut is_min = v.is_finite();
                for (dy, dx) in [
                    (-1i32, -1i32),
                    (-1, 0),
                    (-1, 1),
                    (0, -1),
                    (0, 1),
                    (1, -1),
                    (1, 0),
                    (1, 1),
                ] {
                    let w = values[(iy as i32 + dy) as usize][(ix as i32 + dx) as usize];
                    if !(v < w) {
                        is_min = false;
                        break;
                    }
                }
                if !is_min {
                    continue;
                }
                let k0 = c(
                    -3.0 + 6.0 * ix as f64 / (nx - 1) as f64,
                    -1.0 + 4.0 * iy as f64 / (ny - 1) as f64,
                );
                let Ok(root) = newton_complex(&model, 20.0, k0, &grid, 1e-6, 30) else {
                    continue;
                };
                if root.k.re < -3.0 || root.k.re > 3.0 || root.k.im < -1.0 || root.k.im > 3.0 {
                    continue;
                }
                zeros_found += 1;
                // a genuine zero of det F sits on a pole of det S
                let det_at = |kk: Complex64| {
                    extract_smatrix(
                        &propagate(&model, kk, 20.0, &grid).unwrap(),
                        kk,
                        20.0,
                        &model.channels,
                    )
                    .unwrap()
                    .s
                    .det()
                    .norm()
                };
                let here = det_at(root.k);
                let away = det_at(root.k + c(0.15, 0.1));
                if here < 100.0 * away {
                    unpaired += 1;
                    println!(
                        "    zero at {} without a pole of det S ({here:.2e} vs {away:.2e})",
                        root.k
                    );
                }
            }
        }
        let ok = unpaired == 0;
        println!(
            "  spurious-zero scan: {zeros_found} zero(s) in the rectangle, {unpaired} unpaired"
        );
        if !ok {
            failures.push(format!("{unpaired} spurious zeros"));
        }
    }

    // continuation reversibility on the physical branch
    {
        let map = ScatteringMap {
            model: &model,
            grid: &grid,
        };
        let start_root = newton_complex(&model, 20.0, c(0.0, 2.178012), &grid, 1e-8, 60).unwrap();
        let x0 = nalgebra::Vector3::new(0.0, start_root.k.im, 20.0);
        let j = ccres::continuation::jacobian(&model, &x0, &grid).unwrap();
        // tangent toward decreasing λ
        let r0 = nalgebra::Vector3::new(j[(0, 0)], j[(0, 1)], j[(0, 2)]);
        let r1 = nalgebra::Vector3::new(j[(1, 0)], j[(1, 1)], j[(1, 2)]);
        let mut t = r0.cross(&r1).normalize();
        if t[2] > 0.0 {
            t = -t;
        }
        let mut cur = ContinuationPoint {
            x: x0,
            tangent: t,
            residual_norm: 0.0,
            flag: PointFlag::Start,
        };
        for _ in 0..20 {
            cur = predict_correct_map(&map, &cur, 1e-3, 1e-8, 12).unwrap();
        }
        cur.tangent = -cur.tangent;
        for _ in 0..20 {
            cur = predict_correct_map(&map, &cur, 1e-3, 1e-8, 12).unwrap();
        }
        let dist = (cur.x - x0).norm();
        let ok = dist <= 1e-4;
        println!("  reversibility: return distance = {dist:.2e} (tol 1e-4)");
        if !ok {
            failures.push(format!("reversibility {dist:.2e}"));
        }
    }

    let elapsed = t0.elapsed();
    let in_time = elapsed.as_secs_f64() < 300.0;
    report(
        "7",
        failures.is_empty() && in_time,
        &format!("property suite, {elapsed:.1?} (budget 5 min)"),
    );
    assert!(failures.is_empty(), "criterion 7 failures: {failures:?}");
    assert!(in_time, "criterion 7 exceeded 5 min: {elapsed:?}");
}
