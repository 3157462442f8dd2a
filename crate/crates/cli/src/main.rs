//! Command-line driver: find bound states, trace continuation branches,
//! and run the self-check suites for a configured coupled-channel model.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::Vector3;
use num_complex::Complex64;

use ccres::config::{parse_config, RunConfig, Starts};
use ccres::continuation::{
    switch_branch, trace_branch, trace_from, Branch, ContinuationOpts, ContinuationPoint,
    PointFlag, ScatteringMap,
};
use ccres::linalg::CMatrix;
use ccres::oracles::{fd_bound_states, square_well_smatrix};
use ccres::potentials::{PotentialFamily, PotentialModel};
use ccres::rootfinding::{newton_complex, scan_bound_states, Classification, RootResult};
use ccres::scattering::{extract_smatrix, residual};
use ccres::solver::{propagate, propagate_tail, AsymptoticSample};
use ccres::util::{sci7, sci9, SplitMix64};
use ccres::Error;

#[derive(Parser)]
#[command(
    name = "ccres",
    about = "Bound states and resonances of coupled-channel radial Schrödinger equations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate bound states of the configured model and print them as a table.
    Roots {
        #[arg(long)]
        config: PathBuf,
        /// Optional CSV output path.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        verbose: bool,
    },
    /// Trace det F = 0 branches through (Re k, Im k, λ) and write them as CSV.
    Continue {
        #[arg(long)]
        config: PathBuf,
        /// CSV output path (defaults to standard output).
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        verbose: bool,
    },
    /// Run the unitarity / symmetry / oracle cross-check suites.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// Optional report output path.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        verbose: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Roots {
            config,
            output,
            verbose,
        } => run_with_config(&config, |cfg| cmd_roots(cfg, output.as_deref(), verbose)),
        Command::Continue {
            config,
            output,
            verbose,
        } => run_with_config(&config, |cfg| cmd_continue(cfg, output.as_deref(), verbose)),
        Command::Check {
            config,
            output,
            verbose,
        } => run_with_config(&config, |cfg| cmd_check(cfg, output.as_deref(), verbose)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run_with_config<F>(path: &std::path::Path, body: F) -> Result<ExitCode, Error>
where
    F: FnOnce(&RunConfig) -> Result<ExitCode, Error>,
{
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        field: "config".into(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let cfg = parse_config(&text)?;
    body(&cfg)
}

fn format_k(k: Complex64) -> String {
    if k.re.abs() < 1e-9 {
        format!("{}i", sci7(k.im))
    } else if k.im < 0.0 {
        format!("{}{}i", sci7(k.re), sci7(k.im))
    } else {
        format!("{}+{}i", sci7(k.re), sci7(k.im))
    }
}

fn classification_str(c: Classification) -> &'static str {
    match c {
        Classification::Bound => "bound",
        Classification::Virtual => "virtual",
        Classification::Resonance => "resonance",
        Classification::UnphysicalMirror => "unphysical_mirror",
    }
}

/// Resolve the configured start set into polished roots at λ0.
fn resolve_starts(cfg: &RunConfig, verbose: bool) -> Result<Vec<RootResult>, Error> {
    let lambda0 = cfg.model.lambda0();
    match &cfg.starts {
        Starts::Scan => {
            if verbose {
                eprintln!(
                    "scanning the positive imaginary axis up to k = {}i at lambda = {lambda0}",
                    cfg.scan_k_max
                );
            }
            Ok(scan_bound_states(
                &cfg.model,
                lambda0,
                cfg.scan_k_max,
                &cfg.grid,
            ))
        }
        Starts::Explicit(ks) => ks
            .iter()
            .map(|&k0| {
                newton_complex(
                    &cfg.model,
                    lambda0,
                    k0,
                    &cfg.grid,
                    cfg.newton.tol,
                    cfg.newton.max_iter,
                )
            })
            .collect(),
    }
}

fn cmd_roots(
    cfg: &RunConfig,
    output: Option<&std::path::Path>,
    verbose: bool,
) -> Result<ExitCode, Error> {
    let roots = resolve_starts(cfg, verbose)?;
    println!("  i  k                          class              |det F|    iters");
    for (i, r) in roots.iter().enumerate() {
        println!(
            "{i:>3}  {:<25}  {:<17}  {:<9}  {}",
            format_k(r.k),
            classification_str(r.classification),
            format!("{:.2e}", r.residual_norm),
            r.iterations
        );
    }
    if roots.is_empty() {
        println!("(no roots found)");
    }
    if let Some(path) = output {
        let mut csv = String::from("index,re_k,im_k,residual_norm,iterations,classification\n");
        for (i, r) in roots.iter().enumerate() {
            csv.push_str(&format!(
                "{i},{},{},{},{},{}\n",
                sci9(r.k.re),
                sci9(r.k.im),
                sci9(r.residual_norm),
                r.iterations,
                classification_str(r.classification)
            ));
        }
        std::fs::write(path, csv).map_err(io_err)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn io_err(e: std::io::Error) -> Error {
    Error::Config {
        field: "output".into(),
        message: e.to_string(),
    }
}

fn branch_csv(branches: &[Branch]) -> String {
    let mut out = String::from("branch_id,point_index,lambda,re_k,im_k,residual_norm,flag\n");
    for b in branches {
        for (idx, p) in b.points.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                b.branch_id,
                idx,
                sci9(p.lambda()),
                sci9(p.k().re),
                sci9(p.k().im),
                sci9(p.residual_norm),
                p.flag.as_str()
            ));
        }
    }
    out
}

fn cmd_continue(
    cfg: &RunConfig,
    output: Option<&std::path::Path>,
    verbose: bool,
) -> Result<ExitCode, Error> {
    let lambda0 = cfg.model.lambda0();
    let cc = &cfg.continuation;
    let opts = ContinuationOpts {
        h_min: cc.h_min,
        h_max: cc.h_max,
        tol: cfg.newton.tol,
        max_corrector: 12,
        max_points: cc.max_points,
        lambda_bounds: (cc.lambda_min, cc.lambda_max),
    };
    let starts = resolve_starts(cfg, verbose)?;
    let mut branches: Vec<Branch> = Vec::new();
    let mut next_id = 0u32;

    if cc.lambda_max - cc.lambda_min <= 0.0 {
        // zero-length interval: report the start points without tracing
        for root in &starts {
            let g = residual(&cfg.model, root.k, lambda0, &cfg.grid)?;
            branches.push(Branch {
                points: vec![ContinuationPoint {
                    x: Vector3::new(root.k.re, root.k.im, lambda0),
                    tangent: Vector3::zeros(),
                    residual_norm: g.det_f.norm(),
                    flag: PointFlag::Start,
                }],
                branch_id: next_id,
                parent: None,
            });
            next_id += 1;
        }
    } else {
        for root in &starts {
            for direction in [-1.0, 1.0] {
                // skip directions that leave the λ window immediately
                if (direction < 0.0 && lambda0 <= cc.lambda_min)
                    || (direction > 0.0 && lambda0 >= cc.lambda_max)
                {
                    continue;
                }
                if verbose {
                    eprintln!(
                        "tracing from k = {} toward {} lambda",
                        format_k(root.k),
                        if direction < 0.0 {
                            "decreasing"
                        } else {
                            "increasing"
                        }
                    );
                }
                let branch = trace_branch(&cfg.model, root, lambda0, direction, &cfg.grid, &opts)?;
                let id = next_id;
                next_id += 1;
                let branch = Branch {
                    branch_id: id,
                    ..branch
                };
                let mut children: Vec<Branch> = Vec::new();
                if cc.switch_branches {
                    let map = ScatteringMap {
                        model: &cfg.model,
                        grid: &cfg.grid,
                    };
                    for (idx, p) in branch.points.iter().enumerate() {
                        if p.flag != PointFlag::BranchPoint {
                            continue;
                        }
                        let Ok(dirs) = switch_branch(p, &cfg.model, &cfg.grid) else {
                            continue;
                        };
                        for tangent in dirs {
                            let start_pt = ContinuationPoint {
                                x: p.x,
                                tangent,
                                residual_norm: p.residual_norm,
                                flag: PointFlag::Start,
                            };
                            let child = trace_from(&map, start_pt, &opts, next_id, Some((id, idx)));
                            next_id += 1;
                            children.push(child);
                        }
                    }
                }
                if verbose {
                    let n_bp = branch
                        .points
                        .iter()
                        .filter(|p| p.flag == PointFlag::BranchPoint)
                        .count();
                    eprintln!(
                        "  {} points, {n_bp} branch point(s), {} switched branch(es)",
                        branch.points.len(),
                        children.len()
                    );
                }
                branches.push(branch);
                branches.extend(children);
            }
        }
    }

    let csv = branch_csv(&branches);
    match output {
        Some(path) => std::fs::write(path, csv).map_err(io_err)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

struct CheckResult {
    name: &'static str,
    status: CheckStatus,
    detail: String,
}

fn smatrix_at(cfg: &RunConfig, model: &PotentialModel, k: Complex64) -> Result<CMatrix, Error> {
    let lambda = model.lambda0();
    let sample = propagate(model, k, lambda, &cfg.grid)?;
    Ok(extract_smatrix(&sample, k, lambda, &model.channels)?.s)
}

fn cmd_check(
    cfg: &RunConfig,
    output: Option<&std::path::Path>,
    verbose: bool,
) -> Result<ExitCode, Error> {
    let mut results: Vec<CheckResult> = Vec::new();
    let n = cfg.model.channels.n();
    let lambda0 = cfg.model.lambda0();

    // S S† = I on the real axis
    {
        let mut rng = SplitMix64::new(0x51ca77e2);
        let mut worst = 0.0f64;
        let mut failure = None;
        for _ in 0..50 {
            let k = Complex64::new(rng.range(0.1, 5.0), 0.0);
            match smatrix_at(cfg, &cfg.model, k) {
                Ok(s) => {
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
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            }
        }
        results.push(match failure {
            Some(msg) => CheckResult {
                name: "unitarity",
                status: CheckStatus::Fail,
                detail: msg,
            },
            None => CheckResult {
                name: "unitarity",
                status: if worst <= 1e-7 {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                detail: format!("max |S S† - I| = {worst:.2e} over 50 real k (tol 1e-7)"),
            },
        });
    }

    // S(k*) = (S(k)†)^{-1} off the real axis
    {
        let mut rng = SplitMix64::new(0x0dd5);
        let mut worst = 0.0f64;
        let mut tested = 0;
        while tested < 20 {
            let k = Complex64::new(rng.range(0.1, 2.8), rng.range(-1.0, 1.0));
            if !(0.1..=3.0).contains(&k.norm()) {
                continue;
            }
            tested += 1;
            let (Ok(s), Ok(s_conj)) = (
                smatrix_at(cfg, &cfg.model, k),
                smatrix_at(cfg, &cfg.model, k.conj()),
            ) else {
                continue;
            };
            let mut inv = CMatrix::zeros(n);
            if s.clone().inverse_into(&mut inv).is_err() {
                continue;
            }
            let mut expected = CMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    expected[(i, j)] = inv[(i, j)].conj();
                }
            }
            worst = worst.max(s_conj.max_abs_diff(&expected));
        }
        results.push(CheckResult {
            name: "inversion_symmetry",
            status: if worst <= 1e-5 {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail: format!("max |S(k*) - (S†)^(-1)| = {worst:.2e} over 20 complex k (tol 1e-5)"),
        });
    }

    // free potential: S = I
    {
        let zero = cfg.model.strength_matrix(lambda0) * 0.0;
        let free = PotentialModel::new(
            cfg.model.channels.clone(),
            zero,
            cfg.model.family,
            cfg.model.continuation_index,
        )?;
        let mut worst = 0.0f64;
        for i in 1..=5 {
            let k = Complex64::new(0.7 * i as f64, 0.0);
            let s = smatrix_at(cfg, &free, k)?;
            worst = worst.max(s.max_abs_diff(&CMatrix::identity(n)));
        }
        results.push(CheckResult {
            name: "free_identity",
            status: if worst <= 1e-8 {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail: format!("max |S - I| = {worst:.2e} for the zero-strength model (tol 1e-8)"),
        });
    }

    // closed-form square-well oracle
    {
        let applicable = matches!(cfg.model.family, PotentialFamily::SquareWell { .. })
            && n == 1
            && cfg.model.channels.l_values[0] == 0;
        if applicable {
            let PotentialFamily::SquareWell { radius } = cfg.model.family else {
                unreachable!()
            };
            let depth = lambda0;
            let mut rng = SplitMix64::new(11);
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let k = Complex64::new(rng.range(0.5, 4.0), 0.0);
                let s = smatrix_at(cfg, &cfg.model, k)?;
                let exact = square_well_smatrix(depth, radius, cfg.model.channels.mu, k)?;
                worst = worst.max((s[(0, 0)] - exact).norm());
            }
            results.push(CheckResult {
                name: "square_well_oracle",
                status: if worst <= 1e-8 {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                detail: format!("max |S - S_exact| = {worst:.2e} over 20 real k (tol 1e-8)"),
            });
        } else {
            results.push(CheckResult {
                name: "square_well_oracle",
                status: CheckStatus::Skip,
                detail: "needs a single-channel s-wave square well".into(),
            });
        }
    }

    // shared by the remaining checks
    let bound = scan_bound_states(&cfg.model, lambda0, cfg.scan_k_max, &cfg.grid);

    // agreement with the finite-difference eigensolver
    {
        if bound.is_empty() {
            results.push(CheckResult {
                name: "fd_agreement",
                status: CheckStatus::Skip,
                detail: "no bound states in the scan window".into(),
            });
        } else {
            let r_max = (2.0 * cfg.model.effective_range(1e-9)).max(12.0);
            let spectrum = fd_bound_states(&cfg.model, lambda0, 4000, r_max);
            let mut worst = 0.0f64;
            for root in &bound {
                let nearest = spectrum
                    .bound_k
                    .iter()
                    .map(|k| (k - root.k).norm())
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(nearest);
            }
            let pass = worst.is_finite() && worst <= 2e-3;
            results.push(CheckResult {
                name: "fd_agreement",
                status: if pass {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                detail: format!(
                    "max |k - k_fd| = {worst:.2e} over {} bound state(s) (tol 2e-3)",
                    bound.len()
                ),
            });
        }
    }

    // convergence order of the propagator (Richardson ratio on the
    // deepest bound state)
    {
        if bound.is_empty() {
            results.push(CheckResult {
                name: "convergence_order",
                status: CheckStatus::Skip,
                detail: "no bound states in the scan window".into(),
            });
        } else {
            let k0 = bound[0].k;
            let polish = |factor: usize| -> Result<Complex64, Error> {
                let grid = cfg.grid.refined(factor);
                Ok(newton_complex(&cfg.model, lambda0, k0, &grid, 1e-10, 60)?.k)
            };
            let outcome = (|| -> Result<f64, Error> {
                let k1 = polish(1)?;
                let k2 = polish(2)?;
                let k4 = polish(4)?;
                Ok((k1 - k2).norm() / (k2 - k4).norm().max(1e-300))
            })();
            // a discontinuous well caps the scheme at second order
            // (ratio 4); smooth potentials must show fourth order (16)
            let (lo, hi, expect) = match cfg.model.family {
                PotentialFamily::SquareWell { .. } => (2.0, 6.0, 4),
                PotentialFamily::Gaussian => (8.0, 24.0, 16),
            };
            results.push(match outcome {
                Ok(ratio) if (lo..=hi).contains(&ratio) => CheckResult {
                    name: "convergence_order",
                    status: CheckStatus::Pass,
                    detail: format!("Richardson ratio = {ratio:.1} (expect {expect} ± 50%)"),
                },
                Ok(ratio) => CheckResult {
                    name: "convergence_order",
                    status: CheckStatus::Fail,
                    detail: format!("Richardson ratio = {ratio:.1} outside [{lo}, {hi}]"),
                },
                Err(e) => CheckResult {
                    name: "convergence_order",
                    status: CheckStatus::Fail,
                    detail: format!("refinement failed: {e}"),
                },
            });
        }
    }

    // shifting both matching radii one node inward barely moves S
    {
        let k = Complex64::new(1.1, 0.0);
        let tail = propagate_tail(&cfg.model, k, lambda0, &cfg.grid, 3)?.nodes;
        let outer = AsymptoticSample {
            r1: tail[1].0,
            r2: tail[2].0,
            psi1: tail[1].1.clone(),
            psi2: tail[2].1.clone(),
        };
        let inner = AsymptoticSample {
            r1: tail[0].0,
            r2: tail[1].0,
            psi1: tail[0].1.clone(),
            psi2: tail[1].1.clone(),
        };
        let s_outer = extract_smatrix(&outer, k, lambda0, &cfg.model.channels)?;
        let s_inner = extract_smatrix(&inner, k, lambda0, &cfg.model.channels)?;
        let diff = s_outer.s.max_abs_diff(&s_inner.s);
        results.push(CheckResult {
            name: "matching_radius_independence",
            status: if diff <= 1e-6 {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail: format!("|ΔS| = {diff:.2e} for a one-node shift (tol 1e-6)"),
        });
    }

    // a pole of S at k_b pairs with a zero of det S at k_b*
    {
        if bound.is_empty() {
            results.push(CheckResult {
                name: "pole_zero_pairing",
                status: CheckStatus::Skip,
                detail: "no bound states in the scan window".into(),
            });
        } else {
            let k_b = bound[0].k;
            let det_zero = smatrix_at(cfg, &cfg.model, k_b.conj())?.det().norm();
            let det_away = smatrix_at(cfg, &cfg.model, k_b.conj() + Complex64::new(0.1, 0.0))?
                .det()
                .norm();
            let pass = det_zero <= 1e-4 * det_away;
            results.push(CheckResult {
                name: "pole_zero_pairing",
                status: if pass {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                detail: format!("|det S(k_b*)| = {det_zero:.2e} vs {det_away:.2e} at 0.1 away"),
            });
        }
    }

    let mut report = String::new();
    let mut any_fail = false;
    for r in &results {
        let tag = match r.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => {
                any_fail = true;
                "FAIL"
            }
            CheckStatus::Skip => "SKIP",
        };
        report.push_str(&format!("{tag}  {:<30} {}\n", r.name, r.detail));
    }
    print!("{report}");
    if verbose {
        eprintln!("{} checks, failures: {}", results.len(), any_fail);
    }
    if let Some(path) = output {
        std::fs::write(path, report).map_err(io_err)?;
    }
    Ok(if any_fail {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}
