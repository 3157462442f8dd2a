//! Run configuration: a flat, human-editable key-value format with dotted
//! section names, e.g.
//!
//! ```text
//! channels.l = 0 1
//! channels.mu = 1.0
//! potential.family = gaussian
//! potential.strengths = 7 0.5; 0.5 20
//! potential.continuation = 2 2
//! grid.r_max = 4.6
//! grid.n_points = 4096
//! newton.tol = 1e-6
//! newton.max_iter = 50
//! continuation.h_min = 1e-4
//! continuation.h_max = 1e-2
//! continuation.lambda_min = 4
//! continuation.lambda_max = 22
//! continuation.max_points = 20000
//! starts = scan
//! starts.k_max = 5.0
//! ```
//!
//! `potential.continuation` selects the strength entry that serves as the
//! continuation parameter λ, in 1-based (row, column) form so that `2 2`
//! reads as λ₂₂. Lines starting with `#` are comments. `starts` is either
//! the word `scan` or an explicit list of complex wavenumbers such as
//! `2.178012i` or `0.5-0.1i`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potentials::{ChannelSet, PotentialFamily, PotentialModel};
use crate::solver::RadialGrid;

#[derive(Debug, Clone, PartialEq)]
pub enum Starts {
    Scan,
    Explicit(Vec<Complex64>),
}

#[derive(Debug, Clone)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct ContinuationConfig {
    pub h_min: f64,
    pub h_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_points: usize,
    /// Trace the crossing branch out of detected branch points.
    pub switch_branches: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: PotentialModel,
    pub grid: RadialGrid,
    pub newton: NewtonConfig,
    pub continuation: ContinuationConfig,
    pub starts: Starts,
    pub scan_k_max: f64,
}

fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

fn parse_f64(field: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| config_err(field, format!("cannot parse `{value}` as a number")))
}

fn parse_usize(field: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| config_err(field, format!("cannot parse `{value}` as an integer")))
}

/// Complex literal: `1.5`, `2.185562i`, `0.5-0.1i`, `-1e-3+2i`.
fn parse_complex(field: &str, token: &str) -> Result<Complex64> {
    let s = token.trim();
    if let Some(body) = s.strip_suffix(['i', 'I']) {
        if body.is_empty() || body == "+" || body == "-" {
            let sign = if body == "-" { -1.0 } else { 1.0 };
            return Ok(Complex64::new(0.0, sign));
        }
        // split a trailing imaginary part from an optional real part:
        // scan for the last +/- that is not part of an exponent
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let ch = bytes[idx] as char;
            if (ch == '+' || ch == '-') && !matches!(bytes[idx - 1] as char, 'e' | 'E') {
                split = Some(idx);
                break;
            }
        }
        return match split {
            Some(idx) => {
                let re = parse_f64(field, &body[..idx])?;
                let im_str = &body[idx..];
                let im = if im_str == "+" {
                    1.0
                } else if im_str == "-" {
                    -1.0
                } else {
                    parse_f64(field, im_str)?
                };
                Ok(Complex64::new(re, im))
            }
            None => Ok(Complex64::new(0.0, parse_f64(field, body)?)),
        };
    }
    Ok(Complex64::new(parse_f64(field, s)?, 0.0))
}

/// Parse the flat key-value text into a validated configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = match raw.split_once('#') {
            Some((before, _)) => before,
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_err(
                "config",
                format!("line {}: expected `key = value`, got `{line}`", line_no + 1),
            ));
        };
        entries.push((key.trim().to_string(), value.trim().to_string()));
    }
    let get = |key: &str| -> Option<&str> {
        entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    };

    // channels
    let l_text = get("channels.l").ok_or_else(|| config_err("channels.l", "missing"))?;
    let l_values: Vec<u32> = l_text
        .split([' ', ',', '\t'])
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u32>()
                .map_err(|_| config_err("channels.l", format!("bad angular momentum `{t}`")))
        })
        .collect::<Result<_>>()?;
    let mu = match get("channels.mu") {
        Some(v) => parse_f64("channels.mu", v)?,
        None => 1.0,
    };
    let channels = ChannelSet::new(l_values, mu)?;
    let n = channels.n();

    // potential
    let family_text = get("potential.family").unwrap_or("gaussian");
    let family = match family_text {
        "gaussian" => PotentialFamily::Gaussian,
        "square_well" => {
            let radius = match get("potential.well_radius") {
                Some(v) => parse_f64("potential.well_radius", v)?,
                None => {
                    return Err(config_err(
                        "potential.well_radius",
                        "required for the square_well family",
                    ))
                }
            };
            PotentialFamily::SquareWell { radius }
        }
        other => {
            return Err(config_err(
                "potential.family",
                format!("unknown family `{other}` (expected gaussian or square_well)"),
            ))
        }
    };
    let strengths_text =
        get("potential.strengths").ok_or_else(|| config_err("potential.strengths", "missing"))?;
    let values: Vec<f64> = strengths_text
        .split([' ', ',', ';', '\t'])
        .filter(|t| !t.is_empty())
        .map(|t| parse_f64("potential.strengths", t))
        .collect::<Result<_>>()?;
    if values.len() != n * n {
        return Err(config_err(
            "potential.strengths",
            format!(
                "expected {} entries for {n} channels, got {}",
                n * n,
                values.len()
            ),
        ));
    }
    let strengths = nalgebra::DMatrix::from_row_slice(n, n, &values);
    let continuation_index = match get("potential.continuation") {
        Some(v) => {
            let idx: Vec<usize> = v
                .split([' ', ',', '\t'])
                .filter(|t| !t.is_empty())
                .map(|t| parse_usize("potential.continuation", t))
                .collect::<Result<_>>()?;
            if idx.len() != 2 || idx[0] == 0 || idx[1] == 0 {
                return Err(config_err(
                    "potential.continuation",
                    "expected two 1-based indices, e.g. `2 2`",
                ));
            }
            (idx[0] - 1, idx[1] - 1)
        }
        None => (n - 1, n - 1),
    };
    let model = PotentialModel::new(channels, strengths, family, continuation_index)?;

    // grid
    let r_max = match get("grid.r_max") {
        Some(v) => parse_f64("grid.r_max", v)?,
        None => 4.6,
    };
    let n_points = match get("grid.n_points") {
        Some(v) => parse_usize("grid.n_points", v)?,
        None => 4096,
    };
    let grid = RadialGrid::new(r_max, n_points)?;
    // the grid must cover the interaction region for the asymptotic
    // matching to make sense
    let range = model.effective_range(1e-7);
    if grid.r_max < range {
        return Err(config_err(
            "grid.r_max",
            format!(
                "{} does not cover the potential range {range:.3}",
                grid.r_max
            ),
        ));
    }

    // newton
    let newton = NewtonConfig {
        tol: match get("newton.tol") {
            Some(v) => parse_f64("newton.tol", v)?,
            None => 1e-6,
        },
        max_iter: match get("newton.max_iter") {
            Some(v) => parse_usize("newton.max_iter", v)?,
            None => 50,
        },
    };
    if !(newton.tol > 0.0) {
        return Err(config_err("newton.tol", "must be positive"));
    }

    // continuation
    let lambda0 = model.lambda0();
    let continuation = ContinuationConfig {
        h_min: match get("continuation.h_min") {
            Some(v) => parse_f64("continuation.h_min", v)?,
            None => 1e-4,
        },
        h_max: match get("continuation.h_max") {
            Some(v) => parse_f64("continuation.h_max", v)?,
            None => 1e-2,
        },
        lambda_min: match get("continuation.lambda_min") {
            Some(v) => parse_f64("continuation.lambda_min", v)?,
            None => lambda0,
        },
        lambda_max: match get("continuation.lambda_max") {
            Some(v) => parse_f64("continuation.lambda_max", v)?,
            None => lambda0,
        },
        max_points: match get("continuation.max_points") {
            Some(v) => parse_usize("continuation.max_points", v)?,
            None => 20_000,
        },
        switch_branches: match get("continuation.switch") {
            Some(v) => match v {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                other => {
                    return Err(config_err(
                        "continuation.switch",
                        format!("expected true/false, got `{other}`"),
                    ))
                }
            },
            None => true,
        },
    };
    if continuation.h_min <= 0.0 || continuation.h_max < continuation.h_min {
        return Err(config_err("continuation.h_min", "need 0 < h_min <= h_max"));
    }
    if continuation.lambda_min > continuation.lambda_max {
        return Err(config_err(
            "continuation.lambda_min",
            "lambda_min must not exceed lambda_max",
        ));
    }

    // starts
    let starts = match get("starts") {
        None | Some("scan") => Starts::Scan,
        Some(list) => {
            let ks: Vec<Complex64> = list
                .split([' ', ',', '\t'])
                .filter(|t| !t.is_empty())
                .map(|t| parse_complex("starts", t))
                .collect::<Result<_>>()?;
            if ks.is_empty() {
                Starts::Scan
            } else {
                Starts::Explicit(ks)
            }
        }
    };
    let scan_k_max = match get("starts.k_max") {
        Some(v) => parse_f64("starts.k_max", v)?,
        None => 5.0,
    };
    if !(scan_k_max > 0.0) {
        return Err(config_err("starts.k_max", "must be positive"));
    }

    Ok(RunConfig {
        model,
        grid,
        newton,
        continuation,
        starts,
        scan_k_max,
    })
}
