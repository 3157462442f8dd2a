//! Python bindings exposing the coupled-channel system, root finding and
//! branch continuation. Build with
//! `cargo build --release -p ccres-py`; the smoke test script under
//! `python/` shows how to load the resulting cdylib.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ccres::continuation::{
    switch_branch, trace_branch, trace_from, ContinuationOpts, ContinuationPoint, PointFlag,
    ScatteringMap,
};
use ccres::potentials::{ChannelSet, PotentialFamily, PotentialModel};
use ccres::rootfinding::{newton_complex, scan_bound_states, Classification, RootResult};
use ccres::scattering::{extract_smatrix, residual};
use ccres::solver::{propagate, RadialGrid};
use ccres::Error;

fn convert(e: Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn root_to_py(py: Python<'_>, r: &RootResult) -> PyResult<PyObject> {
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("k", r.k)?;
    dict.set_item("residual_norm", r.residual_norm)?;
    dict.set_item("iterations", r.iterations)?;
    dict.set_item(
        "classification",
        match r.classification {
            Classification::Bound => "bound",
            Classification::Virtual => "virtual",
            Classification::Resonance => "resonance",
            Classification::UnphysicalMirror => "unphysical_mirror",
        },
    )?;
    Ok(dict.into())
}

fn point_to_py(py: Python<'_>, p: &ContinuationPoint) -> PyResult<PyObject> {
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("lambda", p.lambda())?;
    dict.set_item("k", p.k())?;
    dict.set_item("residual_norm", p.residual_norm)?;
    dict.set_item("flag", p.flag.as_str())?;
    Ok(dict.into())
}

/// A coupled-channel scattering system: potential model plus radial grid.
#[pyclass]
struct System {
    model: PotentialModel,
    grid: RadialGrid,
}

#[pymethods]
impl System {
    /// System(l_values, strengths, family="gaussian", mu=1.0,
    ///        continuation_index=None, well_radius=None,
    ///        r_max=4.6, n_points=4096)
    ///
    /// `strengths` is a row-major nested list; `continuation_index` picks
    /// the (i, j) entry (0-based) treated as the continuation parameter λ
    /// and defaults to the last diagonal entry.
    #[new]
    #[pyo3(signature = (l_values, strengths, family="gaussian", mu=1.0,
                        continuation_index=None, well_radius=None,
                        r_max=4.6, n_points=4096))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        l_values: Vec<u32>,
        strengths: Vec<Vec<f64>>,
        family: &str,
        mu: f64,
        continuation_index: Option<(usize, usize)>,
        well_radius: Option<f64>,
        r_max: f64,
        n_points: usize,
    ) -> PyResult<Self> {
        let channels = ChannelSet::new(l_values, mu).map_err(convert)?;
        let n = channels.n();
        if strengths.len() != n || strengths.iter().any(|row| row.len() != n) {
            return Err(PyValueError::new_err(format!(
                "strengths must be a {n}x{n} nested list"
            )));
        }
        let flat: Vec<f64> = strengths.into_iter().flatten().collect();
        let matrix = nalgebra::DMatrix::from_row_slice(n, n, &flat);
        let family = match family {
            "gaussian" => PotentialFamily::Gaussian,
            "square_well" => PotentialFamily::SquareWell {
                radius: well_radius
                    .ok_or_else(|| PyValueError::new_err("square_well needs well_radius"))?,
            },
            other => return Err(PyValueError::new_err(format!("unknown family `{other}`"))),
        };
        let index = continuation_index.unwrap_or((n - 1, n - 1));
        let model = PotentialModel::new(channels, matrix, family, index).map_err(convert)?;
        let grid = RadialGrid::new(r_max, n_points).map_err(convert)?;
        Ok(System { model, grid })
    }

    /// Strength entry currently stored at the continuation slot.
    fn lambda0(&self) -> f64 {
        self.model.lambda0()
    }

    /// det F and its parts at one (k, λ) point.
    fn residual(&self, py: Python<'_>, k: Complex64, lam: f64) -> PyResult<PyObject> {
        let r = residual(&self.model, k, lam, &self.grid).map_err(convert)?;
        let dict = pyo3::types::PyDict::new(py);
        dict.set_item("det_f", r.det_f)?;
        dict.set_item("det_s_minus_i", r.det_s_minus_i)?;
        dict.set_item("k_power_product", r.k_power_product)?;
        Ok(dict.into())
    }

    /// S-matrix at one (k, λ) point as a nested list.
    fn smatrix(&self, k: Complex64, lam: f64) -> PyResult<Vec<Vec<Complex64>>> {
        let sample = propagate(&self.model, k, lam, &self.grid).map_err(convert)?;
        let s = extract_smatrix(&sample, k, lam, &self.model.channels)
            .map_err(convert)?
            .s;
        let n = self.model.channels.n();
        Ok((0..n)
            .map(|i| (0..n).map(|j| s[(i, j)]).collect())
            .collect())
    }

    /// Polish a zero of det F from the initial guess k0.
    #[pyo3(signature = (k0, lam, tol=1e-8, max_iter=60))]
    fn newton(
        &self,
        py: Python<'_>,
        k0: Complex64,
        lam: f64,
        tol: f64,
        max_iter: usize,
    ) -> PyResult<PyObject> {
        let root =
            newton_complex(&self.model, lam, k0, &self.grid, tol, max_iter).map_err(convert)?;
        root_to_py(py, &root)
    }

    /// Bound states on the positive imaginary axis up to k_max.
    #[pyo3(signature = (lam, k_max=5.0))]
    fn bound_states(&self, py: Python<'_>, lam: f64, k_max: f64) -> PyResult<Vec<PyObject>> {
        scan_bound_states(&self.model, lam, k_max, &self.grid)
            .iter()
            .map(|r| root_to_py(py, r))
            .collect()
    }

    /// Trace the det F = 0 branch through a bound state at lambda0 in the
    /// given λ direction; returns the points, with branch points flagged.
    #[pyo3(signature = (k0, lambda0, direction, lambda_min, lambda_max, max_points=20000))]
    #[allow(clippy::too_many_arguments)]
    fn trace(
        &self,
        py: Python<'_>,
        k0: Complex64,
        lambda0: f64,
        direction: f64,
        lambda_min: f64,
        lambda_max: f64,
        max_points: usize,
    ) -> PyResult<Vec<PyObject>> {
        let start =
            newton_complex(&self.model, lambda0, k0, &self.grid, 1e-8, 60).map_err(convert)?;
        let opts = ContinuationOpts {
            lambda_bounds: (lambda_min, lambda_max),
            max_points,
            ..Default::default()
        };
        let branch = trace_branch(&self.model, &start, lambda0, direction, &self.grid, &opts)
            .map_err(convert)?;
        branch.points.iter().map(|p| point_to_py(py, p)).collect()
    }

    /// Continue through a located branch point onto the crossing branch;
    /// returns both switched arms as point lists. `incoming_tangent`
    /// identifies the branch already traced through the point (so it is
    /// not returned again); the default is the imaginary-axis direction,
    /// which is the incoming branch at every threshold crossing.
    #[pyo3(signature = (k_bp, lambda_bp, lambda_min, lambda_max, max_points=500,
                        incoming_tangent=(0.0, 1.0, 0.0)))]
    #[allow(clippy::too_many_arguments)]
    fn switch(
        &self,
        py: Python<'_>,
        k_bp: Complex64,
        lambda_bp: f64,
        lambda_min: f64,
        lambda_max: f64,
        max_points: usize,
        incoming_tangent: (f64, f64, f64),
    ) -> PyResult<Vec<Vec<PyObject>>> {
        use ccres::continuation::ResidualMap;
        let x = nalgebra::Vector3::new(k_bp.re, k_bp.im, lambda_bp);
        let g = ScatteringMap {
            model: &self.model,
            grid: &self.grid,
        }
        .eval(&x)
        .map_err(convert)?;
        let t_in =
            nalgebra::Vector3::new(incoming_tangent.0, incoming_tangent.1, incoming_tangent.2);
        if t_in.norm() < 1e-12 {
            return Err(PyValueError::new_err("incoming_tangent must be nonzero"));
        }
        let bp = ContinuationPoint {
            x,
            tangent: t_in.normalize(),
            residual_norm: g.norm(),
            flag: PointFlag::BranchPoint,
        };
        let dirs = switch_branch(&bp, &self.model, &self.grid).map_err(convert)?;
        let map = ScatteringMap {
            model: &self.model,
            grid: &self.grid,
        };
        let opts = ContinuationOpts {
            lambda_bounds: (lambda_min, lambda_max),
            max_points,
            ..Default::default()
        };
        dirs.into_iter()
            .map(|tangent| {
                let start = ContinuationPoint {
                    x,
                    tangent,
                    residual_norm: bp.residual_norm,
                    flag: PointFlag::Start,
                };
                trace_from(&map, start, &opts, 0, None)
                    .points
                    .iter()
                    .map(|p| point_to_py(py, p))
                    .collect()
            })
            .collect()
    }
}

/// ĵ_l, n̂_l and ĥ±_l with derivatives, as (value, derivative) pairs.
#[pyfunction]
fn riccati(kind: &str, l: u32, z: Complex64) -> PyResult<(Complex64, Complex64)> {
    use ccres::special::{riccati_h, riccati_j, riccati_n, HankelBranch};
    let v = match kind {
        "j" => riccati_j(l, z),
        "n" => riccati_n(l, z),
        "h+" => riccati_h(l, HankelBranch::Outgoing, z),
        "h-" => riccati_h(l, HankelBranch::Incoming, z),
        other => return Err(PyValueError::new_err(format!("unknown kind `{other}`"))),
    }
    .map_err(convert)?;
    Ok((v.value, v.derivative))
}

/// Closed-form s-wave square-well S-matrix (test oracle).
#[pyfunction]
fn square_well_smatrix(depth: f64, radius: f64, mu: f64, k: Complex64) -> PyResult<Complex64> {
    ccres::oracles::square_well_smatrix(depth, radius, mu, k).map_err(convert)
}

#[pymodule]
fn ccres_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<System>()?;
    m.add_function(wrap_pyfunction!(riccati, m)?)?;
    m.add_function(wrap_pyfunction!(square_well_smatrix, m)?)?;
    Ok(())
}
