//! Python bindings. Curves and warps cross the boundary as plain lists of
//! floats wrapped in two small classes; results come back as dicts.

use curvereg_core::fixtures;
use curvereg_core::multalign::{
    karcher_mean, kmean_align, procrustes_align, AlignOptions, AlignmentResult, Engine, KarcherOptions,
};
use curvereg_core::register::{dtw_l2, elastic_align as core_elastic, DpOptions, PairRegistration};
use curvereg_core::{
    fr_distance as core_fr, group_action as core_action, make_warp, srvf_transform, Grid, SampledFunction,
    ValidateOptions, Warp, WarpFamily,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: curvereg_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A function sampled on a strictly increasing grid.
#[pyclass(name = "Curve", module = "curvereg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCurve {
    inner: SampledFunction,
}

#[pymethods]
impl PyCurve {
    #[new]
    fn new(grid: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        let grid = Grid::new(grid).map_err(err)?;
        Ok(PyCurve { inner: SampledFunction::new(grid, values).map_err(err)? })
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid().points().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }

    fn eval(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }

    fn norm(&self) -> f64 {
        curvereg_core::l2_norm(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let (lo, hi) = self.inner.domain();
        format!("Curve({} points on [{lo}, {hi}])", self.inner.len())
    }
}

fn family(name: &str) -> PyResult<WarpFamily> {
    Ok(match name {
        "scale" => WarpFamily::Scale,
        "shift" => WarpFamily::Shift,
        "affine" => WarpFamily::Affine,
        "one_param" => WarpFamily::OneParam,
        other => return Err(PyValueError::new_err(format!("unknown warp family {other:?}"))),
    })
}

/// A time-warping function.
#[pyclass(name = "Warp", module = "curvereg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWarp {
    inner: Warp,
}

#[pymethods]
impl PyWarp {
    /// Member of a parametric family: `scale`, `shift`, `affine` or `one_param`.
    #[staticmethod]
    #[pyo3(signature = (family_name, params, domain = (0.0, 1.0)))]
    fn family(family_name: &str, params: Vec<f64>, domain: (f64, f64)) -> PyResult<Self> {
        let inner = make_warp(family(family_name)?, &params, domain).map_err(err)?;
        Ok(PyWarp { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (domain = (0.0, 1.0)))]
    fn identity(domain: (f64, f64)) -> PyResult<Self> {
        Ok(PyWarp { inner: Warp::identity(domain).map_err(err)? })
    }

    /// Strictly increasing piecewise-linear warp through `(grid[i], values[i])`.
    #[staticmethod]
    fn piecewise_linear(grid: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        let grid = Grid::new(grid).map_err(err)?;
        Ok(PyWarp { inner: Warp::piecewise_linear(grid, values).map_err(err)? })
    }

    fn eval(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }

    fn slope(&self, t: f64) -> f64 {
        self.inner.slope(t)
    }

    fn sample(&self, grid: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.sample(&Grid::new(grid).map_err(err)?))
    }

    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }

    /// `self ∘ inner`.
    fn compose(&self, inner: &PyWarp) -> PyResult<PyWarp> {
        Ok(PyWarp { inner: self.inner.compose(&inner.inner).map_err(err)? })
    }

    fn invert(&self) -> PyResult<PyWarp> {
        Ok(PyWarp { inner: self.inner.invert().map_err(err)? })
    }

    #[pyo3(signature = (points = 1025))]
    fn deviation_from_identity(&self, points: usize) -> f64 {
        self.inner.deviation_from_identity(points)
    }

    fn is_valid(&self) -> bool {
        self.inner.validate(&ValidateOptions::default()).pass
    }

    fn __repr__(&self) -> String {
        let (lo, hi) = self.inner.domain();
        format!("Warp({:?} on [{lo}, {hi}])", self.inner.family())
    }
}

fn curves_of(curves: &[PyRef<'_, PyCurve>]) -> Vec<SampledFunction> {
    curves.iter().map(|c| c.inner.clone()).collect()
}

fn dp_options(grid_size: usize, penalty: f64) -> PyResult<DpOptions> {
    let o = DpOptions::default().with_grid_size(grid_size).with_penalty(penalty);
    o.validate().map_err(err)?;
    Ok(o)
}

fn pair_dict<'py>(py: Python<'py>, r: PairRegistration) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("cost", r.cost)?;
    d.set_item("value", r.value)?;
    d.set_item("aligned", PyCurve { inner: r.aligned })?;
    d.set_item("warp", PyWarp { inner: r.warp })?;
    Ok(d)
}

fn result_dict<'py>(py: Python<'py>, r: AlignmentResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("template", PyCurve { inner: r.template })?;
    d.set_item("aligned", r.aligned.into_iter().map(|inner| PyCurve { inner }).collect::<Vec<_>>())?;
    d.set_item("warps", r.warps.into_iter().map(|inner| PyWarp { inner }).collect::<Vec<_>>())?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("objective_trace", r.objective_trace)?;
    d.set_item("variance_before", r.variance_before)?;
    d.set_item("variance_after", r.variance_after)?;
    d.set_item("converged", r.converged)?;
    Ok(d)
}

/// Square-root velocity transform `sign(x') sqrt(|x'|)`.
#[pyfunction]
fn srvf(curve: &PyCurve) -> PyCurve {
    PyCurve { inner: srvf_transform(&curve.inner).into_function() }
}

/// Action of a warp on an SRVF: `(q ∘ h) sqrt(h')`.
#[pyfunction]
fn group_action(q: &PyCurve, warp: &PyWarp) -> PyResult<PyCurve> {
    let q = curvereg_core::Srvf::new(q.inner.clone());
    Ok(PyCurve { inner: core_action(&q, &warp.inner).map_err(err)?.into_function() })
}

/// Fisher–Rao distance, the L² distance between SRVFs.
#[pyfunction]
fn fr_distance(a: &PyCurve, b: &PyCurve) -> PyResult<f64> {
    core_fr(&a.inner, &b.inner).map_err(err)
}

/// Elastic registration of `moving` onto `target`; adds the amplitude distance.
#[pyfunction]
#[pyo3(signature = (target, moving, grid_size = 129, penalty = 0.0))]
fn elastic_align<'py>(
    py: Python<'py>,
    target: &PyCurve,
    moving: &PyCurve,
    grid_size: usize,
    penalty: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = dp_options(grid_size, penalty)?;
    let (r, distance) = py.detach(|| core_elastic(&target.inner, &moving.inner, &opts)).map_err(err)?;
    let d = pair_dict(py, r)?;
    d.set_item("distance", distance)?;
    Ok(d)
}

/// Least-squares lattice registration of `moving` onto `target`.
#[pyfunction]
#[pyo3(signature = (target, moving, grid_size = 129, penalty = 0.0))]
fn l2_align<'py>(
    py: Python<'py>,
    target: &PyCurve,
    moving: &PyCurve,
    grid_size: usize,
    penalty: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = dp_options(grid_size, penalty)?;
    let r = py.detach(|| dtw_l2(&target.inner, &moving.inner, &opts)).map_err(err)?;
    pair_dict(py, r)
}

/// Multiple alignment: `procrustes` (with `engine` "elastic" or "l2") or `karcher`.
#[pyfunction]
#[pyo3(signature = (curves, method = "karcher", engine = "elastic", grid_size = 129, penalty = 0.0, max_iter = 20))]
fn align<'py>(
    py: Python<'py>,
    curves: Vec<PyRef<'py, PyCurve>>,
    method: &str,
    engine: &str,
    grid_size: usize,
    penalty: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cs = curves_of(&curves);
    let dp = dp_options(grid_size, penalty)?;
    let align = AlignOptions { max_iter, ..AlignOptions::default() };
    let r = match method {
        "karcher" => {
            let opts = KarcherOptions { dp, align, ..KarcherOptions::default() };
            py.detach(|| karcher_mean(&cs, &opts))
        }
        "procrustes" => {
            let engine = match engine {
                "elastic" => Engine::Elastic(dp),
                "l2" => Engine::DtwL2(dp),
                other => return Err(PyValueError::new_err(format!("unknown engine {other:?}"))),
            };
            py.detach(|| procrustes_align(&cs, &engine, &align))
        }
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    result_dict(py, r.map_err(err)?)
}

/// k-mean alignment with elastic registration; returns labels and templates.
#[pyfunction]
#[pyo3(signature = (curves, k, seed = 0, grid_size = 129, max_iter = 20))]
fn kmeans_align<'py>(
    py: Python<'py>,
    curves: Vec<PyRef<'py, PyCurve>>,
    k: usize,
    seed: u64,
    grid_size: usize,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cs = curves_of(&curves);
    let engine = Engine::Elastic(dp_options(grid_size, 0.0)?);
    let align = AlignOptions { max_iter, ..AlignOptions::default() };
    let r = py.detach(|| kmean_align(&cs, k, &engine, &align, seed)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("labels", r.labels)?;
    let templates: Vec<PyCurve> = r.per_cluster.into_iter().map(|c| PyCurve { inner: c.template }).collect();
    d.set_item("templates", templates)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("converged", r.converged)?;
    Ok(d)
}

/// Seeded panel of randomly warped two-bump curves and their generating warps.
#[pyfunction]
#[pyo3(signature = (n = 20, points = 257, strength = 0.4, seed = 0))]
fn two_bump_panel(n: usize, points: usize, strength: f64, seed: u64) -> PyResult<(Vec<PyCurve>, Vec<PyWarp>)> {
    let p = fixtures::warped_panel(fixtures::two_bump, n, points, strength, seed).map_err(err)?;
    Ok((
        p.curves.into_iter().map(|inner| PyCurve { inner }).collect(),
        p.warps.into_iter().map(|inner| PyWarp { inner }).collect(),
    ))
}

#[pymodule]
fn curvereg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurve>()?;
    m.add_class::<PyWarp>()?;
    m.add_function(wrap_pyfunction!(srvf, m)?)?;
    m.add_function(wrap_pyfunction!(group_action, m)?)?;
    m.add_function(wrap_pyfunction!(fr_distance, m)?)?;
    m.add_function(wrap_pyfunction!(elastic_align, m)?)?;
    m.add_function(wrap_pyfunction!(l2_align, m)?)?;
    m.add_function(wrap_pyfunction!(align, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans_align, m)?)?;
    m.add_function(wrap_pyfunction!(two_bump_panel, m)?)?;
    Ok(())
}
