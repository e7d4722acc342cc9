//! Python bindings. Structured results come back as plain dicts and lists.

use ::stopflow as core;
use core::dsge::{random_dsge_start, simulate_dsge, Preset, ShockSequence};
use core::dynamics::{find_periodic_orbits, DetectionConfig, ORBIT_GRID};
use core::hitting_map::{build_t, default_k_max, fixed_points as t_fixed_points, ladder};
use core::{PlanarParams, PlanarState};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Parameters of the planar map. Give exactly one of `a` and `beta`.
#[pyclass(name = "Params", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct Params(PlanarParams);

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (lam, a=None, beta=None))]
    fn new(lam: f64, a: Option<f64>, beta: Option<f64>) -> PyResult<Self> {
        let p = match (a, beta) {
            (Some(a), None) => PlanarParams::new(lam, a),
            (None, Some(b)) => PlanarParams::from_beta(lam, b),
            _ => return Err(PyValueError::new_err("give exactly one of a and beta")),
        };
        p.map(Params).map_err(err)
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda()
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    #[getter]
    fn x_star(&self) -> f64 {
        self.0.x_star()
    }

    fn __repr__(&self) -> String {
        format!("Params(lam={}, a={}, beta={})", self.0.lambda(), self.0.a(), self.0.beta())
    }
}

fn state(x: f64, s: f64) -> PyResult<PlanarState> {
    PlanarState::new(x, s).map_err(err)
}

#[pyfunction]
fn classify<'py>(py: Python<'py>, p: &Params) -> PyResult<Bound<'py, PyAny>> {
    let label = core::classify(&p.0).map_err(err)?;
    let attractor = core::predict_attractor(&p.0).map_err(err)?;
    to_py(
        py,
        &serde_json::json!({
            "case": label.case,
            "descriptor": label.descriptor,
            "predicted_period": attractor.predicted_period(),
            "attractor": attractor,
        }),
    )
}

#[pyfunction]
fn predict_period(p: &Params) -> PyResult<Option<u32>> {
    core::predict_period(&p.0).map(|q| q.period()).map_err(err)
}

#[pyfunction]
fn step(p: &Params, x: f64, s: f64) -> PyResult<(f64, f64)> {
    let st = core::step(&p.0, state(x, s)?);
    Ok((st.x(), st.s()))
}

/// `n + 1` states starting with `(x0, s0)`.
#[pyfunction]
fn simulate(p: &Params, x0: f64, s0: f64, n: usize) -> PyResult<Vec<(f64, f64)>> {
    let traj = core::dynamics::simulate(&p.0, state(x0, s0)?, n);
    Ok(traj.iter().map(|st| (st.x(), st.s())).collect())
}

#[pyfunction]
#[pyo3(signature = (p, x0, s0, transient=10_000, window=1_000, tol=1e-9, period_max=64))]
fn detect_attractor<'py>(
    py: Python<'py>,
    p: &Params,
    x0: f64,
    s0: f64,
    transient: u64,
    window: usize,
    tol: f64,
    period_max: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = DetectionConfig { transient, window, tol, period_max, seed: 0 };
    cfg.validate().map_err(err)?;
    let report = core::detect_attractor(&p.0, state(x0, s0)?, &cfg).map_err(err)?;
    to_py(py, &report)
}

/// Breakpoint ladder, linear pieces and fixed points of the first-hitting map.
#[pyfunction]
#[pyo3(signature = (p, kmax=None))]
fn hitting_map<'py>(py: Python<'py>, p: &Params, kmax: Option<u32>) -> PyResult<Bound<'py, PyAny>> {
    let k = match kmax {
        Some(k) => k,
        None => default_k_max(&p.0).map_err(err)?,
    };
    let lad = ladder(&p.0, k).map_err(err)?;
    let t = build_t(&p.0, k).map_err(err)?;
    let fps = t_fixed_points(&p.0, k).map_err(err)?;
    to_py(py, &serde_json::json!({ "ladder": lad, "pieces": t.pieces, "fixed_points": fps }))
}

#[pyfunction]
#[pyo3(signature = (p, period, x_min, x_max, grid=ORBIT_GRID))]
fn periodic_orbits(p: &Params, period: u32, x_min: f64, x_max: f64, grid: usize) -> PyResult<Vec<(f64, f64)>> {
    let pts = find_periodic_orbits(&p.0, period, (x_min, x_max), grid).map_err(err)?;
    Ok(pts.iter().map(|st| (st.x(), st.s())).collect())
}

/// Unshocked trajectory of a preset model as `(y, u, v, s, sigma)` rows.
#[pyfunction]
#[pyo3(signature = (preset, n, seed=0, scale=1000.0))]
fn dsge_simulate(preset: &str, n: usize, seed: u64, scale: f64) -> PyResult<Vec<(f64, f64, f64, f64, f64)>> {
    let preset: Preset = preset.parse().map_err(err)?;
    let params = preset.params();
    let st0 = random_dsge_start(&params, seed, 0, scale);
    let traj = simulate_dsge(&params, st0, n, &ShockSequence::zero()).map_err(err)?;
    Ok(traj.iter().map(|st| (st.y, st.u, st.v, st.s, st.sigma)).collect())
}

#[pymodule]
fn stopflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(predict_period, m)?)?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(detect_attractor, m)?)?;
    m.add_function(wrap_pyfunction!(hitting_map, m)?)?;
    m.add_function(wrap_pyfunction!(periodic_orbits, m)?)?;
    m.add_function(wrap_pyfunction!(dsge_simulate, m)?)?;
    Ok(())
}
