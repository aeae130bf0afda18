//! Python bindings: scenario runs, convergence studies, stability scans and
//! the closed-form reference solutions.

// the pyfunction macro expands `?` on values that are already `PyErr`
#![allow(clippy::useless_conversion)]

use std::collections::HashMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use aplm_core::cli::config::RunConfig;
use aplm_core::reference::{self, convergence_study};
use aplm_core::stability::{scan, ScanGrid};
use aplm_core::stepper::Formulation;
use aplm_core::tableaux::{builtin, builtin_names};
use aplm_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn config(preset: Option<&str>, settings: Option<HashMap<String, String>>) -> PyResult<RunConfig> {
    let mut cfg = match preset {
        Some(p) => RunConfig::preset(p).map_err(to_py)?,
        None => RunConfig::default(),
    };
    let mut keys: Vec<(String, String)> = settings.unwrap_or_default().into_iter().collect();
    // `preset` first so it cannot wipe the other settings
    keys.sort_by_key(|(k, _)| k != "preset");
    for (k, v) in keys {
        cfg.set(&k, &v).map_err(to_py)?;
    }
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Names of the built-in tableaus.
#[pyfunction]
fn tableau_names() -> Vec<&'static str> {
    builtin_names()
}

/// Order-condition residuals of a built-in tableau.
#[pyfunction]
fn order_residuals(name: &str, order: usize) -> PyResult<Vec<f64>> {
    Ok(builtin(name).map_err(to_py)?.order_residuals(order))
}

/// Run a scenario to its final time. Settings use the configuration keys.
#[pyfunction]
#[pyo3(signature = (preset=None, settings=None))]
fn run<'py>(
    py: Python<'py>,
    preset: Option<&str>,
    settings: Option<HashMap<String, String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(preset, settings)?;
    let setup = cfg.build().map_err(to_py)?;
    let sim = py.allow_threads(|| setup.run()).map_err(to_py)?;
    let out = PyDict::new_bound(py);
    out.set_item("x", sim.problem.grid.centers())?;
    out.set_item("u", sim.current().u_interior().to_vec())?;
    out.set_item("v", sim.current().v_interior().to_vec())?;
    out.set_item("alpha", sim.problem.alpha_cells())?;
    out.set_item("t", sim.time())?;
    out.set_item("dt", setup.dt)?;
    out.set_item("steps", sim.steps)?;
    out.set_item("theta_max", sim.theta_max)?;
    out.set_item("mass_drift", sim.max_mass_drift)?;
    Ok(out)
}

/// Grid-refinement study; returns the report columns.
#[pyfunction]
#[pyo3(signature = (scheme, formulation="ap-explicit", eps=1.0, base_n=128, levels=3, preset="test1", settings=None))]
#[allow(clippy::too_many_arguments)]
fn converge<'py>(
    py: Python<'py>,
    scheme: &str,
    formulation: &str,
    eps: f64,
    base_n: usize,
    levels: usize,
    preset: &str,
    settings: Option<HashMap<String, String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = config(Some(preset), settings)?;
    cfg.set("scheme", scheme).map_err(to_py)?;
    cfg.set("formulation", formulation).map_err(to_py)?;
    cfg.eps = eps;
    let alpha = cfg.alpha.at(0.5 * (cfg.x_lo + cfg.x_hi));
    let rep = py
        .allow_threads(|| {
            convergence_study(scheme, formulation, eps, alpha, base_n, levels, &|n| {
                let mut c = cfg.clone();
                c.nx = n;
                let sim = c.build()?.run()?;
                Ok((sim.current().u_interior().to_vec(), sim.current().v_interior().to_vec()))
            })
        })
        .map_err(to_py)?;
    let out = PyDict::new_bound(py);
    out.set_item("n", rep.n)?;
    out.set_item("err_u", rep.err_u)?;
    out.set_item("rate_u", rep.rate_u)?;
    out.set_item("err_v", rep.err_v)?;
    out.set_item("rate_v", rep.rate_v)?;
    Ok(out)
}

/// Stability scan; returns `(z_r, z_i, max_modulus, stable)` tuples.
#[pyfunction]
#[pyo3(signature = (scheme, formulation, eps_alpha, zr_min=1e-2, zr_max=1e3, nr=40, zi_min=0.0, zi_max=3.0, ni=40))]
#[allow(clippy::too_many_arguments)]
fn stability_scan(
    scheme: &str,
    formulation: &str,
    eps_alpha: f64,
    zr_min: f64,
    zr_max: f64,
    nr: usize,
    zi_min: f64,
    zi_max: f64,
    ni: usize,
) -> PyResult<Vec<(f64, f64, f64, bool)>> {
    let tab = builtin(scheme).map_err(to_py)?;
    let f: Formulation = formulation.parse().map_err(to_py)?;
    let grid = ScanGrid { zr_min, zr_max, nr, zi_min, zi_max, ni };
    let pts = scan(&tab, f, eps_alpha, &grid).map_err(to_py)?;
    Ok(pts.iter().map(|p| (p.z_r, p.z_i, p.max_modulus, p.stable)).collect())
}

#[pyfunction]
fn exact_erf_riemann(x: f64, t: f64, rho_l: f64, rho_r: f64) -> PyResult<f64> {
    if !(t > 0.0) {
        return Err(PyValueError::new_err("t must be positive"));
    }
    Ok(reference::exact_erf_riemann(x, t, rho_l, rho_r))
}

#[pyfunction]
fn barenblatt(x: f64, t: f64) -> f64 {
    reference::barenblatt(x, t)
}

#[pymodule]
fn aplm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tableau_names, m)?)?;
    m.add_function(wrap_pyfunction!(order_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(converge, m)?)?;
    m.add_function(wrap_pyfunction!(stability_scan, m)?)?;
    m.add_function(wrap_pyfunction!(exact_erf_riemann, m)?)?;
    m.add_function(wrap_pyfunction!(barenblatt, m)?)?;
    Ok(())
}
