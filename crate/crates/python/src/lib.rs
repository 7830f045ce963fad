//! Python bindings. Reports come back as plain dicts with the same keys as
//! the CLI's JSON output.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ppw_core::domain::{DomainGrid, DomainPotential, Shape};
use ppw_core::gaussian;
use ppw_core::potentials::RadialPotential;
use ppw_core::radial::{self, WeightSign};
use ppw_core::riccati;
use ppw_core::special;
use ppw_core::verify;
use ppw_core::PpwError;

fn to_py(e: PpwError) -> PyErr {
    match e {
        PpwError::Range(_) | PpwError::Parse(_) | PpwError::Contract(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_dict<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn potential(spec: &str) -> PyResult<RadialPotential> {
    spec.parse().map_err(to_py)
}

/// `j²_{n/2,1} / j²_{n/2−1,1}`.
#[pyfunction]
fn ppw_constant(n: usize) -> PyResult<f64> {
    special::ppw_constant(n).map_err(to_py)
}

/// `(λ₁, λ₂)` of the ball `B_R` with a radial potential.
#[pyfunction]
#[pyo3(signature = (n, radius, potential_spec = "zero", tol = radial::DEFAULT_TOL))]
fn first_two(n: usize, radius: f64, potential_spec: &str, tol: f64) -> PyResult<(f64, f64)> {
    let f = radial::first_two(n, radius, &potential(potential_spec)?, tol).map_err(to_py)?;
    Ok((f.lambda1, f.lambda2))
}

#[pyfunction]
#[pyo3(signature = (n, potential_spec, rmin, rmax, steps, tol = radial::DEFAULT_TOL))]
fn scan_ratio<'py>(
    py: Python<'py>,
    n: usize,
    potential_spec: &str,
    rmin: f64,
    rmax: f64,
    steps: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let rows = verify::scan_ratio(n, &potential(potential_spec)?, rmin, rmax, steps, tol).map_err(to_py)?;
    to_dict(py, &rows)
}

#[pyfunction]
#[pyo3(signature = (sign, n, radius, tol = radial::DEFAULT_TOL))]
fn solve_gaussian<'py>(py: Python<'py>, sign: &str, n: usize, radius: f64, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let sign: WeightSign = sign.parse().map_err(to_py)?;
    to_dict(py, &gaussian::solve_gaussian(sign, n, radius, tol).map_err(to_py)?)
}

/// Second-eigenvalue comparison for an analytic planar shape such as
/// `"square:s=1"`, with Richardson extrapolation from `h` to `h/2`.
#[pyfunction]
#[pyo3(signature = (shape, h, potential_spec, comparison_spec, tol = 1e-10))]
fn verify_shape<'py>(
    py: Python<'py>,
    shape: &str,
    h: f64,
    potential_spec: &str,
    comparison_spec: &str,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let shape: Shape = shape.parse().map_err(to_py)?;
    let grid = DomainGrid::from_shape(shape, h).map_err(to_py)?;
    let v = DomainPotential::Radial(potential(potential_spec)?);
    let rep = verify::verify_second_eigenvalue_bound(&grid, &v, &potential(comparison_spec)?, tol).map_err(to_py)?;
    to_dict(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (samples = 10_000, seed = 0))]
fn ratio_shift_sweep<'py>(py: Python<'py>, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &riccati::ratio_shift_sweep(samples, seed).map_err(to_py)?)
}

#[pymodule]
fn ppw_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(ppw_constant, m)?)?;
    m.add_function(wrap_pyfunction!(first_two, m)?)?;
    m.add_function(wrap_pyfunction!(scan_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(solve_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(verify_shape, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_shift_sweep, m)?)?;
    Ok(())
}
