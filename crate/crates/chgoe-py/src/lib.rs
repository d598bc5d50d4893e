//! Python bindings: module `chgoe`.

use chgoe::distributions::{self as dist, FiniteSpec};
use chgoe::microscopic as micro;
use chgoe::montecarlo::{self as mc, SamplerConfig};
use chgoe::pfaffian::AntisymmetricMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: chgoe::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn spec(p: usize, k: usize, t: f64) -> PyResult<FiniteSpec> {
    FiniteSpec::new(p, k, t).map_err(err)
}

/// Gap probability E_{p,2k}(t): no eigenvalue below t.
#[pyfunction]
fn gap_finite(p: usize, k: usize, t: f64) -> PyResult<f64> {
    dist::gap_finite(spec(p, k, t)?).map_err(err)
}

/// Density of the smallest eigenvalue at t.
#[pyfunction]
fn smallest_finite(p: usize, k: usize, t: f64) -> PyResult<f64> {
    dist::smallest_finite(spec(p, k, t)?).map_err(err)
}

#[pyfunction]
fn closed_form_k0(p: usize, t: f64) -> PyResult<f64> {
    dist::closed_form_k0(p, t).map_err(err)
}

#[pyfunction]
fn closed_form_k1(p: usize, t: f64) -> PyResult<f64> {
    dist::closed_form_k1(p, t).map_err(err)
}

/// Hard-edge gap probability in u = 4pt.
#[pyfunction]
fn gap_micro(k: usize, u: f64) -> PyResult<f64> {
    micro::gap_micro(k, u).map_err(err)
}

#[pyfunction]
fn smallest_micro(k: usize, u: f64) -> PyResult<f64> {
    micro::smallest_micro(k, u).map_err(err)
}

#[pyfunction]
fn micro_density(nu: u32, u: f64) -> PyResult<f64> {
    micro::micro_density(nu, u).map_err(err)
}

/// Pfaffian of an antisymmetric matrix given as a list of rows.
/// Only the strict upper triangle is read.
#[pyfunction]
fn pfaffian(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let m = AntisymmetricMatrix::from_fn(n, |i, j| rows[i][j]).map_err(err)?;
    Ok(m.pfaffian())
}

/// Tricomi U(a, b, z) for z > 0.
#[pyfunction]
fn tricomi_u(a: f64, b: f64, z: f64) -> PyResult<f64> {
    chgoe::specfun::tricomi_u(a, b, z).map(|v| v.to_f64()).map_err(err)
}

/// Smallest eigenvalues of W Wᵀ for real Gaussian p×n matrices, optionally
/// correlated by `correlation` (list of rows, p×p).
#[pyfunction]
#[pyo3(signature = (p, n, num_samples, seed=42, correlation=None, microscopic=false))]
fn sample_smallest(
    p: usize,
    n: usize,
    num_samples: usize,
    seed: u64,
    correlation: Option<Vec<Vec<f64>>>,
    microscopic: bool,
) -> PyResult<Vec<f64>> {
    let mut cfg = SamplerConfig::new(p, n, num_samples, seed).map_err(err)?;
    if let Some(rows) = correlation {
        if rows.len() != p || rows.iter().any(|r| r.len() != p) {
            return Err(PyValueError::new_err("correlation must be p x p"));
        }
        let c = mc::DMatrix::from_fn(p, p, |i, j| rows[i][j]);
        cfg = cfg.with_correlation(c).map_err(err)?;
    }
    let mut batch = mc::sample_batch(&cfg).map_err(err)?;
    if microscopic {
        batch = mc::microscopic_rescale(&batch);
    }
    Ok(batch.smallest_eigenvalues)
}

#[pymodule]
#[pyo3(name = "chgoe")]
fn chgoe_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gap_finite, m)?)?;
    m.add_function(wrap_pyfunction!(smallest_finite, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_k0, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_k1, m)?)?;
    m.add_function(wrap_pyfunction!(gap_micro, m)?)?;
    m.add_function(wrap_pyfunction!(smallest_micro, m)?)?;
    m.add_function(wrap_pyfunction!(micro_density, m)?)?;
    m.add_function(wrap_pyfunction!(pfaffian, m)?)?;
    m.add_function(wrap_pyfunction!(tricomi_u, m)?)?;
    m.add_function(wrap_pyfunction!(sample_smallest, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
