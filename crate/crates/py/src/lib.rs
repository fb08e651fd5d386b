//! Python bindings: the main types and operations of `permsum-core`.
//!
//! Structured inputs and reports travel as JSON strings (the same schemas
//! the CLI uses); scalars and small tuples cross natively.

use permsum_core::array::ArraySpec;
use permsum_core::bounds::{self, SrsSpec};
use permsum_core::error::Error;
use permsum_core::{exact, perm, stein};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py_err(err: Error) -> PyErr {
    match err.exit_code() {
        3 => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// A square array of independent cells, wrapped for Python.
#[pyclass(name = "Array")]
struct PyArray {
    inner: ArraySpec,
}

#[pymethods]
impl PyArray {
    /// Parses the JSON schema {"n": .., "cells": [[{"type": ..}, ..], ..]}.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: ArraySpec =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    /// An array of point masses taken from a square matrix.
    #[staticmethod]
    fn deterministic(matrix: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: ArraySpec::deterministic(&matrix).map_err(to_py_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// (Var(W), gamma, centered_ok) of the array as given.
    fn moments(&self) -> PyResult<(f64, f64, bool)> {
        let s = self.inner.summarize().map_err(to_py_err)?;
        Ok((s.var_w, s.gamma, s.centered_ok))
    }

    /// Centers and rescales to Var(W) = 1.
    fn standardized(&self) -> PyResult<Self> {
        let inner = self.inner.center().map_err(to_py_err)?.standardize().map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// The certified-bound report (JSON) after centering and standardizing.
    fn bound_report(&self) -> PyResult<String> {
        let standardized =
            self.inner.center().map_err(to_py_err)?.standardize().map_err(to_py_err)?;
        let report = bounds::theorem_bound(&standardized.summarize().map_err(to_py_err)?);
        to_json(&report)
    }

    /// Monte Carlo Kolmogorov distance to the standard normal on this array
    /// as-is: returns (ks, dkw_eps).
    fn mc_ks(&self, replicates: usize, seed: u64, alpha: f64) -> PyResult<(f64, f64)> {
        let est = perm::mc_ks_distance(&self.inner, replicates, seed, alpha).map_err(to_py_err)?;
        Ok((est.ks, est.dkw_eps))
    }

    /// `count` seeded draws of the permutation statistic, sorted.
    fn sample(&self, count: usize, seed: u64) -> PyResult<Vec<f64>> {
        Ok(perm::EmpiricalSample::draw(&self.inner, count, seed)
            .map_err(to_py_err)?
            .values()
            .to_vec())
    }
}

/// Standard normal distribution function.
#[pyfunction]
fn normal_cdf(x: f64) -> f64 {
    stein::normal_cdf(x)
}

/// Bounded solution of f'(w) - w f(w) = I(w <= z) - Phi(z) and its
/// derivative, evaluated at (z, w).
#[pyfunction]
fn stein_solution(z: f64, w: f64) -> (f64, f64) {
    stein::stein_solution(z, w)
}

/// Largest n at which gamma <= 1/c0 is impossible for a standardized array.
#[pyfunction]
fn trivial_threshold(c0: f64) -> u64 {
    bounds::trivial_threshold(c0)
}

/// Coefficient of gamma in the assembled Kolmogorov bound at (n, c0).
#[pyfunction]
fn final_coefficient(n: u64, c0: f64) -> PyResult<f64> {
    bounds::final_coefficient(n, c0).map_err(to_py_err)
}

/// Concentration-inequality constants at (n, m, c0), as JSON.
#[pyfunction]
fn concentration_constants(n: u64, m: u32, c0: f64) -> PyResult<String> {
    to_json(&bounds::concentration_constants(n, m, c0).map_err(to_py_err)?)
}

/// The sampling-without-replacement bound for a JSON spec
/// {"n": .., "k": .., "y": [cells]}.
#[pyfunction]
fn srs_bound(spec_json: &str) -> PyResult<f64> {
    let spec: SrsSpec =
        serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    bounds::srs_bound(&spec).map_err(to_py_err)
}

/// Exact law of the permutation statistic of a deterministic matrix, as
/// (value, probability) pairs.
#[pyfunction]
fn exact_w_distribution(matrix: Vec<Vec<f64>>) -> PyResult<Vec<(f64, f64)>> {
    Ok(exact::exact_w_distribution(&matrix).map_err(to_py_err)?.atoms().to_vec())
}

/// Exact Kolmogorov distance of a finite law to the standard normal.
#[pyfunction]
fn exact_ks(atoms: Vec<(f64, f64)>) -> PyResult<f64> {
    Ok(exact::AtomicDistribution::new(atoms).map_err(to_py_err)?.ks_to_normal())
}

/// Largest conditional residual of the linearity condition
/// E(W'-W | W) = -2/(n-1) W for a centered deterministic matrix.
#[pyfunction]
fn verify_linearity(matrix: Vec<Vec<f64>>) -> PyResult<f64> {
    exact::verify_linearity(&matrix).map_err(to_py_err)
}

#[pymodule]
fn permsum_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyArray>()?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(stein_solution, m)?)?;
    m.add_function(wrap_pyfunction!(trivial_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(final_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(concentration_constants, m)?)?;
    m.add_function(wrap_pyfunction!(srs_bound, m)?)?;
    m.add_function(wrap_pyfunction!(exact_w_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(exact_ks, m)?)?;
    m.add_function(wrap_pyfunction!(verify_linearity, m)?)?;
    m.add("CLT_CONSTANT", bounds::CLT_CONSTANT)?;
    Ok(())
}
