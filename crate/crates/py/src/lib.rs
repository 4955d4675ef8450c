//! Python bindings for `coupling_core`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use coupling_core::fock::{self, BasisLabel};
use coupling_core::optimizer::{self, LevelMap, SolveOptions};
use coupling_core::povm;
use coupling_core::schwinger::{self, ShiftParameter};
use coupling_core::simulate;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn optimize_err(e: optimizer::OptimizeError) -> PyErr {
    match e {
        optimizer::OptimizeError::NonPositiveMu(_)
        | optimizer::OptimizeError::EmptyGrid
        | optimizer::OptimizeError::BadEnergy(_) => value_err(e),
        _ => runtime_err(e),
    }
}

/// Two-mode state over labels `(n, d)`.
#[pyclass(name = "TwoModeState", module = "coupling", skip_from_py_object)]
#[derive(Clone)]
pub struct PyTwoModeState {
    inner: fock::TwoModeState,
}

#[pymethods]
impl PyTwoModeState {
    #[new]
    fn new(n_max: u32, d_max: u32) -> Self {
        Self {
            inner: fock::TwoModeState::new(n_max, d_max),
        }
    }

    #[staticmethod]
    fn vacuum() -> Self {
        Self {
            inner: fock::TwoModeState::vacuum(),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (text, normalize = false))]
    fn from_json(text: &str, normalize: bool) -> PyResult<Self> {
        fock::TwoModeState::from_json(text, normalize)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n_max(&self) -> u32 {
        self.inner.n_max()
    }

    #[getter]
    fn d_max(&self) -> u32 {
        self.inner.d_max()
    }

    fn set(&mut self, n: u32, d: i32, amplitude: Complex64) -> PyResult<()> {
        self.inner.set(BasisLabel::new(n, d), amplitude).map_err(value_err)
    }

    fn amplitude(&self, n: u32, d: i32) -> Complex64 {
        self.inner.amplitude(BasisLabel::new(n, d))
    }

    fn norm_sqr(&self) -> f64 {
        self.inner.norm_sqr()
    }

    fn normalize(&self) -> PyResult<Self> {
        self.inner.normalize().map(|inner| Self { inner }).map_err(value_err)
    }

    fn energy(&self) -> f64 {
        fock::energy_expectation(&self.inner)
    }

    /// Eigenspace weights `{d: γ_d}`.
    fn weights(&self) -> PyResult<Vec<(i32, f64)>> {
        let dec = fock::decompose(&self.inner).map_err(value_err)?;
        Ok(dec.weights.into_iter().collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "TwoModeState(n_max={}, d_max={}, entries={})",
            self.inner.n_max(),
            self.inner.d_max(),
            self.inner.len()
        )
    }
}

/// Real amplitudes `ψ_d` over a contiguous range of `d`.
#[pyclass(name = "PhaseVector", module = "coupling", skip_from_py_object)]
#[derive(Clone)]
pub struct PyPhaseVector {
    inner: povm::PhaseVector,
}

#[pymethods]
impl PyPhaseVector {
    #[new]
    #[pyo3(signature = (d_min, amps, normalize = false))]
    fn new(d_min: i64, amps: Vec<f64>, normalize: bool) -> PyResult<Self> {
        let inner = if normalize {
            povm::PhaseVector::from_unnormalized(d_min, amps)
        } else {
            povm::PhaseVector::new(d_min, amps)
        };
        inner.map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        povm::PhaseVector::from_json(text)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn d_min(&self) -> i64 {
        self.inner.d_min()
    }

    #[getter]
    fn d_max(&self) -> i64 {
        self.inner.d_max()
    }

    #[getter]
    fn amps(&self) -> Vec<f64> {
        self.inner.amps().to_vec()
    }

    fn energy(&self) -> f64 {
        self.inner.energy(&LevelMap::ground())
    }

    fn average_cost(&self) -> f64 {
        povm::average_cost(&self.inner).average_cost
    }

    fn density(&self, phi: f64, theta: f64) -> f64 {
        povm::conditional_density(&self.inner, phi, theta)
    }

    fn is_single_peaked(&self, grid: usize) -> bool {
        simulate::peak_check(&self.inner, grid)
    }

    /// `n(d) = 0` embedding taken to the lab frame.
    fn lab_state(&self) -> PyResult<PyTwoModeState> {
        povm::lab_frame_state(&self.inner, &LevelMap::ground())
            .map(|inner| PyTwoModeState { inner })
            .map_err(runtime_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "PhaseVector(d_min={}, d_max={})",
            self.inner.d_min(),
            self.inner.d_max()
        )
    }
}

#[pyclass(name = "OptimizationResult", module = "coupling", frozen)]
pub struct PyOptimizationResult {
    #[pyo3(get)]
    mu_prime: f64,
    #[pyo3(get)]
    branch: usize,
    #[pyo3(get)]
    lambda_: f64,
    #[pyo3(get)]
    energy: f64,
    #[pyo3(get)]
    average_cost: f64,
    #[pyo3(get)]
    eigen_residual: f64,
    #[pyo3(get)]
    d_max: usize,
    vector: povm::PhaseVector,
}

impl From<optimizer::OptimizationResult> for PyOptimizationResult {
    fn from(r: optimizer::OptimizationResult) -> Self {
        Self {
            mu_prime: r.mu_prime,
            branch: r.branch_index,
            lambda_: r.lambda,
            energy: r.energy,
            average_cost: r.average_cost,
            eigen_residual: r.eigen_residual,
            d_max: r.d_max,
            vector: r.vector,
        }
    }
}

#[pymethods]
impl PyOptimizationResult {
    #[getter]
    fn vector(&self) -> PyPhaseVector {
        PyPhaseVector {
            inner: self.vector.clone(),
        }
    }

    #[getter]
    fn delta_psi(&self) -> f64 {
        self.average_cost.sqrt()
    }

    fn __repr__(&self) -> String {
        format!(
            "OptimizationResult(mu_prime={}, branch={}, lambda={}, energy={}, average_cost={})",
            self.mu_prime, self.branch, self.lambda_, self.energy, self.average_cost
        )
    }
}

#[pyclass(name = "ScalingFit", module = "coupling", frozen, get_all)]
pub struct PyScalingFit {
    gamma: f64,
    slope: f64,
    residual_rms: f64,
    points_used: usize,
}

#[pyclass(name = "BesselCheck", module = "coupling", frozen, get_all)]
pub struct PyBesselCheck {
    lambda_prime: f64,
    lambda_from_root: f64,
    eigen_lambda: f64,
    recursion_residual: f64,
    max_deviation: f64,
}

#[pyclass(name = "EstimatorStats", module = "coupling", frozen, get_all)]
pub struct PyEstimatorStats {
    circular_mean: Option<f64>,
    circular_stderr: Option<f64>,
    mean_cost: f64,
    cost_stderr: f64,
    delta_psi_hat: f64,
}

fn options(d_max: Option<usize>) -> SolveOptions {
    d_max.map(SolveOptions::pinned).unwrap_or_default()
}

/// Stationary state `branch` at multiplier `mu_prime`.
#[pyfunction]
#[pyo3(signature = (mu_prime, branch = 0, d_max = None))]
fn solve(mu_prime: f64, branch: usize, d_max: Option<usize>) -> PyResult<PyOptimizationResult> {
    optimizer::solve_with(mu_prime, &LevelMap::ground(), branch, &options(d_max))
        .map(Into::into)
        .map_err(optimize_err)
}

#[pyfunction]
#[pyo3(signature = (mu_prime, count, d_max = None))]
fn solve_branches(mu_prime: f64, count: usize, d_max: Option<usize>) -> PyResult<Vec<PyOptimizationResult>> {
    optimizer::solve_branches(mu_prime, &LevelMap::ground(), count, &options(d_max))
        .map(|rs| rs.into_iter().map(Into::into).collect())
        .map_err(optimize_err)
}

#[pyfunction]
fn solve_half_line(mu_prime: f64) -> PyResult<PyOptimizationResult> {
    optimizer::solve_half_line(mu_prime, &SolveOptions::default())
        .map(Into::into)
        .map_err(optimize_err)
}

/// `(mu_prime, branch, lambda, energy, cost)`
type SweepRow = (f64, usize, f64, f64, f64);

/// Sweep rows sorted by energy.
#[pyfunction]
#[pyo3(signature = (grid, branches = 1))]
fn sweep(py: Python<'_>, grid: Vec<f64>, branches: usize) -> PyResult<Vec<SweepRow>> {
    let outcome = py
        .detach(|| optimizer::sweep(&grid, &LevelMap::ground(), branches))
        .map_err(optimize_err)?;
    Ok(outcome
        .results
        .iter()
        .map(|r| (r.mu_prime, r.branch_index, r.lambda, r.energy, r.average_cost))
        .collect())
}

#[pyfunction]
fn log_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    optimizer::log_grid(lo, hi, steps)
}

#[pyfunction]
#[pyo3(signature = (points, lo = 10.0, hi = 1000.0, fix_slope = None))]
fn fit_power_law(points: Vec<(f64, f64)>, lo: f64, hi: f64, fix_slope: Option<f64>) -> PyResult<PyScalingFit> {
    let f = optimizer::fit_power_law(&points, (lo, hi), fix_slope).map_err(value_err)?;
    Ok(PyScalingFit {
        gamma: f.gamma,
        slope: f.slope,
        residual_rms: f.residual_rms,
        points_used: f.points_used,
    })
}

#[pyfunction]
fn bessel_check(mu_prime: f64) -> PyResult<PyBesselCheck> {
    let c = optimizer::bessel_check(mu_prime).map_err(optimize_err)?;
    Ok(PyBesselCheck {
        lambda_prime: c.lambda_prime,
        lambda_from_root: c.lambda_from_root,
        eigen_lambda: c.eigen_lambda,
        recursion_residual: c.recursion_residual,
        max_deviation: c.max_deviation,
    })
}

#[pyfunction]
fn bessel_j(nu: f64, x: f64) -> PyResult<f64> {
    optimizer::bessel_j(nu, x).map_err(value_err)
}

/// `exp(−iψJ_x)` applied to a state whose window holds whole photon-number blocks.
#[pyfunction]
fn coupling_evolution(state: &PyTwoModeState, psi: f64) -> PyResult<PyTwoModeState> {
    let shift = ShiftParameter::new(psi).map_err(value_err)?;
    schwinger::coupling_evolution(&state.inner, shift)
        .map(|inner| PyTwoModeState { inner })
        .map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (state, inverse = false))]
fn rotate_to_z(state: &PyTwoModeState, inverse: bool) -> PyResult<PyTwoModeState> {
    schwinger::rotate_to_z(&state.inner.block_closure(), inverse)
        .map(|inner| PyTwoModeState { inner })
        .map_err(value_err)
}

#[pyfunction]
fn phase_vector_of_state(state: &PyTwoModeState) -> PyResult<PyPhaseVector> {
    povm::phase_vector_of_state(&state.inner)
        .map(|inner| PyPhaseVector { inner })
        .map_err(value_err)
}

/// Largest gap between the reduced and the two-mode outcome densities.
#[pyfunction]
#[pyo3(signature = (state, theta, grid = povm::DEFAULT_GRID))]
fn route_discrepancy(state: &PyTwoModeState, theta: f64, grid: usize) -> PyResult<f64> {
    povm::route_discrepancy(&state.inner, theta, grid).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (pv, theta, count, seed = 0))]
fn sample(py: Python<'_>, pv: &PyPhaseVector, theta: f64, count: usize, seed: u64) -> PyResult<Vec<f64>> {
    let inner = pv.inner.clone();
    py.detach(|| simulate::sample(&inner, theta, count, seed))
        .map(|run| run.samples)
        .map_err(value_err)
}

#[pyfunction]
fn estimator_stats(samples: Vec<f64>, theta: f64) -> PyResult<PyEstimatorStats> {
    let run = simulate::SampleRun {
        theta_true: theta,
        samples,
        seed: 0,
        grid_size: 0,
    };
    let s = simulate::estimator_stats(&run).map_err(value_err)?;
    Ok(PyEstimatorStats {
        circular_mean: s.circular_mean,
        circular_stderr: s.circular_stderr,
        mean_cost: s.mean_cost,
        cost_stderr: s.cost_stderr,
        delta_psi_hat: s.delta_psi_hat,
    })
}

#[pymodule]
pub fn coupling(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTwoModeState>()?;
    m.add_class::<PyPhaseVector>()?;
    m.add_class::<PyOptimizationResult>()?;
    m.add_class::<PyScalingFit>()?;
    m.add_class::<PyBesselCheck>()?;
    m.add_class::<PyEstimatorStats>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_branches, m)?)?;
    m.add_function(wrap_pyfunction!(solve_half_line, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(log_grid, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_check, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_evolution, m)?)?;
    m.add_function(wrap_pyfunction!(rotate_to_z, m)?)?;
    m.add_function(wrap_pyfunction!(phase_vector_of_state, m)?)?;
    m.add_function(wrap_pyfunction!(route_discrepancy, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(estimator_stats, m)?)?;
    Ok(())
}
