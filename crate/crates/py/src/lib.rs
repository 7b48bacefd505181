//! Python bindings: problems, single runs, batch experiments and bounds.

use std::path::PathBuf;

use hhl_core::analysis::{canonical_bound, enhanced_bound, enhanced_prefactor, BoundInputs, CanonicalBound};
use hhl_core::experiment::{describe_problem, run_experiment, ExperimentSpec};
use hhl_core::inversion::{AlphaModel, AnglePolicy};
use hhl_core::pipeline::{resolve_t0, Readout, RunConfig, RunResult, Variant};
use hhl_core::preprocess::{Sampling, T0Mode};
use hhl_core::qlsp::{generate_n2, generate_n4, ProblemFile, Qlsp, N4_EIGENVALUES};
use hhl_core::sim::{CMatrix, NoiseSpec};
use hhl_core::HhlError;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: HhlError) -> PyErr {
    match e {
        HhlError::InvalidArgument(_) | HhlError::InvalidProblem(_) | HhlError::SingularProblem(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn value_error(msg: impl Into<String>) -> PyErr {
    PyValueError::new_err(msg.into())
}

/// A Hermitian system `A|x> ∝ |b>`, rescaled so `‖A‖ ≤ 1`.
#[pyclass(name = "Problem", frozen)]
struct PyProblem {
    inner: Qlsp,
}

#[pymethods]
impl PyProblem {
    #[new]
    fn new(matrix: Vec<Vec<Complex64>>, b: Vec<Complex64>) -> PyResult<Self> {
        let n = matrix.len();
        if matrix.iter().any(|row| row.len() != n) {
            return Err(value_error("matrix must be square"));
        }
        let m = CMatrix::from_fn(n, n, |r, c| matrix[r][c]);
        Qlsp::new(m, b).map(|inner| Self { inner }).map_err(to_py)
    }

    /// Two-eigenvalue family with eigenvalues `lam` and `1 - lam`.
    #[staticmethod]
    fn n2(lam: f64) -> PyResult<Self> {
        generate_n2(lam).map(|inner| Self { inner }).map_err(to_py)
    }

    /// Four-dimensional problem on the fixed spectrum with `b` split over eigenvectors `pair`.
    #[staticmethod]
    #[pyo3(signature = (pair, seed=0))]
    fn n4(pair: (usize, usize), seed: u64) -> PyResult<Self> {
        generate_n4(N4_EIGENVALUES, pair, seed)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        ProblemFile::load(&path).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues()
    }

    #[getter]
    fn condition_number(&self) -> f64 {
        self.inner.condition_number()
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let m = self.inner.matrix();
        (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
    }

    #[getter]
    fn b(&self) -> Vec<Complex64> {
        self.inner.vector_b().to_vec()
    }

    /// Normalized classical solution `A⁻¹b / ‖A⁻¹b‖`.
    fn classical_solution(&self) -> Vec<Complex64> {
        hhl_core::qlsp::classical_solution(&self.inner).state_x
    }

    #[pyo3(signature = (k=3, t0=None, signed=true))]
    fn describe(&self, k: usize, t0: Option<f64>, signed: bool) -> PyResult<String> {
        let t0 = match t0 {
            Some(t) => t,
            None => {
                let mut cfg = RunConfig::new(Variant::Canonical);
                cfg.clock_bits = k;
                cfg.signed_mode = Some(signed);
                resolve_t0(&self.inner, &cfg).map_err(to_py)?.0
            }
        };
        Ok(describe_problem(&self.inner, k, t0, signed))
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(dimension={}, eigenvalues={:?})",
            self.inner.dimension(),
            self.inner.eigenvalues()
        )
    }
}

#[pyclass(name = "RunResult", frozen)]
struct PyRunResult {
    inner: RunResult,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn variant(&self) -> &'static str {
        self.inner.variant.name()
    }

    #[getter]
    fn fidelity(&self) -> f64 {
        self.inner.fidelity
    }

    #[getter]
    fn error(&self) -> f64 {
        self.inner.error
    }

    #[getter]
    fn success_probability(&self) -> f64 {
        self.inner.success_probability
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.inner.t0
    }

    #[getter]
    fn gate_count(&self) -> usize {
        self.inner.gate_report.gate_count
    }

    #[getter]
    fn two_qubit_count(&self) -> usize {
        self.inner.gate_report.two_qubit_count
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.gate_report.depth
    }

    /// `(pattern, θ)` for every controlled rotation.
    #[getter]
    fn rotations(&self) -> Vec<(u64, f64)> {
        self.inner.plan_used.rotations.clone()
    }

    /// `(grid_int, λ̃, weight)` per preprocessing estimate; `None` for canonical runs.
    #[getter]
    fn estimates(&self) -> Option<Vec<(u64, f64, f64)>> {
        self.inner
            .estimates
            .as_ref()
            .map(|s| s.entries.iter().map(|&e| e.into()).collect())
    }

    #[getter]
    fn solution_state(&self) -> Option<Vec<Complex64>> {
        self.inner.solution_state.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(variant={}, error={:.6}, fidelity={:.6}, success_probability={:.6})",
            self.inner.variant, self.inner.error, self.inner.fidelity, self.inner.success_probability
        )
    }
}

fn parse_t0_mode(s: &str) -> PyResult<T0Mode> {
    match s {
        "fixed" => Ok(T0Mode::Fixed),
        "iterative" => Ok(T0Mode::Iterative),
        _ => s
            .strip_prefix("explicit=")
            .and_then(|v| v.parse().ok())
            .map(T0Mode::Explicit)
            .ok_or_else(|| value_error(format!("t0_mode must be fixed, iterative or explicit=<t0>, got {s:?}"))),
    }
}

/// Runs one HHL instance and scores it against the classical solution.
#[pyfunction]
#[pyo3(signature = (
    problem, variant="enhanced", k=3, l=5, t0_mode="fixed", readout="exact", shots=4096, seed=0,
    noise_p=None, angle_policy="paper", alpha="linear", exact_preprocessing=false
))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    problem: &PyProblem,
    variant: &str,
    k: usize,
    l: usize,
    t0_mode: &str,
    readout: &str,
    shots: u64,
    seed: u64,
    noise_p: Option<f64>,
    angle_policy: &str,
    alpha: &str,
    exact_preprocessing: bool,
) -> PyResult<PyRunResult> {
    let variant: Variant = variant.parse().map_err(to_py)?;
    let mut cfg = RunConfig::new(variant);
    cfg.clock_bits = k;
    cfg.preprocess.bit_width = l;
    cfg.preprocess.t0_mode = parse_t0_mode(t0_mode)?;
    cfg.preprocess.sampling = if exact_preprocessing {
        Sampling::Exact
    } else {
        Sampling::Shots { shots, seed }
    };
    cfg.readout = match readout {
        "exact" => Readout::Exact,
        "swap" => Readout::SwapTest { shots, seed },
        "direct" => Readout::DirectSample { shots, seed },
        _ => return Err(value_error(format!("readout must be exact, swap or direct, got {readout:?}"))),
    };
    cfg.enhanced.angle_policy = match angle_policy {
        "paper" => AnglePolicy::WeightedAverage,
        "least-squares" => AnglePolicy::LeastSquares,
        "printed" => AnglePolicy::Printed,
        _ => return Err(value_error(format!("unknown angle policy {angle_policy:?}"))),
    };
    cfg.enhanced.alpha_model = match alpha {
        "linear" => AlphaModel::Linear,
        "exact" => AlphaModel::Exact,
        _ => return Err(value_error(format!("unknown alpha model {alpha:?}"))),
    };
    if let Some(p) = noise_p {
        cfg.noise = Some(NoiseSpec::new(p, seed).map_err(to_py)?);
    }
    let qlsp = problem.inner.clone();
    let result = py
        .detach(|| hhl_core::pipeline::run(&qlsp, &cfg))
        .map_err(to_py)?;
    Ok(PyRunResult { inner: result })
}

/// Runs a batch experiment described by an `ExperimentSpec` JSON document and writes its
/// CSV (and summary, if `summary_path` is set). Returns the summary as JSON.
#[pyfunction]
fn run_experiment_json(py: Python<'_>, spec_json: &str) -> PyResult<String> {
    let spec: ExperimentSpec = serde_json::from_str(spec_json).map_err(|e| value_error(e.to_string()))?;
    let outcome = py.detach(|| run_experiment(&spec)).map_err(to_py)?;
    serde_json::to_string(&outcome).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Default `RunConfig` as JSON, a starting point for `run_experiment_json` specs.
#[pyfunction]
#[pyo3(signature = (variant="canonical"))]
fn run_config_defaults_json(variant: &str) -> PyResult<String> {
    let cfg = RunConfig::new(variant.parse().map_err(to_py)?);
    serde_json::to_string(&cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// `√(1/(π² 2^{l-k}) + 16/45)`.
#[pyfunction(name = "enhanced_prefactor")]
fn py_enhanced_prefactor(l_minus_k: usize) -> f64 {
    enhanced_prefactor(l_minus_k)
}

#[pyfunction(name = "enhanced_bound")]
fn py_enhanced_bound(kappa: f64, t0: f64, k: usize, l: usize) -> PyResult<f64> {
    Ok(enhanced_bound(&BoundInputs::new(kappa, t0, k, l).map_err(to_py)?))
}

#[pyfunction(name = "canonical_bound")]
#[pyo3(signature = (kappa, t0, k, l, revised=false))]
fn py_canonical_bound(kappa: f64, t0: f64, k: usize, l: usize, revised: bool) -> PyResult<f64> {
    let which = if revised { CanonicalBound::Revised } else { CanonicalBound::Original };
    Ok(canonical_bound(&BoundInputs::new(kappa, t0, k, l).map_err(to_py)?, which))
}

#[pymodule]
fn hhl_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment_json, m)?)?;
    m.add_function(wrap_pyfunction!(run_config_defaults_json, m)?)?;
    m.add_function(wrap_pyfunction!(py_enhanced_prefactor, m)?)?;
    m.add_function(wrap_pyfunction!(py_enhanced_bound, m)?)?;
    m.add_function(wrap_pyfunction!(py_canonical_bound, m)?)?;
    m.add("VARIANTS", Variant::ALL.map(Variant::name).to_vec())?;
    Ok(())
}
