//! Python bindings: datasets, auxiliary fits, the IB solver, the synthetic
//! bias model, plug-in covariance and the study runner.

use std::path::PathBuf;
use std::sync::Arc;

use jie_core::estimators::EstimatorParams;
use jie_core::harness::{self, StudyConfig, StudyReport};
use jie_core::ibcore::{self, Damping, Projection, SimulatedBinding};
use jie_core::inference;
use jie_core::models::{LinearSimulator, LogisticSimulator, NegBinSimulator, PseudoValueForm};
use jie_core::{estimator_by_name, Dataset, Design, Error, FitOptions, FitStatus, SeedId, Simulator};
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Dimension { .. } | Error::UnknownEstimator(_) | Error::Parse(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> PyResult<DMatrix<f64>> {
    let ncol = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncol) {
        return Err(PyValueError::new_err(format!("{what}: rows have different lengths")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncol, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

fn status_name(s: &FitStatus) -> &'static str {
    match s {
        FitStatus::Converged => "converged",
        FitStatus::MaxIterations { .. } => "max-iterations",
        FitStatus::Separation { .. } => "separation",
        FitStatus::DispersionCapped => "dispersion-capped",
    }
}

/// Responses `y` and design rows `x`.
#[pyclass(name = "Dataset", module = "jie", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(y: Vec<f64>, x: Vec<Vec<f64>>) -> PyResult<Self> {
        let design = Arc::new(Design::new(matrix(&x, "x")?));
        Ok(PyDataset { inner: Dataset::new(y, design).map_err(to_py)? })
    }

    /// Parses the `y,x1..xp` CSV layout.
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(PyDataset { inner: Dataset::read_csv(text.as_bytes()).map_err(to_py)? })
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(to_py)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.y.clone()
    }

    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        rows(self.inner.x())
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, p={})", self.inner.n(), self.inner.p())
    }
}

#[pyclass(name = "Fit", module = "jie", frozen, get_all)]
struct PyFit {
    theta: Vec<f64>,
    status: String,
    iterations: usize,
}

#[pymethods]
impl PyFit {
    fn __repr__(&self) -> String {
        format!("Fit(theta={:?}, status='{}', iterations={})", self.theta, self.status, self.iterations)
    }
}

impl From<jie_core::Fit> for PyFit {
    fn from(f: jie_core::Fit) -> Self {
        PyFit { status: status_name(&f.status).into(), theta: f.theta, iterations: f.iterations }
    }
}

fn params(delta: f64, lam: f64, pseudo_form: &str) -> PyResult<EstimatorParams> {
    let form = match pseudo_form {
        "printed" => PseudoValueForm::Printed,
        "symmetric" => PseudoValueForm::Symmetric,
        other => return Err(PyValueError::new_err(format!("unknown pseudo_form `{other}`"))),
    };
    Ok(EstimatorParams { delta, pseudo_form: form, lambda: lam })
}

/// Fits the named auxiliary estimator.
#[pyfunction]
#[pyo3(signature = (name, data, delta = 0.05, lam = 0.0, pseudo_form = "printed"))]
fn fit(name: &str, data: &PyDataset, delta: f64, lam: f64, pseudo_form: &str) -> PyResult<PyFit> {
    let est = estimator_by_name(name, &params(delta, lam, pseudo_form)?, &FitOptions::default()).map_err(to_py)?;
    Ok(est.fit(&data.inner, None).map_err(to_py)?.into())
}

#[pyfunction]
fn estimator_names() -> Vec<&'static str> {
    jie_core::estimators::ESTIMATOR_NAMES.to_vec()
}

#[pyclass(name = "IBConfig", module = "jie", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PyIBConfig {
    h: usize,
    j: u64,
    max_iterations: usize,
    tolerance: f64,
    /// One value for constant damping, several for a per-iteration schedule.
    epsilon: Vec<f64>,
    warm_start: bool,
    stall_window: usize,
}

#[pymethods]
impl PyIBConfig {
    #[new]
    #[pyo3(signature = (h = 100, j = 0, max_iterations = 200, tolerance = 1e-6, epsilon = vec![1.0], warm_start = true, stall_window = 0))]
    fn new(h: usize, j: u64, max_iterations: usize, tolerance: f64, epsilon: Vec<f64>, warm_start: bool, stall_window: usize) -> PyResult<Self> {
        let c = PyIBConfig { h, j, max_iterations, tolerance, epsilon, warm_start, stall_window };
        c.core().validate().map_err(to_py)?;
        Ok(c)
    }

    fn __repr__(&self) -> String {
        format!(
            "IBConfig(h={}, j={}, max_iterations={}, tolerance={:e}, epsilon={:?})",
            self.h, self.j, self.max_iterations, self.tolerance, self.epsilon
        )
    }
}

impl PyIBConfig {
    fn core(&self) -> ibcore::IBConfig {
        let damping = match self.epsilon.as_slice() {
            [e] => Damping::Constant(*e),
            list => Damping::Schedule(list.to_vec()),
        };
        ibcore::IBConfig {
            h: self.h,
            j: self.j,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            damping,
            projection: Projection::ClipToBox,
            warm_start: self.warm_start,
            final_defect: true,
            stall_window: self.stall_window,
        }
    }
}

#[pyclass(name = "IBResult", module = "jie", frozen)]
struct PyIBResult {
    inner: ibcore::IBResult,
}

#[pymethods]
impl PyIBResult {
    #[getter]
    fn theta_hat(&self) -> Vec<f64> {
        self.inner.theta_hat.values.clone()
    }

    #[getter]
    fn trace(&self) -> Vec<Vec<f64>> {
        self.inner.trace.clone()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn stalled(&self) -> bool {
        self.inner.stalled
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn fit_calls(&self) -> usize {
        self.inner.fit_calls
    }

    #[getter]
    fn defect(&self) -> Option<f64> {
        self.inner.defect
    }

    /// Geometric contraction rate fitted to the residuals, or `None`.
    fn rate(&self) -> Option<f64> {
        match ibcore::convergence_rate(&self.inner.residuals, &self.inner.theta_hat.values) {
            Ok(ibcore::RateEstimate::Geometric { epsilon, .. }) => Some(epsilon),
            Ok(ibcore::RateEstimate::Immediate) => Some(0.0),
            Err(_) => None,
        }
    }

    fn summary_line(&self) -> String {
        self.inner.summary_line()
    }

    fn trace_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_trace_csv(&mut buf).map_err(to_py)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    fn __repr__(&self) -> String {
        format!("IBResult({})", self.inner.summary_line())
    }
}

/// `π̂(θ) = θ + Mθ + s + c + Lθ + r(θ) + noise_scale · z`.
#[pyclass(name = "SyntheticBiasModel", module = "jie", frozen)]
struct PySynthetic {
    inner: ibcore::SyntheticBiasModel,
}

#[pymethods]
impl PySynthetic {
    /// `remainder` is `None`, `("tanh", s)` or `("square", s)`.
    #[new]
    #[pyo3(signature = (m, s, l = None, c = None, remainder = None, noise_scale = 0.0))]
    fn new(
        m: Vec<Vec<f64>>,
        s: Vec<f64>,
        l: Option<Vec<Vec<f64>>>,
        c: Option<Vec<f64>>,
        remainder: Option<(String, f64)>,
        noise_scale: f64,
    ) -> PyResult<Self> {
        let p = s.len();
        let l = match l {
            Some(l) => matrix(&l, "l")?,
            None => DMatrix::zeros(p, p),
        };
        let c = DVector::from_vec(c.unwrap_or_else(|| vec![0.0; p]));
        let r = match remainder.as_ref().map(|(k, v)| (k.as_str(), *v)) {
            None => ibcore::Remainder::Zero,
            Some(("tanh", v)) => ibcore::Remainder::Tanh(v),
            Some(("square", v)) => ibcore::Remainder::Square(v),
            Some((k, _)) => return Err(PyValueError::new_err(format!("unknown remainder `{k}`"))),
        };
        let inner = ibcore::SyntheticBiasModel::new(matrix(&m, "m")?, DVector::from_vec(s), l, c, r, noise_scale).map_err(to_py)?;
        Ok(PySynthetic { inner })
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    fn expected(&self, theta: Vec<f64>) -> PyResult<Vec<f64>> {
        check_len(&theta, self.inner.p())?;
        Ok(self.inner.expected(&theta))
    }

    fn jacobian(&self, theta: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        check_len(&theta, self.inner.p())?;
        Ok(rows(&self.inner.jacobian(&theta)))
    }

    /// One draw of the statistic.
    #[pyo3(signature = (theta, seed = 0))]
    fn sample(&self, theta: Vec<f64>, seed: u64) -> PyResult<Vec<f64>> {
        Ok(self.inner.simulate(&theta, &SeedId::new(seed)).map_err(to_py)?.y)
    }

    /// Average of `h` draws on the streams `ω_{h'+jH}` under `seed`.
    #[pyo3(signature = (theta, h, j = 0, seed = 0))]
    fn pi_bar(&self, theta: Vec<f64>, h: usize, j: u64, seed: u64) -> PyResult<Vec<f64>> {
        let aux = jie_core::estimators::Identity;
        let pb = ibcore::pi_bar(&theta, &aux, &self.inner, j, h, &SeedId::new(seed)).map_err(to_py)?;
        Ok(pb.mean)
    }

    /// Fixed point `(I + M)⁻¹ (π̂_obs − s)` of the noiseless affine model.
    fn affine_solution(&self, pi_obs: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.affine_solution(&pi_obs).map_err(to_py)
    }

    /// Runs the IB against this model's simulated binding.
    #[pyo3(signature = (pi_obs, config, seed = 0))]
    fn solve(&self, py: Python<'_>, pi_obs: Vec<f64>, config: &PyIBConfig, seed: u64) -> PyResult<PyIBResult> {
        let cfg = config.core();
        let inner = py
            .detach(|| {
                let aux = jie_core::estimators::Identity;
                let binding = SimulatedBinding { aux: &aux, sim: &self.inner, j: cfg.j, h: cfg.h, base: SeedId::new(seed) };
                ibcore::solve_jie(&pi_obs, &binding, &cfg, None, None)
            })
            .map_err(to_py)?;
        Ok(PyIBResult { inner })
    }

    /// Finite-difference Jacobian of the simulated binding at `theta`.
    #[pyo3(signature = (theta, h, step, j = 0, seed = 0))]
    fn estimate_b(&self, theta: Vec<f64>, h: usize, step: f64, j: u64, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let aux = jie_core::estimators::Identity;
        let binding = SimulatedBinding { aux: &aux, sim: &self.inner, j, h, base: SeedId::new(seed) };
        Ok(rows(&inference::estimate_b(&theta, &binding, step).map_err(to_py)?))
    }
}

fn check_len(theta: &[f64], p: usize) -> PyResult<()> {
    if theta.len() != p {
        return Err(PyValueError::new_err(format!("theta must have {p} values, got {}", theta.len())));
    }
    Ok(())
}

/// JIE for a regression model on the observed design. `model` is
/// `logistic`, `negbin` (θ = (β, α)) or `linear`. Returns the observed
/// auxiliary fit and the IB result.
#[pyfunction]
#[pyo3(signature = (estimator, observed, model, config, seed = 0, sigma = 1.0, delta = 0.05, lam = 0.0))]
#[allow(clippy::too_many_arguments)]
fn solve_jie(
    py: Python<'_>,
    estimator: &str,
    observed: &PyDataset,
    model: &str,
    config: &PyIBConfig,
    seed: u64,
    sigma: f64,
    delta: f64,
    lam: f64,
) -> PyResult<(PyFit, PyIBResult)> {
    let design = Arc::clone(&observed.inner.design);
    let sim: Box<dyn Simulator> = match model {
        "logistic" => Box::new(LogisticSimulator { design }),
        "negbin" => Box::new(NegBinSimulator { design }),
        "linear" => Box::new(LinearSimulator { design, sigma }),
        other => return Err(PyValueError::new_err(format!("unknown model `{other}`"))),
    };
    let aux = estimator_by_name(estimator, &params(delta, lam, "printed")?, &FitOptions::default()).map_err(to_py)?;
    let cfg = config.core();
    let bounds = (model == "negbin").then(|| {
        let mut b = vec![(f64::NEG_INFINITY, f64::INFINITY); sim.dim()];
        *b.last_mut().expect("negbin has alpha") = (1e-6, 1e4);
        b
    });
    let (obs, res) = py
        .detach(|| ibcore::solve_jie_simulated(&observed.inner, aux.as_ref(), sim.as_ref(), &cfg, &SeedId::new(seed), bounds.as_deref()))
        .map_err(to_py)?;
    Ok((obs.into(), PyIBResult { inner: res }))
}

/// `Ξ_H = (1 + 1/H) B⁻¹ Σ B⁻ᵀ`; `h = None` gives the `H → ∞` limit.
#[pyfunction]
#[pyo3(signature = (b, sigma, h = None))]
fn xi_h(b: Vec<Vec<f64>>, sigma: Vec<Vec<f64>>, h: Option<usize>) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(&inference::xi_h(&matrix(&b, "b")?, &matrix(&sigma, "sigma")?, h).map_err(to_py)?))
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    harness::PRESETS.iter().map(|(n, _)| *n).collect()
}

#[pyfunction]
fn preset_source(name: &str) -> PyResult<&'static str> {
    harness::preset_source(name).ok_or_else(|| PyValueError::new_err(format!("unknown preset `{name}`")))
}

/// Parses a study config; raises `ValueError` with the line and key on error.
#[pyfunction]
fn validate_config(toml: &str) -> PyResult<String> {
    let cfg = StudyConfig::from_toml_str(toml).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(cfg.to_toml_string())
}

#[pyclass(name = "StudyReport", module = "jie", frozen)]
struct PyReport {
    inner: StudyReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn truth(&self) -> Vec<f64> {
        self.inner.truth.clone()
    }

    #[getter]
    fn estimators(&self) -> Vec<String> {
        self.inner.results.iter().map(|r| r.name.clone()).collect()
    }

    #[getter]
    fn wall_clock(&self) -> f64 {
        self.inner.wall_clock.as_secs_f64()
    }

    /// Rows `(estimator, coord, bias, rmse, mc_se)`, coordinates 1-based.
    fn summary(&self) -> Vec<(String, usize, f64, f64, f64)> {
        let mut out = Vec::new();
        for r in &self.inner.results {
            let s = &r.summary;
            for k in 0..s.bias.len() {
                out.push((r.name.clone(), k + 1, s.bias[k], s.rmse[k], s.mc_se[k]));
            }
        }
        out
    }

    /// Estimates of one estimator, one row per replication.
    fn estimates(&self, name: &str) -> PyResult<Vec<Vec<f64>>> {
        let r = self.result(name)?;
        Ok(r.rows.iter().map(|(_, e)| e.clone()).collect())
    }

    /// Percentage of exact zeros among the estimates of `name`.
    fn zero_proportion(&self, name: &str) -> PyResult<f64> {
        Ok(self.result(name)?.summary.zero_proportion)
    }

    /// Writes the CSV, report and SVG files; returns their paths.
    fn write(&self, out: PathBuf) -> PyResult<Vec<PathBuf>> {
        harness::write_outputs(&self.inner, &out).map_err(to_py)
    }
}

impl PyReport {
    fn result(&self, name: &str) -> PyResult<&harness::EstimatorResult> {
        self.inner.result(name).ok_or_else(|| PyValueError::new_err(format!("no estimator `{name}` in this study")))
    }
}

/// Runs a study from TOML source or a preset name.
#[pyfunction]
#[pyo3(signature = (config, seed = None, workers = None, replications = None))]
fn run_study(py: Python<'_>, config: &str, seed: Option<u64>, workers: Option<usize>, replications: Option<usize>) -> PyResult<PyReport> {
    let src = harness::preset_source(config).unwrap_or(config);
    let mut cfg = StudyConfig::from_toml_str(src).map_err(|e| PyValueError::new_err(e.to_string()))?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    if let Some(r) = replications {
        cfg.r = r;
        cfg.trace_replication = cfg.trace_replication.min(r);
        cfg.validate().map_err(|e| PyValueError::new_err(e.to_string()))?;
    }
    let inner = py.detach(|| harness::run_study(&cfg)).map_err(to_py)?;
    Ok(PyReport { inner })
}

#[pymodule]
fn jie(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyFit>()?;
    m.add_class::<PyIBConfig>()?;
    m.add_class::<PyIBResult>()?;
    m.add_class::<PySynthetic>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(estimator_names, m)?)?;
    m.add_function(wrap_pyfunction!(solve_jie, m)?)?;
    m.add_function(wrap_pyfunction!(xi_h, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(preset_source, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    Ok(())
}
