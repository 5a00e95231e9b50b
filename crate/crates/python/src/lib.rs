//! Python bindings: `import collision_lab`.
//!
//! Exact probabilities come back as `fractions.Fraction`, structured results as
//! plain dicts with the same keys as the JSON reports.

use std::fmt::Display;

use collision_lab::asymptotics::classical_er_series;
use collision_lab::exact_dist::{prob_true_collision_first_exact, survival as survival_exact};
use collision_lab::expectations::{expectation_bounds, expectation_exact, DEFAULT_TOL};
use collision_lab::measures::{balance_measures, random_mapping_moments};
use collision_lab::montecarlo::{simulate_two_stage, simulate_waiting_times};
use collision_lab::{
    parse_rational, CollisionOrder, Error, ExactPolicy, Mode, Scalar, SimulationReport, SurvivalTable,
};
use collision_lab_cli::{AnalysisRequest, CliError};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn core_err(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyArithmeticError::new_err(e.to_string())
    }
}

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Core(e) => core_err(e),
        CliError::Invalid(_) | CliError::Input { .. } => PyValueError::new_err(e.to_string()),
        CliError::Output(_) => PyArithmeticError::new_err(e.to_string()),
    }
}

fn order(r: usize) -> PyResult<CollisionOrder> {
    CollisionOrder::new(r).map_err(core_err)
}

fn mode(s: &str) -> PyResult<Mode> {
    s.parse().map_err(core_err)
}

fn fraction<'py>(py: Python<'py>, q: &impl Display) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((q.to_string(),))
}

fn scalar<'py>(py: Python<'py>, s: &Scalar) -> PyResult<Bound<'py, PyAny>> {
    match s {
        Scalar::Exact(q) => fraction(py, q),
        Scalar::Approx(v) => Ok(v.into_pyobject(py)?.into_any()),
    }
}

/// Hands a serialized report to `json.loads`.
fn from_json<'py>(py: Python<'py>, text: serde_json::Result<String>) -> PyResult<Bound<'py, PyAny>> {
    let text = text.map_err(|e| PyArithmeticError::new_err(e.to_string()))?;
    py.import("json")?.getattr("loads")?.call1((text,))
}

/// Preimage sizes of an `(n, m)`-function: cell `i` holds `sizes[i]` balls.
#[pyclass(frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct Configuration {
    inner: collision_lab::Configuration,
}

#[pymethods]
impl Configuration {
    #[new]
    fn new(sizes: Vec<usize>) -> PyResult<Self> {
        Ok(Configuration { inner: collision_lab::Configuration::new(sizes).map_err(core_err)? })
    }

    /// `m` cells holding one ball each.
    #[staticmethod]
    fn classical(m: usize) -> PyResult<Self> {
        Ok(Configuration { inner: collision_lab::Configuration::classical(m).map_err(core_err)? })
    }

    /// `m` cells of `c` balls each.
    #[staticmethod]
    fn regular(c: usize, m: usize) -> PyResult<Self> {
        Ok(Configuration { inner: collision_lab::Configuration::regular(c, m).map_err(core_err)? })
    }

    #[getter]
    fn sizes(&self) -> Vec<usize> {
        self.inner.sizes().to_vec()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    fn admits_collision(&self, r: usize) -> PyResult<bool> {
        Ok(self.inner.admits_collision(order(r)?))
    }

    fn __repr__(&self) -> String {
        format!("Configuration({:?})", self.inner.sizes())
    }
}

/// `n` points thrown independently into cells with probabilities `p` (strings such as `"1/3"`).
#[pyclass(frozen)]
struct MultinomialModel {
    inner: collision_lab::MultinomialModel,
}

#[pymethods]
impl MultinomialModel {
    #[new]
    fn new(n: usize, p: Vec<String>) -> PyResult<Self> {
        let probs = p.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>().map_err(core_err)?;
        Ok(MultinomialModel { inner: collision_lab::MultinomialModel::new(n, probs).map_err(core_err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> Vec<String> {
        self.inner.probs().iter().map(|q| q.to_string()).collect()
    }

    fn __repr__(&self) -> String {
        format!("MultinomialModel(n={}, p={:?})", self.inner.n(), self.p())
    }
}

/// Exact `P(T > k)` as a `Fraction`.
#[pyfunction]
fn survival<'py>(
    py: Python<'py>,
    config: &Configuration,
    r: usize,
    mode: &str,
    k: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let (r, mode) = (order(r)?, self::mode(mode)?);
    let q = py.detach(|| survival_exact(&config.inner, r, mode, k)).map_err(core_err)?;
    fraction(py, &q)
}

/// `[P(T > k) for k in 0..=k_max]`; fractions unless `exact=False` or `n` is large.
#[pyfunction]
#[pyo3(signature = (config, r, mode, k_max, exact = true))]
fn survival_table<'py>(
    py: Python<'py>,
    config: &Configuration,
    r: usize,
    mode: &str,
    k_max: usize,
    exact: bool,
) -> PyResult<Vec<Bound<'py, PyAny>>> {
    let (r, mode) = (order(r)?, self::mode(mode)?);
    let policy = if exact { ExactPolicy::default() } else { ExactPolicy { max_exact_n: 0 } };
    let table = py.detach(|| SurvivalTable::compute(&config.inner, r, mode, k_max, policy)).map_err(core_err)?;
    table.entries.iter().map(|e| scalar(py, &e.prob)).collect()
}

/// Expected waiting time: `{"mode", "value", "exact", "error", "method"}`.
#[pyfunction]
#[pyo3(signature = (config, r, mode, tol = DEFAULT_TOL))]
fn expectation<'py>(
    py: Python<'py>,
    config: &Configuration,
    r: usize,
    mode: &str,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let (r, mode) = (order(r)?, self::mode(mode)?);
    let e = py.detach(|| expectation_exact(&config.inner, r, mode, tol)).map_err(core_err)?;
    let d = PyDict::new(py);
    d.set_item("mode", e.mode.to_string())?;
    d.set_item("value", e.to_f64())?;
    d.set_item("exact", e.value.exact().map(|q| fraction(py, q)).transpose()?)?;
    d.set_item("error", e.error)?;
    d.set_item("method", e.method)?;
    Ok(d)
}

/// Lower and upper bounds on the expectation.
#[pyfunction]
#[pyo3(signature = (config, r, mode, tol = DEFAULT_TOL))]
fn bounds<'py>(py: Python<'py>, config: &Configuration, r: usize, mode: &str, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let (r, mode) = (order(r)?, self::mode(mode)?);
    let b = py.detach(|| expectation_bounds(&config.inner, r, mode, tol)).map_err(core_err)?;
    from_json(py, serde_json::to_string(&b))
}

/// Exact `P(K_r = R_r)`: the first `r`-fold repetition uses `r` distinct balls.
#[pyfunction]
fn prob_true_collision_first<'py>(py: Python<'py>, config: &Configuration, r: usize) -> PyResult<Bound<'py, PyAny>> {
    let r = order(r)?;
    let q = py.detach(|| prob_true_collision_first_exact(&config.inner, r)).map_err(core_err)?;
    fraction(py, &q)
}

fn simulation_dict<'py>(py: Python<'py>, rep: &SimulationReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mode", rep.mode.to_string())?;
    d.set_item("r", rep.r.get())?;
    d.set_item("trials", rep.trials)?;
    d.set_item("seed", rep.seed)?;
    d.set_item("mean", rep.mean)?;
    d.set_item("stderr", rep.stderr)?;
    d.set_item("survival", rep.empirical_survival.iter().map(|&(_, p)| p).collect::<Vec<_>>())?;
    if let Some(x) = &rep.extras {
        d.set_item("true_collision_first", x.true_collision_first)?;
        d.set_item("repetition_first", x.repetition_first)?;
        d.set_item("no_collision", x.no_collision)?;
    }
    Ok(d)
}

/// Monte Carlo waiting times; a `MultinomialModel` gives the two-stage experiment.
/// Results depend only on `seed`, not on the thread count.
#[pyfunction]
#[pyo3(signature = (source, r, mode, trials = 10_000, seed = 0))]
fn simulate<'py>(
    py: Python<'py>,
    source: &Bound<'py, PyAny>,
    r: usize,
    mode: &str,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let (r, mode) = (order(r)?, self::mode(mode)?);
    let rep = if let Ok(c) = source.cast::<Configuration>() {
        let c = c.get().inner.clone();
        py.detach(|| simulate_waiting_times(&c, r, mode, trials, seed))
    } else if let Ok(m) = source.cast::<MultinomialModel>() {
        let m = m.get().inner.clone();
        py.detach(|| simulate_two_stage(&m, r, mode, trials, seed))
    } else {
        return Err(PyValueError::new_err("source must be a Configuration or a MultinomialModel"));
    };
    simulation_dict(py, &rep.map_err(core_err)?)
}

/// Chi-square statistic and logarithmic balance measures.
#[pyfunction]
#[pyo3(signature = (config, r = 2))]
fn measures<'py>(py: Python<'py>, config: &Configuration, r: usize) -> PyResult<Bound<'py, PyAny>> {
    let rep = balance_measures(&config.inner, order(r)?).map_err(core_err)?;
    from_json(py, serde_json::to_string(&rep))
}

/// Exact mean and variance of `S_r = sum_i C(X_i, r)` for a uniform random `(n, m)`-mapping.
#[pyfunction]
fn mapping_moments<'py>(
    py: Python<'py>,
    n: usize,
    m: usize,
    r: usize,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let mom = random_mapping_moments(n, m, order(r)?).map_err(core_err)?;
    Ok((fraction(py, &mom.mean)?, fraction(py, &mom.variance)?))
}

/// Asymptotic series for the classical `E(R_r)` with `m = n` cells.
#[pyfunction]
fn classical_series(n: usize, r: usize, terms: usize) -> PyResult<f64> {
    classical_er_series(n, order(r)?, terms).map_err(core_err)
}

/// Runs a request document (the `request` object of a report, as JSON) and returns the report text.
#[pyfunction]
fn run_request(py: Python<'_>, request_json: &str) -> PyResult<String> {
    let req: AnalysisRequest = collision_lab_cli::request_from_document(request_json).map_err(PyValueError::new_err)?;
    let req = req.with_default_modes().map_err(cli_err)?;
    py.detach(|| collision_lab_cli::run(&req)).map(|(text, _)| text).map_err(cli_err)
}

#[pymodule]
#[pyo3(name = "collision_lab")]
fn collision_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Configuration>()?;
    m.add_class::<MultinomialModel>()?;
    m.add_function(wrap_pyfunction!(survival, m)?)?;
    m.add_function(wrap_pyfunction!(survival_table, m)?)?;
    m.add_function(wrap_pyfunction!(expectation, m)?)?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    m.add_function(wrap_pyfunction!(prob_true_collision_first, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(measures, m)?)?;
    m.add_function(wrap_pyfunction!(mapping_moments, m)?)?;
    m.add_function(wrap_pyfunction!(classical_series, m)?)?;
    m.add_function(wrap_pyfunction!(run_request, m)?)?;
    Ok(())
}
