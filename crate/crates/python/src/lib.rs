//! Python bindings. Structured values cross the boundary as plain Python
//! dicts and lists (through JSON); analysts and mechanisms are classes.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde::de::DeserializeOwned;
use serde::Serialize;

use adalab::analysts::adversary::AdversarySpace;
use adalab::analysts::verify::verify_class;
use adalab::harness::{self, ExperimentConfig};
use adalab::privacy::{self, DepthResult, DpParams};
use adalab::truncation;
use adalab::{Distribution, MechanismKind, MechanismSpec, Schedule};

create_exception!(pyadalab, AdalabError, PyException, "Error raised by the adalab core.");

fn err(e: adalab::Error) -> PyErr {
    AdalabError::new_err(e.to_string())
}

/// Accepts a JSON string or any JSON-serializable Python object.
fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text = match obj.cast::<PyString>() {
        Ok(s) => s.to_string(),
        Err(_) => obj.py().import("json")?.call_method1("dumps", (obj,))?.extract::<String>()?,
    };
    serde_json::from_str(&text).map_err(|e| AdalabError::new_err(e.to_string()))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| AdalabError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn config(obj: &Bound<'_, PyAny>) -> PyResult<ExperimentConfig> {
    let cfg: ExperimentConfig = from_py(obj)?;
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// A validated analyst built from its JSON spec.
#[pyclass(name = "Analyst", module = "pyadalab", from_py_object)]
#[derive(Clone)]
struct PyAnalyst {
    inner: adalab::Analyst,
}

#[pymethods]
impl PyAnalyst {
    #[new]
    fn new(spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(Self { inner: adalab::Analyst::new(from_py(spec)?).map_err(err)? })
    }

    /// The analyst a config draws for `seed`.
    #[staticmethod]
    fn from_config(config_: &Bound<'_, PyAny>, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: config(config_)?.analyst_for(seed).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn query_dim(&self) -> usize {
        self.inner.query_dim()
    }

    fn describe(&self) -> String {
        self.inner.describe()
    }

    fn spec<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, self.inner.spec())
    }

    fn class_info<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, self.inner.class())
    }

    /// `ψ_t(h, a)` before any grid rounding.
    fn transition(&self, t: usize, h: Vec<f64>, a: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.transition(t, &h, &a).map_err(err)
    }

    /// Id of the query issued from state `h`.
    fn query_id(&self, h: Vec<f64>) -> String {
        self.inner.query_at(&h).id().to_string()
    }

    fn verify<'py>(&self, py: Python<'py>, trials: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &verify_class(&self.inner, trials, seed).map_err(err)?)
    }

    fn depth(&self, t_max: usize) -> PyResult<(f64, usize)> {
        let d = truncation::depth_for(&self.inner, t_max).map_err(err)?;
        Ok((d.k_real, d.k_int))
    }

    /// Runs the analyst against `mechanism` for each seed and checks
    /// the truncation identity at depth `k` (the class depth by default).
    #[pyo3(signature = (mechanism, distribution, n, t, seeds, k=None))]
    fn identity_check<'py>(
        &self,
        py: Python<'py>,
        mechanism: &Bound<'_, PyAny>,
        distribution: &Bound<'_, PyAny>,
        n: usize,
        t: usize,
        seeds: Vec<u64>,
        k: Option<usize>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let kind: MechanismKind = from_py(mechanism)?;
        let dist: Distribution = from_py(distribution)?;
        let r = truncation::identity_depth_check(&self.inner, kind, &dist, n, t, &seeds, k).map_err(err)?;
        to_py(py, &r)
    }

    fn __repr__(&self) -> String {
        format!("Analyst({})", self.inner.describe())
    }
}

/// A mechanism with its own noise stream.
#[pyclass(name = "Mechanism", module = "pyadalab")]
struct PyMechanism {
    inner: adalab::Mechanism,
}

#[pymethods]
impl PyMechanism {
    #[new]
    #[pyo3(signature = (kind, seed=0))]
    fn new(kind: &Bound<'_, PyAny>, seed: u64) -> PyResult<Self> {
        let kind: MechanismKind = from_py(kind)?;
        Ok(Self { inner: adalab::Mechanism::new(MechanismSpec { kind, seed }).map_err(err)? })
    }

    /// Answers a query whose empirical mean on `n` samples is `empirical`;
    /// returns `(answer, noise)`.
    fn answer(&mut self, empirical: Vec<f64>, n: usize) -> (Vec<f64>, Option<Vec<f64>>) {
        let r = self.inner.answer_empirical(empirical, n);
        (r.answer, r.noise)
    }

    fn __repr__(&self) -> String {
        format!("Mechanism({})", self.inner.kind().describe())
    }
}

#[pyfunction]
fn config_hash(config_: &Bound<'_, PyAny>) -> PyResult<String> {
    Ok(config(config_)?.hash())
}

/// Runs one session; returns `(transcript, result)`.
#[pyfunction]
fn run_session<'py>(
    py: Python<'py>,
    config_: &Bound<'_, PyAny>,
    seed: u64,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let (tr, res) = harness::run_session(&config(config_)?, seed).map_err(err)?;
    Ok((to_py(py, &tr)?, to_py(py, &res)?))
}

#[pyfunction]
fn scaling_sweep<'py>(py: Python<'py>, config_: &Bound<'_, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config(config_)?;
    let rows = py.detach(|| harness::scaling_sweep(&cfg)).map_err(err)?;
    to_py(py, &rows)
}

#[pyfunction]
fn continuous_mode_session<'py>(py: Python<'py>, config_: &Bound<'_, PyAny>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &harness::continuous_mode_session(&config(config_)?, seed).map_err(err)?)
}

#[pyfunction]
fn overfit_attack<'py>(py: Python<'py>, n: usize, t: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &harness::overfit_attack(n, t, seed).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (window=1, t=20, bits=16))]
fn counterexample_demo<'py>(py: Python<'py>, window: usize, t: usize, bits: u32) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &harness::counterexample_demo(window, t, bits).map_err(err)?)
}

/// `grid_places=None` keeps exact decimals; otherwise states are rounded to
/// that many places after each step.
#[pyfunction]
#[pyo3(signature = (lambda_, digits, t, grid_places=None, seed=0))]
fn interleaving_demo<'py>(
    py: Python<'py>,
    lambda_: f64,
    digits: u32,
    t: usize,
    grid_places: Option<u32>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let space = grid_places.map_or(AdversarySpace::Continuous, |places| AdversarySpace::DecimalGrid { places });
    to_py(py, &harness::interleaving_demo(lambda_, digits, t, space, seed).map_err(err)?)
}

#[pyfunction]
fn gaussian_dp(sigma: f64, n: usize, d_q: usize, beta: f64) -> PyResult<(f64, f64)> {
    let p = privacy::gaussian_dp(sigma, n, d_q, beta).map_err(err)?;
    Ok((p.alpha, p.beta))
}

#[pyfunction]
fn strong_compose(k: usize, alpha: f64, beta: f64, beta_prime: f64) -> PyResult<(f64, f64)> {
    let p = privacy::strong_compose(k, alpha, beta, beta_prime).map_err(err)?;
    Ok((p.alpha, p.beta))
}

#[pyfunction]
fn history_dp(alpha: f64, beta: f64, k: usize, beta_prime: f64) -> PyResult<(f64, f64)> {
    let mech = DpParams::new(alpha, beta).map_err(err)?;
    let p = privacy::history_dp(mech, DepthResult::from_int(k), beta_prime).map_err(err)?;
    Ok((p.alpha, p.beta))
}

fn depth_pair(d: DepthResult) -> (f64, usize) {
    (d.k_real, d.k_int)
}

#[pyfunction]
fn depth_progressive(lambda_: f64, l: f64, c1: f64, delta: f64) -> PyResult<(f64, usize)> {
    privacy::depth_progressive(lambda_, l, c1, delta).map(depth_pair).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (schedule, delta, c1, t_max=100_000))]
fn depth_conservative_a(schedule: &Bound<'_, PyAny>, delta: f64, c1: f64, t_max: usize) -> PyResult<(f64, usize)> {
    let s: Schedule = from_py(schedule)?;
    privacy::depth_conservative_a(&s, delta, c1, t_max).map(depth_pair).map_err(err)
}

#[pyfunction]
fn depth_conservative_b(lambda_: f64, radius: f64, delta: f64) -> PyResult<(f64, usize)> {
    privacy::depth_conservative_b(lambda_, radius, delta).map(depth_pair).map_err(err)
}

#[pyfunction]
fn depth_continuous(lambda_: f64, radius: f64, dim: usize, lambda_min: f64, eps: f64) -> PyResult<(f64, usize)> {
    privacy::depth_continuous(lambda_, radius, dim, lambda_min, eps).map(depth_pair).map_err(err)
}

#[pyfunction]
fn sigma_for(eps: f64, delta: f64, t: usize, d_q: usize) -> PyResult<f64> {
    adalab::mechanisms::sigma_for(eps, delta, t, d_q).map_err(err)
}

#[pyfunction]
fn plan_samples(eps: f64, delta: f64, k: usize, d_q: usize, t: usize) -> PyResult<usize> {
    privacy::plan_samples(eps, delta, DepthResult::from_int(k), d_q, t).map_err(err)
}

#[pymodule]
fn pyadalab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AdalabError", m.py().get_type::<AdalabError>())?;
    m.add_class::<PyAnalyst>()?;
    m.add_class::<PyMechanism>()?;
    m.add_function(wrap_pyfunction!(config_hash, m)?)?;
    m.add_function(wrap_pyfunction!(run_session, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(continuous_mode_session, m)?)?;
    m.add_function(wrap_pyfunction!(overfit_attack, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample_demo, m)?)?;
    m.add_function(wrap_pyfunction!(interleaving_demo, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_dp, m)?)?;
    m.add_function(wrap_pyfunction!(strong_compose, m)?)?;
    m.add_function(wrap_pyfunction!(history_dp, m)?)?;
    m.add_function(wrap_pyfunction!(depth_progressive, m)?)?;
    m.add_function(wrap_pyfunction!(depth_conservative_a, m)?)?;
    m.add_function(wrap_pyfunction!(depth_conservative_b, m)?)?;
    m.add_function(wrap_pyfunction!(depth_continuous, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_for, m)?)?;
    m.add_function(wrap_pyfunction!(plan_samples, m)?)?;
    Ok(())
}
