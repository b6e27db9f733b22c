//! Python bindings for the renewal measure engines.
//!
//! Reports come back as plain dicts; measures as `RenewalMeasure` objects.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use renewal_core::conditions::{
    check_stochastic_domination, theorem2_bound as core_bound, theorem2_epsilon as core_epsilon,
    uniform_visit_bound, verify_bound as core_verify, BoundMechanism, DominationKind, Theorem2Params,
};
use renewal_core::exact::{self, RenewalSettings, ReturnPolicy, StateWindow};
use renewal_core::limit::{self, MeasureSource};
use renewal_core::monte_carlo::{self, McSettings, Target};
use renewal_core::{build_chain, ChainSpec, Error, LatticePmf, MarkovKernel};

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let items = items.iter().map(|x| json_to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(map) => {
            let d = PyDict::new(py);
            for (k, x) in map {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn pmf(atoms: Vec<(i64, f64)>) -> PyResult<LatticePmf> {
    LatticePmf::new(atoms).map_err(err)
}

/// A transition kernel.
#[pyclass(name = "Chain", frozen, skip_from_py_object, module = "renewal_lab")]
#[derive(Clone)]
struct PyChain {
    inner: MarkovKernel,
}

#[pymethods]
impl PyChain {
    /// Homogeneous walk; `step` is a list of `(offset, prob)` pairs.
    #[staticmethod]
    #[pyo3(signature = (q=None, step=None))]
    fn random_walk(q: Option<f64>, step: Option<Vec<(i64, f64)>>) -> PyResult<Self> {
        let step = match step {
            Some(s) => pmf(s)?,
            None => LatticePmf::up_down(q.unwrap_or(0.75)).map_err(err)?,
        };
        Ok(PyChain {
            inner: MarkovKernel::random_walk(step).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (q=None, step=None))]
    fn reflected_walk(q: Option<f64>, step: Option<Vec<(i64, f64)>>) -> PyResult<Self> {
        let step = match step {
            Some(s) => pmf(s)?,
            None => LatticePmf::up_down(q.unwrap_or(0.75)).map_err(err)?,
        };
        Ok(PyChain {
            inner: MarkovKernel::reflected_walk(step).map_err(err)?,
        })
    }

    #[staticmethod]
    fn three_branch(p: f64) -> PyResult<Self> {
        Ok(PyChain {
            inner: MarkovKernel::three_branch(p).map_err(err)?,
        })
    }

    #[staticmethod]
    fn counterexample() -> Self {
        PyChain {
            inner: MarkovKernel::counterexample(),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (lo=-1.0, hi=1.5, amplitude=0.5))]
    fn perturbed_walk(lo: f64, hi: f64, amplitude: f64) -> PyResult<Self> {
        Ok(PyChain {
            inner: MarkovKernel::perturbed_walk(lo, hi, amplitude).map_err(err)?,
        })
    }

    /// Chain from a TOML chain spec.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let spec = ChainSpec::from_toml(text).map_err(err)?;
        Ok(PyChain {
            inner: build_chain(&spec).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name().as_str()
    }

    #[getter]
    fn limit_mean(&self) -> f64 {
        self.inner.limit_mean()
    }

    #[getter]
    fn is_lattice(&self) -> bool {
        self.inner.is_lattice()
    }

    /// Jump law at an integer state as `(offset, prob)` pairs.
    fn jump_at(&self, k: i64) -> PyResult<Vec<(i64, f64)>> {
        Ok(self.inner.lattice_jump(k).map_err(err)?.atoms().to_vec())
    }

    fn mean_jump(&self, x: f64) -> PyResult<f64> {
        self.inner.mean_jump(x).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Chain({})", self.inner.name())
    }
}

/// Renewal measure on a window with its truncation bracket.
#[pyclass(name = "RenewalMeasure", frozen, module = "renewal_lab")]
struct PyMeasure {
    inner: exact::RenewalMeasure,
}

#[pymethods]
impl PyMeasure {
    #[getter]
    fn lo(&self) -> i64 {
        self.inner.lo
    }

    #[getter]
    fn hi(&self) -> i64 {
        self.inner.hi()
    }

    #[getter]
    fn masses(&self) -> Vec<f64> {
        self.inner.masses.clone()
    }

    #[getter]
    fn bracket_width(&self) -> f64 {
        self.inner.bracket_width
    }

    #[getter]
    fn iterations_used(&self) -> usize {
        self.inner.iterations_used
    }

    #[getter]
    fn probe(&self) -> (i64, i64) {
        self.inner.probe
    }

    fn mass_at(&self, k: i64) -> Option<f64> {
        self.inner.mass_at(k)
    }

    /// `U(x, x+h]`.
    fn window_mass(&self, x: i64, h: i64) -> Option<f64> {
        self.inner.window_mass(x, h)
    }

    fn __repr__(&self) -> String {
        format!(
            "RenewalMeasure(lo={}, hi={}, bracket_width={:e})",
            self.inner.lo,
            self.inner.hi(),
            self.inner.bracket_width
        )
    }
}

fn settings(chain: &MarkovKernel, q_sup: Option<f64>, n_max: usize, tol: f64, probe: Option<(i64, i64)>, conservative: bool) -> PyResult<RenewalSettings> {
    let q = match q_sup {
        Some(q) => q,
        None => uniform_visit_bound(chain, 1.0).map_err(err)?.value,
    };
    let mut s = RenewalSettings::new(q).n_max(n_max).stop_tol(tol);
    if let Some((lo, hi)) = probe {
        s = s.probe(lo, hi);
    }
    if conservative {
        s = s.returns(ReturnPolicy::Conservative);
    }
    Ok(s)
}

/// Exact renewal measure of a lattice chain from `mu0` (pairs `(state, prob)`).
#[pyfunction]
#[pyo3(signature = (chain, mu0, window_lo, window_hi, q_sup=None, n_max=1_000_000, tol=1e-8, probe=None, conservative=false))]
#[allow(clippy::too_many_arguments)]
fn renewal_measure(
    chain: &PyChain,
    mu0: Vec<(i64, f64)>,
    window_lo: i64,
    window_hi: i64,
    q_sup: Option<f64>,
    n_max: usize,
    tol: f64,
    probe: Option<(i64, i64)>,
    conservative: bool,
) -> PyResult<PyMeasure> {
    let s = settings(&chain.inner, q_sup, n_max, tol, probe, conservative)?;
    let window = StateWindow::new(window_lo, window_hi).map_err(err)?;
    let m = exact::renewal_measure(&chain.inner, &pmf(mu0)?, window, &s).map_err(err)?;
    Ok(PyMeasure { inner: m })
}

/// `Q(start, .)` on the window.
#[pyfunction]
#[pyo3(signature = (chain, start, window_lo, window_hi, q_sup=None, n_max=1_000_000, tol=1e-8))]
fn green_function(chain: &PyChain, start: i64, window_lo: i64, window_hi: i64, q_sup: Option<f64>, n_max: usize, tol: f64) -> PyResult<PyMeasure> {
    let s = settings(&chain.inner, q_sup, n_max, tol, None, false)?;
    let window = StateWindow::new(window_lo, window_hi).map_err(err)?;
    let g = exact::green_function(&chain.inner, start, window, &s).map_err(err)?;
    Ok(PyMeasure { inner: g.measure })
}

/// Bracket `{lower, upper, step}` on `lim P{X_n > 0}`.
#[pyfunction]
#[pyo3(signature = (chain, mu0, window_lo, window_hi, n_at, q_sup=None))]
fn p0_exact<'py>(py: Python<'py>, chain: &PyChain, mu0: Vec<(i64, f64)>, window_lo: i64, window_hi: i64, n_at: usize, q_sup: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let s = settings(&chain.inner, q_sup, n_at.max(1), 1e-8, None, false)?;
    let window = StateWindow::new(window_lo, window_hi).map_err(err)?;
    let b = exact::p0_exact(&chain.inner, &pmf(mu0)?, window, n_at, &s).map_err(err)?;
    to_dict(py, &b)
}

/// Monte Carlo estimates of `U(x, x+h]` for `targets` given as `(x, h)` pairs.
#[pyfunction]
#[pyo3(signature = (chain, mu0, targets, horizon, n_traj, seed))]
fn estimate_renewal<'py>(py: Python<'py>, chain: &PyChain, mu0: Vec<(i64, f64)>, targets: Vec<(f64, f64)>, horizon: usize, n_traj: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let targets: Vec<Target> = targets.into_iter().map(|(x, h)| Target::new(x, h)).collect();
    let mu0 = pmf(mu0)?;
    let settings = McSettings::new(horizon, n_traj, seed);
    let kernel = &chain.inner;
    let run = py
        .detach(|| monte_carlo::estimate_renewal(kernel, &mu0, &targets, &settings))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("estimates", to_dict(py, &run.estimates)?)?;
    d.set_item("passed_fraction", run.passed_fraction)?;
    d.set_item("warning", run.warning)?;
    Ok(d.into_any())
}

#[pyfunction]
#[pyo3(signature = (chain, mu0, probe_time, n_traj, seed, threshold=0.0))]
fn estimate_p0<'py>(py: Python<'py>, chain: &PyChain, mu0: Vec<(i64, f64)>, probe_time: usize, n_traj: usize, seed: u64, threshold: f64) -> PyResult<Bound<'py, PyAny>> {
    let mu0 = pmf(mu0)?;
    let settings = McSettings::new(probe_time.max(1), n_traj, seed);
    let kernel = &chain.inner;
    let e = py
        .detach(|| monte_carlo::estimate_p0(kernel, &mu0, threshold, probe_time, &settings))
        .map_err(err)?;
    to_dict(py, &e)
}

/// `inf_x E min(xi(x), A)`.
#[pyfunction]
#[pyo3(signature = (chain, a, grid=Vec::new()))]
fn theorem2_epsilon<'py>(py: Python<'py>, chain: &PyChain, a: f64, grid: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &core_epsilon(&chain.inner, a, &grid).map_err(err)?)
}

/// Uniform bound on `U(x, x+h]`; `mechanism` is `theorem2`, `corollary` or `nonnegative`.
#[pyfunction]
#[pyo3(signature = (a, h, mechanism, epsilon=None, delta=None, gamma=None))]
fn theorem2_bound<'py>(py: Python<'py>, a: f64, h: f64, mechanism: &str, epsilon: Option<f64>, delta: Option<f64>, gamma: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let (mech, params) = match mechanism {
        "theorem2" => (BoundMechanism::Theorem2, Theorem2Params::new(a, epsilon.unwrap_or(f64::NAN), delta)),
        "corollary" => (BoundMechanism::Corollary, Theorem2Params::new(a, epsilon.unwrap_or(f64::NAN), delta)),
        "nonnegative" => (BoundMechanism::NonNegative, Theorem2Params::nonnegative(a, gamma.unwrap_or(f64::NAN))),
        other => return Err(PyValueError::new_err(format!("unknown mechanism `{other}`"))),
    };
    to_dict(py, &core_bound(&params, h, mech).map_err(err)?)
}

/// Checks `U(x, x+1] + bracket <= bound` for each `x` in `windows`.
#[pyfunction]
fn verify_bound<'py>(py: Python<'py>, measure: &PyMeasure, bound: f64, windows: Vec<i64>) -> PyResult<Bound<'py, PyAny>> {
    let report = core_bound(&Theorem2Params::new(1.0, 1.0, Some(1.0)), 1.0, BoundMechanism::Theorem2)
        .map(|r| renewal_core::conditions::BoundReport { bound, ..r })
        .map_err(err)?;
    to_dict(py, &core_verify(&report, &measure.inner, &windows).map_err(err)?)
}

/// Certificate for the constant majorant `c` (`kind="majorant"`) or the
/// minorant given as `(offset, prob)` pairs (`kind="minorant"`).
#[pyfunction]
#[pyo3(signature = (chain, kind, law, grid=Vec::new()))]
fn check_domination<'py>(py: Python<'py>, chain: &PyChain, kind: &str, law: Vec<(i64, f64)>, grid: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let kind = match kind {
        "majorant" => DominationKind::Majorant,
        "minorant" => DominationKind::Minorant,
        other => return Err(PyValueError::new_err(format!("unknown kind `{other}`"))),
    };
    let cert = check_stochastic_domination(&chain.inner, &pmf(law)?.into(), kind, &grid).map_err(err)?;
    to_dict(py, &cert)
}

/// Tail density `U(x, x+h] / h` over `x` in `window_range` against `p0 / mean`.
#[pyfunction]
fn limit_report<'py>(py: Python<'py>, measure: &PyMeasure, h: f64, p0: f64, mean: f64, window_range: (i64, i64)) -> PyResult<Bound<'py, PyAny>> {
    let r = limit::limit_report(MeasureSource::Exact(&measure.inner), h, p0, mean, window_range).map_err(err)?;
    to_dict(py, &r)
}

#[pyfunction]
fn flatness_check(measure: &PyMeasure, window_range: (i64, i64)) -> PyResult<f64> {
    limit::flatness_check(&measure.inner, window_range).map_err(err)
}

#[pyfunction]
fn counterexample_growth<'py>(py: Python<'py>, n_lo: u32, n_hi: u32) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| limit::counterexample_growth(n_lo, n_hi)).map_err(err)?;
    to_dict(py, &r)
}

#[pymodule]
fn renewal_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChain>()?;
    m.add_class::<PyMeasure>()?;
    m.add_function(wrap_pyfunction!(renewal_measure, m)?)?;
    m.add_function(wrap_pyfunction!(green_function, m)?)?;
    m.add_function(wrap_pyfunction!(p0_exact, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_renewal, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_p0, m)?)?;
    m.add_function(wrap_pyfunction!(theorem2_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(theorem2_bound, m)?)?;
    m.add_function(wrap_pyfunction!(verify_bound, m)?)?;
    m.add_function(wrap_pyfunction!(check_domination, m)?)?;
    m.add_function(wrap_pyfunction!(limit_report, m)?)?;
    m.add_function(wrap_pyfunction!(flatness_check, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample_growth, m)?)?;
    Ok(())
}
