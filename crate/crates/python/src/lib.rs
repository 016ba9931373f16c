//! Python module `island_evo`: fitness specs, the (1+1) EA, island runs,
//! exact oracles and the harness, with bit strings passed as `"0101"` text.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use island_evo::analytic::{self, Start};
use island_evo::ea::{at_optimum, ea_run as core_ea_run, MutationParams};
use island_evo::fitness::SpecConfig;
use island_evo::harness::{self, Field, Thresholds};
use island_evo::islands::{self, IslandRunConfig, MonteCarloSummary, RunRecord, Tau, Termination};
use island_evo::{BitString, Error, Topology, TopologyKind};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Singular(_) | Error::AllTrapped(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn bits(s: &str) -> PyResult<BitString> {
    s.parse().map_err(py_err)
}

fn point(s: &str, n: usize) -> PyResult<BitString> {
    let x = bits(s)?;
    if x.len() != n {
        return Err(PyValueError::new_err(format!("string has length {}, spec has {n}", x.len())));
    }
    Ok(x)
}

/// A fitness function with its unique optimum.
#[pyclass(name = "FitnessSpec", module = "island_evo", frozen)]
#[derive(Clone)]
struct PySpec {
    inner: island_evo::FitnessSpec,
}

fn wrap(r: island_evo::Result<island_evo::FitnessSpec>) -> PyResult<PySpec> {
    r.map(|inner| PySpec { inner }).map_err(py_err)
}

#[pymethods]
impl PySpec {
    #[staticmethod]
    fn one_max(n: usize) -> PyResult<Self> {
        wrap(island_evo::FitnessSpec::one_max(n))
    }

    #[staticmethod]
    fn leading_ones(n: usize) -> PyResult<Self> {
        wrap(island_evo::FitnessSpec::leading_ones(n))
    }

    #[staticmethod]
    fn fork(n: usize, r: usize) -> PyResult<Self> {
        wrap(island_evo::FitnessSpec::fork(n, r))
    }

    #[staticmethod]
    fn masked_fork(n: usize, r: usize) -> PyResult<Self> {
        wrap(island_evo::FitnessSpec::masked_fork(n, r))
    }

    #[staticmethod]
    fn masked(mask: &str, inner: &PySpec) -> PyResult<Self> {
        wrap(island_evo::FitnessSpec::masked(bits(mask)?, inner.inner.clone()))
    }

    #[staticmethod]
    fn lo_block(n: usize, inner: &PySpec) -> PyResult<Self> {
        wrap(island_evo::FitnessSpec::lo_block(n, inner.inner.clone()))
    }

    #[staticmethod]
    fn om_block(n: usize, inner: &PySpec) -> PyResult<Self> {
        wrap(island_evo::FitnessSpec::om_block(n, inner.inner.clone()))
    }

    /// Same JSON form as scenario configs, e.g. `{"variant": "fork", "r": 2, "n": 8}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let cfg: SpecConfig = serde_json::from_str(text).map_err(|e| py_err(e.into()))?;
        wrap(cfg.build(None))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }

    #[getter]
    fn optimum(&self) -> String {
        self.inner.optimum().optimum.to_string()
    }

    #[getter]
    fn optimum_value(&self) -> u64 {
        self.inner.optimum_value()
    }

    #[getter]
    fn valley(&self) -> Option<(String, u64)> {
        self.inner.valley().map(|(x, v)| (x.to_string(), *v))
    }

    fn evaluate(&self, x: &str) -> PyResult<u64> {
        Ok(self.inner.evaluate(&point(x, self.inner.n())?))
    }

    fn __repr__(&self) -> String {
        format!("FitnessSpec({}, n={})", self.inner.label(), self.inner.n())
    }
}

fn record_dict<'py>(py: Python<'py>, r: &RunRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("rounds", r.rounds)?;
    d.set_item("evaluations", r.evaluations)?;
    d.set_item("initial_evaluations", r.initial_evaluations)?;
    d.set_item("satisfied", r.satisfied)?;
    d.set_item("trapped", r.trapped)?;
    d.set_item("hit_rounds", r.hit_rounds.clone())?;
    d.set_item("migration_rounds", r.migration_rounds.clone())?;
    d.set_item("peak_valleys", r.peak_valleys)?;
    d.set_item("valley_first", r.valley_first.clone())?;
    Ok(d)
}

fn summary_dict<'py>(py: Python<'py>, s: &MonteCarloSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("replicates", s.replicates)?;
    d.set_item("completed", s.completed)?;
    d.set_item("trapped", s.trapped)?;
    for (key, stat) in [("rounds", &s.rounds), ("evaluations", &s.evaluations)] {
        let e = PyDict::new(py);
        e.set_item("mean", stat.mean)?;
        e.set_item("stderr", stat.stderr)?;
        e.set_item("median", stat.median)?;
        e.set_item("q10", stat.q10)?;
        e.set_item("q90", stat.q90)?;
        d.set_item(key, e)?;
    }
    d.set_item("mean_migrations", s.mean_migrations)?;
    d.set_item("mean_peak_valleys", s.mean_peak_valleys)?;
    Ok(d)
}

#[allow(clippy::too_many_arguments)]
fn island_config(
    spec: &PySpec,
    lam: usize,
    topology: &str,
    tau: Option<u64>,
    termination: &str,
    seed: u64,
    cap: Option<u64>,
) -> PyResult<IslandRunConfig> {
    let kind: TopologyKind = topology.parse().map_err(py_err)?;
    let cfg = IslandRunConfig {
        lambda: lam,
        tau: match tau {
            Some(t) => Tau::new(t).map_err(py_err)?,
            None => Tau::Infinite,
        },
        topology: Topology::new(kind, lam).map_err(py_err)?,
        spec: spec.inner.clone(),
        termination: termination.parse::<Termination>().map_err(py_err)?,
        cap: cap.unwrap_or(u64::MAX),
        seed,
    };
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

/// One (1+1) EA run from a uniform start until the optimum or `cap` steps.
#[pyfunction]
#[pyo3(signature = (spec, seed, n_mut=None, cap=None))]
fn ea_run<'py>(
    py: Python<'py>,
    spec: &PySpec,
    seed: u64,
    n_mut: Option<usize>,
    cap: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let params = MutationParams::new(n_mut.unwrap_or(spec.inner.n())).map_err(py_err)?;
    let (state, hit) = py
        .allow_threads(|| core_ea_run(&spec.inner, params, seed, at_optimum(&spec.inner), cap.unwrap_or(u64::MAX)))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("evaluations", state.evaluations)?;
    d.set_item("hit", hit)?;
    d.set_item("final", state.current.to_string())?;
    d.set_item("fitness", state.current_fitness)?;
    Ok(d)
}

/// One island-model run. `tau=None` never migrates.
#[pyfunction]
#[pyo3(signature = (spec, lam, topology, tau=None, termination="all_optimal", seed=0, cap=None))]
#[allow(clippy::too_many_arguments)]
fn island_run<'py>(
    py: Python<'py>,
    spec: &PySpec,
    lam: usize,
    topology: &str,
    tau: Option<u64>,
    termination: &str,
    seed: u64,
    cap: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = island_config(spec, lam, topology, tau, termination, seed, cap)?;
    let rec = py.allow_threads(|| islands::island_run(&cfg)).map_err(py_err)?;
    record_dict(py, &rec)
}

#[pyfunction]
#[pyo3(signature = (spec, lam, topology, replicates, master_seed, tau=None, termination="all_optimal", cap=None))]
#[allow(clippy::too_many_arguments)]
fn monte_carlo_runtime<'py>(
    py: Python<'py>,
    spec: &PySpec,
    lam: usize,
    topology: &str,
    replicates: usize,
    master_seed: u64,
    tau: Option<u64>,
    termination: &str,
    cap: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = island_config(spec, lam, topology, tau, termination, master_seed, cap)?;
    let s = py
        .allow_threads(|| islands::monte_carlo_runtime(&cfg, replicates, master_seed))
        .map_err(py_err)?;
    summary_dict(py, &s)
}

fn start_of(chain: &analytic::ExactChain, start: Option<&str>) -> PyResult<Start> {
    Ok(match start {
        Some(s) => Start::Point(chain.index_of(&point(s, chain.n())?)),
        None => Start::Uniform,
    })
}

/// Exact expected steps to the optimum (uniform start unless `start` is given).
#[pyfunction]
#[pyo3(signature = (spec, n_mut=None, start=None))]
fn expected_hitting_time(py: Python<'_>, spec: &PySpec, n_mut: Option<usize>, start: Option<&str>) -> PyResult<f64> {
    let chain = analytic::build_chain(&spec.inner, n_mut.unwrap_or(spec.inner.n())).map_err(py_err)?;
    let start = start_of(&chain, start)?;
    let target = chain.index_of(&spec.inner.optimum().optimum);
    py.allow_threads(|| analytic::expected_hitting_time(&chain, &[target], &start))
        .map_err(py_err)
}

/// Exact probability of reaching `a` (default: the valley) before `b`
/// (default: the optimum).
#[pyfunction]
#[pyo3(signature = (spec, a=None, b=None, n_mut=None, start=None))]
fn hitting_probability(
    py: Python<'_>,
    spec: &PySpec,
    a: Option<&str>,
    b: Option<&str>,
    n_mut: Option<usize>,
    start: Option<&str>,
) -> PyResult<f64> {
    let chain = analytic::build_chain(&spec.inner, n_mut.unwrap_or(spec.inner.n())).map_err(py_err)?;
    let n = spec.inner.n();
    let a = match a {
        Some(s) => point(s, n)?,
        None => spec
            .inner
            .valley()
            .map(|v| v.0.clone())
            .ok_or_else(|| PyValueError::new_err("spec has no valley; pass a"))?,
    };
    let b = match b {
        Some(s) => point(s, n)?,
        None => spec.inner.optimum().optimum.clone(),
    };
    let start = start_of(&chain, start)?;
    let (ia, ib) = (chain.index_of(&a), chain.index_of(&b));
    py.allow_threads(|| analytic::hitting_probability(&chain, ia, ib, &start))
        .map_err(py_err)
}

#[pyfunction]
fn exact_lo_runtime(n: usize) -> PyResult<f64> {
    analytic::exact_lo_runtime(n).map_err(py_err)
}

#[pyfunction]
fn lo_block_runtime(n: usize, k: usize, inner_expected: f64) -> PyResult<f64> {
    analytic::lo_block_runtime(n, k, inner_expected).map_err(py_err)
}

#[pyfunction]
fn choose_sum_div(n: usize) -> PyResult<f64> {
    analytic::choose_sum_div(n).map_err(py_err)
}

/// `(lower, exact, upper)` for the first success among `m` agents.
#[pyfunction]
fn geometric_min_bounds(expected_jump: f64, m: usize) -> PyResult<(f64, f64, f64)> {
    let g = analytic::geometric_min_bounds(expected_jump, m).map_err(py_err)?;
    Ok((g.lower, g.exact, g.upper))
}

/// `(climb_evaluations, enumeration_evaluations)` of the black-box search.
#[pyfunction]
fn black_box_fork(n: usize, r: usize, seed: u64) -> PyResult<(u64, u64)> {
    let o = analytic::black_box_fork(n, r, seed).map_err(py_err)?;
    Ok((o.climb_evaluations, o.enumeration_evaluations))
}

/// `(fraction, (low, high), pass)` of the valley-before-optimum test.
#[pyfunction]
fn valley_first_test(py: Python<'_>, n: usize, r: usize, replicates: usize, seed: u64) -> PyResult<(f64, (f64, f64), bool)> {
    let rep = py
        .allow_threads(|| harness::valley_first_test(n, r, replicates, seed))
        .map_err(py_err)?;
    Ok((rep.fraction, rep.interval, rep.pass))
}

/// Runs a scenario config (JSON text) and returns the CSV text.
#[pyfunction]
fn simulate(py: Python<'_>, config: &str) -> PyResult<String> {
    let scenarios = harness::parse_config(config).map_err(py_err)?;
    let bytes = py
        .allow_threads(|| harness::run_all(&scenarios).and_then(|rows| harness::csv_bytes(&rows)))
        .map_err(py_err)?;
    String::from_utf8(bytes).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// `(slope, slope_stderr, r_squared)` of ln(mean) against ln(n) over the
/// rows of one scenario in a result CSV.
#[pyfunction]
#[pyo3(signature = (csv, scenario, field="evaluations"))]
fn fit_exponent(csv: &str, scenario: &str, field: &str) -> PyResult<(f64, f64, f64)> {
    let field: Field = field.parse().map_err(py_err)?;
    let rows: Vec<_> = harness::read_csv(csv.as_bytes())
        .map_err(py_err)?
        .into_iter()
        .filter(|r| r.scenario == scenario)
        .collect();
    let fit = harness::fit_exponent(&rows, field).map_err(py_err)?;
    Ok((fit.slope, fit.slope_stderr, fit.r_squared))
}

/// Runs acceptance criteria (all by default) and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (only=None))]
fn verify(py: Python<'_>, only: Option<Vec<u32>>) -> PyResult<String> {
    let report = py.allow_threads(|| harness::verify_all(&Thresholds::default(), only.as_deref(), |_| {}));
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
#[pyo3(name = "island_evo")]
fn island_evo_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_function(wrap_pyfunction!(ea_run, m)?)?;
    m.add_function(wrap_pyfunction!(island_run, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_runtime, m)?)?;
    m.add_function(wrap_pyfunction!(expected_hitting_time, m)?)?;
    m.add_function(wrap_pyfunction!(hitting_probability, m)?)?;
    m.add_function(wrap_pyfunction!(exact_lo_runtime, m)?)?;
    m.add_function(wrap_pyfunction!(lo_block_runtime, m)?)?;
    m.add_function(wrap_pyfunction!(choose_sum_div, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_min_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(black_box_fork, m)?)?;
    m.add_function(wrap_pyfunction!(valley_first_test, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
