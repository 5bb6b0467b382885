//! Python bindings: game parameters, single steps, batches, the analytic
//! closed forms and the truncated-chain oracle.

use std::str::FromStr;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tipsy_core::analytics::{self, RegimeVerdict};
use tipsy_core::engine::{run_batch, BatchConfig, BatchSummary, GameSpec};
use tipsy_core::oracle::{build_grid_chain, solve, BoundaryPolicy, ChainLabel};
use tipsy_core::{grid, GridMove, GridState, GridStrategy, TreeGameState, TreeStrategy};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Spinner probabilities for one game.
#[pyclass(name = "GameParams", module = "tipsy", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGameParams {
    inner: tipsy_core::GameParams,
}

#[pymethods]
impl PyGameParams {
    /// Grid parameters with separate tipsiness for the two players.
    #[staticmethod]
    fn grid(c: f64, r: f64, tc: f64, tr: f64) -> PyResult<Self> {
        Ok(Self { inner: tipsy_core::GameParams::grid(c, r, tc, tr).map_err(value_err)? })
    }

    /// Grid parameters with combined tipsiness `t`.
    #[staticmethod]
    fn grid_merged(c: f64, r: f64, t: f64) -> PyResult<Self> {
        Ok(Self { inner: tipsy_core::GameParams::grid_merged(c, r, t).map_err(value_err)? })
    }

    /// Tree parameters; sober probabilities are `1/2 - tc` and `1/2 - tr`.
    #[staticmethod]
    fn tree(tc: f64, tr: f64) -> PyResult<Self> {
        Ok(Self { inner: tipsy_core::GameParams::tree(tc, tr).map_err(value_err)? })
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }

    #[getter]
    fn tc(&self) -> f64 {
        self.inner.t_c
    }

    #[getter]
    fn tr(&self) -> f64 {
        self.inner.t_r
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t()
    }

    #[getter]
    fn mode(&self) -> String {
        self.inner.mode.to_string()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("GameParams(c={}, r={}, tc={}, tr={}, mode={})", p.c, p.r, p.t_c, p.t_r, p.mode)
    }
}

fn grid_strategy(name: &str, params: &tipsy_core::GameParams) -> PyResult<GridStrategy> {
    if name == "CS2:balanced" {
        let p = analytics::cs2_mixing(params).map_err(value_err)?;
        return Ok(GridStrategy::Cs2 { p });
    }
    GridStrategy::from_str(name).map_err(value_err)
}

fn tree_strategy(name: &str) -> PyResult<TreeStrategy> {
    TreeStrategy::from_str(name).map_err(value_err)
}

/// Probabilities of the difference vector moving `+x, -x, +y, -y` in one
/// round from `(x, y)`.
#[pyfunction]
fn step_distribution(params: &PyGameParams, cop: &str, robber: &str, x: i64, y: i64) -> PyResult<[f64; 4]> {
    let p = &params.inner;
    let d = grid::step_distribution(p, &grid_strategy(cop, p)?, &grid_strategy(robber, p)?, GridState::new(x, y))
        .map_err(value_err)?;
    Ok(GridMove::ALL.map(|m| d.prob(m)))
}

/// Exact expected two-round change of the larger coordinate from `(x, y)`.
#[pyfunction]
fn two_round_expectation(params: &PyGameParams, cop: &str, robber: &str, x: i64, y: i64) -> PyResult<f64> {
    let p = &params.inner;
    grid::two_round_expectation(p, &grid_strategy(cop, p)?, &grid_strategy(robber, p)?, GridState::new(x, y))
        .map_err(value_err)
}

fn summary_dict<'py>(py: Python<'py>, s: &BatchSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n_episodes", s.n_episodes)?;
    d.set_item("horizon", s.horizon)?;
    d.set_item("captured", s.captured)?;
    d.set_item("capture_fraction", s.capture_fraction)?;
    d.set_item("capture_interval", (s.capture_interval.low, s.capture_interval.high))?;
    d.set_item("mean_capture_time", s.mean_capture_time)?;
    d.set_item("median_capture_time", s.median_capture_time)?;
    d.set_item("censored_fraction", s.censored_fraction)?;
    if let Some(t) = &s.tree {
        let td = PyDict::new(py);
        td.set_item("robber_gaps", t.robber_gaps)?;
        td.set_item("mean_robber_gap", t.mean_robber_gap)?;
        td.set_item("robber_gap_std_error", t.robber_gap_std_error)?;
        td.set_item("mean_robber_f_tilde", t.mean_robber_f_tilde)?;
        td.set_item("mean_cop_f_tilde", t.mean_cop_f_tilde)?;
        td.set_item("dominance_violations", t.dominance_violations)?;
        td.set_item("y_slope", t.y_slope)?;
        d.set_item("tree", td)?;
    }
    Ok(d)
}

fn run(py: Python<'_>, spec: GameSpec, config: BatchConfig) -> PyResult<BatchSummary> {
    // the batch holds no Python objects, so other threads may run meanwhile
    py.detach(|| run_batch(&spec, &config))
        .map(|r| r.summary())
        .map_err(value_err)
}

/// Runs a batch of grid episodes and returns its summary.
#[pyfunction]
#[pyo3(signature = (params, cop, robber, start, horizon=100_000, episodes=1000, seed=0, threads=None))]
#[allow(clippy::too_many_arguments)]
fn simulate_grid<'py>(
    py: Python<'py>,
    params: &PyGameParams,
    cop: &str,
    robber: &str,
    start: (i64, i64),
    horizon: u64,
    episodes: u64,
    seed: u64,
    threads: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let spec = GameSpec::Grid {
        params: p,
        cop: grid_strategy(cop, &p)?,
        robber: grid_strategy(robber, &p)?,
        start: GridState::new(start.0, start.1),
    };
    let summary = run(py, spec, BatchConfig { horizon, episodes, master_seed: seed, threads })?;
    summary_dict(py, &summary)
}

/// Runs a batch on X(Delta, delta) from base distance `start`.
#[pyfunction]
#[pyo3(signature = (big_delta, delta, tc, tr, cop, robber, start, horizon=100_000, episodes=1000, seed=0, threads=None))]
#[allow(clippy::too_many_arguments)]
fn simulate_tree<'py>(
    py: Python<'py>,
    big_delta: u32,
    delta: u32,
    tc: f64,
    tr: f64,
    cop: &str,
    robber: &str,
    start: usize,
    horizon: u64,
    episodes: u64,
    seed: u64,
    threads: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = GameSpec::Tree {
        tree: tipsy_core::TreeParams::new(big_delta, delta).map_err(value_err)?,
        params: tipsy_core::GameParams::tree(tc, tr).map_err(value_err)?,
        cop: tree_strategy(cop)?,
        robber: tree_strategy(robber)?,
        start: TreeGameState::base_pair(start),
    };
    let summary = run(py, spec, BatchConfig { horizon, episodes, master_seed: seed, threads })?;
    summary_dict(py, &summary)
}

fn verdict_dict<'py>(py: Python<'py>, v: &RegimeVerdict) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("winner", v.winner.name())?;
    d.set_item("rationale", &v.rationale)?;
    d.set_item("finite_expected_time", v.finite_expected_time)?;
    Ok(d)
}

/// Who wins on Z² with CS1 against a distance-increasing robber.
#[pyfunction]
fn grid_regime<'py>(py: Python<'py>, params: &PyGameParams) -> PyResult<Bound<'py, PyDict>> {
    verdict_dict(py, &analytics::grid_regime(&params.inner).map_err(value_err)?)
}

/// Verdicts for the RSA and RSB robbers on X(Delta, delta).
#[pyfunction]
fn tree_regime<'py>(py: Python<'py>, tr: f64, tc: f64, delta: u32, big_delta: u32) -> PyResult<Bound<'py, PyDict>> {
    let regime = analytics::tree_regime(tr, tc, delta, big_delta).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("rsa", verdict_dict(py, &regime.rsa)?)?;
    d.set_item("rsb", verdict_dict(py, &regime.rsb)?)?;
    Ok(d)
}

/// Edge-weight constants of the grid walk under the balanced CS2 cop.
#[pyfunction]
fn grid_weight_model<'py>(py: Python<'py>, params: &PyGameParams) -> PyResult<Bound<'py, PyDict>> {
    let m = analytics::grid_weight_model(&params.inner).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("beta", m.beta)?;
    d.set_item("alpha", m.alpha)?;
    d.set_item("p_star", m.p_star)?;
    d.set_item("vertical_sum", m.vertical_sum)?;
    d.set_item("horizontal_sum", m.horizontal_sum)?;
    Ok(d)
}

/// Mean rounds between base moves of a player with tipsiness `t`.
#[pyfunction]
fn mu(t: f64, delta: u32, big_delta: u32) -> PyResult<f64> {
    analytics::mu(t, delta, big_delta).map_err(value_err)
}

/// Margin whose sign decides CSB against RSB.
#[pyfunction]
fn rsb_margin(tr: f64, tc: f64, delta: u32, big_delta: u32) -> PyResult<f64> {
    analytics::rsb_margin(tr, tc, delta, big_delta).map_err(value_err)
}

/// Cop tipsiness where the RSB margin changes sign.
#[pyfunction]
fn threshold_f(tr: f64, delta: u32, big_delta: u32) -> PyResult<f64> {
    analytics::threshold_f(tr, delta, big_delta).map_err(value_err)
}

/// Tipsiness where the RSA line meets the RSB threshold curve.
#[pyfunction]
fn crossover_t0(delta: u32, big_delta: u32) -> PyResult<f64> {
    analytics::crossover_t0(delta, big_delta).map_err(value_err)
}

/// Capture probability and conditional expected capture time from
/// `start` on the folded grid chain truncated at `radius`.
#[pyfunction]
#[pyo3(signature = (params, cop, robber, radius, start=(0, 1), boundary="killing"))]
fn oracle_solve(
    py: Python<'_>,
    params: &PyGameParams,
    cop: &str,
    robber: &str,
    radius: u64,
    start: (i64, i64),
    boundary: &str,
) -> PyResult<(f64, Option<f64>)> {
    let p = params.inner;
    let policy = match boundary {
        "killing" => BoundaryPolicy::Killing,
        "reflecting" => BoundaryPolicy::Reflecting,
        other => return Err(value_err(format!("unknown boundary {other:?}"))),
    };
    let (cop, robber) = (grid_strategy(cop, &p)?, grid_strategy(robber, &p)?);
    let folded = GridState::new(start.0, start.1).fold();
    let chain = build_grid_chain(&p, &cop, &robber, radius, policy).map_err(value_err)?;
    let sol = py.detach(|| solve(&chain)).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    sol.at(ChainLabel::Grid(folded))
        .ok_or_else(|| value_err(format!("start {folded} lies outside radius {radius}")))
}

#[pymodule]
fn tipsy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGameParams>()?;
    m.add_function(wrap_pyfunction!(step_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(two_round_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_grid, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_tree, m)?)?;
    m.add_function(wrap_pyfunction!(grid_regime, m)?)?;
    m.add_function(wrap_pyfunction!(tree_regime, m)?)?;
    m.add_function(wrap_pyfunction!(grid_weight_model, m)?)?;
    m.add_function(wrap_pyfunction!(mu, m)?)?;
    m.add_function(wrap_pyfunction!(rsb_margin, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_f, m)?)?;
    m.add_function(wrap_pyfunction!(crossover_t0, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_solve, m)?)?;
    Ok(())
}
