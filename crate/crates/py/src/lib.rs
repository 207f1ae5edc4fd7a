//! Python bindings: closed forms, the chain model and single runs or batches
//! driven by a config file or a synthetic world.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use zombiesim::analytic::{self, ChainKernel, ChainSpec};
use zombiesim::behavior;
use zombiesim::montecarlo::run_batch;
use zombiesim::report::RunConfig;
use zombiesim::rng::mix_seed;
use zombiesim::worldmap::{synthetic_world, SyntheticSpec};
use zombiesim::{BehaviorTable, EngineConfig, GridWorld, InterventionKind, RunOutcome, ScenarioPolicy, Simulation};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn kernel(name: &str) -> PyResult<ChainKernel> {
    ChainKernel::ALL
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown kernel `{name}`")))
}

fn outcome_dict<'py>(py: Python<'py>, seed: u64, o: &RunOutcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("seed", seed)?;
    d.set_item("winner", o.winner.as_str())?;
    d.set_item("end_step", o.end_step)?;
    d.set_item("peak_zombies", o.peak_zombies)?;
    d.set_item("first_border_step", o.first_border_step)?;
    let zombies: Vec<(u32, u64)> = o.trajectory.iter().map(|p| (p.step, p.counts.zombies)).collect();
    d.set_item("zombies", zombies)?;
    Ok(d)
}

fn load(path: &str, scenario: Option<&str>) -> PyResult<(RunConfig, GridWorld)> {
    let mut cfg = RunConfig::load(path).map_err(value_error)?;
    if let Some(s) = scenario {
        cfg.scenario.kind = s.parse::<InterventionKind>().map_err(value_error)?;
    }
    let world = cfg.load_world().map_err(value_error)?;
    Ok((cfg, world))
}

/// `(zombie_killed, human_infected, human_escaped)` for the default behavior table.
#[pyfunction]
fn interaction_outcome_probabilities() -> (f64, f64, f64) {
    behavior::interaction_outcome_probabilities(&BehaviorTable::default())
}

#[pyfunction]
fn conditional_defeat_probability() -> PyResult<f64> {
    behavior::conditional_defeat_probability(&BehaviorTable::default()).map_err(value_error)
}

/// Zombie-win probability of the chain model, `kernel` being
/// `"single-event"` or `"per-zombie-wave"`.
#[pyfunction]
#[pyo3(signature = (q = 0.246341, cap = 5, kernel = "single-event"))]
fn chain_zombie_win(q: f64, cap: u32, kernel: &str) -> PyResult<f64> {
    let spec = ChainSpec::new(q, cap, self::kernel(kernel)?);
    Ok(analytic::extinction_probability(&spec).map_err(value_error)?.zombie_win_probability)
}

/// Monte Carlo estimate of the chain model's extinction probability.
#[pyfunction]
#[pyo3(signature = (q = 0.246341, cap = 5, kernel = "single-event", trials = 100_000, seed = 0))]
fn chain_monte_carlo(py: Python<'_>, q: f64, cap: u32, kernel: &str, trials: u64, seed: u64) -> PyResult<f64> {
    let spec = ChainSpec::new(q, cap, self::kernel(kernel)?);
    py.detach(|| analytic::chain_monte_carlo(&spec, trials, seed)).map_err(value_error)
}

/// One run on a uniform synthetic world with the outbreak at its centre.
#[pyfunction]
#[pyo3(signature = (width, height, population, seed = 0, scenario = "none", max_steps = 2000))]
fn run_synthetic<'py>(
    py: Python<'py>,
    width: u32,
    height: u32,
    population: u64,
    seed: u64,
    scenario: &str,
    max_steps: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let world = synthetic_world(&SyntheticSpec::uniform(width, height, population)).map_err(value_error)?;
    let policy = ScenarioPolicy { kind: scenario.parse().map_err(value_error)?, ..Default::default() };
    let engine = EngineConfig { max_steps, ..Default::default() };
    let sim = Simulation::new(&world, policy, BehaviorTable::default(), Default::default(), engine)
        .map_err(value_error)?;
    let outcome = py.detach(|| sim.run(seed));
    outcome_dict(py, seed, &outcome)
}

/// One run of the config at `path`; the seed defaults to that of batch run `run_id`.
#[pyfunction]
#[pyo3(signature = (path, seed = None, run_id = 0, scenario = None))]
fn run_config<'py>(
    py: Python<'py>,
    path: &str,
    seed: Option<u64>,
    run_id: u32,
    scenario: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let (cfg, world) = load(path, scenario)?;
    let seed = seed.unwrap_or_else(|| mix_seed(cfg.batch.base_seed, u64::from(run_id)));
    let sim = Simulation::new(&world, cfg.scenario, cfg.behavior, cfg.movement, cfg.engine).map_err(value_error)?;
    let outcome = py.detach(|| sim.run(seed));
    outcome_dict(py, seed, &outcome)
}

/// Batch of the config at `path`; returns winner counts and per-run outcomes.
#[pyfunction]
#[pyo3(signature = (path, runs = None, parallel = None, base_seed = None, scenario = None))]
fn batch<'py>(
    py: Python<'py>,
    path: &str,
    runs: Option<u32>,
    parallel: Option<usize>,
    base_seed: Option<u64>,
    scenario: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let (mut cfg, world) = load(path, scenario)?;
    cfg.batch.n_runs = runs.unwrap_or(cfg.batch.n_runs);
    cfg.batch.max_parallel_runs = parallel.unwrap_or(cfg.batch.max_parallel_runs);
    cfg.batch.base_seed = base_seed.unwrap_or(cfg.batch.base_seed);
    let bc = cfg.batch_config();
    let summary = py.detach(|| run_batch(&world, &bc)).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("humans_won", summary.humans_won)?;
    d.set_item("zombies_won", summary.zombies_won)?;
    d.set_item("unresolved", summary.unresolved)?;
    let runs = summary
        .runs
        .iter()
        .map(|r| outcome_dict(py, r.seed, &r.outcome))
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("runs", runs)?;
    Ok(d)
}

#[pymodule]
fn zombiesim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(interaction_outcome_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_defeat_probability, m)?)?;
    m.add_function(wrap_pyfunction!(chain_zombie_win, m)?)?;
    m.add_function(wrap_pyfunction!(chain_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(run_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(batch, m)?)?;
    Ok(())
}
