//! Batches of independent runs and their aggregate statistics.
//!
//! Run `i` of a batch is seeded with [`mix_seed`]`(base_seed, i)`, and results
//! are collected by run index, so a batch is a pure function of its config
//! regardless of how many runs execute at once.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::BehaviorTable;
use crate::engine::{EngineConfig, EngineError, RunOutcome, Simulation, Winner};
use crate::intervention::ScenarioPolicy;
use crate::movement::MovementParams;
use crate::rng::mix_seed;
use crate::worldmap::GridWorld;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("max_parallel_runs must be at least 1")]
    Parallelism,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub n_runs: u32,
    pub base_seed: u64,
    pub max_parallel_runs: usize,
    pub policy: ScenarioPolicy,
    pub behavior: BehaviorTable,
    pub movement: MovementParams,
    pub engine: EngineConfig,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            n_runs: 1000,
            base_seed: 0,
            max_parallel_runs: 1,
            policy: ScenarioPolicy::default(),
            behavior: BehaviorTable::default(),
            movement: MovementParams::default(),
            engine: EngineConfig::default(),
        }
    }
}

impl BatchConfig {
    pub fn validate(&self) -> Result<(), BatchError> {
        if self.max_parallel_runs == 0 {
            return Err(BatchError::Parallelism);
        }
        self.behavior.validate().map_err(EngineError::from)?;
        self.movement.validate().map_err(EngineError::from)?;
        self.policy.validate().map_err(EngineError::from)?;
        self.engine.validate()?;
        Ok(())
    }

    /// Stream seed of run `run_id`.
    pub fn run_seed(&self, run_id: u32) -> u64 {
        mix_seed(self.base_seed, u64::from(run_id))
    }
}

/// One finished run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: u32,
    pub seed: u64,
    pub outcome: RunOutcome,
}

/// Occurrences per value.
pub type Histogram = BTreeMap<u32, u64>;

/// Zombie counts across the runs that have a trajectory point at `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub step: u32,
    pub runs: u64,
    pub min: u64,
    pub max: u64,
    pub mean: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    /// Every run, ordered by run identifier.
    pub runs: Vec<RunRecord>,
    pub humans_won: u64,
    pub zombies_won: u64,
    pub unresolved: u64,
    pub human_end_steps: Histogram,
    pub zombie_end_steps: Histogram,
    pub unresolved_end_steps: Histogram,
    pub first_border_steps: Histogram,
    pub zombie_envelope: Vec<EnvelopePoint>,
}

impl BatchSummary {
    pub fn n_runs(&self) -> u64 {
        self.runs.len() as u64
    }

    pub fn wins(&self, winner: Winner) -> u64 {
        match winner {
            Winner::Humans => self.humans_won,
            Winner::Zombies => self.zombies_won,
            Winner::Unresolved => self.unresolved,
        }
    }

    /// Fraction of runs ending with `winner`; 0 for an empty batch.
    pub fn fraction(&self, winner: Winner) -> f64 {
        if self.runs.is_empty() {
            return 0.0;
        }
        self.wins(winner) as f64 / self.runs.len() as f64
    }

    pub fn end_steps(&self, winner: Winner) -> &Histogram {
        match winner {
            Winner::Humans => &self.human_end_steps,
            Winner::Zombies => &self.zombie_end_steps,
            Winner::Unresolved => &self.unresolved_end_steps,
        }
    }

    /// Median end step of the runs won by `winner` (mean of the two middle
    /// values for an even count).
    pub fn median_end_step(&self, winner: Winner) -> Option<f64> {
        histogram_median(self.end_steps(winner))
    }

    /// Fraction of all runs whose first border crossing happened before `step`.
    pub fn first_border_before(&self, step: u32) -> f64 {
        if self.runs.is_empty() {
            return 0.0;
        }
        let n: u64 = self.first_border_steps.range(..step).map(|(_, c)| c).sum();
        n as f64 / self.runs.len() as f64
    }

    /// Largest peak zombie count among the runs won by `winner`.
    pub fn max_peak(&self, winner: Winner) -> Option<u64> {
        self.runs
            .iter()
            .filter(|r| r.outcome.winner == winner)
            .map(|r| r.outcome.peak_zombies)
            .max()
    }
}

/// Median of a histogram's samples.
pub fn histogram_median(h: &Histogram) -> Option<f64> {
    let n: u64 = h.values().sum();
    if n == 0 {
        return None;
    }
    let nth = |k: u64| {
        let mut seen = 0;
        for (&v, &c) in h {
            seen += c;
            if seen > k {
                return v;
            }
        }
        unreachable!("rank {k} is below the sample count")
    };
    let (lo, hi) = (nth((n - 1) / 2), nth(n / 2));
    Some((f64::from(lo) + f64::from(hi)) / 2.0)
}

/// Runs every run of the batch.
pub fn run_batch(world: &GridWorld, cfg: &BatchConfig) -> Result<BatchSummary, BatchError> {
    run_batch_with_progress(world, cfg, |_| {})
}

/// Like [`run_batch`], calling `progress` as each run finishes (in completion order).
pub fn run_batch_with_progress(
    world: &GridWorld,
    cfg: &BatchConfig,
    progress: impl Fn(&RunRecord) + Sync,
) -> Result<BatchSummary, BatchError> {
    cfg.validate()?;
    let sim = Simulation::new(world, cfg.policy, cfg.behavior, cfg.movement, cfg.engine)?;
    let one = |run_id: u32| {
        let seed = cfg.run_seed(run_id);
        let record = RunRecord { run_id, seed, outcome: sim.run(seed) };
        progress(&record);
        record
    };
    let records: Vec<RunRecord> = if cfg.max_parallel_runs == 1 {
        (0..cfg.n_runs).map(one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.max_parallel_runs)
            .build()
            .map_err(|e| BatchError::Pool(e.to_string()))?;
        pool.install(|| (0..cfg.n_runs).into_par_iter().map(one).collect())
    };
    Ok(aggregate(records))
}

/// Builds the summary statistics. The result does not depend on the order
/// of `records`.
pub fn aggregate(records: impl IntoIterator<Item = RunRecord>) -> BatchSummary {
    let mut runs: Vec<RunRecord> = records.into_iter().collect();
    runs.sort_by_key(|r| r.run_id);

    let mut s = BatchSummary::default();
    let mut envelope: BTreeMap<u32, (u64, u64, u64, u128)> = BTreeMap::new();
    for r in &runs {
        let o = &r.outcome;
        let (count, hist) = match o.winner {
            Winner::Humans => (&mut s.humans_won, &mut s.human_end_steps),
            Winner::Zombies => (&mut s.zombies_won, &mut s.zombie_end_steps),
            Winner::Unresolved => (&mut s.unresolved, &mut s.unresolved_end_steps),
        };
        *count += 1;
        *hist.entry(o.end_step).or_default() += 1;
        if let Some(b) = o.first_border_step {
            *s.first_border_steps.entry(b).or_default() += 1;
        }
        for p in &o.trajectory {
            let z = p.counts.zombies;
            let e = envelope.entry(p.step).or_insert((0, u64::MAX, 0, 0));
            e.0 += 1;
            e.1 = e.1.min(z);
            e.2 = e.2.max(z);
            e.3 += u128::from(z);
        }
    }
    s.zombie_envelope = envelope
        .into_iter()
        .map(|(step, (runs, min, max, sum))| EnvelopePoint { step, runs, min, max, mean: sum as f64 / runs as f64 })
        .collect();
    s.runs = runs;
    s
}

/// Summary of bare outcomes, numbered by position.
pub fn aggregate_outcomes(outcomes: impl IntoIterator<Item = RunOutcome>) -> BatchSummary {
    aggregate(
        outcomes
            .into_iter()
            .enumerate()
            .map(|(i, outcome)| RunRecord { run_id: i as u32, seed: 0, outcome }),
    )
}
