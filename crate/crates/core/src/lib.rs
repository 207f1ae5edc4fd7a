//! Stochastic agent-based simulation of a zombie outbreak on a 1 km
//! population raster, with border-quarantine interventions, a deterministic
//! Monte Carlo batch runner, an absorbing-chain model of the early outbreak,
//! and CSV / PPM reporting.

pub mod analytic;
pub mod behavior;
pub mod engine;
pub mod intervention;
pub mod montecarlo;
pub mod movement;
pub mod report;
pub mod rng;
pub mod worldmap;

pub use behavior::{BehaviorTable, InteractionOutcome};
pub use engine::{Counts, EngineConfig, RunOutcome, SimState, Simulation, Winner};
pub use intervention::{InterventionKind, ScenarioPolicy};
pub use movement::MovementParams;
pub use worldmap::{Cell, GridWorld};
