//! Fight / Flight / Freeze reactions and the outcome of a single
//! zombie-human encounter.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when validating that reaction probabilities sum to one.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum BehaviorError {
    #[error("{name} = {value} is not a probability")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("reaction probabilities sum to {0}, expected 1")]
    ReactionsDoNotSumToOne(f64),
    #[error("every interaction is an escape; no fight ever occurs")]
    NoDecisiveFights,
}

/// Reaction and fight-outcome probabilities of a human facing a zombie.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorTable {
    pub p_fight: f64,
    pub p_flight: f64,
    pub p_freeze: f64,
    /// Human wins a fight it chose.
    pub p_win_fight: f64,
    /// Fleeing human gets away.
    pub p_escape: f64,
    /// Fleeing human that was caught wins the forced fight.
    pub p_win_caught: f64,
    /// Frozen human wins the forced fight.
    pub p_win_freeze: f64,
}

impl Default for BehaviorTable {
    fn default() -> Self {
        BehaviorTable {
            p_fight: 0.25,
            p_flight: 0.55,
            p_freeze: 0.20,
            p_win_fight: 0.5,
            p_escape: 0.70,
            p_win_caught: 0.10,
            p_win_freeze: 0.05,
        }
    }
}

/// The human's reaction to a zombie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reaction {
    Fight,
    Flight,
    Freeze,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InteractionOutcome {
    ZombieKilled,
    HumanInfected,
    HumanEscaped,
}

/// Marginal probabilities of the three interaction outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeProbabilities {
    pub zombie_dies: f64,
    pub human_turns: f64,
    pub human_escapes: f64,
}

impl BehaviorTable {
    pub fn validate(&self) -> Result<(), BehaviorError> {
        let fields = [
            ("p_fight", self.p_fight),
            ("p_flight", self.p_flight),
            ("p_freeze", self.p_freeze),
            ("p_win_fight", self.p_win_fight),
            ("p_escape", self.p_escape),
            ("p_win_caught", self.p_win_caught),
            ("p_win_freeze", self.p_win_freeze),
        ];
        for (name, value) in fields {
            if !(0.0..=1.0).contains(&value) {
                return Err(BehaviorError::OutOfRange { name, value });
            }
        }
        let sum = self.p_fight + self.p_flight + self.p_freeze;
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(BehaviorError::ReactionsDoNotSumToOne(sum));
        }
        Ok(())
    }

    /// Closed-form marginals of the two-stage reaction tree.
    pub fn outcome_probabilities(&self) -> OutcomeProbabilities {
        let caught = self.p_flight * (1.0 - self.p_escape);
        OutcomeProbabilities {
            zombie_dies: self.p_fight * self.p_win_fight
                + caught * self.p_win_caught
                + self.p_freeze * self.p_win_freeze,
            human_turns: self.p_fight * (1.0 - self.p_win_fight)
                + caught * (1.0 - self.p_win_caught)
                + self.p_freeze * (1.0 - self.p_win_freeze),
            human_escapes: self.p_flight * self.p_escape,
        }
    }

    /// Probability that the zombie loses, given the encounter ends in a fight.
    pub fn conditional_defeat_probability(&self) -> Result<f64, BehaviorError> {
        let p = self.outcome_probabilities();
        let decisive = p.zombie_dies + p.human_turns;
        if decisive <= 0.0 {
            return Err(BehaviorError::NoDecisiveFights);
        }
        Ok(p.zombie_dies / decisive)
    }

    /// Samples the human's reaction.
    #[inline]
    pub fn sample_reaction<R: Rng + ?Sized>(&self, rng: &mut R) -> Reaction {
        let u: f64 = rng.random();
        if u < self.p_fight {
            Reaction::Fight
        } else if u < self.p_fight + self.p_flight {
            Reaction::Flight
        } else {
            Reaction::Freeze
        }
    }

    /// Samples the outcome of an encounter in which the human reacted with `reaction`.
    #[inline]
    pub fn sample_outcome<R: Rng + ?Sized>(&self, reaction: Reaction, rng: &mut R) -> InteractionOutcome {
        let u: f64 = rng.random();
        let win = match reaction {
            Reaction::Fight => self.p_win_fight,
            Reaction::Flight => {
                if u < self.p_escape {
                    return InteractionOutcome::HumanEscaped;
                }
                // Caught: rescale the remaining mass to a fresh uniform for the fight.
                let v = (u - self.p_escape) / (1.0 - self.p_escape);
                return if v < self.p_win_caught {
                    InteractionOutcome::ZombieKilled
                } else {
                    InteractionOutcome::HumanInfected
                };
            }
            Reaction::Freeze => self.p_win_freeze,
        };
        if u < win {
            InteractionOutcome::ZombieKilled
        } else {
            InteractionOutcome::HumanInfected
        }
    }

    /// Resolves one encounter: reaction first, then its outcome.
    #[inline]
    pub fn resolve_interaction<R: Rng + ?Sized>(&self, rng: &mut R) -> InteractionOutcome {
        self.resolve_with_reaction(rng).1
    }

    /// Like [`resolve_interaction`](Self::resolve_interaction), also reporting the reaction.
    #[inline]
    pub fn resolve_with_reaction<R: Rng + ?Sized>(&self, rng: &mut R) -> (Reaction, InteractionOutcome) {
        let reaction = self.sample_reaction(rng);
        (reaction, self.sample_outcome(reaction, rng))
    }
}

/// Free-function form of [`BehaviorTable::outcome_probabilities`], as a
/// `(zombie dies, human turns, human escapes)` triple.
pub fn interaction_outcome_probabilities(t: &BehaviorTable) -> (f64, f64, f64) {
    let p = t.outcome_probabilities();
    (p.zombie_dies, p.human_turns, p.human_escapes)
}

pub fn conditional_defeat_probability(t: &BehaviorTable) -> Result<f64, BehaviorError> {
    t.conditional_defeat_probability()
}

pub fn resolve_interaction<R: Rng + ?Sized>(rng: &mut R, t: &BehaviorTable) -> InteractionOutcome {
    t.resolve_interaction(rng)
}
