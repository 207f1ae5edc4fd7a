//! Quarantine policies and border-crossing adjudication.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::worldmap::{Cell, GridWorld};

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("leak probability {0} is not in [0, 1]")]
    LeakProbability(f64),
    #[error("unknown scenario kind `{0}` (expected none, strict or leaky)")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    /// No border policing.
    #[serde(alias = "no_intervention")]
    None,
    /// Every outbound attempt is stopped (humans) or fatal (zombies).
    Strict,
    /// Like `Strict`, except outbound attempts succeed with the leak probability.
    Leaky,
}

impl fmt::Display for InterventionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InterventionKind::None => "none",
            InterventionKind::Strict => "strict",
            InterventionKind::Leaky => "leaky",
        })
    }
}

impl FromStr for InterventionKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "no_intervention" | "1" => Ok(InterventionKind::None),
            "strict" | "2" => Ok(InterventionKind::Strict),
            "leaky" | "partial" | "3" => Ok(InterventionKind::Leaky),
            _ => Err(PolicyError::UnknownKind(s.to_string())),
        }
    }
}

/// Scenario policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioPolicy {
    pub kind: InterventionKind,
    /// First step at which the border is policed.
    pub activation_step: u32,
    /// Outbound success probability under `Leaky`.
    pub leak_probability: f64,
}

impl Default for ScenarioPolicy {
    fn default() -> Self {
        ScenarioPolicy {
            kind: InterventionKind::None,
            activation_step: 14,
            leak_probability: 0.001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Human,
    IncubatingHuman,
    Zombie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrossingVerdict {
    Allow,
    /// The move is cancelled; the agent stays where it is.
    Stop,
    /// The zombie is destroyed at the border.
    Kill,
}

impl ScenarioPolicy {
    pub fn none() -> Self {
        ScenarioPolicy::default()
    }

    pub fn strict() -> Self {
        ScenarioPolicy { kind: InterventionKind::Strict, ..Default::default() }
    }

    pub fn leaky() -> Self {
        ScenarioPolicy { kind: InterventionKind::Leaky, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if !(0.0..=1.0).contains(&self.leak_probability) {
            return Err(PolicyError::LeakProbability(self.leak_probability));
        }
        Ok(())
    }

    /// Whether the border is policed during `step`.
    #[inline]
    pub fn is_active(&self, step: u32) -> bool {
        self.kind != InterventionKind::None && step >= self.activation_step
    }

    /// Verdict for a move between cells whose quarantine flags are
    /// `from_inside` and `to_inside`. Consumes randomness only for
    /// outbound attempts under `Leaky`.
    #[inline]
    pub fn adjudicate_flags<R: Rng + ?Sized>(
        &self,
        step: u32,
        kind: AgentKind,
        from_inside: bool,
        to_inside: bool,
        rng: &mut R,
    ) -> CrossingVerdict {
        if from_inside == to_inside || !self.is_active(step) {
            return CrossingVerdict::Allow;
        }
        if !from_inside {
            return CrossingVerdict::Stop;
        }
        if self.kind == InterventionKind::Leaky && rng.random::<f64>() < self.leak_probability {
            return CrossingVerdict::Allow;
        }
        match kind {
            AgentKind::Zombie => CrossingVerdict::Kill,
            AgentKind::Human | AgentKind::IncubatingHuman => CrossingVerdict::Stop,
        }
    }
}

/// Verdict for an agent of `kind` moving `from -> to` during `step`.
pub fn adjudicate_crossing<R: Rng + ?Sized>(
    policy: &ScenarioPolicy,
    step: u32,
    kind: AgentKind,
    from: Cell,
    to: Cell,
    world: &GridWorld,
    rng: &mut R,
) -> CrossingVerdict {
    policy.adjudicate_flags(step, kind, world.in_quarantine(from), world.in_quarantine(to), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::worldmap::{synthetic_world, Rect, SyntheticSpec};
    use proptest::prelude::*;

    fn world() -> GridWorld {
        let spec = SyntheticSpec {
            quarantine: Some(Rect { x0: 0, y0: 0, x1: 3, y1: 6 }),
            ..SyntheticSpec::uniform(6, 6, 36)
        };
        synthetic_world(&spec).unwrap()
    }

    const INSIDE: Cell = Cell::new(2, 2);
    const OUTSIDE: Cell = Cell::new(3, 2);

    #[test]
    fn strict_verdicts() {
        let w = world();
        let p = ScenarioPolicy::strict();
        let mut rng = stream(0);
        let v = |step, kind, from, to, rng: &mut _| adjudicate_crossing(&p, step, kind, from, to, &w, rng);
        assert_eq!(v(20, AgentKind::Zombie, INSIDE, OUTSIDE, &mut rng), CrossingVerdict::Kill);
        assert_eq!(v(10, AgentKind::Zombie, INSIDE, OUTSIDE, &mut rng), CrossingVerdict::Allow);
        assert_eq!(v(14, AgentKind::Zombie, INSIDE, OUTSIDE, &mut rng), CrossingVerdict::Kill);
        assert_eq!(v(20, AgentKind::Human, OUTSIDE, INSIDE, &mut rng), CrossingVerdict::Stop);
        assert_eq!(v(20, AgentKind::Zombie, OUTSIDE, INSIDE, &mut rng), CrossingVerdict::Stop);
        assert_eq!(v(20, AgentKind::Human, INSIDE, OUTSIDE, &mut rng), CrossingVerdict::Stop);
        assert_eq!(v(20, AgentKind::IncubatingHuman, INSIDE, OUTSIDE, &mut rng), CrossingVerdict::Stop);
    }

    #[test]
    fn null_policy_allows_everything() {
        let w = world();
        let p = ScenarioPolicy::none();
        let mut rng = stream(0);
        for kind in [AgentKind::Human, AgentKind::IncubatingHuman, AgentKind::Zombie] {
            for (a, b) in [(INSIDE, OUTSIDE), (OUTSIDE, INSIDE), (INSIDE, Cell::new(1, 1))] {
                for step in [0, 14, 1000] {
                    assert_eq!(adjudicate_crossing(&p, step, kind, a, b, &w, &mut rng), CrossingVerdict::Allow);
                }
            }
        }
    }

    #[test]
    fn leaky_inbound_always_stopped() {
        let w = world();
        let p = ScenarioPolicy { leak_probability: 1.0, ..ScenarioPolicy::leaky() };
        let mut rng = stream(0);
        for _ in 0..100 {
            assert_eq!(
                adjudicate_crossing(&p, 20, AgentKind::Zombie, OUTSIDE, INSIDE, &w, &mut rng),
                CrossingVerdict::Stop
            );
        }
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("Strict".parse::<InterventionKind>(), Ok(InterventionKind::Strict));
        assert_eq!("partial".parse::<InterventionKind>(), Ok(InterventionKind::Leaky));
        assert!("martial-law".parse::<InterventionKind>().is_err());
        assert!(ScenarioPolicy { leak_probability: -0.1, ..Default::default() }.validate().is_err());
    }

    fn arb_kind() -> impl Strategy<Value = AgentKind> {
        prop_oneof![Just(AgentKind::Human), Just(AgentKind::IncubatingHuman), Just(AgentKind::Zombie)]
    }

    fn arb_policy() -> impl Strategy<Value = ScenarioPolicy> {
        (
            prop_oneof![Just(InterventionKind::None), Just(InterventionKind::Strict), Just(InterventionKind::Leaky)],
            0u32..40,
            0.0..=1.0f64,
        )
            .prop_map(|(kind, activation_step, leak_probability)| ScenarioPolicy {
                kind,
                activation_step,
                leak_probability,
            })
    }

    proptest! {
        #[test]
        fn same_side_always_allowed(p in arb_policy(), step in 0u32..60, kind in arb_kind(), inside in any::<bool>(), seed in any::<u64>()) {
            let mut rng = stream(seed);
            prop_assert_eq!(p.adjudicate_flags(step, kind, inside, inside, &mut rng), CrossingVerdict::Allow);
        }

        #[test]
        fn inactive_policy_matches_null(p in arb_policy(), kind in arb_kind(), a in any::<bool>(), b in any::<bool>(), seed in any::<u64>()) {
            let null = ScenarioPolicy::none();
            let (mut r1, mut r2) = (stream(seed), stream(seed));
            for step in 0..p.activation_step {
                prop_assert_eq!(
                    p.adjudicate_flags(step, kind, a, b, &mut r1),
                    null.adjudicate_flags(step, kind, a, b, &mut r2)
                );
            }
        }

        #[test]
        fn humans_never_killed(p in arb_policy(), step in 0u32..60, a in any::<bool>(), b in any::<bool>(), seed in any::<u64>()) {
            let mut rng = stream(seed);
            for kind in [AgentKind::Human, AgentKind::IncubatingHuman] {
                prop_assert_ne!(p.adjudicate_flags(step, kind, a, b, &mut rng), CrossingVerdict::Kill);
            }
        }
    }
}
