//! Early-outbreak model: the live zombie count as an absorbing Markov chain.
//!
//! State 0 (the outbreak is wiped out) and every state at or above the
//! win-cap (zombies treated as unstoppable) are absorbing. Escapes change no
//! counts, so only decisive fights are modelled; `q` is the probability that
//! a decisive fight kills the zombie.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::stream;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error("cap must be at least 2, got {0}")]
    Cap(u32),
    #[error("q = {0} is not a probability")]
    Probability(f64),
    #[error("trials must be at least 1")]
    Trials,
    #[error("linear system is singular")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKernel {
    /// One decisive fight per transition: `z -> z - 1` w.p. `q`, else `z + 1`.
    SingleEvent,
    /// Every zombie fights once per transition; `D ~ Binomial(z, q)` die and
    /// each survivor converts one human: `z -> 2 (z - D)`.
    PerZombieWave,
}

impl ChainKernel {
    pub const ALL: [ChainKernel; 2] = [ChainKernel::SingleEvent, ChainKernel::PerZombieWave];

    pub fn name(&self) -> &'static str {
        match self {
            ChainKernel::SingleEvent => "single-event",
            ChainKernel::PerZombieWave => "per-zombie-wave",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub q: f64,
    pub cap: u32,
    pub kernel: ChainKernel,
}

impl ChainSpec {
    pub fn new(q: f64, cap: u32, kernel: ChainKernel) -> Self {
        ChainSpec { q, cap, kernel }
    }

    pub fn validate(&self) -> Result<(), AnalyticError> {
        if self.cap < 2 {
            return Err(AnalyticError::Cap(self.cap));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(AnalyticError::Probability(self.q));
        }
        Ok(())
    }

    /// Outgoing transitions of transient state `z` as `(target, probability)`;
    /// targets at or above the cap are reported as `cap`.
    pub fn transitions(&self, z: u32) -> Vec<(u32, f64)> {
        let q = self.q;
        match self.kernel {
            ChainKernel::SingleEvent => vec![(z - 1, q), ((z + 1).min(self.cap), 1.0 - q)],
            ChainKernel::PerZombieWave => {
                let mut out: Vec<(u32, f64)> = Vec::with_capacity(z as usize + 1);
                for (d, p) in binomial_pmf(z, q).into_iter().enumerate() {
                    let target = (2 * (z - d as u32)).min(self.cap);
                    match out.iter_mut().find(|(t, _)| *t == target) {
                        Some(slot) => slot.1 += p,
                        None => out.push((target, p)),
                    }
                }
                out
            }
        }
    }
}

fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    // pmf[k] built from pmf[k-1] would underflow for extreme p; direct
    // products are fine for the state counts used here.
    let mut pmf = Vec::with_capacity(n as usize + 1);
    let mut coeff = 1.0f64;
    for k in 0..=n {
        if k > 0 {
            coeff = coeff * f64::from(n - k + 1) / f64::from(k);
        }
        pmf.push(coeff * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32));
    }
    pmf
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionResult {
    /// Probability, starting from a single zombie, that the outbreak dies out.
    pub extinction_probability: f64,
    pub zombie_win_probability: f64,
    /// Extinction probability from each transient state `1..cap`.
    pub by_state: Vec<f64>,
}

/// Solves the absorption equations `u(z) = sum_z' P(z -> z') u(z')` with
/// `u(0) = 1`, `u(>= cap) = 0` by Gaussian elimination.
pub fn extinction_probability(spec: &ChainSpec) -> Result<ExtinctionResult, AnalyticError> {
    spec.validate()?;
    let n = spec.cap as usize - 1;
    // Row s-1: u(s) - sum_{transient s'} P(s, s') u(s') = P(s, 0)
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for s in 1..=n as u32 {
        let row = &mut a[s as usize - 1];
        row[s as usize - 1] += 1.0;
        for (t, p) in spec.transitions(s) {
            if t == 0 {
                row[n] += p;
            } else if t < spec.cap {
                row[t as usize - 1] -= p;
            }
        }
    }
    let u = solve_augmented(a)?;
    let by_state: Vec<f64> = u.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let e = by_state[0];
    Ok(ExtinctionResult {
        extinction_probability: e,
        zombie_win_probability: 1.0 - e,
        by_state,
    })
}

/// Gaussian elimination with partial pivoting on an `n x (n+1)` augmented matrix.
fn solve_augmented(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>, AnalyticError> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(AnalyticError::Singular);
        }
        a.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][n] - s) / a[r][r];
    }
    Ok(x)
}

/// Fraction of `trials` simulated chains, each started from one zombie,
/// that end in extinction.
pub fn chain_monte_carlo(spec: &ChainSpec, trials: u64, seed: u64) -> Result<f64, AnalyticError> {
    spec.validate()?;
    if trials == 0 {
        return Err(AnalyticError::Trials);
    }
    let mut rng = stream(seed);
    let mut extinct = 0u64;
    for _ in 0..trials {
        let mut z = 1u32;
        while z > 0 && z < spec.cap {
            z = match spec.kernel {
                ChainKernel::SingleEvent => {
                    if rng.random::<f64>() < spec.q {
                        z - 1
                    } else {
                        z + 1
                    }
                }
                ChainKernel::PerZombieWave => {
                    let dead = (0..z).filter(|_| rng.random::<f64>() < spec.q).count() as u32;
                    2 * (z - dead)
                }
            };
        }
        extinct += u64::from(z == 0);
    }
    Ok(extinct as f64 / trials as f64)
}
