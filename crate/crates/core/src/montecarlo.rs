//! Repeated closed-loop trials per risk metric with independent seeded
//! streams, reduced in trial order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::RiskKind;
use crate::sim::{run_closed_loop, ScenarioConfig};
use crate::stats::{summarize, Summary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub scenario: String,
    pub metric: RiskKind,
    pub trials: usize,
    /// Smallest distance to collision of each trial; `None` for failed trials.
    pub per_trial_min_distance: Vec<Option<f64>>,
    pub collision_count: usize,
    pub failures: Vec<TrialFailure>,
    pub fallback_steps: usize,
    /// Summary over successful trials.
    pub summary: Option<Summary>,
    /// Per-step minimum distance of every successful trial.
    pub traces: Vec<Vec<f64>>,
}

impl McReport {
    pub fn successful_distances(&self) -> Vec<f64> {
        self.per_trial_min_distance.iter().flatten().copied().collect()
    }

    pub fn worst_case(&self) -> Option<f64> {
        self.summary.map(|s| s.min)
    }
}

/// RNG for one trial: the run seed picks the key, and the metric and trial
/// index pick a distinct ChaCha stream.
pub fn trial_rng(seed: u64, metric: RiskKind, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let metric_index = RiskKind::ALL.iter().position(|k| *k == metric).unwrap_or(0) as u64;
    rng.set_stream((metric_index << 40) | trial as u64);
    rng
}

struct TrialOutcome {
    min_distance: std::result::Result<f64, String>,
    trace: Vec<f64>,
    fallback_steps: usize,
}

fn run_trials(scenario: &ScenarioConfig, metric: RiskKind, trials: usize, seed: u64) -> Vec<TrialOutcome> {
    let config = scenario.with_metric(metric);
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, metric, trial);
            match run_closed_loop(&config, &mut rng) {
                Ok(record) => TrialOutcome {
                    min_distance: Ok(record.min_distance()),
                    trace: record.distance_trace(),
                    fallback_steps: record.fallback_steps,
                },
                Err(e) => TrialOutcome {
                    min_distance: Err(e.to_string()),
                    trace: Vec::new(),
                    fallback_steps: 0,
                },
            }
        })
        .collect()
}

/// Runs `trials` closed loops per metric. `jobs` bounds the worker pool;
/// results do not depend on it.
pub fn monte_carlo(
    scenario: &ScenarioConfig,
    metrics: &[RiskKind],
    trials: usize,
    seed: u64,
    jobs: usize,
) -> Result<Vec<McReport>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    scenario.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;

    Ok(metrics
        .iter()
        .map(|&metric| {
            let outcomes = pool.install(|| run_trials(scenario, metric, trials, seed));
            let mut report = McReport {
                scenario: scenario.name.clone(),
                metric,
                trials,
                per_trial_min_distance: Vec::with_capacity(trials),
                collision_count: 0,
                failures: Vec::new(),
                fallback_steps: 0,
                summary: None,
                traces: Vec::new(),
            };
            for (trial, outcome) in outcomes.into_iter().enumerate() {
                report.fallback_steps += outcome.fallback_steps;
                match outcome.min_distance {
                    Ok(d) => {
                        report.per_trial_min_distance.push(Some(d));
                        report.traces.push(outcome.trace);
                    }
                    Err(error) => {
                        report.per_trial_min_distance.push(None);
                        report.failures.push(TrialFailure { trial, error });
                    }
                }
            }
            let distances = report.successful_distances();
            report.collision_count = distances.iter().filter(|d| **d < 0.0).count();
            report.summary = summarize(&distances);
            report
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn trial_streams_differ_and_repeat() {
        let a = trial_rng(1, RiskKind::Mean, 0).next_u64();
        assert_eq!(a, trial_rng(1, RiskKind::Mean, 0).next_u64());
        assert_ne!(a, trial_rng(1, RiskKind::Mean, 1).next_u64());
        assert_ne!(a, trial_rng(1, RiskKind::Cvar, 0).next_u64());
        assert_ne!(a, trial_rng(2, RiskKind::Mean, 0).next_u64());
    }

    #[test]
    fn zero_trials_rejected() {
        let scenario = crate::sim::builtin_scenario("head_on").unwrap();
        assert!(monte_carlo(&scenario, &[RiskKind::Mean], 0, 0, 1).is_err());
    }
}
