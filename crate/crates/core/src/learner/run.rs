use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{step, LearnerConfig, StepParams, SystemState};
use crate::error::Result;
use crate::game::Game;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: u64,
    pub eps: f64,
    pub actions: Vec<usize>,
    pub disturbance: usize,
    pub payoffs: Vec<f64>,
    pub state: SystemState,
}

/// One row of the state-occupancy histogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub state: SystemState,
    pub count: u64,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub iterations: u64,
    pub rho: f64,
    /// ρ came from the game rather than a user override.
    pub verified: bool,
    pub final_epsilon: f64,
    /// Mean realised welfare `Σ_i u_{i,k}` over all iterations.
    pub average_welfare: f64,
    /// Post-update states, most frequent first, ties in state order.
    pub histogram: Vec<HistogramRow>,
    /// Baseline state after the last iteration.
    pub final_state: Option<SystemState>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<IterationRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub iterations: u64,
    pub rho: f64,
    pub verified: bool,
    pub average_welfare: f64,
    pub final_epsilon: f64,
    pub states_visited: usize,
    pub modal_state: Option<String>,
    pub modal_fraction: f64,
}

impl Trajectory {
    pub fn fraction(&self, state: &SystemState) -> f64 {
        self.histogram
            .iter()
            .find(|r| &r.state == state)
            .map_or(0.0, |r| r.fraction)
    }

    pub fn modal(&self) -> Option<&HistogramRow> {
        self.histogram.first()
    }

    pub fn summary(&self) -> TrajectorySummary {
        TrajectorySummary {
            iterations: self.iterations,
            rho: self.rho,
            verified: self.verified,
            average_welfare: self.average_welfare,
            final_epsilon: self.final_epsilon,
            states_visited: self.histogram.len(),
            modal_state: self.modal().map(|r| r.state.to_string()),
            modal_fraction: self.modal().map_or(0.0, |r| r.fraction),
        }
    }

    /// Writes `state_id,state,count,fraction` for rows strictly above
    /// `threshold`.
    pub fn write_histogram_csv<W: Write>(&self, out: W, threshold: f64) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["state_id", "state", "count", "fraction"])?;
        for (id, row) in self.histogram.iter().enumerate() {
            if row.fraction > threshold {
                writer.write_record([
                    id.to_string(),
                    row.state.to_string(),
                    row.count.to_string(),
                    row.fraction.to_string(),
                ])?;
            }
        }
        writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Runs the learner from an all-discontent start. Deterministic per seed.
pub fn run(game: &Game, config: &LearnerConfig) -> Result<Trajectory> {
    config.validate(game)?;
    let (rho, verified) = config.resolve_rho(game);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = SystemState::initial(game.n());
    let mut counts: BTreeMap<SystemState, u64> = BTreeMap::new();
    let mut records = Vec::new();
    let mut welfare_sum = 0.0;
    let mut eps = config.epsilon.initial;
    for k in 1..=config.iterations {
        eps = config.epsilon.at(k);
        let params = StepParams {
            eps,
            c: config.c,
            rho,
            beta: config.beta,
        };
        let (next, outcome) = step(&state, game, &params, &mut rng);
        welfare_sum += outcome.payoffs.iter().sum::<f64>();
        *counts.entry(next.clone()).or_insert(0) += 1;
        if config.keep_records {
            records.push(super::IterationRecord {
                k,
                eps,
                actions: outcome.actions,
                disturbance: outcome.disturbance,
                payoffs: outcome.payoffs,
                state: next.clone(),
            });
        }
        state = next;
    }
    let total = config.iterations as f64;
    let mut histogram: Vec<HistogramRow> = counts
        .into_iter()
        .map(|(state, count)| HistogramRow {
            state,
            count,
            fraction: count as f64 / total,
        })
        .collect();
    // Stable sort keeps ties in state order.
    histogram.sort_by(|a, b| b.count.cmp(&a.count));
    Ok(Trajectory {
        iterations: config.iterations,
        rho,
        verified,
        final_epsilon: eps,
        average_welfare: if config.iterations == 0 {
            0.0
        } else {
            welfare_sum / total
        },
        histogram,
        final_state: (config.iterations > 0).then_some(state),
        records,
    })
}

/// Independent runs, one per seed, in parallel.
pub fn run_many(game: &Game, config: &LearnerConfig, seeds: &[u64]) -> Result<Vec<Trajectory>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut c = config.clone();
            c.seed = seed;
            run(game, &c)
        })
        .collect()
}
