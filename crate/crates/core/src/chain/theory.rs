use serde::{Deserialize, Serialize};

use super::classify::aligned_within_rho;
use super::{Potentials, RecurrenceClassification, StateSpace};
use crate::error::Result;
use crate::game::Game;
use crate::learner::{AgentState, Mood, SystemState};

/// Upper bound on resistances into `C^m`:
/// `m c² + (4 + m − m²)/2 · c − m(m+1)/2`. Equals `2c` at `m = 0`.
pub fn rbar(m: usize, c: f64) -> f64 {
    let m = m as f64;
    m * c * c + (4.0 + m - m * m) / 2.0 * c - m * (m + 1.0) / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Prediction {
    /// Aligned all-content states at welfare-maximising (profile, disturbance) pairs.
    pub states: Vec<SystemState>,
    pub interdependent: bool,
    /// Interdependence holds and every predicted state meets the payoff conditions.
    pub verified: bool,
}

/// The welfare-maximising aligned content states.
pub fn theorem2_predict(game: &Game, rho: f64) -> Result<Theorem2Prediction> {
    let interdependent = game.interdependence(rho)?.holds;
    let mut states: Vec<SystemState> = Vec::new();
    let mut conditions_hold = true;
    for (profile, w) in game.welfare_argmax().maximisers {
        let p = game.profile_index(&profile.0);
        let state = SystemState(
            profile
                .0
                .iter()
                .zip(game.payoffs(p, w))
                .map(|(&a, &u)| AgentState::new(a, u, Mood::Content))
                .collect(),
        );
        conditions_hold &= (0..game.n()).all(|i| aligned_within_rho(game, &state, i, rho));
        states.push(state);
    }
    states.sort();
    states.dedup();
    Ok(Theorem2Prediction {
        states,
        interdependent,
        verified: interdependent && conditions_hold,
    })
}

/// States of every class attaining the minimum stochastic potential, sorted.
pub fn stochastically_stable_set(
    space: &StateSpace,
    classes: &RecurrenceClassification,
    potentials: &Potentials,
) -> Vec<SystemState> {
    let mut out: Vec<SystemState> = potentials
        .minimisers()
        .into_iter()
        .flat_map(|k| classes.classes[k].states.iter().map(|&x| space.state(x).clone()))
        .collect();
    out.sort();
    out
}
