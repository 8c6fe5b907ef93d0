//! Enumeration of every one-step outcome of the learner from a given state.
//!
//! An outcome fixes the joint action, the disturbance, each re-evaluating
//! agent's mood coin and, with broadcasting on, each content agent's
//! broadcast coin. Its probability is the product of its [`Factor`]s. The
//! numeric matrix and the symbolic resistances fold the same factors in two
//! different algebras.

use super::Dynamics;
use crate::exponent::Exponent;
use crate::game::{within_interval, Game};
use crate::learner::{eps_pow, AgentState, Mood, SystemState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Factor {
    /// Content agent replays its baseline: `1 − ε^c`.
    Stay,
    /// Content agent experiments with one of `others` actions: `ε^c / others`.
    Experiment { others: usize },
    /// Discontent agent picks one of `count` actions: `1 / count`.
    Uniform { count: usize },
    /// The disturbance drawn: `Pr_w`.
    Disturbance { prob: f64 },
    /// Re-evaluating agent turns content at utility `u`: `ε^(1−u)`.
    TurnContent { utility: f64 },
    /// Re-evaluating agent turns discontent at utility `u`: `1 − ε^(1−u)`.
    TurnDiscontent { utility: f64 },
    /// Broadcast keeps a locally content agent content: `ε^β`.
    KeepContent,
    /// Broadcast drops a locally content agent: `1 − ε^β`.
    DropContent,
}

impl Factor {
    /// Probability of this factor at `eps`. `eps = 0` gives the unperturbed chain.
    pub fn probability(&self, eps: f64, dynamics: &Dynamics) -> f64 {
        let complement = |x: f64| {
            if x == 0.0 {
                0.0
            } else if eps == 0.0 {
                1.0
            } else {
                -(x * eps.ln()).exp_m1()
            }
        };
        match *self {
            Factor::Stay => complement(dynamics.c),
            Factor::Experiment { others } => eps_pow(eps, dynamics.c) / others as f64,
            Factor::Uniform { count } => 1.0 / count as f64,
            Factor::Disturbance { prob } => prob,
            Factor::TurnContent { utility } => eps_pow(eps, 1.0 - utility),
            Factor::TurnDiscontent { utility } => complement(1.0 - utility),
            Factor::KeepContent => eps_pow(eps, dynamics.beta.unwrap_or(0.0)),
            Factor::DropContent => complement(dynamics.beta.unwrap_or(0.0)),
        }
    }

    /// Exponent of ε contributed as ε → 0.
    pub fn exponent(&self, dynamics: &Dynamics) -> Exponent {
        match *self {
            Factor::Experiment { .. } => dynamics.c_exponent(),
            Factor::TurnContent { utility } => Exponent::complement_of(utility),
            Factor::KeepContent => dynamics.beta_exponent(),
            _ => Exponent::ZERO,
        }
    }
}

/// Probability of an outcome at `eps`.
pub fn outcome_probability(factors: &[Factor], eps: f64, dynamics: &Dynamics) -> f64 {
    factors
        .iter()
        .map(|f| f.probability(eps, dynamics))
        .product()
}

/// Resistance of an outcome: its total ε exponent.
pub fn outcome_exponent(factors: &[Factor], dynamics: &Dynamics) -> Exponent {
    factors.iter().map(|f| f.exponent(dynamics)).sum()
}

/// Calls `visit(next_state, factors)` for every outcome with positive
/// probability for some ε in (0, 1).
pub fn for_each_outcome(
    game: &Game,
    dynamics: &Dynamics,
    state: &SystemState,
    mut visit: impl FnMut(&SystemState, &[Factor]),
) {
    let n = game.n();
    let options: Vec<Vec<(usize, Factor)>> = state
        .0
        .iter()
        .enumerate()
        .map(|(i, s)| agent_options(s, game.action_count(i)))
        .collect();

    let mut choice = vec![0usize; n];
    let mut actions = vec![0usize; n];
    let mut factors: Vec<Factor> = Vec::with_capacity(4 * n + 1);
    let mut next = state.clone();
    let mut reevaluating: Vec<usize> = Vec::with_capacity(n);
    let mut locally_content: Vec<usize> = Vec::with_capacity(n);

    loop {
        factors.clear();
        for i in 0..n {
            let (a, f) = options[i][choice[i]];
            actions[i] = a;
            if f != (Factor::Uniform { count: 1 }) {
                factors.push(f);
            }
        }
        let profile = game.profile_index(&actions);
        let action_depth = factors.len();

        for (w, d) in game.disturbances().iter().enumerate() {
            factors.truncate(action_depth);
            factors.push(Factor::Disturbance { prob: d.prob });
            let payoffs = game.payoffs(profile, w);
            reevaluating.clear();
            for i in 0..n {
                let s = &state.0[i];
                let retained = s.mood == Mood::Content
                    && actions[i] == s.action
                    && within_interval(payoffs[i] - s.utility, dynamics.rho);
                if retained {
                    next.0[i] = *s;
                } else {
                    reevaluating.push(i);
                }
            }
            let disturbance_depth = factors.len();
            for mask in 0u32..(1u32 << reevaluating.len()) {
                factors.truncate(disturbance_depth);
                for (bit, &i) in reevaluating.iter().enumerate() {
                    let u = payoffs[i];
                    let mood = if mask & (1 << bit) != 0 {
                        factors.push(Factor::TurnContent { utility: u });
                        Mood::Content
                    } else {
                        factors.push(Factor::TurnDiscontent { utility: u });
                        Mood::Discontent
                    };
                    next.0[i] = AgentState::new(actions[i], u, mood);
                }
                broadcast(dynamics, &mut next, &mut factors, &mut locally_content, &mut visit);
            }
        }

        // Advance the odometer over joint actions.
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < options[i].len() {
                break;
            }
            choice[i] = 0;
        }
    }
}

fn broadcast(
    dynamics: &Dynamics,
    next: &mut SystemState,
    factors: &mut Vec<Factor>,
    locally_content: &mut Vec<usize>,
    visit: &mut impl FnMut(&SystemState, &[Factor]),
) {
    let Some(beta) = dynamics.beta else {
        visit(next, factors);
        return;
    };
    locally_content.clear();
    locally_content.extend((0..next.len()).filter(|&i| next.0[i].mood == Mood::Content));
    if locally_content.len() == next.len() || locally_content.is_empty() {
        visit(next, factors);
        return;
    }
    let depth = factors.len();
    let masks = if beta == 0.0 {
        // ε^0 = 1: every locally content agent stays content.
        let all = (1u32 << locally_content.len()) - 1;
        all..all + 1
    } else {
        0..(1u32 << locally_content.len())
    };
    for mask in masks {
        factors.truncate(depth);
        for (bit, &i) in locally_content.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                factors.push(Factor::KeepContent);
                next.0[i].mood = Mood::Content;
            } else {
                factors.push(Factor::DropContent);
                next.0[i].mood = Mood::Discontent;
            }
        }
        visit(next, factors);
    }
    for &i in locally_content.iter() {
        next.0[i].mood = Mood::Content;
    }
    factors.truncate(depth);
}

fn agent_options(state: &AgentState, count: usize) -> Vec<(usize, Factor)> {
    match state.mood {
        Mood::Discontent => (0..count).map(|a| (a, Factor::Uniform { count })).collect(),
        Mood::Content if count == 1 => vec![(state.action, Factor::Uniform { count: 1 })],
        Mood::Content => (0..count)
            .map(|a| {
                if a == state.action {
                    (a, Factor::Stay)
                } else {
                    (a, Factor::Experiment { others: count - 1 })
                }
            })
            .collect(),
    }
}
