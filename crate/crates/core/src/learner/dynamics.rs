use serde::{Deserialize, Serialize};

use super::{AgentState, Mood, SystemState, UnitSource};
use crate::game::{within_interval, Game};

/// `ε^x` evaluated in log space; `0^0 = 1`.
#[inline]
pub fn eps_pow(eps: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else if eps == 0.0 {
        0.0
    } else {
        (exponent * eps.ln()).exp()
    }
}

/// Exact action probabilities for one agent.
pub fn action_distribution(state: &AgentState, action_count: usize, eps: f64, c: f64) -> Vec<f64> {
    match state.mood {
        Mood::Discontent => vec![1.0 / action_count as f64; action_count],
        Mood::Content if action_count == 1 => vec![1.0],
        Mood::Content => {
            let explore = eps_pow(eps, c);
            let mut probs = vec![explore / (action_count - 1) as f64; action_count];
            probs[state.action] = 1.0 - explore;
            probs
        }
    }
}

/// Draws one agent's action. A content agent first tosses the `ε^c`
/// experimentation coin, then picks uniformly among its other actions.
pub fn select_action(
    state: &AgentState,
    action_count: usize,
    eps: f64,
    c: f64,
    rng: &mut impl UnitSource,
) -> usize {
    match state.mood {
        Mood::Discontent => uniform_index(rng.unit(), action_count),
        Mood::Content if action_count == 1 => state.action,
        Mood::Content => {
            if rng.unit() < eps_pow(eps, c) {
                let other = uniform_index(rng.unit(), action_count - 1);
                if other >= state.action {
                    other + 1
                } else {
                    other
                }
            } else {
                state.action
            }
        }
    }
}

#[inline]
fn uniform_index(unit: f64, count: usize) -> usize {
    ((unit * count as f64) as usize).min(count - 1)
}

/// One agent's state update from its own action and payoff only.
pub fn update_agent_state(
    state: &AgentState,
    played: usize,
    received: f64,
    rho: f64,
    eps: f64,
    rng: &mut impl UnitSource,
) -> AgentState {
    if state.mood == Mood::Content
        && played == state.action
        && within_interval(received - state.utility, rho)
    {
        return *state;
    }
    let mood = if rng.unit() < eps_pow(eps, 1.0 - received) {
        Mood::Content
    } else {
        Mood::Discontent
    };
    AgentState::new(played, received, mood)
}

/// Finalises locally computed moods after every agent has heard the others.
pub fn broadcast_moods(
    local: &[Mood],
    eps: f64,
    beta: f64,
    rng: &mut impl UnitSource,
) -> Vec<Mood> {
    if local.iter().all(|&m| m == Mood::Content) {
        return local.to_vec();
    }
    let keep = eps_pow(eps, beta);
    local
        .iter()
        .map(|&m| match m {
            Mood::Discontent => Mood::Discontent,
            Mood::Content if rng.unit() < keep => Mood::Content,
            Mood::Content => Mood::Discontent,
        })
        .collect()
}

/// Inverse-CDF sample from the disturbance distribution.
pub fn sample_disturbance(game: &Game, rng: &mut impl UnitSource) -> usize {
    let u = rng.unit();
    let mut cumulative = 0.0;
    for (w, d) in game.disturbances().iter().enumerate() {
        cumulative += d.prob;
        if u < cumulative {
            return w;
        }
    }
    game.disturbance_count() - 1
}

/// Parameters of a single iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub eps: f64,
    pub c: f64,
    pub rho: f64,
    pub beta: Option<f64>,
}

/// What was played and paid in one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub actions: Vec<usize>,
    pub disturbance: usize,
    pub payoffs: Vec<f64>,
}

/// One round: disturbance, actions, payoffs, per-agent updates and the
/// optional mood broadcast. Draws are consumed in a fixed order (disturbance,
/// then agents in index order for actions, then for moods, then broadcast).
pub fn step(
    state: &SystemState,
    game: &Game,
    params: &StepParams,
    rng: &mut impl UnitSource,
) -> (SystemState, StepOutcome) {
    let w = sample_disturbance(game, rng);
    let actions: Vec<usize> = state
        .0
        .iter()
        .enumerate()
        .map(|(i, s)| select_action(s, game.action_count(i), params.eps, params.c, rng))
        .collect();
    let payoffs = game.payoffs(game.profile_index(&actions), w).to_vec();
    let mut next: Vec<AgentState> = state
        .0
        .iter()
        .zip(&actions)
        .zip(&payoffs)
        .map(|((s, &a), &u)| update_agent_state(s, a, u, params.rho, params.eps, rng))
        .collect();
    if let Some(beta) = params.beta {
        let local: Vec<Mood> = next.iter().map(|s| s.mood).collect();
        for (s, m) in next
            .iter_mut()
            .zip(broadcast_moods(&local, params.eps, beta, rng))
        {
            s.mood = m;
        }
    }
    (
        SystemState(next),
        StepOutcome {
            actions,
            disturbance: w,
            payoffs,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Replays a scripted sequence of draws.
    struct Script(Vec<f64>, usize);

    impl UnitSource for Script {
        fn unit(&mut self) -> f64 {
            let u = self.0[self.1 % self.0.len()];
            self.1 += 1;
            u
        }
    }

    #[test]
    fn content_distribution_matches_direct_substitution() {
        let s = AgentState::new(1, 0.5, Mood::Content);
        let p = action_distribution(&s, 3, 0.1, 2.0);
        assert!((p[1] - 0.99).abs() < 1e-15);
        assert!((p[0] - 0.005).abs() < 1e-15);
        assert!((p[2] - 0.005).abs() < 1e-15);
    }

    #[test]
    fn discontent_distribution_is_uniform() {
        let s = AgentState::new(0, 0.5, Mood::Discontent);
        assert_eq!(action_distribution(&s, 4, 0.1, 2.0), vec![0.25; 4]);
    }

    #[test]
    fn single_action_content_agent_never_experiments() {
        let s = AgentState::new(0, 0.5, Mood::Content);
        assert_eq!(action_distribution(&s, 1, 0.9, 2.0), vec![1.0]);
        let mut rng = Script(vec![0.0], 0);
        assert_eq!(select_action(&s, 1, 0.9, 2.0, &mut rng), 0);
    }

    #[test]
    fn boundary_deviation_is_retained() {
        let s = AgentState::new(1, 0.40, Mood::Content);
        let mut rng = Script(vec![0.0], 0);
        assert_eq!(update_agent_state(&s, 1, 0.30, 0.1, 0.1, &mut rng), s);
        assert_eq!(rng.1, 0, "retaining consumes no draw");
    }

    #[test]
    fn content_probability_is_eps_to_one_minus_u() {
        assert!((eps_pow(0.1, 1.0 - 0.9) - 0.794_328_234_724_281_5).abs() < 1e-12);
    }

    #[test]
    fn discontent_agent_always_reevaluates() {
        let s = AgentState::new(0, 0.9, Mood::Discontent);
        let p_c = eps_pow(0.1, 1.0 - 0.3);
        let mut below = Script(vec![p_c * 0.999], 0);
        assert_eq!(
            update_agent_state(&s, 0, 0.3, 1.0, 0.1, &mut below),
            AgentState::new(0, 0.3, Mood::Content)
        );
        let mut above = Script(vec![p_c * 1.001], 0);
        assert_eq!(
            update_agent_state(&s, 0, 0.3, 1.0, 0.1, &mut above),
            AgentState::new(0, 0.3, Mood::Discontent)
        );
    }

    #[test]
    fn zero_eps_never_makes_an_agent_content() {
        let s = AgentState::new(0, 0.2, Mood::Discontent);
        let mut rng = Script(vec![0.0], 0);
        let next = update_agent_state(&s, 1, 0.999, 0.1, 0.0, &mut rng);
        assert_eq!(next.mood, Mood::Discontent);
    }

    #[test]
    fn broadcast_branches() {
        use Mood::*;
        let mut rng = Script(vec![0.5], 0);
        assert_eq!(broadcast_moods(&[Content, Content], 1e-4, 5e-5, &mut rng), vec![Content, Content]);
        assert_eq!(broadcast_moods(&[Discontent, Discontent], 1e-4, 5e-5, &mut rng), vec![Discontent, Discontent]);
        let keep = eps_pow(1e-4, 5e-5);
        assert!((keep - 0.999_539_589_4).abs() < 1e-9);
        let mut low = Script(vec![keep - 1e-9], 0);
        assert_eq!(broadcast_moods(&[Content, Discontent], 1e-4, 5e-5, &mut low), vec![Content, Discontent]);
        let mut high = Script(vec![keep + 1e-9], 0);
        assert_eq!(broadcast_moods(&[Content, Discontent], 1e-4, 5e-5, &mut high), vec![Discontent, Discontent]);
    }

    #[test]
    fn experiment_skips_baseline() {
        let s = AgentState::new(1, 0.5, Mood::Content);
        // Experiment coin fires, then the lower and upper halves of the
        // remaining range map to actions 0 and 2.
        let mut rng = Script(vec![0.0, 0.2], 0);
        assert_eq!(select_action(&s, 3, 0.5, 2.0, &mut rng), 0);
        let mut rng = Script(vec![0.0, 0.7], 0);
        assert_eq!(select_action(&s, 3, 0.5, 2.0, &mut rng), 2);
    }
}
