use std::collections::{HashMap, VecDeque};

use super::kernel::for_each_outcome;
use super::Dynamics;
use crate::error::{Error, Result};
use crate::game::Game;
use crate::learner::{AgentState, Mood, SystemState};

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// Every state reachable from an all-discontent start, indexed both ways.
#[derive(Clone, Debug)]
pub struct StateSpace {
    states: Vec<SystemState>,
    index: HashMap<SystemState, usize>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn state(&self, id: usize) -> &SystemState {
        &self.states[id]
    }

    pub fn id(&self, state: &SystemState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn contains(&self, state: &SystemState) -> bool {
        self.index.contains_key(state)
    }

    fn insert(&mut self, state: SystemState) -> (usize, bool) {
        if let Some(&id) = self.index.get(&state) {
            return (id, false);
        }
        let id = self.states.len();
        self.index.insert(state.clone(), id);
        self.states.push(state);
        (id, true)
    }
}

/// Aligned all-discontent states, one per (profile, disturbance), in index order.
pub fn discontent_seeds(game: &Game) -> Vec<SystemState> {
    let mut seeds = Vec::with_capacity(game.profile_count() * game.disturbance_count());
    for p in 0..game.profile_count() {
        let profile = game.profile(p);
        for w in 0..game.disturbance_count() {
            let payoffs = game.payoffs(p, w);
            seeds.push(SystemState(
                profile
                    .0
                    .iter()
                    .zip(payoffs)
                    .map(|(&a, &u)| AgentState::new(a, u, Mood::Discontent))
                    .collect(),
            ));
        }
    }
    seeds
}

/// Breadth-first closure of the one-step support from every aligned
/// all-discontent state.
pub fn enumerate_states(game: &Game, dynamics: &Dynamics, cap: usize) -> Result<StateSpace> {
    let mut space = StateSpace {
        states: Vec::new(),
        index: HashMap::new(),
    };
    let mut queue = VecDeque::new();
    for seed in discontent_seeds(game) {
        let (id, fresh) = space.insert(seed);
        if fresh {
            queue.push_back(id);
        }
    }
    let mut overflow = false;
    while let Some(id) = queue.pop_front() {
        let state = space.states[id].clone();
        for_each_outcome(game, dynamics, &state, |next, _| {
            if overflow || space.index.contains_key(next) {
                return;
            }
            if space.len() >= cap {
                overflow = true;
                return;
            }
            let (nid, _) = space.insert(next.clone());
            queue.push_back(nid);
        });
        if overflow {
            return Err(Error::StateSpaceCap { cap });
        }
    }
    Ok(space)
}
