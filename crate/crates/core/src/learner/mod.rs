//! The repeated game played by completely uncoupled agents.
//!
//! Each agent keeps a baseline action, a baseline utility and a mood. Content
//! agents replay their baseline and experiment with probability `ε^c`;
//! discontent agents play uniformly. After the payoffs arrive, a content agent
//! that replayed its baseline and saw a payoff within `±ρ` of its baseline
//! keeps its state; every other agent adopts the played action and payoff and
//! turns content with probability `ε^(1−u)`.

mod dynamics;
mod run;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;

pub use dynamics::{
    action_distribution, broadcast_moods, eps_pow, sample_disturbance, select_action, step,
    update_agent_state, StepOutcome, StepParams,
};
pub use run::{run, run_many, HistogramRow, IterationRecord, Trajectory, TrajectorySummary};

/// Floor applied to a decaying ε so it stays strictly positive.
pub const EPSILON_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mood {
    Content,
    Discontent,
}

impl Mood {
    pub fn symbol(self) -> char {
        match self {
            Mood::Content => 'C',
            Mood::Discontent => 'D',
        }
    }
}

/// `[baseline action, baseline utility, mood]` of one agent.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AgentState {
    pub action: usize,
    pub utility: f64,
    pub mood: Mood,
}

impl AgentState {
    pub fn new(action: usize, utility: f64, mood: Mood) -> Self {
        AgentState {
            action,
            utility,
            mood,
        }
    }

    pub fn is_content(&self) -> bool {
        self.mood == Mood::Content
    }
}

// Utilities only ever come from the game table, so bitwise identity is the
// right notion of equality for chain-state keys.
impl PartialEq for AgentState {
    fn eq(&self, other: &Self) -> bool {
        self.action == other.action
            && self.utility.to_bits() == other.utility.to_bits()
            && self.mood == other.mood
    }
}

impl Eq for AgentState {}

impl Hash for AgentState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.action.hash(state);
        self.utility.to_bits().hash(state);
        self.mood.hash(state);
    }
}

impl Ord for AgentState {
    fn cmp(&self, other: &Self) -> Ordering {
        self.action
            .cmp(&other.action)
            .then(self.utility.total_cmp(&other.utility))
            .then(self.mood.cmp(&other.mood))
    }
}

impl PartialOrd for AgentState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for AgentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{}]", self.action, self.utility, self.mood.symbol())
    }
}

/// The joint chain state: one [`AgentState`] per agent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SystemState(pub Vec<AgentState>);

impl SystemState {
    /// The pre-play state: everyone discontent, baselines unset (zeroed).
    /// The first iteration overwrites every baseline.
    pub fn initial(n: usize) -> Self {
        SystemState(vec![AgentState::new(0, 0.0, Mood::Discontent); n])
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn all_content(&self) -> bool {
        self.0.iter().all(|a| a.mood == Mood::Content)
    }

    pub fn all_discontent(&self) -> bool {
        self.0.iter().all(|a| a.mood == Mood::Discontent)
    }

    pub fn baseline_actions(&self) -> Vec<usize> {
        self.0.iter().map(|a| a.action).collect()
    }

    pub fn moods(&self) -> Vec<Mood> {
        self.0.iter().map(|a| a.mood).collect()
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

/// Source of uniform draws in `[0, 1)`. Any `rand` generator qualifies;
/// tests substitute scripted sequences.
pub trait UnitSource {
    fn unit(&mut self) -> f64;
}

impl<R: rand::RngCore> UnitSource for R {
    fn unit(&mut self) -> f64 {
        rand::Rng::gen::<f64>(self)
    }
}

/// `ε_{k+1} = decay · ε_k`, starting from `initial` at the first iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub initial: f64,
    #[serde(default = "one")]
    pub decay: f64,
}

fn one() -> f64 {
    1.0
}

impl EpsilonSchedule {
    pub fn fixed(epsilon: f64) -> Self {
        EpsilonSchedule {
            initial: epsilon,
            decay: 1.0,
        }
    }

    /// ε used at iteration `k` (1-based).
    pub fn at(&self, k: u64) -> f64 {
        (self.initial * self.decay.powf((k.max(1) - 1) as f64)).max(EPSILON_FLOOR)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoTag {
    #[serde(rename = "auto")]
    Auto,
}

/// Either computed from the game (verified) or overridden by the user.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoSetting {
    Auto(AutoTag),
    Value(f64),
}

impl Default for RhoSetting {
    fn default() -> Self {
        RhoSetting::Auto(AutoTag::Auto)
    }
}

impl RhoSetting {
    pub const AUTO: RhoSetting = RhoSetting::Auto(AutoTag::Auto);

    pub fn is_auto(&self) -> bool {
        matches!(self, RhoSetting::Auto(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub epsilon: EpsilonSchedule,
    pub c: f64,
    #[serde(default)]
    pub rho: RhoSetting,
    /// Mood-broadcast exponent β; `None` disables the broadcast step.
    #[serde(default)]
    pub beta: Option<f64>,
    pub iterations: u64,
    pub seed: u64,
    /// Keep the per-iteration records in the trajectory.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub keep_records: bool,
}

impl LearnerConfig {
    /// Checks the configuration against the game it will run on.
    pub fn validate(&self, game: &Game) -> Result<()> {
        let eps = self.epsilon;
        if !(eps.initial > 0.0 && eps.initial < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon.initial must lie in (0, 1), got {}",
                eps.initial
            )));
        }
        if !(eps.decay > 0.0 && eps.decay <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon.decay must lie in (0, 1], got {}",
                eps.decay
            )));
        }
        validate_c(self.c, game.n())?;
        if let RhoSetting::Value(rho) = self.rho {
            if !(rho >= 0.0) {
                return Err(Error::InvalidConfig(format!("rho must be non-negative, got {rho}")));
            }
        }
        if let Some(beta) = self.beta {
            if !(beta >= 0.0) || !beta.is_finite() {
                return Err(Error::InvalidConfig(format!("beta must be non-negative, got {beta}")));
            }
        }
        Ok(())
    }

    /// ρ to use on `game` and whether it came from the game itself.
    pub fn resolve_rho(&self, game: &Game) -> (f64, bool) {
        match self.rho {
            RhoSetting::Auto(_) => (game.rho(), true),
            RhoSetting::Value(v) => (v, false),
        }
    }
}

/// Rejects `c < n`. The boundary `c = n` is accepted because the reference
/// two-agent example runs at `c = 2`.
pub(crate) fn validate_c(c: f64, n: usize) -> Result<()> {
    if !(c >= n as f64) || !c.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "c must exceed n = {n}, got {c}"
        )));
    }
    Ok(())
}
