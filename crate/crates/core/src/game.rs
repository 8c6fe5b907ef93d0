//! Finite n-person games with a finite set of disturbances.
//!
//! A [`Game`] stores an explicit utility table `u_i(a, w)` for every agent,
//! joint action and disturbance. Profiles are indexed lexicographically with
//! agent 0 as the most significant digit.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;

/// Absolute slack applied to every interval-rule comparison `|Δu| ≤ ρ`.
pub const INTERVAL_SLACK: f64 = 1e-12;

/// Default agent cap for the exhaustive interdependence check.
pub const DEFAULT_INTERDEPENDENCE_CAP: usize = 12;

/// `|Δu| ≤ ρ` under the shared slack.
#[inline]
pub fn within_interval(delta: f64, rho: f64) -> bool {
    delta.abs() <= rho + INTERVAL_SLACK
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub name: String,
    pub actions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub name: String,
    pub prob: f64,
}

/// One action index per agent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionProfile(pub Vec<usize>);

impl ActionProfile {
    pub fn actions(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for ActionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    agents: Vec<Agent>,
    disturbances: Vec<Disturbance>,
    /// `strides[i]` is the profile-index weight of agent `i`'s action.
    strides: Vec<usize>,
    profile_count: usize,
    /// Laid out as `[profile][disturbance][agent]`.
    utilities: Vec<f64>,
}

impl Game {
    /// Builds a game from a utility function, validating every invariant.
    pub fn from_fn(
        agents: Vec<Agent>,
        disturbances: Vec<Disturbance>,
        mut utility: impl FnMut(&[usize], usize) -> Vec<f64>,
    ) -> Result<Self> {
        let (strides, profile_count) = layout(&agents)?;
        let n = agents.len();
        let mut utilities = Vec::with_capacity(profile_count * disturbances.len() * n);
        let mut profile = vec![0; n];
        for p in 0..profile_count {
            decode(p, &strides, &agents, &mut profile);
            for w in 0..disturbances.len() {
                let payoffs = utility(&profile, w);
                if payoffs.len() != n {
                    return Err(Error::InvalidGame(format!(
                        "profile {} disturbance {}: expected {n} payoffs, got {}",
                        ActionProfile(profile.clone()),
                        w,
                        payoffs.len()
                    )));
                }
                utilities.extend_from_slice(&payoffs);
            }
        }
        let game = Game {
            agents,
            disturbances,
            strides,
            profile_count,
            utilities,
        };
        game.validate()?;
        Ok(game)
    }

    fn validate(&self) -> Result<()> {
        if self.disturbances.is_empty() {
            return Err(Error::InvalidGame("disturbance set is empty".into()));
        }
        let mut total = 0.0;
        for d in &self.disturbances {
            if !(d.prob > 0.0) || !d.prob.is_finite() {
                return Err(Error::InvalidGame(format!(
                    "disturbance '{}' has probability {}, must be strictly positive",
                    d.name, d.prob
                )));
            }
            total += d.prob;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidGame(format!(
                "disturbance probabilities sum to {total}, not 1"
            )));
        }
        let n = self.n();
        for p in 0..self.profile_count {
            for w in 0..self.disturbances.len() {
                for (i, &u) in self.payoffs(p, w).iter().enumerate() {
                    if !(0.0..1.0).contains(&u) {
                        return Err(Error::InvalidGame(format!(
                            "profile {} disturbance '{}': payoff {u} for agent '{}' is outside [0, 1)",
                            self.profile(p),
                            self.disturbances[w].name,
                            self.agents[i].name
                        )));
                    }
                }
            }
        }
        debug_assert_eq!(
            self.utilities.len(),
            self.profile_count * self.disturbances.len() * n
        );
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn disturbances(&self) -> &[Disturbance] {
        &self.disturbances
    }

    pub fn action_count(&self, agent: usize) -> usize {
        self.agents[agent].actions.len()
    }

    pub fn disturbance_count(&self) -> usize {
        self.disturbances.len()
    }

    pub fn profile_count(&self) -> usize {
        self.profile_count
    }

    pub fn profile_index(&self, actions: &[usize]) -> usize {
        actions
            .iter()
            .zip(&self.strides)
            .map(|(a, s)| a * s)
            .sum()
    }

    pub fn profile(&self, index: usize) -> ActionProfile {
        let mut actions = vec![0; self.n()];
        decode(index, &self.strides, &self.agents, &mut actions);
        ActionProfile(actions)
    }

    /// Iterates all profiles in index order.
    pub fn profiles(&self) -> impl Iterator<Item = ActionProfile> + '_ {
        (0..self.profile_count).map(|p| self.profile(p))
    }

    /// Payoffs of every agent at a profile index and disturbance.
    #[inline]
    pub fn payoffs(&self, profile: usize, disturbance: usize) -> &[f64] {
        let n = self.n();
        let start = (profile * self.disturbances.len() + disturbance) * n;
        &self.utilities[start..start + n]
    }

    #[inline]
    pub fn utility(&self, agent: usize, profile: usize, disturbance: usize) -> f64 {
        self.payoffs(profile, disturbance)[agent]
    }

    /// Maximum payoff deviation any agent can see from the disturbance alone.
    pub fn rho(&self) -> f64 {
        let mut rho: f64 = 0.0;
        for p in 0..self.profile_count {
            for i in 0..self.n() {
                let (lo, hi) = (0..self.disturbance_count())
                    .map(|w| self.utility(i, p, w))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| {
                        (lo.min(u), hi.max(u))
                    });
                rho = rho.max(hi - lo);
            }
        }
        rho
    }

    pub fn interdependence(&self, rho: f64) -> Result<Interdependence> {
        self.interdependence_capped(rho, DEFAULT_INTERDEPENDENCE_CAP)
    }

    /// Exhaustive check over every profile, disturbance and proper nonempty
    /// agent subset. Cost grows as `2ⁿ · |𝒜|² · |𝕎|²`.
    pub fn interdependence_capped(&self, rho: f64, cap: usize) -> Result<Interdependence> {
        let n = self.n();
        if n > cap {
            return Err(Error::AgentCap { cap, n });
        }
        let full: u32 = (1u32 << n) - 1;
        let wc = self.disturbance_count();
        // For each alternative profile b: which agents moved, and which agents
        // can be pushed outside the interval.
        let mut moved = vec![0u32; self.profile_count];
        let mut pushed = vec![0u32; self.profile_count];
        for a in 0..self.profile_count {
            let base = self.profile(a);
            for b in 0..self.profile_count {
                let alt = self.profile(b);
                moved[b] = (0..n)
                    .filter(|&i| alt.0[i] != base.0[i])
                    .fold(0, |m, i| m | (1 << i));
            }
            for w in 0..wc {
                for b in 0..self.profile_count {
                    pushed[b] = (0..n)
                        .filter(|&i| {
                            let reference = self.utility(i, a, w);
                            (0..wc).any(|w2| {
                                !within_interval(self.utility(i, b, w2) - reference, rho)
                            })
                        })
                        .fold(0, |m, i| m | (1 << i));
                }
                for subset in 1..full {
                    let satisfied = (0..self.profile_count)
                        .any(|b| moved[b] & !subset == 0 && pushed[b] & !subset != 0);
                    if !satisfied {
                        return Ok(Interdependence {
                            holds: false,
                            witness: Some(InterdependenceWitness {
                                profile: base,
                                disturbance: w,
                                subset: (0..n).filter(|i| subset & (1 << i) != 0).collect(),
                            }),
                        });
                    }
                }
            }
        }
        Ok(Interdependence {
            holds: true,
            witness: None,
        })
    }

    pub fn welfare(&self, profile: &ActionProfile, disturbance: usize) -> f64 {
        self.payoffs(self.profile_index(&profile.0), disturbance)
            .iter()
            .sum()
    }

    /// Exact welfare over the doubles stored in the table, used for tie-breaking.
    pub fn welfare_exact(&self, profile: usize, disturbance: usize) -> Exponent {
        self.payoffs(profile, disturbance)
            .iter()
            .map(|&u| Exponent::from_f64(u))
            .sum()
    }

    /// Every `(profile, disturbance)` pair attaining the maximum welfare.
    /// Ties are compared exactly and listed in index order.
    pub fn welfare_argmax(&self) -> WelfareReport {
        let mut best = None;
        let mut maximisers = Vec::new();
        for p in 0..self.profile_count {
            for w in 0..self.disturbance_count() {
                let value = self.welfare_exact(p, w);
                match best {
                    Some(b) if value < b => {}
                    Some(b) if value == b => maximisers.push((self.profile(p), w)),
                    _ => {
                        best = Some(value);
                        maximisers.clear();
                        maximisers.push((self.profile(p), w));
                    }
                }
            }
        }
        let (profile, w) = &maximisers[0];
        WelfareReport {
            maximum: self.welfare(profile, *w),
            maximisers,
        }
    }

    /// Expected welfare of a profile under the disturbance distribution.
    pub fn expected_welfare(&self, profile: &ActionProfile) -> f64 {
        self.disturbances
            .iter()
            .enumerate()
            .map(|(w, d)| d.prob * self.welfare(profile, w))
            .sum()
    }

    pub fn to_document(&self) -> GameDocument {
        let mut utilities = Vec::with_capacity(self.profile_count * self.disturbance_count());
        for p in 0..self.profile_count {
            let profile = self.profile(p);
            for (w, d) in self.disturbances.iter().enumerate() {
                utilities.push(UtilityEntry {
                    profile: profile
                        .0
                        .iter()
                        .enumerate()
                        .map(|(i, &a)| self.agents[i].actions[a].clone())
                        .collect(),
                    disturbance: d.name.clone(),
                    payoffs: self.payoffs(p, w).to_vec(),
                });
            }
        }
        GameDocument {
            agents: self.agents.clone(),
            disturbances: self.disturbances.clone(),
            utilities,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("game serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GameDocument = serde_json::from_str(text).map_err(|source| Error::Parse {
            context: "game document".into(),
            source,
        })?;
        doc.into_game()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: GameDocument = serde_json::from_str(&text).map_err(|source| Error::Parse {
            context: path.display().to_string(),
            source,
        })?;
        doc.into_game()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

fn layout(agents: &[Agent]) -> Result<(Vec<usize>, usize)> {
    if agents.is_empty() {
        return Err(Error::InvalidGame("game has no agents".into()));
    }
    let mut strides = vec![0; agents.len()];
    let mut count: usize = 1;
    for (i, agent) in agents.iter().enumerate().rev() {
        if agent.actions.is_empty() {
            return Err(Error::InvalidGame(format!(
                "agent '{}' has no actions",
                agent.name
            )));
        }
        strides[i] = count;
        count = count
            .checked_mul(agent.actions.len())
            .ok_or_else(|| Error::InvalidGame("joint action space overflows".into()))?;
    }
    Ok((strides, count))
}

fn decode(mut index: usize, strides: &[usize], agents: &[Agent], out: &mut [usize]) {
    for (i, s) in strides.iter().enumerate() {
        out[i] = index / s;
        index %= s;
        debug_assert!(out[i] < agents[i].actions.len());
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Interdependence {
    pub holds: bool,
    pub witness: Option<InterdependenceWitness>,
}

/// A profile, disturbance and agent subset that no outside agent can notice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterdependenceWitness {
    pub profile: ActionProfile,
    pub disturbance: usize,
    pub subset: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WelfareReport {
    pub maximum: f64,
    pub maximisers: Vec<(ActionProfile, usize)>,
}

/// The on-disk game format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub agents: Vec<Agent>,
    pub disturbances: Vec<Disturbance>,
    pub utilities: Vec<UtilityEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityEntry {
    pub profile: Vec<String>,
    pub disturbance: String,
    pub payoffs: Vec<f64>,
}

impl GameDocument {
    pub fn into_game(self) -> Result<Game> {
        let GameDocument {
            agents,
            disturbances,
            utilities,
        } = self;
        let (strides, profile_count) = layout(&agents)?;
        let n = agents.len();
        let wc = disturbances.len();
        let mut table: Vec<Option<Vec<f64>>> = vec![None; profile_count * wc];
        for (k, entry) in utilities.into_iter().enumerate() {
            if entry.profile.len() != n {
                return Err(Error::InvalidGame(format!(
                    "utilities[{k}]: profile has {} actions, game has {n} agents",
                    entry.profile.len()
                )));
            }
            let mut index = 0;
            for (i, name) in entry.profile.iter().enumerate() {
                let a = agents[i]
                    .actions
                    .iter()
                    .position(|x| x == name)
                    .ok_or_else(|| {
                        Error::InvalidGame(format!(
                            "utilities[{k}]: agent '{}' has no action '{name}'",
                            agents[i].name
                        ))
                    })?;
                index += a * strides[i];
            }
            let w = disturbances
                .iter()
                .position(|d| d.name == entry.disturbance)
                .ok_or_else(|| {
                    Error::InvalidGame(format!(
                        "utilities[{k}]: unknown disturbance '{}'",
                        entry.disturbance
                    ))
                })?;
            if entry.payoffs.len() != n {
                return Err(Error::InvalidGame(format!(
                    "utilities[{k}]: expected {n} payoffs, got {}",
                    entry.payoffs.len()
                )));
            }
            let slot = &mut table[index * wc + w];
            if slot.is_some() {
                return Err(Error::InvalidGame(format!(
                    "utilities[{k}]: duplicate entry for this profile and disturbance"
                )));
            }
            *slot = Some(entry.payoffs);
        }
        if let Some(missing) = table.iter().position(Option::is_none) {
            let mut profile = vec![0; n];
            decode(missing / wc.max(1), &strides, &agents, &mut profile);
            return Err(Error::InvalidGame(format!(
                "table not total: no utilities for profile {} disturbance {}",
                ActionProfile(profile),
                missing % wc.max(1)
            )));
        }
        Game::from_fn(agents, disturbances, |profile, w| {
            let index: usize = profile.iter().zip(&strides).map(|(a, s)| a * s).sum();
            table[index * wc + w].clone().expect("checked total")
        })
    }
}

/// Shape of a randomly generated game. Utilities are drawn uniformly from
/// `{0, 1/grid, …, (grid−1)/grid}`; a power-of-two grid keeps them exact.
///
/// With `spread = Some(s)` only the first disturbance is drawn freely; every
/// other disturbance shifts each entry by at most `s` grid steps, which keeps
/// ρ small enough for interdependence to be likely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomGameSpec {
    pub actions: Vec<usize>,
    pub disturbances: usize,
    pub grid: u32,
    #[serde(default)]
    pub spread: Option<u32>,
}

impl RandomGameSpec {
    pub fn new(actions: Vec<usize>, disturbances: usize) -> Self {
        RandomGameSpec {
            actions,
            disturbances,
            grid: 16,
            spread: None,
        }
    }

    pub fn with_spread(mut self, spread: u32) -> Self {
        self.spread = Some(spread);
        self
    }
}

/// Deterministic per seed.
pub fn random_game(spec: &RandomGameSpec, seed: u64) -> Result<Game> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_game_with(spec, &mut rng)
}

fn random_game_with(spec: &RandomGameSpec, rng: &mut ChaCha8Rng) -> Result<Game> {
    if spec.grid == 0 {
        return Err(Error::InvalidGame("utility grid must be positive".into()));
    }
    let agents = spec
        .actions
        .iter()
        .enumerate()
        .map(|(i, &k)| Agent {
            name: format!("agent{i}"),
            actions: (0..k).map(|a| a.to_string()).collect(),
        })
        .collect();
    let disturbances = (0..spec.disturbances)
        .map(|w| Disturbance {
            name: format!("w{w}"),
            prob: 1.0 / spec.disturbances as f64,
        })
        .collect();
    let n = spec.actions.len();
    let grid = spec.grid;
    let mut base: Vec<u32> = Vec::new();
    Game::from_fn(agents, disturbances, |_, w| {
        match spec.spread {
            Some(s) if w > 0 => base
                .iter()
                .map(|&b| {
                    let lo = b.saturating_sub(s);
                    let hi = (b + s).min(grid - 1);
                    rng.gen_range(lo..=hi) as f64 / grid as f64
                })
                .collect(),
            _ => {
                base = (0..n).map(|_| rng.gen_range(0..grid)).collect();
                base.iter().map(|&b| b as f64 / grid as f64).collect()
            }
        }
    })
}

/// Draws random games from the seed's stream until one is interdependent at
/// its own ρ. Gives up after `attempts` draws.
pub fn random_interdependent_game(
    spec: &RandomGameSpec,
    seed: u64,
    attempts: usize,
) -> Result<Option<Game>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts {
        let game = random_game_with(spec, &mut rng)?;
        if game.interdependence(game.rho())?.holds {
            return Ok(Some(game));
        }
    }
    Ok(None)
}
