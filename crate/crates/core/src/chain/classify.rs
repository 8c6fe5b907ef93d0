use std::collections::HashMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use super::{StateSpace, SymbolicChain};
use crate::error::{Error, Result};
use crate::game::{within_interval, Game};
use crate::learner::{AgentState, SystemState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassKind {
    /// Every agent discontent.
    Discontent,
    /// Content singleton reached through `m` rounds of unnoticed experiments.
    Content { m: usize },
}

impl ClassKind {
    pub fn label(&self) -> String {
        match self {
            ClassKind::Discontent => "D".to_string(),
            ClassKind::Content { m } => format!("C{m}"),
        }
    }

    pub fn content_level(&self) -> Option<usize> {
        match self {
            ClassKind::Discontent => None,
            ClassKind::Content { m } => Some(*m),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceClass {
    pub kind: ClassKind,
    pub states: Vec<usize>,
}

/// Why an all-content state sits at its level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContentWitness {
    pub level: usize,
    /// State one level down that differs only on `moved`.
    pub parent: Option<usize>,
    pub moved: Vec<usize>,
    /// `partition[l]` holds the agents whose latest move happened at level `l`.
    pub partition: Vec<Vec<usize>>,
    /// Per agent: baseline aligned with the profile for some disturbance and
    /// within ρ of it for every disturbance.
    pub aligned: Vec<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecurrenceClassification {
    /// Discontent class first, then content singletons by level and state id.
    pub classes: Vec<RecurrenceClass>,
    pub transient: Vec<usize>,
    /// Class index per state, `None` for transient states.
    pub class_of: Vec<Option<usize>>,
    /// Witness per all-content state of the space that has a level.
    pub witnesses: HashMap<usize, ContentWitness>,
}

impl RecurrenceClassification {
    pub fn discontent_class(&self) -> Option<usize> {
        self.classes
            .iter()
            .position(|c| c.kind == ClassKind::Discontent)
    }

    /// Indices of classes labelled `C^m`.
    pub fn content_classes(&self, m: usize) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&k| self.classes[k].kind == ClassKind::Content { m })
            .collect()
    }

    /// `Σ_m |C^m|`.
    pub fn content_class_count(&self) -> usize {
        self.classes
            .iter()
            .filter(|c| matches!(c.kind, ClassKind::Content { .. }))
            .count()
    }

    pub fn max_level(&self) -> Option<usize> {
        self.classes.iter().filter_map(|c| c.kind.content_level()).max()
    }

    pub fn recurrent_count(&self) -> usize {
        self.classes.iter().map(|c| c.states.len()).sum()
    }
}

/// `B_i`: agent `i`'s baseline utility is what its baseline profile pays
/// under some disturbance and stays within ρ of it under every disturbance.
pub fn aligned_within_rho(game: &Game, state: &SystemState, agent: usize, rho: f64) -> bool {
    let profile = game.profile_index(&state.baseline_actions());
    let u = state.0[agent].utility;
    let mut hit = false;
    for w in 0..game.disturbance_count() {
        let v = game.utility(agent, profile, w);
        hit |= v == u;
        if !within_interval(u - v, rho) {
            return false;
        }
    }
    hit
}

/// Within ρ of the baseline profile's payoff under every disturbance.
fn tolerant(game: &Game, state: &SystemState, profile: usize, agent: usize, rho: f64) -> bool {
    let u = state.0[agent].utility;
    (0..game.disturbance_count()).all(|w| within_interval(u - game.utility(agent, profile, w), rho))
}

fn key(state: &SystemState, mask: u32) -> (u32, Vec<AgentState>) {
    let rest = state
        .0
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) == 0)
        .map(|(_, s)| *s)
        .collect();
    (mask, rest)
}

/// Assigns every all-content state of the space its least content level.
pub fn content_levels(space: &StateSpace, game: &Game, rho: f64) -> HashMap<usize, ContentWitness> {
    let n = game.n();
    let content: Vec<usize> = (0..space.len())
        .filter(|&x| space.state(x).all_content())
        .collect();
    let mut witnesses: HashMap<usize, ContentWitness> = HashMap::new();
    let mut aligned_of: HashMap<usize, Vec<bool>> = HashMap::new();
    let mut level: Vec<usize> = Vec::new();
    for &x in &content {
        let aligned: Vec<bool> = (0..n)
            .map(|i| aligned_within_rho(game, space.state(x), i, rho))
            .collect();
        if aligned.iter().all(|&b| b) {
            witnesses.insert(
                x,
                ContentWitness {
                    level: 0,
                    parent: None,
                    moved: Vec::new(),
                    partition: vec![(0..n).collect()],
                    aligned: aligned.clone(),
                },
            );
            level.push(x);
        }
        aligned_of.insert(x, aligned);
    }

    let full = (1u32 << n) - 1;
    for m in 1..n {
        if level.is_empty() {
            break;
        }
        let mut index: HashMap<(u32, Vec<AgentState>), usize> = HashMap::new();
        for &z in &level {
            for mask in 1..full {
                index.entry(key(space.state(z), mask)).or_insert(z);
            }
        }
        let mut next_level = Vec::new();
        for &x in &content {
            if witnesses.contains_key(&x) {
                continue;
            }
            let state = space.state(x);
            let profile = game.profile_index(&state.baseline_actions());
            let aligned = &aligned_of[&x];
            let found = (1..full).find_map(|mask| {
                let moved_ok = (0..n).all(|i| mask & (1 << i) == 0 || aligned[i]);
                let stay_ok = (0..n)
                    .all(|i| mask & (1 << i) != 0 || tolerant(game, state, profile, i, rho));
                if !(moved_ok && stay_ok) {
                    return None;
                }
                index.get(&key(state, mask)).map(|&z| (mask, z))
            });
            if let Some((mask, parent)) = found {
                let moved: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
                let mut partition = witnesses[&parent].partition.clone();
                for part in partition.iter_mut() {
                    part.retain(|i| !moved.contains(i));
                }
                partition.push(moved.clone());
                witnesses.insert(
                    x,
                    ContentWitness {
                        level: m,
                        parent: Some(parent),
                        moved,
                        partition,
                        aligned: aligned.clone(),
                    },
                );
                next_level.push(x);
            }
        }
        level = next_level;
    }
    witnesses
}

/// Closed communicating classes of the zero-resistance graph, labelled.
pub fn classify_recurrence(
    space: &StateSpace,
    chain: &SymbolicChain,
    game: &Game,
    rho: f64,
) -> Result<RecurrenceClassification> {
    let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(space.len(), chain.edge_count());
    for _ in 0..space.len() {
        graph.add_node(());
    }
    for (x, e) in chain.iter() {
        if e.resistance.is_zero() && e.to != x {
            graph.add_edge(NodeIndex::new(x), NodeIndex::new(e.to), ());
        }
    }
    let components = tarjan_scc(&graph);
    let mut component_of = vec![0usize; space.len()];
    for (k, comp) in components.iter().enumerate() {
        for v in comp {
            component_of[v.index()] = k;
        }
    }

    let witnesses = content_levels(space, game, rho);
    let mut discontent: Vec<usize> = Vec::new();
    let mut content: Vec<(usize, usize)> = Vec::new();
    for comp in &components {
        let k = component_of[comp[0].index()];
        let closed = comp.iter().all(|v| {
            graph
                .neighbors(*v)
                .all(|w| component_of[w.index()] == k)
        });
        if !closed {
            continue;
        }
        let mut members: Vec<usize> = comp.iter().map(|v| v.index()).collect();
        members.sort_unstable();
        if members.iter().all(|&x| space.state(x).all_discontent()) {
            discontent.extend(members);
            continue;
        }
        let x = members[0];
        match witnesses.get(&x) {
            Some(w) if members.len() == 1 => content.push((w.level, x)),
            _ => {
                return Err(Error::Unclassifiable {
                    state: members
                        .iter()
                        .map(|&x| space.state(x).to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                })
            }
        }
    }

    let mut classes = Vec::new();
    if !discontent.is_empty() {
        discontent.sort_unstable();
        classes.push(RecurrenceClass {
            kind: ClassKind::Discontent,
            states: discontent,
        });
    }
    content.sort_unstable();
    for (m, x) in content {
        classes.push(RecurrenceClass {
            kind: ClassKind::Content { m },
            states: vec![x],
        });
    }
    let mut class_of = vec![None; space.len()];
    for (k, class) in classes.iter().enumerate() {
        for &x in &class.states {
            class_of[x] = Some(k);
        }
    }
    let transient = (0..space.len()).filter(|&x| class_of[x].is_none()).collect();
    Ok(RecurrenceClassification {
        classes,
        transient,
        class_of,
        witnesses,
    })
}
