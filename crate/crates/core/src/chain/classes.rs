use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClassKind, RecurrenceClassification, SymbolicChain};
use crate::exponent::Exponent;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Intermediate states unrestricted.
    Path,
    /// Only transient intermediate states.
    Direct,
}

/// Cheapest route between two recurrence classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassPath {
    pub resistance: Option<Exponent>,
    /// Other recurrence classes the route passes through, in order.
    pub via: Vec<usize>,
    /// State ids along the route, source state first.
    pub states: Vec<usize>,
}

/// Minimum total resistance between every ordered pair of recurrence classes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResistanceGraph {
    pub kinds: Vec<ClassKind>,
    pub path: Vec<Vec<ClassPath>>,
    pub direct: Vec<Vec<Option<Exponent>>>,
}

impl ResistanceGraph {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn resistance(&self, from: usize, to: usize, variant: Variant) -> Option<Exponent> {
        match variant {
            Variant::Path => self.path[from][to].resistance,
            Variant::Direct => self.direct[from][to],
        }
    }

    /// Weight matrix for the tree search, `None` off the support and on the diagonal.
    pub fn matrix(&self, variant: Variant) -> Vec<Vec<Option<Exponent>>> {
        (0..self.len())
            .map(|a| {
                (0..self.len())
                    .map(|b| if a == b { None } else { self.resistance(a, b, variant) })
                    .collect()
            })
            .collect()
    }

    /// Builds a graph from explicit weights; used for standalone tree problems.
    pub fn from_matrix(kinds: Vec<ClassKind>, weights: Vec<Vec<Option<Exponent>>>) -> Self {
        let path = weights
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&r| ClassPath {
                        resistance: r,
                        via: Vec::new(),
                        states: Vec::new(),
                    })
                    .collect()
            })
            .collect();
        ResistanceGraph {
            kinds,
            path,
            direct: weights,
        }
    }

    /// `(from, to, resistance)` for every finite off-diagonal pair.
    pub fn edge_list(&self, variant: Variant) -> Vec<(usize, usize, Exponent)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            for b in 0..self.len() {
                if a != b {
                    if let Some(r) = self.resistance(a, b, variant) {
                        out.push((a, b, r));
                    }
                }
            }
        }
        out
    }
}

struct Search {
    dist: Vec<Option<Exponent>>,
    pred: Vec<usize>,
}

fn dijkstra(
    chain: &SymbolicChain,
    classes: &RecurrenceClassification,
    source: usize,
    variant: Variant,
) -> Search {
    let n = chain.len();
    let mut dist: Vec<Option<Exponent>> = vec![None; n];
    let mut pred = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    for &x in &classes.classes[source].states {
        dist[x] = Some(Exponent::ZERO);
        heap.push(Reverse((Exponent::ZERO, x)));
    }
    while let Some(Reverse((d, x))) = heap.pop() {
        if dist[x] != Some(d) {
            continue;
        }
        if variant == Variant::Direct {
            if let Some(k) = classes.class_of[x] {
                if k != source {
                    continue;
                }
            }
        }
        for e in chain.out_edges(x) {
            let nd = d + e.resistance;
            if dist[e.to].map_or(true, |old| nd < old) {
                dist[e.to] = Some(nd);
                pred[e.to] = x;
                heap.push(Reverse((nd, e.to)));
            }
        }
    }
    Search { dist, pred }
}

/// Dijkstra from every class over exact state-level resistances.
pub fn class_resistances(chain: &SymbolicChain, classes: &RecurrenceClassification) -> ResistanceGraph {
    let l = classes.classes.len();
    let rows: Vec<(Vec<ClassPath>, Vec<Option<Exponent>>)> = (0..l)
        .into_par_iter()
        .map(|a| {
            let path = dijkstra(chain, classes, a, Variant::Path);
            let direct = dijkstra(chain, classes, a, Variant::Direct);
            let mut path_row = Vec::with_capacity(l);
            let mut direct_row = Vec::with_capacity(l);
            for b in 0..l {
                if a == b {
                    path_row.push(ClassPath {
                        resistance: Some(Exponent::ZERO),
                        via: Vec::new(),
                        states: Vec::new(),
                    });
                    direct_row.push(Some(Exponent::ZERO));
                    continue;
                }
                let targets = &classes.classes[b].states;
                let best = targets
                    .iter()
                    .filter_map(|&y| path.dist[y].map(|d| (d, y)))
                    .min();
                path_row.push(match best {
                    None => ClassPath {
                        resistance: None,
                        via: Vec::new(),
                        states: Vec::new(),
                    },
                    Some((d, y)) => {
                        let mut states = vec![y];
                        let mut x = y;
                        while path.pred[x] != usize::MAX {
                            x = path.pred[x];
                            states.push(x);
                        }
                        states.reverse();
                        let mut via: Vec<usize> = Vec::new();
                        for &s in &states[1..states.len() - 1] {
                            if let Some(k) = classes.class_of[s] {
                                if k != a && k != b && via.last() != Some(&k) {
                                    via.push(k);
                                }
                            }
                        }
                        ClassPath {
                            resistance: Some(d),
                            via,
                            states,
                        }
                    }
                });
                direct_row.push(targets.iter().filter_map(|&y| direct.dist[y]).min());
            }
            (path_row, direct_row)
        })
        .collect();
    let (path, direct) = rows.into_iter().unzip();
    ResistanceGraph {
        kinds: classes.classes.iter().map(|c| c.kind).collect(),
        path,
        direct,
    }
}
