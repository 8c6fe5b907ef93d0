//! Minimum-weight spanning in-trees by the Chu–Liu/Edmonds contraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ResistanceGraph, Variant};
use crate::error::{Error, Result};
use crate::exponent::Exponent;

/// Spanning in-tree: every non-root vertex points at its parent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arborescence {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub weight: Exponent,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Potentials {
    pub gamma: Vec<Exponent>,
    pub trees: Vec<Arborescence>,
}

impl Potentials {
    pub fn minimum(&self) -> Option<Exponent> {
        self.gamma.iter().copied().min()
    }

    /// Every class attaining the minimum potential.
    pub fn minimisers(&self) -> Vec<usize> {
        let Some(min) = self.minimum() else {
            return Vec::new();
        };
        (0..self.gamma.len()).filter(|&k| self.gamma[k] == min).collect()
    }
}

#[derive(Clone, Copy, Debug)]
struct Arc {
    from: usize,
    to: usize,
    weight: Exponent,
    /// Original parent vertex, the tie-breaker.
    tie: usize,
}

/// Minimum out-arborescence rooted at `root`; returns the chosen arc indices.
fn edmonds(n: usize, arcs: &[Arc], root: usize) -> Option<Vec<usize>> {
    let mut best: Vec<Option<usize>> = vec![None; n];
    for (k, a) in arcs.iter().enumerate() {
        if a.to == root || a.from == a.to {
            continue;
        }
        let better = match best[a.to] {
            None => true,
            Some(b) => (a.weight, a.tie) < (arcs[b].weight, arcs[b].tie),
        };
        if better {
            best[a.to] = Some(k);
        }
    }
    if (0..n).any(|v| v != root && best[v].is_none()) {
        return None;
    }

    // Find cycles among the chosen arcs.
    let mut cycle_of = vec![usize::MAX; n];
    let mut cycles = 0usize;
    let mut mark = vec![usize::MAX; n];
    for start in 0..n {
        let mut v = start;
        while v != root && mark[v] == usize::MAX && cycle_of[v] == usize::MAX {
            mark[v] = start;
            v = arcs[best[v].unwrap()].from;
        }
        if v != root && mark[v] == start && cycle_of[v] == usize::MAX {
            let mut u = v;
            loop {
                cycle_of[u] = cycles;
                u = arcs[best[u].unwrap()].from;
                if u == v {
                    break;
                }
            }
            cycles += 1;
        }
    }
    if cycles == 0 {
        return Some((0..n).filter(|&v| v != root).map(|v| best[v].unwrap()).collect());
    }

    // Contract each cycle to a vertex.
    let mut image = vec![0usize; n];
    let mut next = cycles;
    for v in 0..n {
        image[v] = if cycle_of[v] != usize::MAX {
            cycle_of[v]
        } else {
            next += 1;
            next - 1
        };
    }
    let mut contracted = Vec::new();
    let mut origin = Vec::new();
    for (k, a) in arcs.iter().enumerate() {
        let (f, t) = (image[a.from], image[a.to]);
        if f == t {
            continue;
        }
        let weight = if cycle_of[a.to] != usize::MAX {
            a.weight - arcs[best[a.to].unwrap()].weight
        } else {
            a.weight
        };
        contracted.push(Arc {
            from: f,
            to: t,
            weight,
            tie: a.tie,
        });
        origin.push(k);
    }
    let chosen = edmonds(next, &contracted, image[root])?;

    let mut result = Vec::with_capacity(n - 1);
    let mut entered = vec![usize::MAX; cycles];
    for c in chosen {
        let k = origin[c];
        let v = arcs[k].to;
        if cycle_of[v] != usize::MAX {
            entered[cycle_of[v]] = v;
        }
        result.push(k);
    }
    for v in 0..n {
        if cycle_of[v] != usize::MAX && entered[cycle_of[v]] != v {
            result.push(best[v].unwrap());
        }
    }
    Some(result)
}

/// Minimum spanning in-tree rooted at `root` for weights `w[from][to]`.
/// `None` when some vertex cannot reach the root.
pub fn min_in_tree(weights: &[Vec<Option<Exponent>>], root: usize) -> Option<Arborescence> {
    let n = weights.len();
    let mut arcs = Vec::new();
    for (u, row) in weights.iter().enumerate() {
        for (v, w) in row.iter().enumerate() {
            if let (Some(w), true) = (w, u != v) {
                // Reversed: the in-tree arc u → v becomes v → u.
                arcs.push(Arc {
                    from: v,
                    to: u,
                    weight: *w,
                    tie: v,
                });
            }
        }
    }
    let chosen = edmonds(n, &arcs, root)?;
    let mut parent = vec![None; n];
    let mut weight = Exponent::ZERO;
    for k in chosen {
        parent[arcs[k].to] = Some(arcs[k].from);
        weight += arcs[k].weight;
    }
    Some(Arborescence { root, parent, weight })
}

/// Stochastic potential of every class: the weight of its minimum in-tree
/// over path resistances.
pub fn stochastic_potentials(graph: &ResistanceGraph) -> Result<Potentials> {
    let weights = graph.matrix(Variant::Path);
    let trees: Vec<Option<Arborescence>> = (0..graph.len())
        .into_par_iter()
        .map(|root| min_in_tree(&weights, root))
        .collect();
    let mut out = Vec::with_capacity(trees.len());
    for (root, tree) in trees.into_iter().enumerate() {
        match tree {
            Some(t) => out.push(t),
            None => {
                let from = unreachable_from(&weights, root);
                return Err(Error::Disconnected { from, to: root });
            }
        }
    }
    Ok(Potentials {
        gamma: out.iter().map(|t| t.weight).collect(),
        trees: out,
    })
}

fn unreachable_from(weights: &[Vec<Option<Exponent>>], root: usize) -> usize {
    let n = weights.len();
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        for u in 0..n {
            if !seen[u] && weights[u][v].is_some() {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.iter().position(|&s| !s).unwrap_or(root)
}
