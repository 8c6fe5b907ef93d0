use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{for_each_outcome, outcome_exponent, outcome_probability};
use super::{Dynamics, StateSpace, TransitionMatrix};
use crate::exponent::Exponent;
use crate::game::Game;

/// Probabilities below this are treated as zero by the numeric fit.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// One positive-probability transition of the perturbed chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub to: usize,
    /// Smallest ε exponent among the outcomes producing this transition.
    pub resistance: Exponent,
    /// Probability in the unperturbed chain.
    pub p0: f64,
}

/// The support of the perturbed chain with exact resistances, by source state.
#[derive(Clone, Debug)]
pub struct SymbolicChain {
    edges: Vec<Vec<Edge>>,
}

impl SymbolicChain {
    pub fn build(space: &StateSpace, game: &Game, dynamics: &Dynamics) -> Self {
        let edges = (0..space.len())
            .into_par_iter()
            .map(|x| {
                let mut row: HashMap<usize, Edge> = HashMap::new();
                for_each_outcome(game, dynamics, space.state(x), |next, factors| {
                    let to = space.id(next).expect("state space is closed");
                    let r = outcome_exponent(factors, dynamics);
                    let p0 = outcome_probability(factors, 0.0, dynamics);
                    row.entry(to)
                        .and_modify(|e| {
                            e.resistance = e.resistance.min(r);
                            e.p0 += p0;
                        })
                        .or_insert(Edge { to, resistance: r, p0 });
                });
                let mut row: Vec<Edge> = row.into_values().collect();
                row.sort_unstable_by_key(|e| e.to);
                row
            })
            .collect();
        SymbolicChain { edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn out_edges(&self, x: usize) -> &[Edge] {
        &self.edges[x]
    }

    pub fn edge(&self, x: usize, y: usize) -> Option<&Edge> {
        let row = &self.edges[x];
        row.binary_search_by_key(&y, |e| e.to).ok().map(|k| &row[k])
    }

    /// Resistance of `x → y`, `None` when the transition is impossible.
    pub fn resistance(&self, x: usize, y: usize) -> Option<Exponent> {
        self.edge(x, y).map(|e| e.resistance)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Every `(from, edge)` pair in source order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().map(move |e| (x, e)))
    }

    /// The unperturbed chain.
    pub fn unperturbed(&self, eps: f64) -> TransitionMatrix {
        TransitionMatrix::from_rows(
            eps,
            self.edges
                .iter()
                .map(|row| row.iter().filter(|e| e.p0 > 0.0).map(|e| (e.to, e.p0)).collect())
                .collect(),
        )
    }
}

/// Resistance of a single transition between two states, computed from
/// the outcomes of `x` alone. `None` means no outcome reaches `y`.
pub fn edge_resistance(
    game: &Game,
    dynamics: &Dynamics,
    x: &crate::learner::SystemState,
    y: &crate::learner::SystemState,
) -> Option<Exponent> {
    let mut best: Option<Exponent> = None;
    for_each_outcome(game, dynamics, x, |next, factors| {
        if next == y {
            let r = outcome_exponent(factors, dynamics);
            best = Some(best.map_or(r, |b| b.min(r)));
        }
    });
    best
}

/// Geometric grid 10^-2, 10^-2.5, …, 10^-4.
pub fn default_eps_grid() -> Vec<f64> {
    (0..5).map(|k| 10f64.powf(-2.0 - 0.5 * k as f64)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResistanceFit {
    /// Least-squares slope of ln P against ln ε; infinite if P vanishes on the grid.
    pub slope: f64,
    pub r_squared: f64,
    /// `exp` of the fitted intercept.
    pub prefactor: f64,
}

/// Fits `P ≈ K ε^r` to `(ε, P)` samples in log-log space.
pub fn fit_series(eps: &[f64], probabilities: &[f64]) -> ResistanceFit {
    assert_eq!(eps.len(), probabilities.len());
    if probabilities.iter().any(|&p| !(p > PROBABILITY_FLOOR)) {
        return ResistanceFit {
            slope: f64::INFINITY,
            r_squared: f64::NAN,
            prefactor: f64::NAN,
        };
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = probabilities.iter().map(|p| p.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // A flat series is fitted perfectly by slope zero.
    let r_squared = if syy <= 1e-30 { 1.0 } else { sxy * sxy / (sxx * syy) };
    ResistanceFit {
        slope,
        r_squared,
        prefactor: intercept.exp(),
    }
}

/// Numeric resistance of `x → y` from the exact probabilities on `eps_grid`.
pub fn fit_resistance_numeric(
    game: &Game,
    dynamics: &Dynamics,
    x: &crate::learner::SystemState,
    y: &crate::learner::SystemState,
    eps_grid: &[f64],
) -> ResistanceFit {
    let probabilities: Vec<f64> = eps_grid
        .iter()
        .map(|&eps| {
            let mut p = 0.0;
            for_each_outcome(game, dynamics, x, |next, factors| {
                if next == y {
                    p += outcome_probability(factors, eps, dynamics);
                }
            });
            p
        })
        .collect();
    fit_series(eps_grid, &probabilities)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_power_law_fits_its_exponent() {
        let grid = default_eps_grid();
        let p: Vec<f64> = grid.iter().map(|e| 0.25 * e * e).collect();
        let fit = fit_series(&grid, &p);
        assert!((fit.slope - 2.0).abs() < 0.01);
        assert!(fit.r_squared > 0.999999);
        assert!((fit.prefactor - 0.25).abs() < 1e-9);
    }

    #[test]
    fn vanishing_probability_fits_infinite() {
        let grid = default_eps_grid();
        let mut p = vec![1e-3; grid.len()];
        p[2] = 0.0;
        assert!(fit_series(&grid, &p).slope.is_infinite());
    }

    #[test]
    fn default_grid_is_geometric() {
        let g = default_eps_grid();
        assert_eq!(g.len(), 5);
        assert!((g[0] - 1e-2).abs() < 1e-15 && (g[4] - 1e-4).abs() < 1e-17);
        assert!((g[1] / g[0] - 10f64.powf(-0.5)).abs() < 1e-12);
    }
}
