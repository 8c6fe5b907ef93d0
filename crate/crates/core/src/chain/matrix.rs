use std::collections::HashMap;

use rayon::prelude::*;

use super::kernel::{for_each_outcome, outcome_probability};
use super::{Dynamics, StateSpace};
use crate::error::{Error, Result};
use crate::game::Game;

/// Chains up to this size are solved exactly; larger ones by power iteration.
pub const DENSE_SOLVE_LIMIT: usize = 2000;

/// Row-stochastic matrix over a [`StateSpace`] at a fixed ε, stored by rows.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    pub eps: f64,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn from_rows(eps: f64, rows: Vec<Vec<(usize, f64)>>) -> Self {
        TransitionMatrix { eps, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x]
            .binary_search_by_key(&y, |&(j, _)| j)
            .map_or(0.0, |k| self.rows[x][k].1)
    }

    pub fn row_sum(&self, x: usize) -> f64 {
        self.rows[x].iter().map(|&(_, p)| p).sum()
    }

    /// `μP` for a row vector `μ`.
    pub fn left_multiply(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (x, row) in self.rows.iter().enumerate() {
            let m = mu[x];
            if m == 0.0 {
                continue;
            }
            for &(y, p) in row {
                out[y] += m * p;
            }
        }
        out
    }

    /// `‖μP − μ‖∞`.
    pub fn residual(&self, mu: &[f64]) -> f64 {
        self.left_multiply(mu)
            .iter()
            .zip(mu)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference to another matrix on the same space.
    pub fn max_abs_diff(&self, other: &TransitionMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.len() {
            let mut merged: HashMap<usize, f64> = HashMap::new();
            for &(y, p) in self.row(x) {
                *merged.entry(y).or_default() += p;
            }
            for &(y, p) in other.row(x) {
                *merged.entry(y).or_default() -= p;
            }
            worst = merged.values().fold(worst, |w, d| w.max(d.abs()));
        }
        worst
    }

    fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut dense = vec![vec![0.0; n]; n];
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, p) in row {
                dense[x][y] += p;
            }
        }
        dense
    }
}

/// Exact transition probabilities at `eps`, summed over every outcome.
/// `eps = 0` yields the unperturbed chain.
pub fn build_transition_matrix(
    space: &StateSpace,
    game: &Game,
    dynamics: &Dynamics,
    eps: f64,
) -> TransitionMatrix {
    let rows = (0..space.len())
        .into_par_iter()
        .map(|x| {
            let mut row: HashMap<usize, f64> = HashMap::new();
            for_each_outcome(game, dynamics, space.state(x), |next, factors| {
                let p = outcome_probability(factors, eps, dynamics);
                let y = space.id(next).expect("state space is closed");
                *row.entry(y).or_default() += p;
            });
            let mut row: Vec<(usize, f64)> = row.into_iter().filter(|&(_, p)| p > 0.0).collect();
            row.sort_unstable_by_key(|&(y, _)| y);
            row
        })
        .collect();
    TransitionMatrix { eps, rows }
}

/// Unique stationary distribution of an irreducible chain.
pub fn stationary_distribution(matrix: &TransitionMatrix) -> Result<Vec<f64>> {
    if matrix.len() <= DENSE_SOLVE_LIMIT {
        Ok(stationary_distribution_dense(matrix))
    } else {
        stationary_distribution_power(matrix, 1e-13, 10_000_000)
    }
}

/// Grassmann–Taksar–Heyman state reduction. Subtraction-free, so it stays
/// accurate on nearly decomposable chains.
pub fn stationary_distribution_dense(matrix: &TransitionMatrix) -> Vec<f64> {
    let n = matrix.len();
    if n == 0 {
        return Vec::new();
    }
    let mut p = matrix.to_dense();
    for k in (1..n).rev() {
        let s: f64 = p[k][..k].iter().sum();
        if s <= 0.0 {
            // State k cannot reach lower states: not irreducible. Leave the
            // remaining reduction degenerate rather than divide by zero.
            continue;
        }
        let (upper, lower) = p.split_at_mut(k);
        let pivot = &lower[0];
        for row in upper.iter_mut() {
            let factor = row[k] / s;
            row[k] = factor;
            if factor != 0.0 {
                for (j, &pk) in pivot[..k].iter().enumerate() {
                    row[j] += factor * pk;
                }
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        pi[k] = (0..k).map(|i| pi[i] * p[i][k]).sum();
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    pi
}

/// Power iteration on the lazy chain `(I + P)/2`, which has the same
/// stationary distribution and cannot oscillate.
pub fn stationary_distribution_power(
    matrix: &TransitionMatrix,
    tolerance: f64,
    max_iterations: usize,
) -> Result<Vec<f64>> {
    let n = matrix.len();
    let mut mu = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for it in 0..max_iterations {
        let next = matrix.left_multiply(&mu);
        let mut lazy: Vec<f64> = next.iter().zip(&mu).map(|(a, b)| 0.5 * (a + b)).collect();
        let total: f64 = lazy.iter().sum();
        lazy.iter_mut().for_each(|v| *v /= total);
        mu = lazy;
        if it % 64 == 0 {
            residual = matrix.residual(&mu);
            if residual < tolerance {
                return Ok(mu);
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iterations,
        residual,
    })
}

/// Period of the support graph of an irreducible chain (1 = aperiodic).
pub fn period(matrix: &TransitionMatrix) -> usize {
    let n = matrix.len();
    if n == 0 {
        return 1;
    }
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut g = 0usize;
    while let Some(x) = queue.pop_front() {
        for &(y, _) in matrix.row(x) {
            if level[y] == usize::MAX {
                level[y] = level[x] + 1;
                queue.push_back(y);
            } else {
                let diff = (level[x] + 1).abs_diff(level[y]);
                g = gcd(g, diff);
            }
        }
    }
    g.max(1)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
