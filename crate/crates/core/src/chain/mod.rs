//! Exact finite-chain analysis of the learner.
//!
//! The chain is generated from a [`Game`](crate::game::Game) and the learner
//! constants, never supplied directly, so every transition probability keeps
//! its symbolic structure in ε. The pipeline is
//! [`enumerate_states`] → [`SymbolicChain`] → [`classify_recurrence`] →
//! [`class_resistances`] → [`stochastic_potentials`] →
//! [`stochastically_stable_set`], with [`verify_lemmas`] checking the
//! structural claims along the way.

mod arborescence;
mod classes;
mod classify;
pub mod kernel;
mod matrix;
mod resistance;
pub(crate) mod space;
mod theory;
mod verify;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exponent::Exponent;
use crate::learner::validate_c;

pub use arborescence::{min_in_tree, stochastic_potentials, Arborescence, Potentials};
pub use classes::{class_resistances, ClassPath, ResistanceGraph, Variant};
pub use classify::{aligned_within_rho, classify_recurrence, content_levels, ClassKind, ContentWitness, RecurrenceClass, RecurrenceClassification};
pub use matrix::{
    build_transition_matrix, period, stationary_distribution, stationary_distribution_dense,
    stationary_distribution_power, TransitionMatrix, DENSE_SOLVE_LIMIT,
};
pub use resistance::{
    default_eps_grid, edge_resistance, fit_resistance_numeric, fit_series, Edge, ResistanceFit,
    SymbolicChain, PROBABILITY_FLOOR,
};
pub use space::{discontent_seeds, enumerate_states, StateSpace, DEFAULT_STATE_CAP};
pub use theory::{rbar, stochastically_stable_set, theorem2_predict, Theorem2Prediction};
pub use verify::{
    analyze, table_checks, verify_lemmas, write_edge_list, Analysis, AnalysisConfig,
    AnalysisReport, CheckResult, ClassEntry, FitSummary, LemmaReport, ResistanceEntry,
};

/// The learner constants that shape the chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dynamics {
    pub rho: f64,
    pub c: f64,
    pub beta: Option<f64>,
}

impl Dynamics {
    pub fn new(rho: f64, c: f64, beta: Option<f64>) -> Self {
        Dynamics { rho, c, beta }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        validate_c(self.c, n)
    }

    pub fn c_exponent(&self) -> Exponent {
        Exponent::from_f64(self.c)
    }

    pub fn beta_exponent(&self) -> Exponent {
        Exponent::from_f64(self.beta.unwrap_or(0.0))
    }
}
