use std::io::Write;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::space::discontent_seeds;
use super::{
    build_transition_matrix, class_resistances, classify_recurrence, default_eps_grid,
    enumerate_states, fit_series, period, rbar, stochastic_potentials, stochastically_stable_set,
    theorem2_predict, ClassKind, Dynamics, Potentials, RecurrenceClassification, ResistanceGraph,
    StateSpace, SymbolicChain, Theorem2Prediction, TransitionMatrix, Variant, DEFAULT_STATE_CAP,
};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::game::{Game, DEFAULT_INTERDEPENDENCE_CAP};
use crate::learner::{validate_c, RhoSetting, SystemState};

const MAX_LISTED: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub c: f64,
    #[serde(default)]
    pub rho: RhoSetting,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "default_state_cap")]
    pub state_cap: usize,
    #[serde(default = "default_interdependence_cap")]
    pub interdependence_cap: usize,
    /// ε values at which irreducibility and aperiodicity are checked.
    #[serde(default = "default_check_eps")]
    pub check_eps: Vec<f64>,
    /// Decreasing ε values for the entrywise limit check.
    #[serde(default = "default_limit_eps")]
    pub limit_eps: Vec<f64>,
    /// Grid for the numeric resistance fits.
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
    #[serde(default = "yes")]
    pub fit_resistances: bool,
}

fn default_state_cap() -> usize {
    DEFAULT_STATE_CAP
}
fn default_interdependence_cap() -> usize {
    DEFAULT_INTERDEPENDENCE_CAP
}
fn default_check_eps() -> Vec<f64> {
    vec![0.1, 0.01]
}
fn default_limit_eps() -> Vec<f64> {
    (2..=6).map(|k| 10f64.powi(-k)).collect()
}
fn yes() -> bool {
    true
}

impl AnalysisConfig {
    pub fn new(c: f64) -> Self {
        AnalysisConfig {
            c,
            rho: RhoSetting::AUTO,
            beta: None,
            state_cap: DEFAULT_STATE_CAP,
            interdependence_cap: DEFAULT_INTERDEPENDENCE_CAP,
            check_eps: default_check_eps(),
            limit_eps: default_limit_eps(),
            eps_grid: default_eps_grid(),
            fit_resistances: true,
        }
    }

    pub fn validate(&self, game: &Game) -> Result<()> {
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
        let in_unit = |v: &[f64]| v.iter().all(|&e| e > 0.0 && e < 1.0);
        if !in_unit(&self.check_eps) || !in_unit(&self.limit_eps) || !in_unit(&self.eps_grid) {
            return Err(Error::InvalidConfig("every ε value must lie in (0, 1)".into()));
        }
        if self.eps_grid.len() < 2 {
            return Err(Error::InvalidConfig("eps_grid needs at least two points".into()));
        }
        Ok(())
    }
}

/// Everything the exact pipeline derives from a game.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub dynamics: Dynamics,
    /// ρ computed from the game rather than overridden.
    pub rho_from_game: bool,
    pub interdependent: bool,
    pub space: StateSpace,
    pub chain: SymbolicChain,
    pub classes: RecurrenceClassification,
    pub graph: ResistanceGraph,
    pub potentials: Potentials,
    pub stable: Vec<SystemState>,
    pub prediction: Theorem2Prediction,
}

impl Analysis {
    /// ρ from the game and the game interdependent at it.
    pub fn verified_mode(&self) -> bool {
        self.rho_from_game && self.interdependent
    }

    pub fn theorem2_match(&self) -> bool {
        self.stable == self.prediction.states
    }

    pub fn matrix(&self, game: &Game, eps: f64) -> TransitionMatrix {
        build_transition_matrix(&self.space, game, &self.dynamics, eps)
    }

    /// Stationary mass on `states` at `eps`, with the solver residual.
    pub fn stationary_mass(&self, game: &Game, eps: f64, states: &[SystemState]) -> Result<(f64, f64)> {
        let m = self.matrix(game, eps);
        let mu = super::stationary_distribution(&m)?;
        let mass = states
            .iter()
            .filter_map(|s| self.space.id(s))
            .map(|x| mu[x])
            .sum();
        Ok((mass, m.residual(&mu)))
    }

    pub fn class_label(&self, k: usize) -> String {
        let class = &self.classes.classes[k];
        match class.kind {
            ClassKind::Discontent => "D".to_string(),
            kind => format!("{} {}", kind.label(), self.space.state(class.states[0])),
        }
    }
}

/// Runs enumeration, classification, class resistances and potentials.
pub fn analyze(game: &Game, config: &AnalysisConfig) -> Result<Analysis> {
    config.validate(game)?;
    let (rho, rho_from_game) = match config.rho {
        RhoSetting::Auto(_) => (game.rho(), true),
        RhoSetting::Value(v) => (v, false),
    };
    let interdependent = game
        .interdependence_capped(rho, config.interdependence_cap)?
        .holds;
    let dynamics = Dynamics::new(rho, config.c, config.beta);
    let space = enumerate_states(game, &dynamics, config.state_cap)?;
    let chain = SymbolicChain::build(&space, game, &dynamics);
    let classes = classify_recurrence(&space, &chain, game, rho)?;
    let graph = class_resistances(&chain, &classes);
    let potentials = stochastic_potentials(&graph)?;
    let stable = stochastically_stable_set(&space, &classes, &potentials);
    let prediction = theorem2_predict(game, rho)?;
    Ok(Analysis {
        dynamics,
        rho_from_game,
        interdependent,
        space,
        chain,
        classes,
        graph,
        potentials,
        stable,
        prediction,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub violation_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

impl CheckResult {
    fn from_violations(name: &str, detail: String, violations: Vec<String>) -> Self {
        CheckResult {
            name: name.to_string(),
            passed: violations.is_empty(),
            detail,
            violation_count: violations.len(),
            violations: violations.into_iter().take(MAX_LISTED).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub edges: usize,
    pub max_abs_error: f64,
    pub min_r_squared: f64,
    pub worst_edge: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub verified_mode: bool,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fits: Option<FitSummary>,
}

impl LemmaReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn show(r: Option<Exponent>) -> String {
    r.map_or("inf".to_string(), |r| r.to_string())
}

/// Machine-checks irreducibility, aperiodicity, the limit property, the
/// classification, the potential formula, the non-stability of the
/// discontent and higher content classes, every resistance relation
/// between class types, and agreement with the welfare prediction.
pub fn verify_lemmas(game: &Game, analysis: &Analysis, config: &AnalysisConfig) -> LemmaReport {
    let mut checks = Vec::new();
    let space = &analysis.space;
    let chain = &analysis.chain;

    // Irreducibility and aperiodicity.
    let mut irreducible = Vec::new();
    let mut aperiodic = Vec::new();
    for &eps in &config.check_eps {
        let m = analysis.matrix(game, eps);
        let components = strongly_connected_count(&m);
        if components != 1 {
            irreducible.push(format!("ε={eps}: {components} strongly connected components"));
        }
        let p = period(&m);
        if p != 1 {
            aperiodic.push(format!("ε={eps}: period {p}"));
        }
        let rows_bad = (0..m.len()).filter(|&x| (m.row_sum(x) - 1.0).abs() > 1e-9).count();
        if rows_bad > 0 {
            irreducible.push(format!("ε={eps}: {rows_bad} rows do not sum to 1"));
        }
    }
    checks.push(CheckResult::from_violations(
        "irreducible",
        format!("{} states, ε ∈ {:?}", space.len(), config.check_eps),
        irreducible,
    ));
    checks.push(CheckResult::from_violations(
        "aperiodic",
        "period of the support graph".into(),
        aperiodic,
    ));

    // Unperturbed support and the entrywise limit.
    let p0 = chain.unperturbed(0.0);
    let mut support = Vec::new();
    for (x, e) in chain.iter() {
        if e.resistance.is_zero() != (e.p0 > 0.0) {
            support.push(format!(
                "{} -> {}: resistance {}, unperturbed probability {}",
                space.state(x),
                space.state(e.to),
                e.resistance,
                e.p0
            ));
        }
    }
    let deviations: Vec<f64> = config
        .limit_eps
        .par_iter()
        .map(|&eps| analysis.matrix(game, eps).max_abs_diff(&p0))
        .collect();
    let mut limit = Vec::new();
    for k in 1..deviations.len() {
        if deviations[k] > deviations[k - 1] * (1.0 + 1e-9) {
            limit.push(format!(
                "deviation grew from {} at ε={} to {} at ε={}",
                deviations[k - 1],
                config.limit_eps[k - 1],
                deviations[k],
                config.limit_eps[k]
            ));
        }
    }
    checks.push(CheckResult::from_violations(
        "zero resistance support",
        format!("{} transitions", chain.edge_count()),
        support,
    ));
    checks.push(CheckResult::from_violations(
        "entrywise limit",
        format!("max |P^ε − P⁰| = {deviations:?}"),
        limit,
    ));

    // Numeric fits.
    let mut fits = None;
    if config.fit_resistances {
        let (summary, infinite) = fit_all(game, analysis, &config.eps_grid);
        checks.push(CheckResult::from_violations(
            "resistance fits finite",
            format!(
                "{} transitions, max |fit − exact| = {:.4}, min R² = {:.6}",
                summary.edges, summary.max_abs_error, summary.min_r_squared
            ),
            infinite,
        ));
        fits = Some(summary);
    }

    // Classification.
    let classes = &analysis.classes;
    let mut classification = Vec::new();
    let mut seeds = discontent_seeds(game);
    seeds.sort();
    seeds.dedup();
    let expected_discontent = seeds.len();
    let discontent_size = classes
        .discontent_class()
        .map_or(0, |k| classes.classes[k].states.len());
    if discontent_size != expected_discontent {
        classification.push(format!(
            "discontent class has {discontent_size} states, expected {expected_discontent}"
        ));
    }
    if let Some(m) = classes.max_level() {
        if m >= game.n() {
            classification.push(format!("content level {m} is not below n = {}", game.n()));
        }
    }
    checks.push(CheckResult::from_violations(
        "recurrence classes",
        format!(
            "{} classes ({} content), {} transient states",
            classes.classes.len(),
            classes.content_class_count(),
            classes.transient.len()
        ),
        classification,
    ));

    let c = analysis.dynamics.c_exponent();
    let gamma = &analysis.potentials.gamma;
    let content_total = classes.content_class_count() as u32;
    let c0 = classes.content_classes(0);
    let min_c0 = c0.iter().map(|&k| gamma[k]).min();

    // Potential formula for every C⁰ state.
    let mut formula = Vec::new();
    for &k in &c0 {
        let z = space.state(classes.classes[k].states[0]);
        let expected = c * content_total.saturating_sub(1)
            + z.0.iter().map(|a| Exponent::complement_of(a.utility)).sum::<Exponent>();
        if gamma[k] != expected {
            formula.push(format!("{z}: tree {} vs formula {expected}", gamma[k]));
        }
    }
    checks.push(CheckResult::from_violations(
        "potential formula",
        format!("{} C0 states, Σ|C^m| = {content_total}", c0.len()),
        formula,
    ));

    let mut dominated = Vec::new();
    let mut higher = Vec::new();
    if let Some(min_c0) = min_c0 {
        for (k, class) in classes.classes.iter().enumerate() {
            let bad = gamma[k] <= min_c0;
            match class.kind {
                ClassKind::Discontent if bad => dominated.push(format!(
                    "γ(D) = {} ≤ min γ(C0) = {min_c0}",
                    gamma[k]
                )),
                ClassKind::Content { m } if m >= 1 && bad => higher.push(format!(
                    "γ({}) = {} ≤ min γ(C0) = {min_c0}",
                    analysis.class_label(k),
                    gamma[k]
                )),
                _ => {}
            }
        }
    } else {
        dominated.push("no C0 class".into());
    }
    checks.push(CheckResult::from_violations(
        "discontent not stable",
        format!("min γ(C0) = {}", show(min_c0)),
        dominated,
    ));
    checks.push(CheckResult::from_violations(
        "higher content not stable",
        format!("min γ(C0) = {}", show(min_c0)),
        higher,
    ));

    for check in table_checks(analysis) {
        checks.push(check);
    }

    let mut theorem = Vec::new();
    if !analysis.theorem2_match() {
        let fmt = |v: &[SystemState]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
        theorem.push(format!(
            "stable {} vs predicted {}",
            fmt(&analysis.stable),
            fmt(&analysis.prediction.states)
        ));
    }
    checks.push(CheckResult::from_violations(
        "welfare prediction",
        format!("{} stable states", analysis.stable.len()),
        theorem,
    ));

    LemmaReport {
        verified_mode: analysis.verified_mode(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        fits,
    }
}

/// Table of class-type resistance relations, one check per row.
pub fn table_checks(analysis: &Analysis) -> Vec<CheckResult> {
    let classes = &analysis.classes;
    let graph = &analysis.graph;
    let space = &analysis.space;
    let c = analysis.dynamics.c_exponent();
    let c_value = analysis.dynamics.c;
    let r = |a: usize, b: usize| graph.resistance(a, b, Variant::Path);
    let name = |k: usize| analysis.class_label(k);
    let level = |k: usize| classes.classes[k].kind.content_level();
    let d = classes.discontent_class();
    let c0 = classes.content_classes(0);
    let content: Vec<usize> = (0..classes.classes.len()).filter(|&k| level(k).is_some()).collect();

    let mut rows: Vec<Vec<String>> = vec![Vec::new(); 7];
    if let Some(d) = d {
        for &k in &content {
            let z = space.state(classes.classes[k].states[0]);
            match level(k) {
                Some(0) => {
                    let expected: Exponent =
                        z.0.iter().map(|a| Exponent::complement_of(a.utility)).sum();
                    if r(d, k) != Some(expected) {
                        rows[0].push(format!("D -> {}: {} vs Σ(1−ū) = {expected}", name(k), show(r(d, k))));
                    }
                }
                Some(_) => {
                    let expected = c0
                        .iter()
                        .filter_map(|&z0| Some(r(d, z0)? + r(z0, k)?))
                        .min();
                    if r(d, k) != expected {
                        rows[1].push(format!(
                            "D -> {}: {} vs min through C0 {}",
                            name(k),
                            show(r(d, k)),
                            show(expected)
                        ));
                    }
                }
                None => {}
            }
            let row = if level(k) == Some(0) { 2 } else { 3 };
            if r(k, d) != Some(c) {
                rows[row].push(format!("{} -> D: {} vs c = {c}", name(k), show(r(k, d))));
            }
        }
    }
    for &a in &content {
        for &b in &content {
            if a == b {
                continue;
            }
            let (l, m) = (level(a).unwrap(), level(b).unwrap());
            let value = r(a, b);
            let upper = Exponent::from_f64(rbar(m, c_value));
            let (row, lower) = if l == m {
                (if m == 0 { 4 } else { 5 }, c)
            } else {
                (6, c * (l.abs_diff(m) as u32))
            };
            match value {
                Some(v) if v >= lower && v <= upper => {}
                _ => rows[row].push(format!(
                    "{} -> {}: {} outside [{lower}, {upper}]",
                    name(a),
                    name(b),
                    show(value)
                )),
            }
        }
    }
    let titles = [
        "D to C0",
        "D to Cm",
        "C0 to D",
        "Cm to D",
        "C0 to C0",
        "Cm to Cm",
        "Cl to Cm",
    ];
    rows.into_iter()
        .zip(titles)
        .map(|(v, t)| CheckResult::from_violations(t, "exact exponents".into(), v))
        .collect()
}

fn fit_all(game: &Game, analysis: &Analysis, grid: &[f64]) -> (FitSummary, Vec<String>) {
    let matrices: Vec<TransitionMatrix> = grid
        .par_iter()
        .map(|&eps| analysis.matrix(game, eps))
        .collect();
    let mut summary = FitSummary {
        edges: 0,
        max_abs_error: 0.0,
        min_r_squared: 1.0,
        worst_edge: None,
    };
    let mut infinite = Vec::new();
    for (x, e) in analysis.chain.iter() {
        let probabilities: Vec<f64> = matrices.iter().map(|m| m.get(x, e.to)).collect();
        let fit = fit_series(grid, &probabilities);
        summary.edges += 1;
        if !fit.slope.is_finite() {
            infinite.push(format!(
                "{} -> {}",
                analysis.space.state(x),
                analysis.space.state(e.to)
            ));
            continue;
        }
        let err = (fit.slope - e.resistance.to_f64()).abs();
        if err > summary.max_abs_error {
            summary.max_abs_error = err;
            summary.worst_edge = Some((x, e.to));
        }
        summary.min_r_squared = summary.min_r_squared.min(fit.r_squared);
    }
    (summary, infinite)
}

fn strongly_connected_count(m: &TransitionMatrix) -> usize {
    let mut g: DiGraph<(), ()> = DiGraph::new();
    for _ in 0..m.len() {
        g.add_node(());
    }
    for x in 0..m.len() {
        for &(y, _) in m.row(x) {
            g.add_edge(NodeIndex::new(x), NodeIndex::new(y), ());
        }
    }
    tarjan_scc(&g).len()
}

/// The JSON document written by the `analyze` command.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub state_count: usize,
    pub transition_count: usize,
    pub rho: f64,
    pub rho_from_game: bool,
    pub interdependent: bool,
    pub c: f64,
    pub beta: Option<f64>,
    pub transient_count: usize,
    pub classes: Vec<ClassEntry>,
    pub resistances: Vec<ResistanceEntry>,
    pub stable_set: Vec<String>,
    pub predicted_set: Vec<String>,
    pub prediction_matches: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<LemmaReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassEntry {
    pub id: usize,
    pub label: String,
    pub states: Vec<String>,
    pub potential: Exponent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResistanceEntry {
    pub from: usize,
    pub to: usize,
    pub resistance: Exponent,
    pub direct: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub via: Vec<usize>,
}

impl AnalysisReport {
    pub fn new(analysis: &Analysis, lemmas: Option<LemmaReport>) -> Self {
        let classes = analysis
            .classes
            .classes
            .iter()
            .enumerate()
            .map(|(id, class)| ClassEntry {
                id,
                label: class.kind.label(),
                states: class
                    .states
                    .iter()
                    .map(|&x| analysis.space.state(x).to_string())
                    .collect(),
                potential: analysis.potentials.gamma[id],
                partition: match class.kind {
                    ClassKind::Content { .. } => analysis
                        .classes
                        .witnesses
                        .get(&class.states[0])
                        .map(|w| w.partition.clone()),
                    ClassKind::Discontent => None,
                },
            })
            .collect();
        let resistances = analysis
            .graph
            .edge_list(Variant::Path)
            .into_iter()
            .map(|(from, to, resistance)| ResistanceEntry {
                from,
                to,
                resistance,
                direct: analysis.graph.resistance(from, to, Variant::Direct),
                via: analysis.graph.path[from][to].via.clone(),
            })
            .collect();
        AnalysisReport {
            state_count: analysis.space.len(),
            transition_count: analysis.chain.edge_count(),
            rho: analysis.dynamics.rho,
            rho_from_game: analysis.rho_from_game,
            interdependent: analysis.interdependent,
            c: analysis.dynamics.c,
            beta: analysis.dynamics.beta,
            transient_count: analysis.classes.transient.len(),
            classes,
            resistances,
            stable_set: analysis.stable.iter().map(|s| s.to_string()).collect(),
            predicted_set: analysis.prediction.states.iter().map(|s| s.to_string()).collect(),
            prediction_matches: analysis.theorem2_match(),
            lemmas,
        }
    }
}

/// One `src,dst,resistance` line per finite class-to-class resistance.
pub fn write_edge_list<W: Write>(graph: &ResistanceGraph, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["src", "dst", "resistance"])?;
    for (a, b, r) in graph.edge_list(Variant::Path) {
        writer.write_record([a.to_string(), b.to_string(), r.to_string()])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}
