//! Exact analysis of a game: recurrence classes, potentials, stable set.
//!
//!     cargo run --release --example chain_analysis -- fixtures/example1.json 2.0

use std::env;

use paretolearn::chain::{analyze, verify_lemmas, AnalysisConfig};
use paretolearn::game::Game;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "fixtures/example1.json".into());
    let c: f64 = args.next().map_or(Ok(2.0), |s| s.parse())?;
    let game = Game::load(&path)?;
    let config = AnalysisConfig::new(c);
    let analysis = analyze(&game, &config)?;

    println!("states: {}", analysis.space.len());
    println!("transitions: {}", analysis.chain.edge_count());
    println!("rho: {} (from game: {})", analysis.dynamics.rho, analysis.rho_from_game);
    for (k, class) in analysis.classes.classes.iter().enumerate() {
        let states = if class.states.len() == 1 {
            analysis.space.state(class.states[0]).to_string()
        } else {
            format!("{} states", class.states.len())
        };
        println!(
            "{:>3} {:<3} γ = {:<8} {}",
            k,
            class.kind.label(),
            analysis.potentials.gamma[k].to_string(),
            states
        );
    }
    println!("stable:");
    for s in &analysis.stable {
        println!("  {s}");
    }
    println!("predicted:");
    for s in &analysis.prediction.states {
        println!("  {s}");
    }

    let report = verify_lemmas(&game, &analysis, &config);
    for check in &report.checks {
        println!(
            "[{}] {:<26} {}",
            if check.passed { "pass" } else { "FAIL" },
            check.name,
            check.detail
        );
        for v in &check.violations {
            println!("       {v}");
        }
    }
    Ok(())
}
