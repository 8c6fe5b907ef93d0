//! Stationary distribution of the perturbed chain as ε shrinks.
//!
//!     cargo run --release --example stationary_concentration -- fixtures/example1.json 2.0

use std::env;

use paretolearn::chain::{analyze, stationary_distribution_power, AnalysisConfig};
use paretolearn::game::Game;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "fixtures/example1.json".into());
    let c: f64 = args.next().map_or(Ok(2.0), |s| s.parse())?;
    let game = Game::load(&path)?;
    let analysis = analyze(&game, &AnalysisConfig::new(c))?;
    let predicted = &analysis.prediction.states;
    let stable = &analysis.stable;

    println!("{:>8} {:>12} {:>12} {:>10} {:>10}", "ε", "predicted", "stable", "residual", "solvers");
    for eps in [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4, 1e-5, 1e-6] {
        let m = analysis.matrix(&game, eps);
        let mu = paretolearn::chain::stationary_distribution(&m)?;
        let mass = |states: &[paretolearn::learner::SystemState]| -> f64 {
            states.iter().filter_map(|s| analysis.space.id(s)).map(|x| mu[x]).sum()
        };
        let agreement = match stationary_distribution_power(&m, 1e-14, 2_000_000) {
            Ok(nu) => format!(
                "{:.1e}",
                mu.iter().zip(&nu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            ),
            Err(_) => "slow".to_string(),
        };
        println!(
            "{eps:>8.0e} {:>12.6} {:>12.6} {:>10.1e} {:>10}",
            mass(predicted),
            mass(stable),
            m.residual(&mu),
            agreement
        );
    }
    Ok(())
}
