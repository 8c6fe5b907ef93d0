//! Numeric log-log fits of transition probabilities against exact resistances.
//!
//!     cargo run --release --example resistance_fit -- fixtures/example1.json 2.0 -2 -4 5

use std::env;

use paretolearn::chain::{
    build_transition_matrix, enumerate_states, fit_series, Dynamics, SymbolicChain,
    DEFAULT_STATE_CAP,
};
use paretolearn::game::Game;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = env::args().skip(1).collect();
    let path = args.first().map_or("fixtures/example1.json", |s| s.as_str());
    let c: f64 = args.get(1).map_or(Ok(2.0), |s| s.parse())?;
    let hi: f64 = args.get(2).map_or(Ok(-2.0), |s| s.parse())?;
    let lo: f64 = args.get(3).map_or(Ok(-4.0), |s| s.parse())?;
    let points: usize = args.get(4).map_or(Ok(5), |s| s.parse())?;
    let grid: Vec<f64> = (0..points)
        .map(|k| 10f64.powf(hi + (lo - hi) * k as f64 / (points - 1) as f64))
        .collect();

    let game = Game::load(path)?;
    let dynamics = Dynamics::new(game.rho(), c, None);
    let space = enumerate_states(&game, &dynamics, DEFAULT_STATE_CAP)?;
    let chain = SymbolicChain::build(&space, &game, &dynamics);
    let matrices: Vec<_> = grid
        .iter()
        .map(|&eps| build_transition_matrix(&space, &game, &dynamics, eps))
        .collect();

    let mut worst: Vec<(f64, f64, usize, usize, f64)> = Vec::new();
    for (x, e) in chain.iter() {
        let p: Vec<f64> = matrices.iter().map(|m| m.get(x, e.to)).collect();
        let fit = fit_series(&grid, &p);
        let err = (fit.slope - e.resistance.to_f64()).abs();
        worst.push((err, fit.r_squared, x, e.to, fit.slope));
    }
    worst.sort_by(|a, b| b.0.total_cmp(&a.0));
    let min_r2 = worst.iter().map(|w| w.1).fold(1.0, f64::min);
    let within = worst.iter().filter(|w| w.0 < 0.1 && w.1 > 0.999).count();
    println!("grid 10^{hi} .. 10^{lo} ({points} points)");
    println!("transitions: {}", worst.len());
    println!("|fit − exact| < 0.1 and R² > 0.999: {within}");
    println!("max |fit − exact|: {:.4}", worst[0].0);
    println!("min R²: {min_r2:.6}");
    let positive: Vec<_> = worst.iter().filter(|w| chain.resistance(w.2, w.3).unwrap().to_f64() > 0.0).collect();
    println!(
        "positive-resistance transitions: {}, min R² among them {:.6}, failing {}",
        positive.len(),
        positive.iter().map(|w| w.1).fold(1.0, f64::min),
        positive.iter().filter(|w| !(w.0 < 0.1 && w.1 > 0.999)).count()
    );
    for &(err, r2, x, y, slope) in worst.iter().take(5) {
        println!(
            "  {} -> {}  exact {}  fit {slope:.4}  err {err:.4}  R² {r2:.6}",
            space.state(x),
            space.state(y),
            chain.resistance(x, y).unwrap()
        );
    }
    Ok(())
}
