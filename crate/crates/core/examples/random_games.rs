//! Stable set against the welfare-maximiser prediction on random
//! interdependent games.
//!
//!     cargo run --release --example random_games -- 40 1

use std::env;

use paretolearn::chain::{analyze, AnalysisConfig};
use paretolearn::game::random_interdependent_game;
use paretolearn::harness::random_batch_spec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = env::args().skip(1);
    let count: u64 = args.next().map_or(Ok(40), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse())?;
    let (mut games, mut matched) = (0, 0);
    for i in 0..count {
        let spec = random_batch_spec(i);
        let Some(game) = random_interdependent_game(&spec, seed + i, 200)? else {
            continue;
        };
        games += 1;
        let config = AnalysisConfig::new(game.n() as f64 + 1.0);
        match analyze(&game, &config) {
            Ok(a) => {
                let ok = a.theorem2_match();
                matched += ok as usize;
                println!(
                    "seed {:>4}  n={} |W|={}  {:>4} states  {}",
                    seed + i,
                    game.n(),
                    game.disturbance_count(),
                    a.space.len(),
                    if ok { "match" } else { "differs" }
                );
            }
            Err(e) => println!("seed {:>4}  {e}", seed + i),
        }
    }
    println!("{matched}/{games} stable sets equal the prediction");
    Ok(())
}
