//! Repeated runs of the learner on the two-agent example with a decaying ε.
//!
//!     cargo run --release --example example1_replication -- 10

use std::env;
use std::time::Instant;

use paretolearn::game::Game;
use paretolearn::learner::{run_many, EpsilonSchedule, LearnerConfig, RhoSetting};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let runs: u64 = env::args().nth(1).map_or(Ok(10), |s| s.parse())?;
    let game = Game::load("fixtures/example1.json")?;
    let config = LearnerConfig {
        epsilon: EpsilonSchedule {
            initial: 0.1,
            decay: 0.99995,
        },
        c: 2.0,
        rho: RhoSetting::Value(0.1),
        beta: None,
        iterations: 1_000_000,
        seed: 0,
        keep_records: false,
    };
    let seeds: Vec<u64> = (1..=runs).collect();
    let start = Instant::now();
    let trajectories = run_many(&game, &config, &seeds)?;
    println!("{} runs in {:.1?}", runs, start.elapsed());
    for (seed, t) in seeds.iter().zip(&trajectories) {
        let modal = t.modal().unwrap();
        println!(
            "seed {seed:>3}  welfare {:.4}  states {:>3}  modal {} {:.4}",
            t.average_welfare,
            t.histogram.len(),
            modal.state,
            modal.fraction
        );
    }
    let mean = trajectories.iter().map(|t| t.average_welfare).sum::<f64>() / runs as f64;
    println!("mean welfare {mean:.4}");
    Ok(())
}
