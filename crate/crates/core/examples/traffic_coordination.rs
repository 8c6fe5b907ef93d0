//! Ramp coordination on the synthetic freeway: tabulate the LOC/COR game,
//! run the learner for several seeds and compare against all-LOC and no
//! metering.
//!
//!     cargo run --release --example traffic_coordination -- [ramps] [seeds]

use std::env;
use std::time::Instant;

use paretolearn::game::ActionProfile;
use paretolearn::learner::{run_many, EpsilonSchedule, LearnerConfig, RhoSetting};
use paretolearn::traffic::{
    build_traffic_game, calibrate, simulate, Control, SyntheticScenario, TrafficComparison,
    DEFAULT_RAMP_CAP,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ramps: usize = env::args().nth(1).map_or(Ok(10), |s| s.parse())?;
    let seeds: u64 = env::args().nth(2).map_or(Ok(10), |s| s.parse())?;
    let scenario = SyntheticScenario::with_ramps(ramps);
    let spec = scenario.freeway();
    let demands = scenario.demands();

    let start = Instant::now();
    let calibration = calibrate(&spec, &demands)?;
    let game = build_traffic_game(&spec, &demands, &calibration, DEFAULT_RAMP_CAP)?;
    println!(
        "{} profiles x {} days tabulated in {:.1?}",
        game.profile_count(),
        game.disturbance_count(),
        start.elapsed()
    );
    for d in &demands {
        let free = simulate(&spec, d, &Control::NoMetering)?;
        println!("{}: unmetered total time {:.1} veh·h, exited {:.0}", d.name, free.total_time, free.exited);
    }

    let best = game.profiles().max_by(|a, b| {
        game.expected_welfare(a).total_cmp(&game.expected_welfare(b))
    });
    if let Some(best) = best {
        println!("best profile {best} welfare {:.4}", game.expected_welfare(&best));
    }

    let config = LearnerConfig {
        epsilon: EpsilonSchedule::fixed(1e-4),
        c: 10.0,
        rho: RhoSetting::Value(0.6),
        beta: Some(5e-5),
        iterations: 1000,
        seed: 0,
        keep_records: false,
    };
    let seed_list: Vec<u64> = (1..=seeds).collect();
    let mut holds = 0;
    for (seed, t) in seed_list.iter().zip(run_many(&game, &config, &seed_list)?) {
        let learned = ActionProfile(t.final_state.as_ref().map(|s| s.baseline_actions()).unwrap_or_default());
        let cmp = TrafficComparison::new(&spec, &demands, &calibration, &game, &learned)?;
        let ok = cmp.learned_welfare >= cmp.all_loc_welfare && cmp.learned_welfare > cmp.no_metering_welfare;
        holds += ok as usize;
        println!(
            "seed {seed:>2} {}  learned {:.4}  all-LOC {:.4}  none {:.4}  saving {:.1}%  {}",
            cmp.learned_profile.join(","),
            cmp.learned_welfare,
            cmp.all_loc_welfare,
            cmp.no_metering_welfare,
            cmp.saving_percent,
            if ok { "ok" } else { "below" }
        );
    }
    println!("{holds}/{seeds} seeds beat all-LOC and no metering");
    Ok(())
}
