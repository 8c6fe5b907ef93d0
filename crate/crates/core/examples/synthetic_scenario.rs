//! Writes a synthetic freeway and its five weekday demand days as JSON.
//!
//!     cargo run --example synthetic_scenario -- 10 fixtures/freeway_10ramp.json fixtures/demands_10ramp.json

use std::env;
use std::fs;

use paretolearn::traffic::{simulate, Control, SyntheticScenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = env::args().skip(1).collect();
    let ramps: usize = args.first().map_or(Ok(10), |s| s.parse())?;
    let scenario = SyntheticScenario::with_ramps(ramps);
    let spec = scenario.freeway();
    spec.validate()?;
    let demands = scenario.demands();
    for d in &demands {
        let free = simulate(&spec, d, &Control::NoMetering)?;
        println!("{}: {:.1} veh·h unmetered", d.name, free.total_time);
    }
    if let [_, freeway_path, demands_path, ..] = args.as_slice() {
        fs::write(freeway_path, serde_json::to_string_pretty(&spec)?)?;
        fs::write(demands_path, serde_json::to_string(&demands)?)?;
        println!("wrote {freeway_path} and {demands_path}");
    }
    Ok(())
}
