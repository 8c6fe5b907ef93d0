use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    ctm_step, metering_policy, DemandProfile, FreewaySpec, MeterAction, MeteringInputs,
    StepDemand, TrafficState,
};
use crate::error::{Error, Result};
use crate::game::{ActionProfile, Agent, Disturbance, Game};

/// Largest ramp count tabulated by default; the table has `2^ramps` rows.
pub const DEFAULT_RAMP_CAP: usize = 12;

/// Upper clamp for normalised utilities.
const UTILITY_CEILING: f64 = 1.0 - 1e-6;

/// Slack on the density bounds before a simulation is declared unstable.
const DENSITY_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Control {
    /// One metering action per ramp.
    Profile(Vec<MeterAction>),
    /// Every meter pinned at `rate_max`.
    NoMetering,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationOutcome {
    /// Vehicle-hours in each ramp's section plus its queue.
    pub ramp_costs: Vec<f64>,
    /// Vehicle-hours of everything in the system, upstream queue included.
    pub total_time: f64,
    /// Vehicles that left the downstream end.
    pub exited: f64,
    pub final_state: TrafficState,
}

/// Runs the whole horizon from an empty freeway.
pub fn simulate(spec: &FreewaySpec, demand: &DemandProfile, control: &Control) -> Result<SimulationOutcome> {
    if let Control::Profile(p) = control {
        if p.len() != spec.ramps.len() {
            return Err(Error::InvalidFreeway(format!(
                "profile assigns {} actions to {} ramps",
                p.len(),
                spec.ramps.len()
            )));
        }
    }
    let sections = spec.sections();
    let ramp_count = spec.ramps.len();
    let mut state = TrafficState::empty(spec);
    let mut ramp_costs = vec![0.0; ramp_count];
    let mut total_time = 0.0;
    let mut exited = 0.0;
    let mut arrivals = vec![0.0; ramp_count];
    let mut rates = vec![spec.metering.rate_max; ramp_count];

    for k in 0..spec.horizon {
        if let Control::Profile(actions) = control {
            for r in 0..ramp_count {
                let cell = spec.ramps[r].cell;
                let input = MeteringInputs {
                    rate: state.rates[r],
                    local_density: local_density(&state, cell),
                    critical_density: spec.cells[cell].critical_density,
                    occupancy: state.occupancy(spec, r),
                    downstream_occupancy: (r + 1 < ramp_count).then(|| state.occupancy(spec, r + 1)),
                };
                rates[r] = metering_policy(actions[r], input, &spec.metering);
            }
        }
        for r in 0..ramp_count {
            arrivals[r] = demand.ramps[r][k];
        }
        let step = StepDemand {
            mainline: demand.mainline[k],
            ramps: &arrivals,
        };
        let (mut next, flows) = ctm_step(&state, spec, step, &rates);
        for (i, d) in next.density.iter_mut().enumerate() {
            let jam = spec.cells[i].jam_density;
            if !(*d >= -DENSITY_SLACK && *d <= jam + DENSITY_SLACK) {
                return Err(Error::UnstableSimulation {
                    step: k,
                    cell: i,
                    density: *d,
                });
            }
            *d = d.clamp(0.0, jam);
        }
        state = next;
        exited += flows.outflow() * spec.dt;
        for (r, &(start, end)) in sections.iter().enumerate() {
            let on_section: f64 = (start..end)
                .map(|i| state.density[i] * spec.cells[i].length)
                .sum();
            ramp_costs[r] += (on_section + state.queues[r]) * spec.dt;
        }
        total_time += state.vehicles(spec) * spec.dt;
    }
    Ok(SimulationOutcome {
        ramp_costs,
        total_time,
        exited,
        final_state: state,
    })
}

/// Mean density of the merge cell and the cell feeding it, where merge
/// congestion first shows.
fn local_density(state: &TrafficState, cell: usize) -> f64 {
    let from = cell.saturating_sub(1);
    state.density[from..=cell].iter().sum::<f64>() / (cell - from + 1) as f64
}

/// Per-ramp normalisation bounds: the worst unmetered day and the empty freeway.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub cost_max: Vec<f64>,
    pub cost_min: Vec<f64>,
}

impl Calibration {
    pub fn utilities(&self, costs: &[f64]) -> Vec<f64> {
        costs
            .iter()
            .enumerate()
            .map(|(r, &cost)| {
                let span = self.cost_max[r] - self.cost_min[r];
                let u = if span > 0.0 {
                    (self.cost_max[r] - cost) / span
                } else if cost <= self.cost_min[r] {
                    1.0
                } else {
                    0.0
                };
                u.clamp(0.0, UTILITY_CEILING)
            })
            .collect()
    }
}

pub fn calibrate(spec: &FreewaySpec, demands: &[DemandProfile]) -> Result<Calibration> {
    let runs: Vec<SimulationOutcome> = demands
        .par_iter()
        .map(|d| simulate(spec, d, &Control::NoMetering))
        .collect::<Result<_>>()?;
    let cost_max = (0..spec.ramps.len())
        .map(|r| runs.iter().map(|o| o.ramp_costs[r]).fold(0.0, f64::max))
        .collect();
    let cost_min = simulate(spec, &DemandProfile::zero(spec), &Control::NoMetering)?.ramp_costs;
    Ok(Calibration { cost_max, cost_min })
}

/// Normalised per-ramp utilities of one profile on one day.
pub fn evaluate_profile(
    spec: &FreewaySpec,
    demand: &DemandProfile,
    profile: &[MeterAction],
    calibration: &Calibration,
) -> Result<Vec<f64>> {
    let outcome = simulate(spec, demand, &Control::Profile(profile.to_vec()))?;
    Ok(calibration.utilities(&outcome.ramp_costs))
}

fn decode_profile(index: usize, ramps: usize) -> Vec<MeterAction> {
    (0..ramps)
        .map(|r| MeterAction::ALL[(index >> (ramps - 1 - r)) & 1])
        .collect()
}

fn encode_profile(actions: &[usize]) -> usize {
    actions.iter().fold(0, |acc, &a| (acc << 1) | a)
}

/// Tabulates every `LOC`/`COR` profile on every demand day, uniform over days.
pub fn build_traffic_game(
    spec: &FreewaySpec,
    demands: &[DemandProfile],
    calibration: &Calibration,
    ramp_cap: usize,
) -> Result<Game> {
    let ramps = spec.ramps.len();
    if ramps > ramp_cap {
        return Err(Error::RampCap { cap: ramp_cap, ramps });
    }
    if ramps == 0 || demands.is_empty() {
        return Err(Error::InvalidFreeway("need at least one ramp and one demand day".into()));
    }
    let days = demands.len();
    let cells: Vec<(usize, usize)> = (0..1usize << ramps)
        .flat_map(|p| (0..days).map(move |w| (p, w)))
        .collect();
    let table: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(p, w)| evaluate_profile(spec, &demands[w], &decode_profile(p, ramps), calibration))
        .collect::<Result<_>>()?;
    let agents = (0..ramps)
        .map(|r| Agent {
            name: format!("ramp{}", r + 1),
            actions: MeterAction::ALL.iter().map(|a| a.name().to_string()).collect(),
        })
        .collect();
    let disturbances = demands
        .iter()
        .map(|d| Disturbance {
            name: d.name.clone(),
            prob: 1.0 / days as f64,
        })
        .collect();
    Game::from_fn(agents, disturbances, |actions, w| {
        table[encode_profile(actions) * days + w].clone()
    })
}

/// Hex SHA-256 of the freeway, the demand days and the ramp cap.
pub fn fingerprint(spec: &FreewaySpec, demands: &[DemandProfile], ramp_cap: usize) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(spec).expect("spec serialises"));
    h.update(serde_json::to_vec(demands).expect("demands serialise"));
    h.update(ramp_cap.to_le_bytes());
    hex::encode(h.finalize())
}

fn fingerprint_path(cache: &Path) -> PathBuf {
    let mut name = cache.as_os_str().to_owned();
    name.push(".sha256");
    PathBuf::from(name)
}

/// Loads the tabulated game from `cache` when its stored fingerprint matches,
/// otherwise tabulates and writes both files. Returns the game and whether
/// the cache was hit.
pub fn load_or_build_traffic_game(
    spec: &FreewaySpec,
    demands: &[DemandProfile],
    calibration: &Calibration,
    ramp_cap: usize,
    cache: &Path,
) -> Result<(Game, bool)> {
    let key = fingerprint(spec, demands, ramp_cap);
    let key_path = fingerprint_path(cache);
    if let Ok(stored) = std::fs::read_to_string(&key_path) {
        if stored.trim() == key && cache.exists() {
            return Ok((Game::load(cache)?, true));
        }
    }
    let game = build_traffic_game(spec, demands, calibration, ramp_cap)?;
    game.save(cache)?;
    std::fs::write(&key_path, &key).map_err(|e| Error::io(&key_path, e))?;
    Ok((game, false))
}

/// Learned profile against the two reference controls, averaged over days.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrafficComparison {
    pub learned_profile: Vec<String>,
    pub learned_welfare: f64,
    pub all_loc_welfare: f64,
    pub no_metering_welfare: f64,
    pub learned_total_time: f64,
    pub all_loc_total_time: f64,
    pub no_metering_total_time: f64,
    /// Total time saved by the learned profile relative to no metering, in percent.
    pub saving_percent: f64,
}

impl TrafficComparison {
    pub fn new(
        spec: &FreewaySpec,
        demands: &[DemandProfile],
        calibration: &Calibration,
        game: &Game,
        learned: &ActionProfile,
    ) -> Result<Self> {
        let actions: Vec<MeterAction> = learned.0.iter().map(|&a| MeterAction::ALL[a]).collect();
        let all_loc = ActionProfile(vec![0; spec.ramps.len()]);
        let mean = |control: &Control| -> Result<(f64, f64)> {
            let runs: Vec<SimulationOutcome> = demands
                .par_iter()
                .map(|d| simulate(spec, d, control))
                .collect::<Result<_>>()?;
            let days = runs.len() as f64;
            let welfare: f64 = runs
                .iter()
                .map(|o| calibration.utilities(&o.ramp_costs).iter().sum::<f64>())
                .sum::<f64>()
                / days;
            let time = runs.iter().map(|o| o.total_time).sum::<f64>() / days;
            Ok((welfare, time))
        };
        let (_, learned_total_time) = mean(&Control::Profile(actions.clone()))?;
        let (_, all_loc_total_time) = mean(&Control::Profile(vec![MeterAction::Loc; spec.ramps.len()]))?;
        let (no_metering_welfare, no_metering_total_time) = mean(&Control::NoMetering)?;
        Ok(TrafficComparison {
            learned_profile: actions.iter().map(|a| a.name().to_string()).collect(),
            learned_welfare: game.expected_welfare(learned),
            all_loc_welfare: game.expected_welfare(&all_loc),
            no_metering_welfare,
            learned_total_time,
            all_loc_total_time,
            no_metering_total_time,
            saving_percent: 100.0 * (1.0 - learned_total_time / no_metering_total_time),
        })
    }
}
