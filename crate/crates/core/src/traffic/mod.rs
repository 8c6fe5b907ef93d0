//! Ramp-coordination games generated from a cell-transmission freeway model.
//!
//! Each onramp is an agent choosing between local density control (`LOC`)
//! and coordination with the next downstream ramp (`COR`). Demand days are
//! the disturbances. Utilities come from simulating the whole rush hour and
//! normalising each ramp's travel-plus-waiting cost.

mod ctm;
mod metering;
mod synthetic;
mod tabulate;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ctm::{ctm_step, demand_function, supply_function, StepDemand, StepFlows};
pub use metering::{metering_policy, MeterAction, MeteringInputs};
pub use synthetic::{synthetic_freeway, weekday_demands, SyntheticScenario};
pub use tabulate::{
    build_traffic_game, calibrate, evaluate_profile, fingerprint, load_or_build_traffic_game, simulate,
    Calibration, Control,
    SimulationOutcome, TrafficComparison, DEFAULT_RAMP_CAP,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    /// km
    pub length: f64,
    /// km/h
    pub free_speed: f64,
    /// km/h
    pub wave_speed: f64,
    /// veh/km
    pub jam_density: f64,
    /// veh/km
    pub critical_density: f64,
    /// veh/h
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSpec {
    /// Cell the ramp feeds.
    pub cell: usize,
    /// km; the queue storage is `length · ramp_jam_density`.
    pub length: f64,
}

/// Gains and limits shared by every ramp controller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeteringGains {
    /// (veh/h) per (veh/km) of density error, applied every step.
    pub k_loc: f64,
    /// veh/h per unit of occupancy difference, applied every step.
    pub k_cor: f64,
    pub rate_min: f64,
    pub rate_max: f64,
    /// veh/km of stored queue at full ramp occupancy.
    pub ramp_jam_density: f64,
    /// Guaranteed share of the receiving cell's supply for ramp traffic.
    pub merge_share: f64,
}

impl Default for MeteringGains {
    fn default() -> Self {
        MeteringGains {
            k_loc: 150.0,
            k_cor: 500.0,
            rate_min: 180.0,
            rate_max: 1800.0,
            ramp_jam_density: 125.0,
            merge_share: 0.45,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreewaySpec {
    pub cells: Vec<CellSpec>,
    pub ramps: Vec<RampSpec>,
    /// Fraction of capacity lost at jam density.
    pub capacity_drop: f64,
    /// Step in hours.
    pub dt: f64,
    /// Number of steps simulated.
    pub horizon: usize,
    #[serde(default)]
    pub metering: MeteringGains,
}

impl FreewaySpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidFreeway(m));
        if self.cells.is_empty() {
            return bad("freeway has no cells".into());
        }
        if !(self.dt > 0.0) || self.horizon == 0 {
            return bad("dt must be positive and horizon at least one step".into());
        }
        if !(0.0..1.0).contains(&self.capacity_drop) {
            return bad(format!("capacity_drop must lie in [0, 1), got {}", self.capacity_drop));
        }
        for (i, c) in self.cells.iter().enumerate() {
            let positive = [c.length, c.free_speed, c.wave_speed, c.jam_density, c.critical_density, c.capacity];
            if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return bad(format!("cell {i}: every parameter must be positive"));
            }
            if c.critical_density >= c.jam_density {
                return bad(format!("cell {i}: critical density must be below jam density"));
            }
            if c.capacity > c.free_speed * c.critical_density * (1.0 + 1e-9) {
                return bad(format!(
                    "cell {i}: capacity {} exceeds free speed × critical density {}",
                    c.capacity,
                    c.free_speed * c.critical_density
                ));
            }
            let limit = c.length / c.free_speed.max(c.wave_speed);
            if self.dt > limit * (1.0 + 1e-12) {
                return bad(format!("cell {i}: step {} h violates CFL bound {limit} h", self.dt));
            }
        }
        for (r, ramp) in self.ramps.iter().enumerate() {
            if ramp.cell >= self.cells.len() {
                return bad(format!("ramp {r} feeds missing cell {}", ramp.cell));
            }
            if r > 0 && ramp.cell <= self.ramps[r - 1].cell {
                return bad("ramp cells must be strictly increasing".into());
            }
            if !(ramp.length > 0.0) {
                return bad(format!("ramp {r}: length must be positive"));
            }
        }
        let g = &self.metering;
        if !(0.0 <= g.rate_min && g.rate_min <= g.rate_max) {
            return bad("metering needs 0 ≤ rate_min ≤ rate_max".into());
        }
        if !(g.ramp_jam_density > 0.0) || !(0.0..=1.0).contains(&g.merge_share) {
            return bad("metering needs positive ramp_jam_density and merge_share in [0, 1]".into());
        }
        Ok(())
    }

    /// Vehicles a ramp holds at full occupancy.
    pub fn ramp_storage(&self, ramp: usize) -> f64 {
        self.ramps[ramp].length * self.metering.ramp_jam_density
    }

    /// Cells `[start, end)` attributed to each ramp: from its merge cell up to
    /// the next ramp's merge cell, the last ramp taking the rest.
    pub fn sections(&self) -> Vec<(usize, usize)> {
        (0..self.ramps.len())
            .map(|r| {
                let end = self.ramps.get(r + 1).map_or(self.cells.len(), |n| n.cell);
                (self.ramps[r].cell, end)
            })
            .collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let spec: FreewaySpec = read_json(path.as_ref())?;
        spec.validate()?;
        Ok(spec)
    }
}

/// One demand day: per-step mainline inflow and per-ramp arrivals, veh/h.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandProfile {
    pub name: String,
    pub mainline: Vec<f64>,
    pub ramps: Vec<Vec<f64>>,
}

impl DemandProfile {
    pub fn validate(&self, spec: &FreewaySpec) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidFreeway(format!("demand {}: {m}", self.name)));
        if self.mainline.len() != spec.horizon {
            return bad(format!("mainline has {} steps, horizon is {}", self.mainline.len(), spec.horizon));
        }
        if self.ramps.len() != spec.ramps.len() {
            return bad(format!("{} ramp series for {} ramps", self.ramps.len(), spec.ramps.len()));
        }
        for series in std::iter::once(&self.mainline).chain(&self.ramps) {
            if series.len() != spec.horizon {
                return bad("every series must span the horizon".into());
            }
            if series.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return bad("demands must be finite and non-negative".into());
            }
        }
        Ok(())
    }

    /// Same shape with every demand zero.
    pub fn zero(spec: &FreewaySpec) -> Self {
        DemandProfile {
            name: "zero".into(),
            mainline: vec![0.0; spec.horizon],
            ramps: vec![vec![0.0; spec.horizon]; spec.ramps.len()],
        }
    }

    pub fn load_all(path: impl AsRef<Path>, spec: &FreewaySpec) -> Result<Vec<Self>> {
        let days: Vec<DemandProfile> = read_json(path.as_ref())?;
        if days.is_empty() {
            return Err(Error::InvalidFreeway("no demand profiles".into()));
        }
        for d in &days {
            d.validate(spec)?;
        }
        Ok(days)
    }
}

/// Densities (veh/km), ramp queues (veh), metering rates (veh/h) and the
/// vehicles waiting to enter at the upstream boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficState {
    pub density: Vec<f64>,
    pub queues: Vec<f64>,
    pub rates: Vec<f64>,
    pub upstream_queue: f64,
}

impl TrafficState {
    /// Empty freeway with every meter fully open.
    pub fn empty(spec: &FreewaySpec) -> Self {
        TrafficState {
            density: vec![0.0; spec.cells.len()],
            queues: vec![0.0; spec.ramps.len()],
            rates: vec![spec.metering.rate_max; spec.ramps.len()],
            upstream_queue: 0.0,
        }
    }

    /// Vehicles on the mainline, in ramp queues and waiting upstream.
    pub fn vehicles(&self, spec: &FreewaySpec) -> f64 {
        let mainline: f64 = self
            .density
            .iter()
            .zip(&spec.cells)
            .map(|(d, c)| d * c.length)
            .sum();
        mainline + self.queues.iter().sum::<f64>() + self.upstream_queue
    }

    /// Queue length over storage, clamped to `[0, 1]`.
    pub fn occupancy(&self, spec: &FreewaySpec, ramp: usize) -> f64 {
        (self.queues[ramp] / spec.ramp_storage(ramp)).clamp(0.0, 1.0)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Parse {
        context: path.display().to_string(),
        source,
    })
}
