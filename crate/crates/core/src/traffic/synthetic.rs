use serde::{Deserialize, Serialize};

use super::{CellSpec, DemandProfile, FreewaySpec, MeteringGains, RampSpec};

/// Parameters of a homogeneous synthetic freeway with evenly spaced ramps and
/// a rush-hour demand peak.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticScenario {
    pub ramps: usize,
    pub lead_cells: usize,
    pub cells_per_ramp: usize,
    pub cell_length: f64,
    pub free_speed: f64,
    pub wave_speed: f64,
    pub jam_density: f64,
    pub critical_density: f64,
    pub capacity_drop: f64,
    /// Capacity of the last cell relative to the others.
    pub bottleneck: f64,
    pub ramp_length: f64,
    /// Hours.
    pub horizon_hours: f64,
    pub dt_seconds: f64,
    pub mainline_base: f64,
    pub mainline_peak: f64,
    pub ramp_base: f64,
    pub ramp_peak: f64,
    /// Start, plateau start, plateau end and end of the peak, hours.
    pub peak_shape: [f64; 4],
    pub metering: MeteringGains,
}

impl Default for SyntheticScenario {
    fn default() -> Self {
        SyntheticScenario {
            ramps: 10,
            lead_cells: 2,
            cells_per_ramp: 2,
            cell_length: 0.5,
            free_speed: 100.0,
            wave_speed: 29.0,
            jam_density: 360.0,
            critical_density: 60.0,
            capacity_drop: 0.35,
            bottleneck: 1.0,
            ramp_length: 0.55,
            horizon_hours: 2.5,
            dt_seconds: 10.0,
            mainline_base: 2500.0,
            mainline_peak: 3800.0,
            ramp_base: 100.0,
            ramp_peak: 320.0,
            peak_shape: [0.25, 0.75, 1.5, 2.0],
            metering: MeteringGains::default(),
        }
    }
}

impl SyntheticScenario {
    pub fn with_ramps(ramps: usize) -> Self {
        SyntheticScenario {
            ramps,
            ..Self::default()
        }
    }

    pub fn freeway(&self) -> FreewaySpec {
        synthetic_freeway(self)
    }

    pub fn demands(&self) -> Vec<DemandProfile> {
        weekday_demands(self)
    }
}

pub fn synthetic_freeway(s: &SyntheticScenario) -> FreewaySpec {
    let count = s.lead_cells + s.ramps * s.cells_per_ramp;
    let capacity = s.free_speed * s.critical_density;
    let cells = (0..count)
        .map(|i| CellSpec {
            length: s.cell_length,
            free_speed: s.free_speed,
            wave_speed: s.wave_speed,
            jam_density: s.jam_density,
            critical_density: s.critical_density,
            capacity: if i + 1 == count { capacity * s.bottleneck } else { capacity },
        })
        .collect();
    let ramps = (0..s.ramps)
        .map(|r| RampSpec {
            cell: s.lead_cells + r * s.cells_per_ramp,
            length: s.ramp_length,
        })
        .collect();
    let dt = s.dt_seconds / 3600.0;
    FreewaySpec {
        cells,
        ramps,
        capacity_drop: s.capacity_drop,
        dt,
        horizon: (s.horizon_hours / dt).round() as usize,
        metering: s.metering.clone(),
    }
}

/// Trapezoidal bump in `[0, 1]`.
fn peak(t: f64, [a, b, c, d]: [f64; 4]) -> f64 {
    if t <= a || t >= d {
        0.0
    } else if t < b {
        (t - a) / (b - a)
    } else if t <= c {
        1.0
    } else {
        (d - t) / (d - c)
    }
}

/// Five weekday profiles that scale and shift the same peak.
pub fn weekday_demands(s: &SyntheticScenario) -> Vec<DemandProfile> {
    const DAYS: [(&str, f64, f64); 5] = [
        ("Mon", 1.00, 0.0),
        ("Tue", 0.96, 5.0),
        ("Wed", 1.03, -5.0),
        ("Thu", 1.06, 10.0),
        ("Fri", 0.92, -10.0),
    ];
    let dt = s.dt_seconds / 3600.0;
    let steps = (s.horizon_hours / dt).round() as usize;
    DAYS.iter()
        .map(|&(name, scale, shift_min)| {
            let shape = s.peak_shape.map(|x| x + shift_min / 60.0);
            let bump = |k: usize| peak(k as f64 * dt, shape);
            let mainline = (0..steps)
                .map(|k| s.mainline_base + scale * (s.mainline_peak - s.mainline_base) * bump(k))
                .collect();
            let ramps = (0..s.ramps)
                .map(|r| {
                    // Uneven ramp loads so that coordination matters.
                    let weight = 0.7 + 0.6 * ((r * 7) % 10) as f64 / 9.0;
                    (0..steps)
                        .map(|k| weight * (s.ramp_base + scale * (s.ramp_peak - s.ramp_base) * bump(k)))
                        .collect()
                })
                .collect();
            DemandProfile {
                name: name.to_string(),
                mainline,
                ramps,
            }
        })
        .collect()
}
