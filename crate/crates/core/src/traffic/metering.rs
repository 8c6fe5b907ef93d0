use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MeteringGains;
use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeterAction {
    /// Integral feedback of the local density toward critical.
    #[serde(rename = "LOC")]
    Loc,
    /// Balances the ramp's occupancy against the next downstream ramp.
    #[serde(rename = "COR")]
    Cor,
}

impl MeterAction {
    pub const ALL: [MeterAction; 2] = [MeterAction::Loc, MeterAction::Cor];

    pub fn name(self) -> &'static str {
        match self {
            MeterAction::Loc => "LOC",
            MeterAction::Cor => "COR",
        }
    }
}

impl fmt::Display for MeterAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeterAction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "LOC" => Ok(MeterAction::Loc),
            "COR" => Ok(MeterAction::Cor),
            _ => Err(Error::InvalidGame(format!("unknown metering action {s:?}"))),
        }
    }
}

/// What one ramp controller observes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeteringInputs {
    pub rate: f64,
    pub local_density: f64,
    pub critical_density: f64,
    pub occupancy: f64,
    /// `None` for the last ramp.
    pub downstream_occupancy: Option<f64>,
}

/// Next metering rate. `COR` without a downstream ramp falls back to `LOC`.
///
/// `COR` lowers the rate when the downstream ramp is fuller than this one,
/// holding traffic back so the downstream queue can drain, and raises it in
/// the opposite case.
pub fn metering_policy(action: MeterAction, input: MeteringInputs, gains: &MeteringGains) -> f64 {
    let local = || gains.k_loc * (input.critical_density - input.local_density);
    let delta = match (action, input.downstream_occupancy) {
        (MeterAction::Loc, _) | (MeterAction::Cor, None) => local(),
        (MeterAction::Cor, Some(down)) => -gains.k_cor * (down - input.occupancy),
    };
    (input.rate + delta).clamp(gains.rate_min, gains.rate_max)
}
