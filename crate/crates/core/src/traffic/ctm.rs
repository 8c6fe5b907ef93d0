use super::{CellSpec, FreewaySpec, TrafficState};

/// Sending flow of a cell (veh/h). Rises at free speed up to capacity, then
/// falls linearly to `(1 − drop)·capacity` at jam density.
pub fn demand_function(cell: &CellSpec, drop: f64, density: f64) -> f64 {
    if density <= cell.critical_density {
        (cell.free_speed * density).min(cell.capacity)
    } else {
        let beyond = (density - cell.critical_density) / (cell.jam_density - cell.critical_density);
        cell.capacity * (1.0 - drop * beyond.min(1.0))
    }
}

/// Receiving flow of a cell (veh/h).
pub fn supply_function(cell: &CellSpec, density: f64) -> f64 {
    cell.capacity
        .min(cell.wave_speed * (cell.jam_density - density))
        .max(0.0)
}

/// Exogenous demand during one step, veh/h.
#[derive(Clone, Copy, Debug)]
pub struct StepDemand<'a> {
    pub mainline: f64,
    pub ramps: &'a [f64],
}

/// Flows realised during one step, veh/h.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepFlows {
    /// `boundary[i]` enters cell `i` from upstream; the last entry leaves the freeway.
    pub boundary: Vec<f64>,
    pub ramp: Vec<f64>,
}

impl StepFlows {
    pub fn outflow(&self) -> f64 {
        *self.boundary.last().unwrap_or(&0.0)
    }
}

/// Advances the freeway by one step with the given metering rates.
///
/// Cell boundaries pass `min(upstream demand, downstream supply)`. At a
/// merge the ramp gets `min(ramp demand, max(S − D_up, share·S))` and the
/// mainline the remaining supply. Unserved mainline inflow waits upstream.
pub fn ctm_step(
    state: &TrafficState,
    spec: &FreewaySpec,
    demand: StepDemand<'_>,
    rates: &[f64],
) -> (TrafficState, StepFlows) {
    let n = spec.cells.len();
    let dt = spec.dt;
    let drop = spec.capacity_drop;
    let sending: Vec<f64> = (0..n)
        .map(|i| demand_function(&spec.cells[i], drop, state.density[i]))
        .collect();
    let receiving: Vec<f64> = (0..n)
        .map(|i| supply_function(&spec.cells[i], state.density[i]))
        .collect();

    let mut ramp_at = vec![None; n];
    for (r, ramp) in spec.ramps.iter().enumerate() {
        ramp_at[ramp.cell] = Some(r);
    }

    let upstream_demand = state.upstream_queue / dt + demand.mainline;
    let mut boundary = vec![0.0; n + 1];
    let mut ramp_flow = vec![0.0; spec.ramps.len()];
    for i in 0..n {
        let up = if i == 0 { upstream_demand } else { sending[i - 1] };
        let supply = receiving[i];
        match ramp_at[i] {
            Some(r) => {
                let ramp_demand = rates[r].min(state.queues[r] / dt + demand.ramps[r]);
                let share = spec.metering.merge_share * supply;
                let admitted = ramp_demand.min((supply - up).max(share)).max(0.0);
                ramp_flow[r] = admitted;
                boundary[i] = up.min(supply - admitted).max(0.0);
            }
            None => boundary[i] = up.min(supply),
        }
    }
    boundary[n] = sending[n - 1];

    let mut next = state.clone();
    for i in 0..n {
        let inflow = boundary[i] + ramp_at[i].map_or(0.0, |r| ramp_flow[r]);
        next.density[i] += dt / spec.cells[i].length * (inflow - boundary[i + 1]);
    }
    for r in 0..spec.ramps.len() {
        next.queues[r] = (state.queues[r] + dt * (demand.ramps[r] - ramp_flow[r])).max(0.0);
    }
    next.upstream_queue = (state.upstream_queue + dt * (demand.mainline - boundary[0])).max(0.0);
    next.rates = rates.to_vec();
    (
        next,
        StepFlows {
            boundary,
            ramp: ramp_flow,
        },
    )
}
