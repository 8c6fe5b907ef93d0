#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use paretolearn::chain::{Analysis, SymbolicChain};
use paretolearn::exponent::Exponent;
use paretolearn::game::Game;
use paretolearn::learner::SystemState;
use paretolearn::traffic::*;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn example1() -> Game {
    Game::load(fixture("example1.json")).unwrap()
}

/// Closed communicating classes of the zero-resistance graph, by boolean
/// transitive closure.
pub fn closed_classes(chain: &SymbolicChain) -> BTreeSet<BTreeSet<usize>> {
    let n = chain.len();
    let mut reach = vec![vec![false; n]; n];
    for (x, e) in chain.iter() {
        if e.resistance.is_zero() {
            reach[x][e.to] = true;
        }
    }
    for (x, row) in reach.iter_mut().enumerate() {
        row[x] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for x in 0..n {
        let closed = (0..n).all(|y| !reach[x][y] || reach[y][x]);
        if closed {
            out.insert((0..n).filter(|&y| reach[x][y]).collect());
        }
    }
    out
}

pub fn class_sets(analysis: &Analysis) -> BTreeSet<BTreeSet<usize>> {
    analysis
        .classes
        .classes
        .iter()
        .map(|c| c.states.iter().copied().collect())
        .collect()
}

fn in_b(game: &Game, z: &SystemState, i: usize, rho: f64) -> bool {
    let p = game.profile_index(&z.baseline_actions());
    let u = z.0[i].utility;
    let ws = 0..game.disturbance_count();
    ws.clone().any(|w| game.utility(i, p, w) == u)
        && ws.into_iter().all(|w| (u - game.utility(i, p, w)).abs() <= rho + 1e-12)
}

/// Least `m` for which the all-content state `x` satisfies the content-class
/// conditions, searched directly over the whole state space.
pub fn content_level(analysis: &Analysis, game: &Game, x: usize) -> Option<usize> {
    let rho = analysis.dynamics.rho;
    let space = &analysis.space;
    let n = game.n();
    let mut level: HashMap<usize, usize> = HashMap::new();
    let content: Vec<usize> = (0..space.len()).filter(|&y| space.state(y).all_content()).collect();
    for &y in &content {
        if (0..n).all(|i| in_b(game, space.state(y), i, rho)) {
            level.insert(y, 0);
        }
    }
    for m in 1..n {
        let previous: Vec<usize> = level.iter().filter(|(_, &l)| l == m - 1).map(|(&y, _)| y).collect();
        let mut found = Vec::new();
        for &y in &content {
            if level.contains_key(&y) {
                continue;
            }
            let z = space.state(y);
            let p = game.profile_index(&z.baseline_actions());
            let ok = previous.iter().any(|&parent| {
                let zp = space.state(parent);
                (1..(1u32 << n) - 1).any(|mask| {
                    (0..n).all(|i| {
                        if mask & (1 << i) != 0 {
                            in_b(game, z, i, rho)
                        } else {
                            z.0[i] == zp.0[i]
                                && (0..game.disturbance_count())
                                    .all(|w| (zp.0[i].utility - game.utility(i, p, w)).abs() <= rho + 1e-12)
                        }
                    })
                })
            });
            if ok {
                found.push(y);
            }
        }
        for y in found {
            level.insert(y, m);
        }
    }
    level.get(&x).copied()
}

/// Exhaustive minimum in-tree: every non-root vertex picks one out-arc and
/// the choice must lead every vertex to the root.
pub fn brute_min_in_tree(w: &[Vec<Option<Exponent>>], root: usize) -> Option<Exponent> {
    let n = w.len();
    let others: Vec<usize> = (0..n).filter(|&v| v != root).collect();
    let mut parent = vec![0usize; n];
    let mut best: Option<Exponent> = None;
    fn rec(
        k: usize,
        others: &[usize],
        parent: &mut Vec<usize>,
        w: &[Vec<Option<Exponent>>],
        root: usize,
        best: &mut Option<Exponent>,
    ) {
        if k == others.len() {
            let n = w.len();
            let mut total = Exponent::ZERO;
            for &v in others {
                let mut u = v;
                for _ in 0..n {
                    if u == root {
                        break;
                    }
                    u = parent[u];
                }
                if u != root {
                    return;
                }
                total += w[v][parent[v]].unwrap();
            }
            if best.map_or(true, |b| total < b) {
                *best = Some(total);
            }
            return;
        }
        let v = others[k];
        for t in 0..w.len() {
            if t != v && w[v][t].is_some() {
                parent[v] = t;
                rec(k + 1, others, parent, w, root, best);
            }
        }
    }
    rec(0, &others, &mut parent, w, root, &mut best);
    best
}

/// Dense random weights on a quarter grid with a few missing arcs.
pub fn random_weights(rng: &mut impl Rng, n: usize) -> Vec<Vec<Option<Exponent>>> {
    (0..n)
        .map(|u| {
            (0..n)
                .map(|v| {
                    if u == v || rng.gen_bool(0.2) {
                        None
                    } else {
                        Some(Exponent::from_f64(rng.gen_range(0..40) as f64 / 4.0))
                    }
                })
                .collect()
        })
        .collect()
}

/// Three 0.5 km cells, the last one a 3000 veh/h bottleneck, one ramp on the
/// middle cell.
pub fn three_cells(horizon: usize) -> FreewaySpec {
    let cell = |capacity| CellSpec {
        length: 0.5,
        free_speed: 100.0,
        wave_speed: 25.0,
        jam_density: 200.0,
        critical_density: 40.0,
        capacity,
    };
    FreewaySpec {
        cells: vec![cell(4000.0), cell(4000.0), cell(3000.0)],
        ramps: vec![RampSpec { cell: 1, length: 0.5 }],
        capacity_drop: 0.2,
        dt: 0.005,
        horizon,
        metering: MeteringGains::default(),
    }
}

pub fn constant_demand(spec: &FreewaySpec, mainline: f64, ramp: f64) -> DemandProfile {
    DemandProfile {
        name: "flat".into(),
        mainline: vec![mainline; spec.horizon],
        ramps: vec![vec![ramp; spec.horizon]; spec.ramps.len()],
    }
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

/// Worked by hand from densities [50, 45, 10], ramp queue 5, mainline demand
/// 3800, ramp demand 900 and rate 1800 on `three_cells`:
/// (densities, ramp queue, upstream queue, boundary flows, ramp flow).
pub const HAND_TRACE: [([f64; 3], f64, f64, [f64; 4], f64); 5] = [
    ([66.1875, 53.75, 30.0], 0.78125, 0.25, [3750.0, 2131.25, 3000.0, 1000.0], 1743.75),
    ([73.640625, 60.3125, 30.0], 0.0, 2.5234375, [3345.3125, 2600.0, 3000.0, 3000.0], 1056.25),
    ([79.30859375, 65.234375, 30.0], 0.0, 5.728515625, [3158.984375, 2592.1875, 3000.0, 3000.0], 900.0),
    ([84.7900390625, 68.92578125, 30.0], 0.0, 9.64208984375, [3017.28515625, 2469.140625, 3000.0, 3000.0], 900.0),
    ([89.823974609375, 71.6943359375, 30.0], 0.0, 14.2408447265625, [2880.2490234375, 2376.85546875, 3000.0, 3000.0], 900.0),
];

/// Largest relative deviation of `ctm_step` from `HAND_TRACE`.
pub fn hand_trace_error() -> f64 {
    let spec = three_cells(5);
    spec.validate().unwrap();
    let mut state = TrafficState {
        density: vec![50.0, 45.0, 10.0],
        queues: vec![5.0],
        rates: vec![1800.0],
        upstream_queue: 0.0,
    };
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    let mut worst = 0.0f64;
    for (density, queue, upstream, boundary, ramp) in HAND_TRACE {
        let demand = StepDemand {
            mainline: 3800.0,
            ramps: &[900.0],
        };
        let (next, flows) = ctm_step(&state, &spec, demand, &[1800.0]);
        for i in 0..3 {
            worst = worst.max(rel(next.density[i], density[i]));
        }
        for i in 0..4 {
            worst = worst.max(rel(flows.boundary[i], boundary[i]));
        }
        worst = worst
            .max(rel(next.queues[0], queue))
            .max(rel(next.upstream_queue, upstream))
            .max(rel(flows.ramp[0], ramp));
        state = next;
    }
    worst
}

/// Relative imbalance between vehicles entered and vehicles held or exited
/// over `steps` steps of a four-ramp scenario with varying meter rates.
pub fn conservation_error(steps: usize) -> f64 {
    let scenario = SyntheticScenario::with_ramps(4);
    let spec = scenario.freeway();
    let days = scenario.demands();
    let mut state = TrafficState::empty(&spec);
    let mut entered = 0.0;
    let mut exited = 0.0;
    let mut rates = vec![spec.metering.rate_max; spec.ramps.len()];
    for k in 0..steps {
        let day = &days[(k / spec.horizon) % days.len()];
        let t = k % spec.horizon;
        let arrivals: Vec<f64> = day.ramps.iter().map(|r| r[t]).collect();
        for (r, rate) in rates.iter_mut().enumerate() {
            *rate = spec.metering.rate_min + (k * 7 + r * 13) as f64 % 1000.0;
        }
        let (next, flows) = ctm_step(&state, &spec, StepDemand { mainline: day.mainline[t], ramps: &arrivals }, &rates);
        entered += (day.mainline[t] + arrivals.iter().sum::<f64>()) * spec.dt;
        exited += flows.outflow() * spec.dt;
        state = next;
    }
    (state.vehicles(&spec) + exited - entered).abs() / entered
}

/// Capacity left unused in a merge cell while the queue behind it discharges
/// freely into it.
pub fn discharge_deficits(spec: &FreewaySpec, demand: &DemandProfile) -> Vec<f64> {
    let mut state = TrafficState::empty(spec);
    let rates = vec![spec.metering.rate_max; spec.ramps.len()];
    let mut deficits = Vec::new();
    for k in 0..spec.horizon {
        let arrivals: Vec<f64> = demand.ramps.iter().map(|r| r[k]).collect();
        let (next, flows) = ctm_step(&state, spec, StepDemand { mainline: demand.mainline[k], ramps: &arrivals }, &rates);
        for (r, ramp) in spec.ramps.iter().enumerate() {
            let i = ramp.cell;
            if i == 0 {
                continue;
            }
            let queued = state.density[i - 1] > spec.cells[i - 1].critical_density;
            let free = state.density[i] <= spec.cells[i].critical_density;
            let sent = demand_function(&spec.cells[i - 1], spec.capacity_drop, state.density[i - 1]);
            // The queue discharges everything it can send, so any shortfall is the drop.
            if queued && free && flows.boundary[i] == sent {
                deficits.push(spec.cells[i].capacity - flows.boundary[i] - flows.ramp[r]);
            }
        }
        state = next;
    }
    deficits
}
