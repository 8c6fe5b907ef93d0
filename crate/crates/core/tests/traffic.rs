mod common;

use paretolearn::error::Error;
use paretolearn::game::ActionProfile;
use paretolearn::traffic::*;

use common::*;

#[test]
fn three_cell_hand_trace() {
    let worst = hand_trace_error();
    assert!(worst <= 1e-9, "relative error {worst}");
}

#[test]
fn loc_feedback_trace() {
    let spec = three_cells(20);
    let demand = constant_demand(&spec, 3800.0, 900.0);
    let loc = simulate(&spec, &demand, &Control::Profile(vec![MeterAction::Loc])).unwrap();
    assert!(close(loc.ramp_costs[0], 7.5506913130341005));
    assert!(close(loc.total_time, 12.795));
    assert!(close(loc.exited, 259.5));
    assert!(close(loc.final_state.queues[0], 61.20000000000002));
    assert!(close(loc.final_state.upstream_queue, 51.583992945821954));
    assert!(close(loc.final_state.density[0], 85.6575225129025));
    assert_eq!(loc.final_state.rates, vec![180.0]);

    let open = simulate(&spec, &demand, &Control::NoMetering).unwrap();
    assert!(close(open.ramp_costs[0], 4.796691313034098));
    assert!(close(open.final_state.density[0], 114.24103444453795));
    assert!(close(open.final_state.upstream_queue, 98.49223698000424));
    assert_eq!(open.final_state.queues[0], 0.0);
}

#[test]
fn empty_freeway_stays_empty() {
    let spec = three_cells(1);
    let state = TrafficState::empty(&spec);
    let (next, flows) = ctm_step(&state, &spec, StepDemand { mainline: 0.0, ramps: &[0.0] }, &[1800.0]);
    assert_eq!(next, state);
    assert!(flows.boundary.iter().chain(&flows.ramp).all(|&f| f == 0.0));
}

#[test]
fn free_flow_advection_conserves_vehicles() {
    let mut spec = three_cells(1);
    spec.cells.truncate(1);
    spec.ramps.clear();
    let mut state = TrafficState::empty(&spec);
    state.density[0] = 20.0;
    let before = state.vehicles(&spec);
    let (next, flows) = ctm_step(&state, &spec, StepDemand { mainline: 0.0, ramps: &[] }, &[]);
    // Below critical the cell sends vf·ρ.
    assert_eq!(flows.outflow(), 2000.0);
    assert!(close(next.density[0], 20.0 - 0.005 / 0.5 * 2000.0));
    assert!(close(next.vehicles(&spec) + flows.outflow() * spec.dt, before));
}

#[test]
fn conservation_over_ten_thousand_steps() {
    let err = conservation_error(10_000);
    assert!(err <= 1e-6, "relative imbalance {err}");
}

#[test]
fn capacity_drop_lowers_discharge() {
    let scenario = SyntheticScenario::default();
    let spec = scenario.freeway();
    let monday = &scenario.demands()[0];
    let deficits = discharge_deficits(&spec, monday);
    assert!(!deficits.is_empty(), "scenario never queues at a merge");
    let worst = deficits.iter().cloned().fold(0.0, f64::max);
    assert!(worst > 0.05 * spec.cells[0].capacity, "largest discharge deficit {worst}");

    let mut no_drop = spec.clone();
    no_drop.capacity_drop = 0.0;
    let with = simulate(&spec, monday, &Control::NoMetering).unwrap();
    let without = simulate(&no_drop, monday, &Control::NoMetering).unwrap();
    assert!(with.total_time > without.total_time);
    assert!(discharge_deficits(&no_drop, monday).iter().all(|&d| d <= 1e-9));
}

#[test]
fn three_ramp_game_shape() {
    let spec = FreewaySpec::load(fixture("freeway_3ramp.json")).unwrap();
    let days: Vec<DemandProfile> = DemandProfile::load_all(fixture("demands_3ramp.json"), &spec)
        .unwrap()
        .into_iter()
        .take(2)
        .collect();
    let cal = calibrate(&spec, &days).unwrap();
    let game = build_traffic_game(&spec, &days, &cal, DEFAULT_RAMP_CAP).unwrap();
    assert_eq!(game.n(), 3);
    assert_eq!(game.profile_count(), 8);
    assert_eq!(game.disturbance_count(), 2);
    for p in 0..8 {
        for w in 0..2 {
            assert!(game.payoffs(p, w).iter().all(|u| (0.0..1.0).contains(u)));
        }
    }
    let rho = game.rho();
    assert!((0.0..1.0).contains(&rho));
    let round_trip = paretolearn::game::Game::from_json(&game.to_json()).unwrap();
    assert_eq!(round_trip, game);
}

#[test]
fn zero_demand_gives_top_utility() {
    let scenario = SyntheticScenario::with_ramps(3);
    let spec = scenario.freeway();
    let days = scenario.demands();
    let cal = calibrate(&spec, &days).unwrap();
    for profile in [[MeterAction::Loc; 3], [MeterAction::Cor; 3]] {
        let u = evaluate_profile(&spec, &DemandProfile::zero(&spec), &profile, &cal).unwrap();
        assert!(u.iter().all(|&x| x == 1.0 - 1e-6), "{u:?}");
    }
}

#[test]
fn local_metering_beats_open_meters() {
    let scenario = SyntheticScenario::default();
    let spec = scenario.freeway();
    let days = scenario.demands();
    let cal = calibrate(&spec, &days).unwrap();
    let mut loc = 0.0;
    let mut open = 0.0;
    for d in &days {
        loc += evaluate_profile(&spec, d, &vec![MeterAction::Loc; spec.ramps.len()], &cal)
            .unwrap()
            .iter()
            .sum::<f64>();
        let free = simulate(&spec, d, &Control::NoMetering).unwrap();
        open += cal.utilities(&free.ramp_costs).iter().sum::<f64>();
    }
    assert!(loc > open, "all-LOC {loc} vs no metering {open}");
}

#[test]
fn evaluation_is_deterministic_and_name_blind() {
    let scenario = SyntheticScenario::with_ramps(3);
    let spec = scenario.freeway();
    let days = scenario.demands();
    let cal = calibrate(&spec, &days).unwrap();
    let profile = [MeterAction::Cor, MeterAction::Loc, MeterAction::Cor];
    let a = evaluate_profile(&spec, &days[2], &profile, &cal).unwrap();
    let b = evaluate_profile(&spec, &days[2], &profile, &cal).unwrap();
    assert_eq!(a, b);

    let mut renamed = days[2].clone();
    renamed.name = "some other day".into();
    assert_eq!(evaluate_profile(&spec, &renamed, &profile, &cal).unwrap(), a);

    let mut reversed = days.clone();
    reversed.reverse();
    assert_eq!(calibrate(&spec, &reversed).unwrap(), cal);
}

#[test]
fn cached_game_matches_fresh_tabulation() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("game.json");
    let scenario = SyntheticScenario::with_ramps(3);
    let spec = scenario.freeway();
    let days = scenario.demands();
    let cal = calibrate(&spec, &days).unwrap();
    let (first, hit) = load_or_build_traffic_game(&spec, &days, &cal, DEFAULT_RAMP_CAP, &cache).unwrap();
    assert!(!hit);
    let (second, hit) = load_or_build_traffic_game(&spec, &days, &cal, DEFAULT_RAMP_CAP, &cache).unwrap();
    assert!(hit);
    assert_eq!(first, second);

    let mut changed = days.clone();
    changed[0].mainline[100] += 50.0;
    let (_, hit) = load_or_build_traffic_game(&spec, &changed, &cal, DEFAULT_RAMP_CAP, &cache).unwrap();
    assert!(!hit);
    assert_ne!(fingerprint(&spec, &days, DEFAULT_RAMP_CAP), fingerprint(&spec, &changed, DEFAULT_RAMP_CAP));
}

#[test]
fn ramp_cap_is_enforced() {
    let scenario = SyntheticScenario::with_ramps(4);
    let spec = scenario.freeway();
    let days = scenario.demands();
    let cal = calibrate(&spec, &days).unwrap();
    assert!(matches!(
        build_traffic_game(&spec, &days, &cal, 3),
        Err(Error::RampCap { cap: 3, ramps: 4 })
    ));
}

#[test]
fn cfl_violation_surfaces_as_instability() {
    let mut spec = three_cells(200);
    spec.dt = 0.05;
    assert!(spec.validate().is_err());
    let demand = constant_demand(&spec, 4000.0, 1500.0);
    let err = simulate(&spec, &demand, &Control::NoMetering).unwrap_err();
    assert!(matches!(err, Error::UnstableSimulation { .. }), "{err}");
}

#[test]
fn comparison_reports_the_learned_profile() {
    let scenario = SyntheticScenario::with_ramps(3);
    let spec = scenario.freeway();
    let days = scenario.demands();
    let cal = calibrate(&spec, &days).unwrap();
    let game = build_traffic_game(&spec, &days, &cal, DEFAULT_RAMP_CAP).unwrap();
    let learned = ActionProfile(vec![1, 0, 1]);
    let cmp = TrafficComparison::new(&spec, &days, &cal, &game, &learned).unwrap();
    assert_eq!(cmp.learned_profile, vec!["COR", "LOC", "COR"]);
    assert_eq!(cmp.learned_welfare, game.expected_welfare(&learned));
    assert_eq!(cmp.all_loc_welfare, game.expected_welfare(&ActionProfile(vec![0; 3])));
    let saving = 100.0 * (cmp.no_metering_total_time - cmp.learned_total_time) / cmp.no_metering_total_time;
    assert!((cmp.saving_percent - saving).abs() < 1e-9);
}
