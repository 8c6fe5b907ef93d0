use paretolearn::exponent::Exponent;
use paretolearn::game::{random_game, Game, RandomGameSpec};
use paretolearn::learner::*;
use paretolearn::traffic::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_spec() -> impl Strategy<Value = RandomGameSpec> {
    (prop::collection::vec(1usize..=3, 1..=3), 1usize..=2).prop_map(|(a, w)| RandomGameSpec::new(a, w))
}

fn grid_value() -> impl Strategy<Value = f64> {
    (0u32..1000).prop_map(|k| k as f64 / 1000.0)
}

/// The same game with agents listed in reverse order.
fn reversed(game: &Game) -> Game {
    let n = game.n();
    Game::from_fn(
        game.agents().iter().rev().cloned().collect(),
        game.disturbances().to_vec(),
        |a, w| {
            let original: Vec<usize> = a.iter().rev().copied().collect();
            let u = game.payoffs(game.profile_index(&original), w);
            (0..n).map(|i| u[n - 1 - i]).collect()
        },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exponent_sums_are_exact(a in grid_value(), b in grid_value(), c in grid_value()) {
        let (x, y, z) = (Exponent::from_f64(a), Exponent::from_f64(b), Exponent::from_f64(c));
        prop_assert_eq!((x + y) + z, x + (y + z));
        prop_assert_eq!(x + y, y + x);
        prop_assert_eq!(x + y - y, x);
        prop_assert_eq!(Exponent::complement_of(a) + x, Exponent::ONE);
        prop_assert_eq!(x < y, a < b);
        prop_assert!((x.to_f64() - a).abs() < 1e-15);
    }

    #[test]
    fn action_probabilities_sum_to_one(
        k in 1usize..=8,
        action in 0usize..8,
        content in any::<bool>(),
        eps in 1e-9f64..1.0,
        c in 1.0f64..12.0,
    ) {
        let mood = if content { Mood::Content } else { Mood::Discontent };
        let state = AgentState::new(action % k, 0.5, mood);
        let p = action_distribution(&state, k, eps, c);
        prop_assert_eq!(p.len(), k);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn interval_rule_keeps_state_iff_within_rho(
        baseline in 0.2f64..0.8,
        rho in 0.0f64..0.1,
        t in -2.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let u = (baseline + t * rho).clamp(0.0, 0.999);
        let state = AgentState::new(1, baseline, Mood::Content);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let next = update_agent_state(&state, 1, u, rho, 0.0, &mut rng);
        let inside = (u - baseline).abs() <= rho + 1e-12;
        prop_assert_eq!(next == state, inside);
        if !inside {
            prop_assert_eq!(next.mood, Mood::Discontent);
        }
    }

    #[test]
    fn discontent_agents_stay_discontent_without_noise(u in 0.0f64..0.999, a in 0usize..3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = AgentState::new(0, 0.3, Mood::Discontent);
        let next = update_agent_state(&state, a, u, 0.5, 0.0, &mut rng);
        prop_assert_eq!(next, AgentState::new(a, u, Mood::Discontent));
    }

    #[test]
    fn unanimous_moods_pass_the_broadcast(n in 1usize..6, content in any::<bool>(), eps in 1e-6f64..1.0, seed in any::<u64>()) {
        let mood = if content { Mood::Content } else { Mood::Discontent };
        let local = vec![mood; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(broadcast_moods(&local, eps, 0.5, &mut rng), local);
    }

    #[test]
    fn content_baselines_absorb_without_noise(spec in small_spec(), seed in any::<u64>(), w in 0usize..2) {
        let game = random_game(&spec, seed).unwrap();
        let w = w % game.disturbance_count();
        let profile: Vec<usize> = (0..game.n()).map(|i| (seed as usize >> i) % game.action_count(i)).collect();
        let p = game.profile_index(&profile);
        let state = SystemState(
            (0..game.n())
                .map(|i| AgentState::new(profile[i], game.utility(i, p, w), Mood::Content))
                .collect(),
        );
        let params = StepParams { eps: 0.0, c: game.n() as f64 + 1.0, rho: 1.0, beta: None };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let (next, _) = step(&state, &game, &params, &mut rng);
            prop_assert_eq!(&next, &state);
        }
    }

    #[test]
    fn histograms_account_for_every_iteration(spec in small_spec(), seed in any::<u64>(), iterations in 0u64..2000) {
        let game = random_game(&spec, seed).unwrap();
        let config = LearnerConfig {
            epsilon: EpsilonSchedule { initial: 0.2, decay: 0.999 },
            c: game.n() as f64 + 1.0,
            rho: RhoSetting::AUTO,
            beta: None,
            iterations,
            seed,
            keep_records: false,
        };
        let t = run(&game, &config).unwrap();
        prop_assert_eq!(t.histogram.iter().map(|r| r.count).sum::<u64>(), iterations);
        if iterations > 0 {
            prop_assert!((t.histogram.iter().map(|r| r.fraction).sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for row in &t.histogram {
            prop_assert_eq!(row.state.len(), game.n());
            prop_assert!(row.state.0.iter().all(|a| (0.0..1.0).contains(&a.utility)));
        }
        prop_assert!(t.histogram.windows(2).all(|w| w[0].count >= w[1].count));
    }

    #[test]
    fn rho_ignores_agent_order(spec in small_spec(), seed in any::<u64>()) {
        let game = random_game(&spec, seed).unwrap();
        prop_assert_eq!(game.rho(), reversed(&game).rho());
    }

    #[test]
    fn games_round_trip_through_json(spec in small_spec(), seed in any::<u64>()) {
        let game = random_game(&spec, seed).unwrap();
        prop_assert_eq!(Game::from_json(&game.to_json()).unwrap(), game);
    }

    #[test]
    fn metering_rates_stay_in_bounds(
        loc in any::<bool>(),
        rate in 0.0f64..3000.0,
        density in 0.0f64..120.0,
        occupancy in 0.0f64..1.0,
        down in prop::option::of(0.0f64..1.0),
    ) {
        let gains = MeteringGains::default();
        let action = if loc { MeterAction::Loc } else { MeterAction::Cor };
        let input = MeteringInputs {
            rate,
            local_density: density,
            critical_density: 29.0,
            occupancy,
            downstream_occupancy: down,
        };
        let r = metering_policy(action, input, &gains);
        prop_assert!(r >= gains.rate_min && r <= gains.rate_max);
    }

    #[test]
    fn ctm_step_keeps_densities_physical_and_conserves(
        densities in prop::collection::vec(0.0f64..360.0, 6),
        queues in prop::collection::vec(0.0f64..40.0, 2),
        mainline in 0.0f64..6000.0,
        ramps in prop::collection::vec(0.0f64..1500.0, 2),
        rates in prop::collection::vec(180.0f64..1800.0, 2),
    ) {
        let spec = SyntheticScenario::with_ramps(2).freeway();
        prop_assume!(spec.cells.len() == densities.len());
        let state = TrafficState {
            density: densities.iter().zip(&spec.cells).map(|(d, c)| d.min(c.jam_density)).collect(),
            queues,
            rates: rates.clone(),
            upstream_queue: 0.0,
        };
        let (next, flows) = ctm_step(&state, &spec, StepDemand { mainline, ramps: &ramps }, &rates);
        for (d, cell) in next.density.iter().zip(&spec.cells) {
            prop_assert!(*d >= -1e-9 && *d <= cell.jam_density + 1e-9);
        }
        prop_assert!(next.queues.iter().all(|&q| q >= -1e-9));
        prop_assert!(next.upstream_queue >= -1e-9);
        let entered = (mainline + ramps.iter().sum::<f64>()) * spec.dt;
        let before = state.vehicles(&spec);
        let after = next.vehicles(&spec) + flows.outflow() * spec.dt;
        prop_assert!((after - before - entered).abs() <= 1e-9 * (before + entered).max(1.0));
    }
}
