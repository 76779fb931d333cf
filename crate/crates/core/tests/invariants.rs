use proptest::prelude::*;

use hecogrid::grid::{self, build_transition_table, resolve_action, Action, Cell, Pos};
use hecogrid::tasks::{check_collection, compute_rewards};
use hecogrid::{seed, verify, Batch, Env, EnvConfig, Task};

fn arb_task() -> impl Strategy<Value = Task> {
    prop::sample::select(Task::ALL.to_vec())
}

fn arb_config() -> impl Strategy<Value = EnvConfig> {
    (arb_task(), 1usize..=4, 1usize..=6, 6usize..=12, 6usize..=12, 1usize..=5, any::<u64>()).prop_flat_map(
        |(task, n, h, w, ht, m, seed)| {
            (1..=n).prop_map(move |c| EnvConfig {
                width: w,
                height: ht,
                n_treasures: m,
                n_keys: n,
                episode_length: 40,
                seed,
                ..EnvConfig::new(task, n, c, h)
            })
        },
    )
}

fn codes(len: usize) -> impl Strategy<Value = Vec<Vec<u8>>> {
    prop::collection::vec(prop::collection::vec(0u8..4, len), 1..60)
}

fn to_actions(codes: &[u8]) -> Vec<Action> {
    codes.iter().map(|&c| Action::from_code(c).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_world_is_a_pure_function(cfg in arb_config(), episode in any::<u64>(), plan in codes(4)) {
        let table = build_transition_table(&cfg, cfg.seed).unwrap();
        let start = grid::generate_world(&cfg, episode).unwrap();
        let run = || {
            let mut w = start.clone();
            let mut trace = Vec::new();
            for a in &plan {
                grid::step_world(&mut w, &to_actions(&a[..cfg.n_agents]), &table);
                check_collection(&mut w, &cfg);
                trace.push(w.clone());
            }
            trace
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn resolved_action_depends_only_on_own_cell(
        cfg in arb_config(),
        episode in any::<u64>(),
        raw in 0u8..4,
        walls in prop::collection::vec((0usize..12, 0usize..12), 1..20),
    ) {
        let table = build_transition_table(&cfg, cfg.seed).unwrap();
        let base = grid::generate_world(&cfg, episode).unwrap();
        let me = base.agents[0];
        let (dx, dy) = me.dir.delta();
        let ahead = me.pos.offset(dx, dy);
        let mut other = base.clone();
        for (x, y) in walls {
            let p = Pos::new(x as i32, y as i32);
            if other.in_bounds(p) && p != me.pos && p != ahead {
                other.set_cell(p, Cell::Wall);
            }
        }
        // Everyone else turns; agent 0 does `raw`.
        let mut joint = vec![Action::TurnLeft; cfg.n_agents];
        joint[0] = Action::from_code(raw).unwrap();
        let (mut a, mut b) = (base.clone(), other);
        grid::step_world(&mut a, &joint, &table);
        grid::step_world(&mut b, &joint, &table);
        prop_assert_eq!(a.agents[0], b.agents[0]);
    }

    #[test]
    fn single_zone_is_homogeneous(seed in any::<u64>(), task in arb_task()) {
        let cfg = EnvConfig { seed, ..EnvConfig::new(task, 2, 1, 1) };
        let table = build_transition_table(&cfg, seed).unwrap();
        for a in Action::ALL {
            prop_assert_eq!(resolve_action(a, 0, &table), a);
        }
    }

    #[test]
    fn distinct_zones_differ_somewhere(seed in any::<u64>(), h in 2usize..=6) {
        let cfg = EnvConfig { seed, ..EnvConfig::new(Task::TeamTogether, 2, 1, h) };
        let table = build_transition_table(&cfg, seed).unwrap();
        for z1 in 0..h {
            for z2 in z1 + 1..h {
                let differs = Action::MOVEMENT
                    .iter()
                    .any(|&a| resolve_action(a, z1, &table) != resolve_action(a, z2, &table));
                prop_assert!(differs, "zones {} and {} coincide", z1, z2);
            }
        }
    }

    #[test]
    fn layout_is_constant_within_an_episode(cfg in arb_config(), env_seed in any::<u64>(), plan in codes(4)) {
        let mut env = Env::new(&cfg, env_seed).unwrap();
        let (cells, treasures, n) =
            (env.world().cells.clone(), env.world().treasure_pos.clone(), env.world().n_agents());
        let mut rewards = vec![0f32; cfg.n_agents];
        for a in &plan {
            if env.is_done() {
                break;
            }
            env.step(&to_actions(&a[..cfg.n_agents]), &mut [], &mut rewards);
            let w = env.world();
            prop_assert_eq!(&w.cells, &cells);
            prop_assert_eq!(&w.treasure_pos, &treasures);
            prop_assert_eq!(w.n_agents(), n);
            prop_assert!(w.check_invariants().is_ok());
        }
    }

    #[test]
    fn adding_an_agent_never_destroys_a_collection(
        cfg in arb_config(),
        probe in any::<u64>(),
        extra in (1usize..11, 1usize..11),
    ) {
        let base = verify::random_probe_state(&cfg, probe).unwrap();
        let mut before = base.clone();
        let collected: Vec<usize> = check_collection(&mut before, &cfg).iter().map(|e| e.treasure).collect();

        let mut bigger = base.clone();
        let p = Pos::new(extra.0 as i32, extra.1 as i32);
        if bigger.in_bounds(p) && !bigger.is_wall(p) {
            bigger.add_agent(p, grid::Orientation::North);
        }
        let after: Vec<usize> = check_collection(&mut bigger, &cfg).iter().map(|e| e.treasure).collect();
        for t in collected {
            prop_assert!(after.contains(&t), "treasure {} lost", t);
        }
    }

    #[test]
    fn collected_treasures_never_fire_again(cfg in arb_config(), probe in any::<u64>()) {
        let mut state = verify::random_probe_state(&cfg, probe).unwrap();
        let first: Vec<usize> = check_collection(&mut state, &cfg).iter().map(|e| e.treasure).collect();
        for t in &first {
            prop_assert!(!state.treasure_active[*t]);
        }
        let second = check_collection(&mut state, &cfg);
        for e in second {
            prop_assert!(!first.contains(&e.treasure));
        }
    }

    #[test]
    fn episode_reward_equals_treasures_collected(
        cfg in arb_config(),
        env_seed in any::<u64>(),
        plan in codes(4),
        r_unit in prop::sample::select(vec![0.5f64, 1.0, 3.0]),
    ) {
        let cfg = EnvConfig { reward_per_treasure: r_unit, ..cfg };
        let mut env = Env::new(&cfg, env_seed).unwrap();
        let mut rewards = vec![0f32; cfg.n_agents];
        let mut paid = 0f64;
        for a in plan.iter().cycle().take(200) {
            if env.is_done() {
                break;
            }
            env.step(&to_actions(&a[..cfg.n_agents]), &mut [], &mut rewards);
            let w = env.world();
            let deactivated = w.treasure_active.iter().filter(|a| !**a).count();
            prop_assert_eq!(env.episode_treasures() as usize, deactivated);
            paid = env.episode_return();
            let expected = r_unit * deactivated as f64;
            prop_assert!((paid - expected).abs() <= 1e-9 * expected.max(1.0));
        }
        prop_assert!(paid <= r_unit * cfg.n_treasures as f64 + 1e-9);
    }

    #[test]
    fn reward_split_is_equal(events in 0usize..6, n in 1usize..8, r_unit in 0.1f64..5.0) {
        let evs: Vec<_> = (0..events)
            .map(|t| hecogrid::tasks::CollectionEvent { treasure: t, agents: vec![0], t: 0 })
            .collect();
        let r = compute_rewards(&evs, n, r_unit);
        prop_assert_eq!(r.0.len(), n);
        for v in &r.0 {
            prop_assert!((v - events as f64 * r_unit / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn auto_reset_depends_only_on_config_and_seed(cfg in arb_config(), env_seed in any::<u64>(), plan in codes(4)) {
        let cfg = EnvConfig { episode_length: 5, ..cfg };
        let mut env = Env::new(&cfg, env_seed).unwrap();
        let mut rewards = vec![0f32; cfg.n_agents];
        for a in plan.iter().cycle().take(23) {
            let was_done = env.is_done();
            let (done, treasures) = env.step(&to_actions(&a[..cfg.n_agents]), &mut [], &mut rewards);
            if was_done {
                let fresh = grid::generate_world(&cfg, seed::split(env_seed, env.episode())).unwrap();
                prop_assert_eq!(env.world(), &fresh);
                prop_assert!(!done);
                prop_assert_eq!(treasures, 0);
                prop_assert!(rewards.iter().all(|r| *r == 0.0));
            }
        }
    }

    #[test]
    fn batched_equals_sequential(cfg in arb_config(), master in any::<u64>(), b in 1usize..6, plan in codes(24)) {
        let (mut batch, first) = Batch::reset(&cfg, b, master).unwrap();
        let mut envs: Vec<Env> = (0..b).map(|i| Env::new(&cfg, seed::split(master, i as u64)).unwrap()).collect();
        let n = cfg.n_agents;
        let obs = cfg.obs_len() * n;
        for (i, env) in envs.iter().enumerate() {
            let mut o = vec![0f32; obs];
            env.render_into(&mut o);
            prop_assert_eq!(&first.observations[i * obs..(i + 1) * obs], &o[..]);
        }
        for step in &plan {
            let codes: Vec<u8> = (0..b * n).map(|k| step[k % step.len()]).collect();
            let r = batch.step(&codes).unwrap();
            for (i, env) in envs.iter_mut().enumerate() {
                let mut o = vec![0f32; obs];
                let mut rw = vec![0f32; n];
                let (done, t) = env.step(&to_actions(&codes[i * n..(i + 1) * n]), &mut o, &mut rw);
                prop_assert_eq!(&r.observations[i * obs..(i + 1) * obs], &o[..]);
                prop_assert_eq!(&r.rewards[i * n..(i + 1) * n], &rw[..]);
                prop_assert_eq!(r.dones[i], done);
                prop_assert_eq!(r.treasures[i], t);
            }
        }
    }
}
