mod common;

use std::collections::{HashMap, VecDeque};

use nxplay::policy::{
    policy_gradient, reinforce_update, subgoal_cells, surrogate_objective, Baseline, GreedyPlan,
    LinearPolicy, PolicyParams, ReinforceConfig, Trajectory, NUM_ACTIONS,
};
use nxplay::{Action, GameState, Layout, Pos};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_policy(feature_len: usize, scale: f64, rng: &mut ChaCha8Rng) -> LinearPolicy {
    let w = (0..feature_len * NUM_ACTIONS)
        .map(|_| rng.gen_range(-scale..scale))
        .collect();
    LinearPolicy::from_weights(feature_len, w).unwrap()
}

fn random_batch(feature_len: usize, trajs: usize, rng: &mut ChaCha8Rng) -> Vec<Trajectory> {
    (0..trajs)
        .map(|_| {
            let mut t = Trajectory::new(feature_len);
            for _ in 0..rng.gen_range(1..8) {
                let obs: Vec<f64> = (0..feature_len).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let reward = if rng.gen_bool(0.3) { rng.gen_range(0.0..20.0) } else { 0.0 };
                t.push(&obs, Action::ALL[rng.gen_range(0..NUM_ACTIONS)], reward);
            }
            t
        })
        .collect()
}

proptest! {
    #[test]
    fn distributions_are_normalised(
        w in proptest::collection::vec(-1e3f64..1e3, 3 * NUM_ACTIONS),
        obs in proptest::collection::vec(-1e3f64..1e3, 3),
    ) {
        let p = LinearPolicy::from_weights(3, w).unwrap();
        let d = p.distribution(&obs).unwrap();
        prop_assert!(d.probs.iter().all(|q| q.is_finite() && *q >= 0.0));
        prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn update_ignores_batch_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = PolicyParams::Linear(random_policy(4, 0.5, &mut rng));
        let batch = random_batch(4, 4, &mut rng);
        let mut shuffled = batch.clone();
        shuffled.reverse();
        shuffled.swap(0, 2);
        let cfg = ReinforceConfig::default();
        let b = Baseline::at(rng.gen_range(0.0..5.0));
        let (PolicyParams::Linear(a), ba) = reinforce_update(&params, &batch, &cfg, b).unwrap() else { unreachable!() };
        let (PolicyParams::Linear(c), bc) = reinforce_update(&params, &shuffled, &cfg, b).unwrap() else { unreachable!() };
        for (x, y) in a.weights.iter().zip(&c.weights) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        prop_assert!((ba.value - bc.value).abs() <= 1e-12 * (1.0 + ba.value.abs()));
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let policy = random_policy(3, 1.0, &mut rng);
        let batch = random_batch(3, 3, &mut rng);
        let baseline = 2.5;
        let gamma = 0.9;
        let grad = policy_gradient(&policy, &batch, baseline, gamma).unwrap();
        let h = 1e-5;
        for i in 0..policy.weights.len() {
            let mut plus = policy.clone();
            plus.weights[i] += h;
            let mut minus = policy.clone();
            minus.weights[i] -= h;
            let fd = (surrogate_objective(&plus, &batch, baseline, gamma).unwrap()
                - surrogate_objective(&minus, &batch, baseline, gamma).unwrap())
                / (2.0 * h);
            let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-3);
            assert!(rel < 1e-5, "weight {i}: analytic {} vs numeric {fd}", grad[i]);
        }
    }
}

#[test]
fn bandit_learns_to_interact() {
    // One state, one feature; only Interact pays.
    let mut params = PolicyParams::Linear(LinearPolicy::zeros(1));
    let cfg = ReinforceConfig {
        lr: 0.1,
        ..ReinforceConfig::default()
    };
    let mut baseline = Baseline::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p_interact = |p: &PolicyParams| match p {
        PolicyParams::Linear(l) => l.distribution(&[1.0]).unwrap().probs[Action::Interact.index()],
        _ => unreachable!(),
    };
    let mut reached = None;
    for update in 1..=2000 {
        let PolicyParams::Linear(l) = &params else { unreachable!() };
        let a = l.distribution(&[1.0]).unwrap().sample(&mut rng);
        let mut t = Trajectory::new(1);
        t.push(&[1.0], a, if a == Action::Interact { 1.0 } else { 0.0 });
        (params, baseline) = reinforce_update(&params, &[t], &cfg, baseline).unwrap();
        if p_interact(&params) > 0.9 {
            reached = Some(update);
            break;
        }
    }
    assert!(reached.is_some(), "p(Interact) = {}", p_interact(&params));
}

fn oracle_bfs(layout: &Layout, from: &[Pos], walls: &[Pos]) -> HashMap<Pos, u32> {
    let mut dist = HashMap::new();
    let mut q = VecDeque::new();
    for &s in from {
        if !walls.contains(&s) && !dist.contains_key(&s) {
            dist.insert(s, 0);
            q.push_back(s);
        }
    }
    while let Some(p) = q.pop_front() {
        let d = dist[&p];
        for (dx, dy) in [(0i64, -1i64), (0, 1), (1, 0), (-1, 0)] {
            let n = Pos::new((p.x as i64 + dx) as usize, (p.y as i64 + dy) as usize);
            if layout.tile(n).is_floor() && !walls.contains(&n) && !dist.contains_key(&n) {
                dist.insert(n, d + 1);
                q.push_back(n);
            }
        }
    }
    dist
}

fn floor_around(layout: &Layout, t: Pos) -> Vec<Pos> {
    [(0i64, -1i64), (-1, 0), (1, 0), (0, 1)]
        .iter()
        .map(|(dx, dy)| Pos::new((t.x as i64 + dx) as usize, (t.y as i64 + dy) as usize))
        .filter(|&n| n.x < layout.width && n.y < layout.height && layout.tile(n).is_floor())
        .collect()
}

fn moved_to(p: Pos, a: Action) -> Option<Pos> {
    let (dx, dy) = match a {
        Action::North => (0, -1),
        Action::South => (0, 1),
        Action::East => (1, 0),
        Action::West => (-1, 0),
        _ => return None,
    };
    Some(Pos::new((p.x as i64 + dx) as usize, (p.y as i64 + dy) as usize))
}

fn greedy_states(seed: u64) -> impl Iterator<Item = (Layout, GameState, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..50).map(move |i| {
        let layout = common::random_layout(seed.wrapping_add(i), 4);
        let state = common::random_state(&layout, &mut rng);
        let seat = rng.gen_range(0..layout.num_agents);
        (layout, state, seat)
    })
}

#[test]
fn greedy_route_matches_bfs_oracle() {
    let mut moving = 0;
    for (layout, state, seat) in greedy_states(1234) {
        let me = state.agents[seat].pos;
        let others: Vec<Pos> = (0..state.agents.len())
            .filter(|&j| j != seat)
            .map(|j| state.agents[j].pos)
            .collect();
        let dist = oracle_bfs(&layout, &[me], &others);
        let best = subgoal_cells(&state, &layout, seat)
            .into_iter()
            .filter_map(|t| {
                floor_around(&layout, t)
                    .iter()
                    .filter_map(|a| dist.get(a))
                    .min()
                    .map(|&d| (d, t))
            })
            .min();
        let plan = GreedyPlan::shortest_route(&state, &layout, seat);
        let Some((d, target)) = best else {
            assert_eq!(plan, None);
            continue;
        };
        let plan = plan.expect("oracle found a route");
        assert_eq!(plan.target, Some(target));
        if d == 0 {
            assert!(matches!(
                plan.action,
                Action::North | Action::South | Action::East | Action::West | Action::Interact
            ));
            continue;
        }
        moving += 1;
        let to_goal = oracle_bfs(&layout, &floor_around(&layout, target), &others);
        let on_path = |a: Action| {
            moved_to(me, a).is_some_and(|n| layout.tile(n).is_floor() && to_goal.get(&n) == Some(&(d - 1)))
        };
        assert!(on_path(plan.action), "{:?} is off the shortest path", plan.action);
        let first = [Action::North, Action::West, Action::East, Action::South]
            .into_iter()
            .find(|&a| on_path(a));
        assert_eq!(Some(plan.action), first);
    }
    assert!(moving >= 10, "only {moving} states needed a move");
}

#[test]
fn greedy_never_walks_into_walls_when_a_path_exists() {
    for seed in 0..20 {
        for (layout, state, seat) in greedy_states(seed * 977) {
            let Some(route) = GreedyPlan::shortest_route(&state, &layout, seat) else {
                continue;
            };
            let me = state.agents[seat].pos;
            let heading_out = moved_to(me, route.action)
                .is_some_and(|n| layout.tile(n).is_floor());
            if !heading_out {
                continue;
            }
            let chosen = GreedyPlan::decide(&state, &layout, seat).action;
            if let Some(n) = moved_to(me, chosen) {
                assert!(layout.tile(n).is_floor(), "seat {seat} proposes {n}");
            }
        }
    }
}
