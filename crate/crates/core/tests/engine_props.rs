mod common;

use std::collections::HashSet;

use nxplay::engine::{EventKind, HeldObject, Object, Orientation, PotPhase};
use nxplay::features::{featurize, OFFSETS, ORIENTATION, OTHERS, TARGETS};
use nxplay::{reset, step, Action, EngineConfig, GameState, Layout};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random actions with Interact over-weighted so objects move around.
fn random_actions(n: usize, rng: &mut ChaCha8Rng) -> Vec<Action> {
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.3) {
                Action::Interact
            } else {
                Action::ALL[rng.gen_range(0..6)]
            }
        })
        .collect()
}

fn onions_in_play(s: &GameState) -> u32 {
    let weight = |o: Object| match o {
        Object::Onion => 1,
        Object::Dish => 0,
        Object::Soup => 3,
    };
    let held: u32 = s.agents.iter().filter_map(|a| a.held.object()).map(weight).sum();
    let pots: u32 = s.pots.values().map(|p| p.onions as u32).sum();
    let counters: u32 = s.counters.values().map(|&o| weight(o)).sum();
    held + pots + counters + 3 * s.deliveries
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn rollouts_keep_invariants(seed in any::<u64>()) {
        let layout = common::random_layout(seed, 4);
        let cfg = EngineConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut s = reset(&layout);
        let mut picked = 0u32;
        for _ in 0..1000 {
            let actions = random_actions(layout.num_agents, &mut rng);
            let out = step(&s, &actions, &layout, &cfg).unwrap();
            prop_assert_eq!(&out, &step(&s, &actions, &layout, &cfg).unwrap());
            picked += out
                .events
                .iter()
                .filter(|e| e.kind == EventKind::PickedUp(Object::Onion))
                .count() as u32;
            s = out.next;
            let cells: HashSet<_> = s.agents.iter().map(|a| a.pos).collect();
            prop_assert_eq!(cells.len(), layout.num_agents);
            prop_assert!(s.agents.iter().all(|a| layout.tile(a.pos).is_floor()));
            prop_assert_eq!(picked, onions_in_play(&s));
            prop_assert_eq!(s.score, cfg.delivery_reward * s.deliveries as f64);
        }
    }
}

/// Minimal re-statement of the rules for traces where moves never collide.
struct Interp {
    grid: Vec<Vec<char>>,
    pos: Vec<(i32, i32)>,
    face: Vec<(i32, i32)>,
    held: Vec<char>,
    pot_onions: u8,
    pot_timer: Option<u32>,
    pot_ready: bool,
    deliveries: u32,
}

impl Interp {
    fn tick(&mut self, codes: &str) -> f64 {
        let mut reward = 0.0;
        for (i, c) in codes.chars().enumerate() {
            let d = match c {
                'N' => (0, -1),
                'S' => (0, 1),
                'E' => (1, 0),
                'W' => (-1, 0),
                _ => continue,
            };
            self.face[i] = d;
            let t = (self.pos[i].0 + d.0, self.pos[i].1 + d.1);
            if self.grid[t.1 as usize][t.0 as usize] == ' ' {
                self.pos[i] = t;
            }
        }
        for (i, c) in codes.chars().enumerate() {
            if c != 'I' {
                continue;
            }
            let (x, y) = (self.pos[i].0 + self.face[i].0, self.pos[i].1 + self.face[i].1);
            match (self.grid[y as usize][x as usize], self.held[i]) {
                ('O', '-') => self.held[i] = 'o',
                ('D', '-') => self.held[i] = 'd',
                ('P', 'o') if self.pot_timer.is_none() && !self.pot_ready => {
                    self.pot_onions += 1;
                    self.held[i] = '-';
                    if self.pot_onions == 3 {
                        self.pot_timer = Some(20);
                    }
                }
                ('P', 'd') if self.pot_ready => {
                    self.pot_ready = false;
                    self.pot_onions = 0;
                    self.held[i] = 's';
                }
                ('S', 's') => {
                    self.held[i] = '-';
                    self.deliveries += 1;
                    reward += 20.0;
                }
                _ => {}
            }
        }
        if let Some(t) = self.pot_timer {
            if t == 1 {
                self.pot_timer = None;
                self.pot_ready = true;
            } else {
                self.pot_timer = Some(t - 1);
            }
        }
        reward
    }
}

#[test]
fn scripted_delivery_trace() {
    let text = "XXPXX\nO1 2X\nX   S\nX   X\nXXDXX\n";
    let layout = Layout::parse(text).unwrap();
    // Seat 1 fetches three onions; seat 2 fetches a dish, waits below the
    // pot, collects the soup and serves it.
    let mut script: Vec<&str> = vec![
        "W.", "I.", "E.", "N.", "I.", "W.", "W.", "I.", "E.", "N.", "I.", "WS", "WS", "IW", "ES",
        "NI", "IN", "W.",
    ];
    // Seat 2 now stands at (2,2); step up into (2,1) and face the pot.
    script.extend(["..", ".N", ".N"]);
    // The pot started on the 17th tick and is ready 20 ticks later.
    script.extend(std::iter::repeat("..").take(15));
    script.extend([".I", ".E", ".S", ".E", ".I"]);

    let mut interp = Interp {
        grid: text.lines().map(|l| l.replace(['1', '2'], " ").chars().collect()).collect(),
        pos: vec![(1, 1), (3, 1)],
        face: vec![(0, -1), (0, -1)],
        held: vec!['-', '-'],
        pot_onions: 0,
        pot_timer: None,
        pot_ready: false,
        deliveries: 0,
    };
    let cfg = EngineConfig::default();
    let mut s = reset(&layout);
    let mut rewards = Vec::new();
    for codes in &script {
        let actions: Vec<Action> = codes.chars().map(|c| Action::from_code(c).unwrap()).collect();
        let out = step(&s, &actions, &layout, &cfg).unwrap();
        let expect = interp.tick(codes);
        assert_eq!(out.shared_reward, expect, "tick {}", s.tick);
        rewards.push(out.shared_reward);
        s = out.next;
        for (i, a) in s.agents.iter().enumerate() {
            assert_eq!((a.pos.x as i32, a.pos.y as i32), interp.pos[i], "tick {}", s.tick);
            let (dx, dy) = a.orientation.offset();
            assert_eq!((dx, dy), interp.face[i]);
            let h = match a.held {
                HeldObject::Nothing => '-',
                HeldObject::Onion => 'o',
                HeldObject::Dish => 'd',
                HeldObject::Soup => 's',
            };
            assert_eq!(h, interp.held[i], "seat {i} tick {}", s.tick);
        }
        let pot = s.pots.values().next().unwrap();
        assert_eq!(pot.onions, interp.pot_onions);
        assert_eq!(pot.phase == PotPhase::Ready, interp.pot_ready);
        assert_eq!(
            (pot.phase == PotPhase::Cooking).then_some(pot.ticks_remaining),
            interp.pot_timer
        );
    }
    assert_eq!(s.deliveries, 1);
    assert_eq!(interp.deliveries, 1);
    assert_eq!(rewards.last(), Some(&20.0));
    assert_eq!(rewards.iter().filter(|&&r| r != 0.0).count(), 1);
}

fn mirror_action(a: Action) -> Action {
    match a {
        Action::East => Action::West,
        Action::West => Action::East,
        a => a,
    }
}

#[test]
fn mirrored_kitchen_negates_dx() {
    let text = "XXXPXXXX\nO 1    X\nX    2 S\nX      X\nXXXXXDXX\n";
    let mirrored: String = text
        .lines()
        .map(|l| l.chars().rev().collect::<String>() + "\n")
        .collect();
    let a = Layout::parse(text).unwrap();
    let b = Layout::parse(&mirrored).unwrap();
    let cfg = EngineConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut sa, mut sb) = (reset(&a), reset(&b));
    let flip = |o: Orientation| match o {
        Orientation::East => Orientation::West,
        Orientation::West => Orientation::East,
        o => o,
    };
    for t in 0..300 {
        let acts = random_actions(2, &mut rng);
        let macts: Vec<Action> = acts.iter().map(|&x| mirror_action(x)).collect();
        sa = step(&sa, &acts, &a, &cfg).unwrap().next;
        sb = step(&sb, &macts, &b, &cfg).unwrap().next;
        for seat in 0..2 {
            assert_eq!(flip(sa.agents[seat].orientation), sb.agents[seat].orientation);
            let fa = featurize(&sa, seat, &a, &cfg).unwrap();
            let fb = featurize(&sb, seat, &b, &cfg).unwrap();
            let mut dx_slots: Vec<usize> = (0..TARGETS).map(|k| OFFSETS + 2 * k).collect();
            dx_slots.push(OTHERS);
            for (i, (&va, &vb)) in fa.iter().zip(&fb).enumerate() {
                if dx_slots.contains(&i) {
                    assert_eq!(va, -vb, "t {t} seat {seat} slot {i}");
                } else if (ORIENTATION..ORIENTATION + 4).contains(&i) {
                    continue;
                } else {
                    assert_eq!(va, vb, "t {t} seat {seat} slot {i}");
                }
            }
        }
    }
}
