//! Shared generators for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nxplay::engine::{AgentState, GameState, HeldObject, Orientation, PotPhase, PotState};
use nxplay::{Layout, Pos};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STATION_GLYPHS: [char; 4] = ['P', 'O', 'D', 'S'];

/// Text of a random valid layout: 5..=9 wide, 4..=7 tall, 2..=`max_seats`
/// seats. Interior counters are dense enough that stations are sometimes
/// walled off.
pub fn random_layout_text(seed: u64, max_seats: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rng.gen_range(5..=9);
    let h = rng.gen_range(4..=7);
    let mut grid = vec![vec!['X'; w]; h];
    for (y, row) in grid.iter_mut().enumerate() {
        for (x, c) in row.iter_mut().enumerate() {
            let border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
            let roll: f64 = rng.gen();
            *c = if border {
                if roll < 0.2 {
                    *STATION_GLYPHS.choose(&mut rng).unwrap()
                } else {
                    'X'
                }
            } else if roll < 0.6 {
                ' '
            } else if roll < 0.85 {
                'X'
            } else {
                *STATION_GLYPHS.choose(&mut rng).unwrap()
            };
        }
    }
    let seats = rng.gen_range(2..=max_seats);
    let mut interior: Vec<(usize, usize)> = (1..h - 1)
        .flat_map(|y| (1..w - 1).map(move |x| (x, y)))
        .collect();
    let seats = seats.min(interior.len());
    interior.shuffle(&mut rng);
    // Prefer existing floor so the walls stay as generated. Stations lost
    // here are put back on the border below.
    interior.sort_by_key(|&(x, y)| match grid[y][x] {
        ' ' => 0,
        'X' => 1,
        _ => 2,
    });
    for (k, &(x, y)) in interior.iter().take(seats).enumerate() {
        grid[y][x] = char::from(b'1' + k as u8);
    }
    // Every station type somewhere on the border, on a plain counter so no
    // other station is lost.
    let mut border: Vec<(usize, usize)> = (1..w - 1)
        .flat_map(|x| [(x, 0), (x, h - 1)])
        .chain((1..h - 1).flat_map(|y| [(0, y), (w - 1, y)]))
        .collect();
    border.shuffle(&mut rng);
    for g in STATION_GLYPHS {
        if !grid.iter().flatten().any(|&c| c == g) {
            let &(x, y) = border
                .iter()
                .find(|&&(x, y)| grid[y][x] == 'X')
                .unwrap_or(&(0, 0));
            grid[y][x] = g;
        }
    }
    grid.into_iter()
        .map(|r| r.into_iter().collect::<String>() + "\n")
        .collect()
}

pub fn random_layout(seed: u64, max_seats: usize) -> Layout {
    Layout::parse(&random_layout_text(seed, max_seats)).expect("generator emits valid layouts")
}

pub fn floor_cells(layout: &Layout) -> Vec<Pos> {
    (0..layout.height)
        .flat_map(|y| (0..layout.width).map(move |x| Pos::new(x, y)))
        .filter(|&p| layout.tile(p).is_floor())
        .collect()
}

/// A random mid-game state: agents on distinct floor cells, random held
/// objects, pot contents and counter objects.
pub fn random_state(layout: &Layout, rng: &mut ChaCha8Rng) -> GameState {
    let mut cells = floor_cells(layout);
    cells.shuffle(rng);
    let held = [
        HeldObject::Nothing,
        HeldObject::Onion,
        HeldObject::Dish,
        HeldObject::Soup,
    ];
    let orient = [
        Orientation::North,
        Orientation::South,
        Orientation::East,
        Orientation::West,
    ];
    let agents = cells[..layout.num_agents]
        .iter()
        .map(|&pos| AgentState {
            pos,
            orientation: *orient.choose(rng).unwrap(),
            held: *held.choose(rng).unwrap(),
        })
        .collect();
    let pots: BTreeMap<Pos, PotState> = layout
        .grid
        .iter()
        .enumerate()
        .filter(|(_, t)| **t == nxplay::Tile::Pot)
        .map(|(i, _)| {
            let p = Pos::new(i % layout.width, i / layout.width);
            let pot = match rng.gen_range(0..3) {
                0 => PotState {
                    onions: rng.gen_range(0..3),
                    phase: PotPhase::Idle,
                    ticks_remaining: 0,
                },
                1 => PotState {
                    onions: 3,
                    phase: PotPhase::Cooking,
                    ticks_remaining: rng.gen_range(1..=20),
                },
                _ => PotState {
                    onions: 3,
                    phase: PotPhase::Ready,
                    ticks_remaining: 0,
                },
            };
            (p, pot)
        })
        .collect();
    GameState {
        tick: rng.gen_range(0..400),
        agents,
        pots,
        counters: BTreeMap::new(),
        deliveries: 0,
        score: 0.0,
    }
}
