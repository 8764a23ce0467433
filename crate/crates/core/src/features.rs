//! Egocentric observation vectors for the linear learner.
//!
//! Layout of the vector for seat `s` in an `n`-agent game:
//!
//! | range              | content                                                  |
//! |--------------------|----------------------------------------------------------|
//! | `0..4`             | held object one-hot (nothing, onion, dish, soup)         |
//! | `4..8`             | orientation one-hot (N, S, E, W)                         |
//! | `8..18`            | `(dx, dy)` to nearest onion, dish, serving, idle pot, ready pot |
//! | `18..23`           | presence bits for the five targets above                 |
//! | `23..23+6(n-1)`    | per other seat: `(dx, dy)` then held one-hot             |
//! | last two           | nearest pot: onions / 3, ticks remaining / cook time     |
//!
//! Offsets are divided by `width - 1` (resp. `height - 1`) so they lie in
//! `[-1, 1]`. Absent targets read as zero offsets with a zero presence bit.
//! "Nearest" is Manhattan distance with ties going to the smallest `(y, x)`.

use crate::engine::{EngineConfig, EngineError, GameState, PotPhase, RECIPE_ONIONS};
use crate::layout::{Layout, Pos};

pub const HELD: usize = 0;
pub const ORIENTATION: usize = 4;
pub const OFFSETS: usize = 8;
pub const PRESENCE: usize = 18;
pub const OTHERS: usize = 23;
pub const TARGETS: usize = 5;

/// Observation length for an `n`-agent game.
pub const fn feature_len(num_agents: usize) -> usize {
    25 + 6 * (num_agents - 1)
}

fn nearest(from: Pos, cells: impl Iterator<Item = Pos>) -> Option<Pos> {
    cells.min_by_key(|&p| (from.manhattan(p), p))
}

pub fn featurize(
    state: &GameState,
    seat: usize,
    layout: &Layout,
    config: &EngineConfig,
) -> Result<Vec<f64>, EngineError> {
    let mut out = vec![0.0; feature_len(state.agents.len())];
    featurize_into(state, seat, layout, config, &mut out)?;
    Ok(out)
}

/// Writes the observation into `out`, which must have [`feature_len`] entries.
pub fn featurize_into(
    state: &GameState,
    seat: usize,
    layout: &Layout,
    config: &EngineConfig,
    out: &mut [f64],
) -> Result<(), EngineError> {
    let n = state.agents.len();
    if seat >= n {
        return Err(EngineError::SeatOutOfRange {
            seat,
            num_agents: n,
        });
    }
    debug_assert_eq!(out.len(), feature_len(n));
    out.fill(0.0);

    let me = state.agents[seat];
    let sx = (layout.width.saturating_sub(1)).max(1) as f64;
    let sy = (layout.height.saturating_sub(1)).max(1) as f64;
    let rel = |p: Pos| -> (f64, f64) {
        let dx = (p.x as f64 - me.pos.x as f64) / sx;
        let dy = (p.y as f64 - me.pos.y as f64) / sy;
        (dx.clamp(-1.0, 1.0), dy.clamp(-1.0, 1.0))
    };

    out[HELD + me.held.index()] = 1.0;
    out[ORIENTATION + me.orientation.index()] = 1.0;

    let s = &layout.stations;
    let targets = [
        nearest(me.pos, s.onion_dispensers.iter().copied()),
        nearest(me.pos, s.dish_dispensers.iter().copied()),
        nearest(me.pos, s.serving_stations.iter().copied()),
        nearest(
            me.pos,
            state
                .pots
                .iter()
                .filter(|(_, pot)| pot.phase == PotPhase::Idle)
                .map(|(&p, _)| p),
        ),
        nearest(
            me.pos,
            state
                .pots
                .iter()
                .filter(|(_, pot)| pot.phase == PotPhase::Ready)
                .map(|(&p, _)| p),
        ),
    ];
    for (k, target) in targets.into_iter().enumerate() {
        if let Some(p) = target {
            let (dx, dy) = rel(p);
            out[OFFSETS + 2 * k] = dx;
            out[OFFSETS + 2 * k + 1] = dy;
            out[PRESENCE + k] = 1.0;
        }
    }

    let mut base = OTHERS;
    for (other, agent) in state.agents.iter().enumerate() {
        if other == seat {
            continue;
        }
        let (dx, dy) = rel(agent.pos);
        out[base] = dx;
        out[base + 1] = dy;
        out[base + 2 + agent.held.index()] = 1.0;
        base += 6;
    }

    if let Some(p) = nearest(me.pos, state.pots.keys().copied()) {
        let pot = state.pots[&p];
        out[base] = pot.onions as f64 / RECIPE_ONIONS as f64;
        out[base + 1] = if config.cook_time == 0 {
            0.0
        } else {
            pot.ticks_remaining as f64 / config.cook_time as f64
        };
    }
    Ok(())
}
