//! ASCII frames. Every cell is [`CELL_WIDTH`] characters wide:
//!
//! - tiles use their layout glyph;
//! - an agent is its seat digit, a facing arrow (`^ v > <`) and a held glyph
//!   (`o` onion, `d` dish, `s` soup), e.g. `1>o`;
//! - a pot reads `P{onions}/{ticks_remaining}`;
//! - a counter holding an object reads `X:o` and so on.

use crate::engine::{GameState, Object, Orientation, PotState};
use crate::layout::{Layout, Pos, Tile};

pub const CELL_WIDTH: usize = 5;

fn object_glyph(o: Object) -> char {
    match o {
        Object::Onion => 'o',
        Object::Dish => 'd',
        Object::Soup => 's',
    }
}

fn arrow(o: Orientation) -> char {
    match o {
        Orientation::North => '^',
        Orientation::South => 'v',
        Orientation::East => '>',
        Orientation::West => '<',
    }
}

pub fn render_frame(state: &GameState, layout: &Layout) -> String {
    let mut out = String::with_capacity((layout.width * CELL_WIDTH + 1) * layout.height);
    for y in 0..layout.height {
        for x in 0..layout.width {
            let p = Pos::new(x, y);
            let mut cell = String::with_capacity(CELL_WIDTH);
            if let Some(seat) = state.agent_at(p) {
                let a = state.agents[seat];
                // Seats past 9 cannot be parsed, but render them anyway.
                cell.push_str(&(seat + 1).to_string());
                cell.push(arrow(a.orientation));
                if let Some(o) = a.held.object() {
                    cell.push(object_glyph(o));
                }
            } else {
                match layout.tile(p) {
                    Tile::Pot => {
                        let pot = state.pots.get(&p).copied().unwrap_or(PotState::EMPTY);
                        cell.push_str(&format!("P{}/{}", pot.onions, pot.ticks_remaining));
                    }
                    Tile::Counter => {
                        cell.push('X');
                        if let Some(&o) = state.counters.get(&p) {
                            cell.push(':');
                            cell.push(object_glyph(o));
                        }
                    }
                    t => cell.push(t.glyph()),
                }
            }
            let pad = CELL_WIDTH.saturating_sub(cell.chars().count()).max(1);
            cell.extend(std::iter::repeat(' ').take(pad));
            // Keep the grid aligned even if a pot timer runs long.
            out.extend(cell.chars().take(CELL_WIDTH));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{reset, HeldObject, PotPhase};

    #[test]
    fn reset_frame() {
        let l = Layout::parse("XXPXX\nO1 2X\nXDSXX\n").unwrap();
        let mut s = reset(&l);
        let f = render_frame(&s, &l);
        let rows: Vec<&str> = f.lines().collect();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.chars().count() == 5 * CELL_WIDTH));
        assert_eq!(&rows[1][CELL_WIDTH..CELL_WIDTH + 2], "1^");
        assert_eq!(&rows[1][3 * CELL_WIDTH..3 * CELL_WIDTH + 2], "2^");
        assert_eq!(&rows[0][2 * CELL_WIDTH..3 * CELL_WIDTH], "P0/0 ");

        let pot_at = *s.pots.keys().next().unwrap();
        s.pots.get_mut(&pot_at).unwrap().onions = 2;
        assert!(render_frame(&s, &l).contains("P2/0"));
        let pot = s.pots.get_mut(&pot_at).unwrap();
        pot.onions = 3;
        pot.phase = PotPhase::Cooking;
        pot.ticks_remaining = 20;
        s.agents[0].held = HeldObject::Soup;
        s.agents[0].orientation = Orientation::East;
        s.counters.insert(Pos::new(4, 1), Object::Dish);
        let f = render_frame(&s, &l);
        assert!(f.contains("P3/20"));
        assert!(f.contains("1>s"));
        assert!(f.contains("X:d"));
        assert!(f.ends_with('\n'));
    }
}
