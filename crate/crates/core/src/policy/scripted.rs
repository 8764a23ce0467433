//! The `GreedyCook` scripted collaborator.
//!
//! Stateless: the subgoal is read off the held object and the pots.
//!
//! - empty hand: dish dispenser while cooking or ready pots outnumber the
//!   dishes already carried, otherwise an onion dispenser if a pot has room;
//! - onion: an idle pot with room;
//! - dish: a ready pot, else a cooking one (and wait there);
//! - soup: a serving station.
//!
//! Navigation is breadth-first over floor cells, treating other agents as
//! walls. The chosen target is the one with the shortest path to one of its
//! floor neighbours, ties going to the smallest `(y, x)`. The first step is
//! the first neighbour in `(y, x)` order that lies on a shortest path. Next to
//! the target the agent turns to face it, then interacts.
//!
//! Several greedy agents in one kitchen need to break symmetry. A hash of
//! `(tick, seat)` stands in for a coin so the policy stays a deterministic
//! function of the state:
//!
//! - an agent whose next cell would also be entered by a lower seat's plan
//!   stays for a tick;
//! - with another agent within two cells, the agent skips about one move in
//!   four so neighbours do not fall into lockstep;
//! - when agents cut off every route, the coin picks between waiting, pushing
//!   along the route that ignores agents, and stepping aside.

use std::collections::VecDeque;

use crate::digest::Fnv1a;
use crate::engine::{Action, GameState, HeldObject, Orientation, PotPhase, RECIPE_ONIONS};
use crate::layout::{Layout, Pos, NEIGHBOURS};

const UNREACHED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreedyPlan {
    /// Station the agent is heading for, if any is reachable.
    pub target: Option<Pos>,
    pub action: Action,
}

const STAY: GreedyPlan = GreedyPlan {
    target: None,
    action: Action::Stay,
};

pub fn greedy_cook_action(state: &GameState, layout: &Layout, seat: usize) -> Action {
    GreedyPlan::decide(state, layout, seat).action
}

/// Station cells the agent at `seat` wants to reach next.
pub fn subgoal_cells(state: &GameState, layout: &Layout, seat: usize) -> Vec<Pos> {
    let pots_in = |phase: PotPhase| -> Vec<Pos> {
        state
            .pots
            .iter()
            .filter(|(_, p)| {
                p.phase == phase && (phase != PotPhase::Idle || p.onions < RECIPE_ONIONS)
            })
            .map(|(&pos, _)| pos)
            .collect()
    };
    let s = &layout.stations;
    match state.agents[seat].held {
        HeldObject::Nothing => {
            let busy = state
                .pots
                .values()
                .filter(|p| matches!(p.phase, PotPhase::Cooking | PotPhase::Ready))
                .count();
            let dishes = state
                .agents
                .iter()
                .filter(|a| a.held == HeldObject::Dish)
                .count();
            if busy > dishes {
                s.dish_dispensers.clone()
            } else if !pots_in(PotPhase::Idle).is_empty() {
                s.onion_dispensers.clone()
            } else {
                Vec::new()
            }
        }
        HeldObject::Onion => pots_in(PotPhase::Idle),
        HeldObject::Dish => {
            let ready = pots_in(PotPhase::Ready);
            if ready.is_empty() {
                pots_in(PotPhase::Cooking)
            } else {
                ready
            }
        }
        HeldObject::Soup => s.serving_stations.clone(),
    }
}

fn bfs(layout: &Layout, sources: &[Pos], blocked: &[Pos]) -> Vec<u32> {
    let mut dist = vec![UNREACHED; layout.grid.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        let i = layout.index(s);
        if dist[i] == UNREACHED && !blocked.contains(&s) {
            dist[i] = 0;
            queue.push_back(s);
        }
    }
    while let Some(p) = queue.pop_front() {
        let d = dist[layout.index(p)];
        for n in layout.neighbours(p) {
            let i = layout.index(n);
            if dist[i] == UNREACHED && layout.grid[i].is_floor() && !blocked.contains(&n) {
                dist[i] = d + 1;
                queue.push_back(n);
            }
        }
    }
    dist
}

fn face_toward(from: Pos, to: Pos) -> Orientation {
    match (to.x as i64 - from.x as i64, to.y as i64 - from.y as i64) {
        (0, -1) => Orientation::North,
        (0, 1) => Orientation::South,
        (1, 0) => Orientation::East,
        _ => Orientation::West,
    }
}

fn direction_action(o: Orientation) -> Action {
    match o {
        Orientation::North => Action::North,
        Orientation::South => Action::South,
        Orientation::East => Action::East,
        Orientation::West => Action::West,
    }
}

fn coin(state: &GameState, seat: usize) -> u64 {
    let mut h = Fnv1a::new();
    h.write_u64(state.tick as u64);
    h.write_u64(seat as u64);
    h.finish()
}

fn other_positions(state: &GameState, seat: usize) -> Vec<Pos> {
    state
        .agents
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != seat)
        .map(|(_, a)| a.pos)
        .collect()
}

impl GreedyPlan {
    pub fn decide(state: &GameState, layout: &Layout, seat: usize) -> GreedyPlan {
        let plan = Self::unyielding(state, layout, seat);
        let Some(dir) = plan.action.direction() else {
            return plan;
        };
        let me = state.agents[seat].pos;
        let (dx, dy) = dir.offset();
        let cell = me.offset(dx, dy);
        if !layout.tile(cell).is_floor() {
            return plan;
        }
        let contested = state.agents[..seat].iter().enumerate().any(|(j, a)| {
            a.pos.manhattan(cell) == 1
                && Self::unyielding(state, layout, j)
                    .action
                    .direction()
                    .is_some_and(|d| {
                        let (dx, dy) = d.offset();
                        a.pos.offset(dx, dy) == cell
                    })
        });
        if contested {
            GreedyPlan {
                target: plan.target,
                action: Action::Stay,
            }
        } else {
            plan
        }
    }

    /// The plan before yielding to lower seats.
    fn unyielding(state: &GameState, layout: &Layout, seat: usize) -> GreedyPlan {
        let targets = subgoal_cells(state, layout, seat);
        if targets.is_empty() {
            return STAY;
        }
        let me = state.agents[seat];
        let others = other_positions(state, seat);
        let roll = coin(state, seat);

        if let Some(plan) = Self::route(layout, me.pos, me.orientation, &targets, &others) {
            let crowded = others.iter().any(|o| o.manhattan(me.pos) <= 2);
            if crowded && plan.action.direction().is_some() && (roll >> 32) % 4 == 0 {
                return GreedyPlan {
                    target: plan.target,
                    action: Action::Stay,
                };
            }
            return plan;
        }

        match roll % 3 {
            0 => STAY,
            1 => Self::route(layout, me.pos, me.orientation, &targets, &[]).unwrap_or(STAY),
            _ => {
                let free: Vec<Pos> = layout
                    .neighbours(me.pos)
                    .filter(|&n| layout.tile(n).is_floor() && !others.contains(&n))
                    .collect();
                if free.is_empty() {
                    STAY
                } else {
                    let cell = free[(roll / 3 % free.len() as u64) as usize];
                    GreedyPlan {
                        target: None,
                        action: direction_action(face_toward(me.pos, cell)),
                    }
                }
            }
        }
    }

    /// Shortest-path plan toward the subgoal with other agents as walls.
    /// `None` when there is no subgoal or every route is cut off.
    pub fn shortest_route(state: &GameState, layout: &Layout, seat: usize) -> Option<GreedyPlan> {
        let targets = subgoal_cells(state, layout, seat);
        let me = state.agents[seat];
        Self::route(
            layout,
            me.pos,
            me.orientation,
            &targets,
            &other_positions(state, seat),
        )
    }

    fn route(
        layout: &Layout,
        from: Pos,
        facing: Orientation,
        targets: &[Pos],
        blocked: &[Pos],
    ) -> Option<GreedyPlan> {
        let dist = bfs(layout, &[from], blocked);
        let access = |t: Pos| -> Vec<Pos> {
            layout
                .neighbours(t)
                .filter(|&n| layout.tile(n).is_floor() && dist[layout.index(n)] != UNREACHED)
                .collect()
        };
        let (d, target) = targets
            .iter()
            .filter_map(|&t| {
                access(t)
                    .iter()
                    .map(|&a| dist[layout.index(a)])
                    .min()
                    .map(|d| (d, t))
            })
            .min()?;

        if d == 0 {
            let want = face_toward(from, target);
            let action = if facing == want {
                Action::Interact
            } else {
                direction_action(want)
            };
            return Some(GreedyPlan {
                target: Some(target),
                action,
            });
        }

        let to_goal = bfs(layout, &access(target), blocked);
        let step = NEIGHBOURS.iter().find_map(|&(dx, dy)| {
            let n = from.offset(dx, dy);
            (layout.tile(n).is_floor() && to_goal[layout.index(n)] == d - 1).then_some(n)
        })?;
        Some(GreedyPlan {
            target: Some(target),
            action: direction_action(face_toward(from, step)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{reset, step, EngineConfig};
    use crate::layouts;

    #[test]
    fn interacts_when_facing_onion_dispenser() {
        let l = Layout::parse("XXPXX\nO1 2X\nXDSXX\n").unwrap();
        let mut s = reset(&l);
        s.agents[0].orientation = Orientation::West;
        assert_eq!(greedy_cook_action(&s, &l, 0), Action::Interact);
        s.agents[0].orientation = Orientation::North;
        assert_eq!(greedy_cook_action(&s, &l, 0), Action::West);
    }

    #[test]
    fn stays_without_subgoal() {
        let l = Layout::parse("XXPXX\nO1 2X\nXDSXX\n").unwrap();
        let mut s = reset(&l);
        s.agents[0].held = HeldObject::Onion;
        let pot = s.pots.values_mut().next().unwrap();
        pot.onions = 3;
        pot.phase = PotPhase::Cooking;
        pot.ticks_remaining = 5;
        assert_eq!(greedy_cook_action(&s, &l, 0), Action::Stay);
    }

    fn team_deliveries(name: &str) -> u32 {
        let l = layouts::builtin(name).unwrap();
        let cfg = EngineConfig::default();
        let mut s = reset(&l);
        for _ in 0..cfg.horizon {
            let actions: Vec<Action> = (0..l.num_agents)
                .map(|i| greedy_cook_action(&s, &l, i))
                .collect();
            s = step(&s, &actions, &l, &cfg).unwrap().next;
        }
        s.deliveries
    }

    #[test]
    fn teams_deliver_in_open_kitchens() {
        for name in ["open_room", "three_room", "wide_open5"] {
            assert!(team_deliveries(name) >= 1, "{name}");
        }
    }
}
