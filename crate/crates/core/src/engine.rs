//! Deterministic N-agent kitchen dynamics.
//!
//! One [`step`] runs three phases:
//!
//! 1. movement: direction actions turn the agent and propose the neighbouring
//!    cell if it is floor. A cell proposed by two or more agents blocks all of
//!    them, two agents swapping cells block each other, and a move into an
//!    occupied cell only succeeds if the occupant itself moves away. Rotation
//!    cycles have no agent that can move first and stay in place.
//! 2. interaction: `Interact` agents act on the tile they face, in ascending
//!    seat order.
//! 3. cooking: cooking pots count down and become ready at zero.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::Fnv1a;
use crate::layout::{Layout, Pos, Tile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    North,
    South,
    East,
    West,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::North,
        Orientation::South,
        Orientation::East,
        Orientation::West,
    ];

    pub fn offset(self) -> (i32, i32) {
        match self {
            Orientation::North => (0, -1),
            Orientation::South => (0, 1),
            Orientation::East => (1, 0),
            Orientation::West => (-1, 0),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// What an agent carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeldObject {
    Nothing,
    Onion,
    Dish,
    Soup,
}

impl HeldObject {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn object(self) -> Option<Object> {
        match self {
            HeldObject::Nothing => None,
            HeldObject::Onion => Some(Object::Onion),
            HeldObject::Dish => Some(Object::Dish),
            HeldObject::Soup => Some(Object::Soup),
        }
    }
}

/// A movable item, as found on counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Object {
    Onion,
    Dish,
    Soup,
}

impl From<Object> for HeldObject {
    fn from(o: Object) -> Self {
        match o {
            Object::Onion => HeldObject::Onion,
            Object::Dish => HeldObject::Dish,
            Object::Soup => HeldObject::Soup,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AgentState {
    pub pos: Pos,
    pub orientation: Orientation,
    pub held: HeldObject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PotPhase {
    Idle,
    Cooking,
    Ready,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PotState {
    pub onions: u8,
    pub phase: PotPhase,
    pub ticks_remaining: u32,
}

impl PotState {
    pub const EMPTY: PotState = PotState {
        onions: 0,
        phase: PotPhase::Idle,
        ticks_remaining: 0,
    };
}

/// Onions per soup.
pub const RECIPE_ONIONS: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    North,
    South,
    East,
    West,
    Stay,
    Interact,
}

impl Action {
    pub const ALL: [Action; 6] = [
        Action::North,
        Action::South,
        Action::East,
        Action::West,
        Action::Stay,
        Action::Interact,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    /// Single-character code used in replay files.
    pub fn code(self) -> char {
        match self {
            Action::North => 'N',
            Action::South => 'S',
            Action::East => 'E',
            Action::West => 'W',
            Action::Stay => '.',
            Action::Interact => 'I',
        }
    }

    pub fn from_code(c: char) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.code() == c)
    }

    pub fn direction(self) -> Option<Orientation> {
        match self {
            Action::North => Some(Orientation::North),
            Action::South => Some(Orientation::South),
            Action::East => Some(Orientation::East),
            Action::West => Some(Orientation::West),
            Action::Stay | Action::Interact => None,
        }
    }
}

/// Shaped-reward constants, paid to the acting agent only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shaping {
    pub onion_in_pot: f64,
    pub dish_pickup: f64,
    pub soup_pickup: f64,
}

impl Default for Shaping {
    fn default() -> Self {
        Shaping {
            onion_in_pot: 3.0,
            dish_pickup: 3.0,
            soup_pickup: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub cook_time: u32,
    pub delivery_reward: f64,
    pub horizon: u32,
    /// `None` disables shaping.
    pub shaping: Option<Shaping>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            cook_time: 20,
            delivery_reward: 20.0,
            horizon: 400,
            shaping: None,
        }
    }
}

impl EngineConfig {
    pub fn with_shaping(mut self, on: bool) -> Self {
        self.shaping = on.then(Shaping::default);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub tick: u32,
    pub agents: Vec<AgentState>,
    pub pots: BTreeMap<Pos, PotState>,
    pub counters: BTreeMap<Pos, Object>,
    pub deliveries: u32,
    /// Accumulated shared (delivery) reward. Shaped rewards are not included.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Delivered,
    PotStarted,
    PickedUp(Object),
    PlacedInPot,
    PlacedOnCounter(Object),
    TookFromCounter(Object),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub seat: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next: GameState,
    pub shared_reward: f64,
    pub shaped: Vec<f64>,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("expected {expected} actions, got {found}")]
    ActionCountMismatch { expected: usize, found: usize },
    #[error("seat {seat} out of range for {num_agents} agents")]
    SeatOutOfRange { seat: usize, num_agents: usize },
}

/// Initial state: agents on their start cells facing north, empty pots and counters.
pub fn reset(layout: &Layout) -> GameState {
    GameState {
        tick: 0,
        agents: layout
            .start_positions
            .iter()
            .map(|&pos| AgentState {
                pos,
                orientation: Orientation::North,
                held: HeldObject::Nothing,
            })
            .collect(),
        pots: layout
            .stations
            .pots
            .iter()
            .map(|&p| (p, PotState::EMPTY))
            .collect(),
        counters: BTreeMap::new(),
        deliveries: 0,
        score: 0.0,
    }
}

/// Pure transition. See the module docs for the phase rules.
pub fn step(
    state: &GameState,
    actions: &[Action],
    layout: &Layout,
    config: &EngineConfig,
) -> Result<StepOutcome, EngineError> {
    let mut next = state.clone();
    let mut events = Vec::new();
    let mut shaped = vec![0.0; state.agents.len()];
    let shared_reward = next.advance(actions, layout, config, &mut events, &mut shaped)?;
    Ok(StepOutcome {
        next,
        shared_reward,
        shaped,
        events,
    })
}

/// Which agents move, given their current cells and proposed targets.
/// Returns the move mask and the number of confirmation passes that made
/// progress (at most the number of agents).
pub(crate) fn resolve_moves(current: &[Pos], proposed: &[Option<Pos>]) -> (Vec<bool>, usize) {
    let n = current.len();
    let mut candidate: Vec<bool> = proposed.iter().map(Option::is_some).collect();

    for i in 0..n {
        let Some(target) = proposed[i] else { continue };
        // (a) contested target cell
        if (0..n).any(|j| j != i && proposed[j] == Some(target)) {
            candidate[i] = false;
        }
        // (b) swap
        if let Some(j) = current.iter().position(|&c| c == target) {
            if proposed[j] == Some(current[i]) {
                candidate[i] = false;
            }
        }
    }

    let occupant: Vec<Option<usize>> = proposed
        .iter()
        .map(|p| p.and_then(|t| current.iter().position(|&c| c == t)))
        .collect();

    // (c) least fixed point: a move into an occupied cell is confirmed only
    // once the occupant's own move is confirmed.
    let mut moves = vec![false; n];
    let mut passes = 0;
    loop {
        let mut progressed = false;
        for i in 0..n {
            if !candidate[i] || moves[i] {
                continue;
            }
            let clear = match occupant[i] {
                None => true,
                Some(j) => moves[j],
            };
            if clear {
                moves[i] = true;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
        passes += 1;
    }
    (moves, passes)
}

impl GameState {
    /// In-place transition; appends events and adds shaped rewards into
    /// `shaped` (one slot per seat). Returns the shared reward for the tick.
    pub fn advance(
        &mut self,
        actions: &[Action],
        layout: &Layout,
        config: &EngineConfig,
        events: &mut Vec<Event>,
        shaped: &mut [f64],
    ) -> Result<f64, EngineError> {
        let n = self.agents.len();
        if actions.len() != n {
            return Err(EngineError::ActionCountMismatch {
                expected: n,
                found: actions.len(),
            });
        }

        // Phase 1: movement.
        let current: Vec<Pos> = self.agents.iter().map(|a| a.pos).collect();
        let mut proposed = vec![None; n];
        for (seat, (agent, action)) in self.agents.iter_mut().zip(actions).enumerate() {
            if let Some(dir) = action.direction() {
                agent.orientation = dir;
                let (dx, dy) = dir.offset();
                let target = agent.pos.offset(dx, dy);
                if layout.tile(target).is_floor() {
                    proposed[seat] = Some(target);
                }
            }
        }
        let (moves, _) = resolve_moves(&current, &proposed);
        for (seat, moved) in moves.into_iter().enumerate() {
            if moved {
                self.agents[seat].pos = proposed[seat].unwrap();
            }
        }

        Ok(self.interact_and_cook(actions, layout, config, events, shaped))
    }

    fn interact_and_cook(
        &mut self,
        actions: &[Action],
        layout: &Layout,
        config: &EngineConfig,
        events: &mut Vec<Event>,
        shaped: &mut [f64],
    ) -> f64 {
        let shaping = config.shaping;
        let mut reward = 0.0;

        // Phase 2: interaction, ascending seat order.
        for seat in 0..self.agents.len() {
            if actions[seat] != Action::Interact {
                continue;
            }
            let agent = self.agents[seat];
            let (dx, dy) = agent.orientation.offset();
            let facing = agent.pos.offset(dx, dy);
            let held = agent.held;
            let mut emit = |kind| events.push(Event { seat, kind });
            let new_held = match (layout.tile(facing), held) {
                (Tile::OnionDispenser, HeldObject::Nothing) => {
                    emit(EventKind::PickedUp(Object::Onion));
                    HeldObject::Onion
                }
                (Tile::DishDispenser, HeldObject::Nothing) => {
                    emit(EventKind::PickedUp(Object::Dish));
                    if let Some(s) = shaping {
                        shaped[seat] += s.dish_pickup;
                    }
                    HeldObject::Dish
                }
                (Tile::Pot, HeldObject::Onion) => {
                    let pot = self.pots.get_mut(&facing).expect("pot cell has state");
                    if pot.phase == PotPhase::Idle && pot.onions < RECIPE_ONIONS {
                        pot.onions += 1;
                        emit(EventKind::PlacedInPot);
                        if let Some(s) = shaping {
                            shaped[seat] += s.onion_in_pot;
                        }
                        if pot.onions == RECIPE_ONIONS {
                            pot.phase = PotPhase::Cooking;
                            pot.ticks_remaining = config.cook_time;
                            emit(EventKind::PotStarted);
                        }
                        HeldObject::Nothing
                    } else {
                        held
                    }
                }
                (Tile::Pot, HeldObject::Dish) => {
                    let pot = self.pots.get_mut(&facing).expect("pot cell has state");
                    if pot.phase == PotPhase::Ready {
                        *pot = PotState::EMPTY;
                        emit(EventKind::PickedUp(Object::Soup));
                        if let Some(s) = shaping {
                            shaped[seat] += s.soup_pickup;
                        }
                        HeldObject::Soup
                    } else {
                        held
                    }
                }
                (Tile::ServingStation, HeldObject::Soup) => {
                    emit(EventKind::Delivered);
                    self.deliveries += 1;
                    reward += config.delivery_reward;
                    HeldObject::Nothing
                }
                (Tile::Counter, _) => match (self.counters.get(&facing).copied(), held.object()) {
                    (None, Some(obj)) => {
                        self.counters.insert(facing, obj);
                        emit(EventKind::PlacedOnCounter(obj));
                        HeldObject::Nothing
                    }
                    (Some(obj), None) => {
                        self.counters.remove(&facing);
                        emit(EventKind::TookFromCounter(obj));
                        obj.into()
                    }
                    _ => held,
                },
                _ => held,
            };
            self.agents[seat].held = new_held;
        }

        // Phase 3: cooking.
        for pot in self.pots.values_mut() {
            if pot.phase == PotPhase::Cooking {
                pot.ticks_remaining = pot.ticks_remaining.saturating_sub(1);
                if pot.ticks_remaining == 0 {
                    pot.phase = PotPhase::Ready;
                }
            }
        }

        self.tick += 1;
        self.score += reward;
        reward
    }

    /// 64-bit FNV-1a over a canonical byte serialization of the state.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write(&self.tick.to_le_bytes());
        h.write(&(self.agents.len() as u32).to_le_bytes());
        for a in &self.agents {
            h.write(&(a.pos.x as u32).to_le_bytes());
            h.write(&(a.pos.y as u32).to_le_bytes());
            h.write(&[a.orientation as u8, a.held as u8]);
        }
        h.write(&(self.pots.len() as u32).to_le_bytes());
        for (p, pot) in &self.pots {
            h.write(&(p.x as u32).to_le_bytes());
            h.write(&(p.y as u32).to_le_bytes());
            h.write(&[pot.onions, pot.phase as u8]);
            h.write(&pot.ticks_remaining.to_le_bytes());
        }
        h.write(&(self.counters.len() as u32).to_le_bytes());
        for (p, obj) in &self.counters {
            h.write(&(p.x as u32).to_le_bytes());
            h.write(&(p.y as u32).to_le_bytes());
            h.write(&[*obj as u8]);
        }
        h.write(&self.deliveries.to_le_bytes());
        h.write(&self.score.to_bits().to_le_bytes());
        h.finish()
    }

    /// The agent at `p`, if any.
    pub fn agent_at(&self, p: Pos) -> Option<usize> {
        self.agents.iter().position(|a| a.pos == p)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}
