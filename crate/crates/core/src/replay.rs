//! Replay files: newline-delimited JSON.
//!
//! The first line is a header with the layout text and engine config; each
//! further line is one tick:
//!
//! ```text
//! {"layout_name":"open_room","layout":"XXXPXXX\n...","config":{...}}
//! {"tick":0,"actions":"NI","reward":0.0,"digest":"9a3c..."}
//! ```
//!
//! `actions` holds one code per seat (`N S E W . I`); `digest` is the state
//! digest after the tick, as 16 hex digits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{reset, Action, EngineConfig, EngineError, Event, GameState};
use crate::layout::{Layout, LayoutError};

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: u32,
    pub actions: Vec<Action>,
    pub reward: f64,
    pub digest: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayHeader {
    pub layout_name: String,
    pub layout: String,
    pub config: EngineConfig,
}

#[derive(Serialize, Deserialize)]
struct RawTick {
    tick: u32,
    actions: String,
    reward: f64,
    digest: String,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("replay layout: {0}")]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("tick {tick}: digest {found:016x} does not match recorded {expected:016x}")]
    DigestMismatch { tick: u32, expected: u64, found: u64 },
}

pub fn header_for(layout: &Layout, config: &EngineConfig) -> ReplayHeader {
    ReplayHeader {
        layout_name: layout.name.clone(),
        layout: layout.render(),
        config: *config,
    }
}

pub fn write_replay(header: &ReplayHeader, ticks: &[TickRecord]) -> String {
    let mut out = serde_json::to_string(header).expect("header serializes");
    out.push('\n');
    for t in ticks {
        let raw = RawTick {
            tick: t.tick,
            actions: t.actions.iter().map(|a| a.code()).collect(),
            reward: t.reward,
            digest: format!("{:016x}", t.digest),
        };
        out.push_str(&serde_json::to_string(&raw).expect("tick serializes"));
        out.push('\n');
    }
    out
}

pub fn read_replay(text: &str) -> Result<(ReplayHeader, Vec<TickRecord>), ReplayError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let bad = |line: usize, msg: String| ReplayError::Malformed { line: line + 1, msg };
    let (i, first) = lines.next().ok_or_else(|| bad(0, "empty replay".into()))?;
    let header: ReplayHeader = serde_json::from_str(first).map_err(|e| bad(i, e.to_string()))?;
    let mut ticks = Vec::new();
    for (i, line) in lines {
        let raw: RawTick = serde_json::from_str(line).map_err(|e| bad(i, e.to_string()))?;
        let actions = raw
            .actions
            .chars()
            .map(|c| Action::from_code(c).ok_or_else(|| bad(i, format!("unknown action code {c:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let digest =
            u64::from_str_radix(&raw.digest, 16).map_err(|e| bad(i, format!("digest: {e}")))?;
        ticks.push(TickRecord {
            tick: raw.tick,
            actions,
            reward: raw.reward,
            digest,
        });
    }
    Ok((header, ticks))
}

/// Re-simulates the replay, checking every digest. Returns the layout and
/// the state before the first tick followed by the state after each tick.
pub fn reconstruct(
    header: &ReplayHeader,
    ticks: &[TickRecord],
) -> Result<(Layout, Vec<GameState>), ReplayError> {
    let layout = Layout::parse(&header.layout)?.with_name(header.layout_name.clone());
    let mut state = reset(&layout);
    let mut states = vec![state.clone()];
    let mut events: Vec<Event> = Vec::new();
    let mut shaped = vec![0.0; layout.num_agents];
    for t in ticks {
        events.clear();
        state.advance(&t.actions, &layout, &header.config, &mut events, &mut shaped)?;
        let found = state.digest();
        if found != t.digest {
            return Err(ReplayError::DigestMismatch {
                tick: t.tick,
                expected: t.digest,
                found,
            });
        }
        states.push(state.clone());
    }
    Ok((layout, states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::step;
    use crate::layouts;

    fn sample() -> (ReplayHeader, Vec<TickRecord>) {
        let l = layouts::builtin("open_room").unwrap();
        let cfg = EngineConfig::default();
        let mut s = reset(&l);
        let script = ["NN", "WE", "II", ".S", "IW"];
        let mut ticks = Vec::new();
        for code in script {
            let actions: Vec<Action> = code.chars().map(|c| Action::from_code(c).unwrap()).collect();
            let out = step(&s, &actions, &l, &cfg).unwrap();
            ticks.push(TickRecord {
                tick: s.tick,
                actions,
                reward: out.shared_reward,
                digest: out.next.digest(),
            });
            s = out.next;
        }
        (header_for(&l, &cfg), ticks)
    }

    #[test]
    fn round_trip() {
        let (h, ticks) = sample();
        let text = write_replay(&h, &ticks);
        assert_eq!(text.lines().count(), 6);
        let (h2, t2) = read_replay(&text).unwrap();
        assert_eq!(h2, h);
        assert_eq!(t2, ticks);
        let (_, states) = reconstruct(&h2, &t2).unwrap();
        assert_eq!(states.len(), 6);
    }

    #[test]
    fn tampering_is_caught() {
        let (h, mut ticks) = sample();
        ticks[0].actions[0] = Action::Stay;
        assert!(matches!(
            reconstruct(&h, &ticks),
            Err(ReplayError::DigestMismatch { tick: 0, .. })
        ));
        assert!(matches!(
            read_replay("{\"layout_name\":\"x\"}\n"),
            Err(ReplayError::Malformed { line: 1, .. })
        ));
    }
}
