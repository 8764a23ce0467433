//! Policies: a linear-softmax learner and three scripted stand-ins.

mod reinforce;
mod scripted;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::engine::{Action, GameState};
use crate::layout::Layout;

pub use reinforce::{
    discounted_returns, policy_gradient, reinforce_update, surrogate_objective, Baseline,
    ReinforceConfig, Trajectory,
};
pub use scripted::{greedy_cook_action, subgoal_cells, GreedyPlan};

pub const NUM_ACTIONS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("unknown scripted policy {0:?}")]
    UnknownName(String),
    #[error("operation needs a linear policy")]
    NotLinear,
    #[error("empty trajectory batch")]
    EmptyBatch,
    #[error("malformed weights file: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScriptedKind {
    Random,
    Stationary,
    GreedyCook,
}

impl ScriptedKind {
    pub const ALL: [ScriptedKind; 3] = [
        ScriptedKind::Random,
        ScriptedKind::Stationary,
        ScriptedKind::GreedyCook,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScriptedKind::Random => "random",
            ScriptedKind::Stationary => "stationary",
            ScriptedKind::GreedyCook => "greedy_cook",
        }
    }
}

impl fmt::Display for ScriptedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScriptedKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "random" => Ok(ScriptedKind::Random),
            "stationary" => Ok(ScriptedKind::Stationary),
            "greedycook" => Ok(ScriptedKind::GreedyCook),
            _ => Err(PolicyError::UnknownName(s.to_string())),
        }
    }
}

pub fn scripted_policy(name: &str) -> Result<PolicyParams, PolicyError> {
    name.parse().map(PolicyParams::Scripted)
}

/// Row-major `[feature_len x 6]` weights; logits are `obs^T W`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPolicy {
    pub feature_len: usize,
    pub weights: Vec<f64>,
}

impl LinearPolicy {
    pub fn zeros(feature_len: usize) -> Self {
        LinearPolicy {
            feature_len,
            weights: vec![0.0; feature_len * NUM_ACTIONS],
        }
    }

    pub fn from_weights(feature_len: usize, weights: Vec<f64>) -> Result<Self, PolicyError> {
        if weights.len() != feature_len * NUM_ACTIONS {
            return Err(PolicyError::DimensionMismatch {
                expected: feature_len * NUM_ACTIONS,
                found: weights.len(),
            });
        }
        Ok(LinearPolicy {
            feature_len,
            weights,
        })
    }

    pub fn logits(&self, obs: &[f64]) -> Result<[f64; NUM_ACTIONS], PolicyError> {
        if obs.len() != self.feature_len {
            return Err(PolicyError::DimensionMismatch {
                expected: self.feature_len,
                found: obs.len(),
            });
        }
        let mut z = [0.0; NUM_ACTIONS];
        for (row, &x) in self.weights.chunks_exact(NUM_ACTIONS).zip(obs) {
            if x != 0.0 {
                for (zi, w) in z.iter_mut().zip(row) {
                    *zi += x * w;
                }
            }
        }
        Ok(z)
    }

    pub fn distribution(&self, obs: &[f64]) -> Result<ActionDistribution, PolicyError> {
        Ok(ActionDistribution::softmax(&self.logits(obs)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyParams {
    Linear(LinearPolicy),
    Scripted(ScriptedKind),
}

impl PolicyParams {
    pub fn is_stochastic(&self) -> bool {
        !matches!(
            self,
            PolicyParams::Scripted(ScriptedKind::Stationary | ScriptedKind::GreedyCook)
        )
    }

    /// Text table: header `<feature_len> cols=6`, then one row of six
    /// decimals per feature. Scripted policies write a header only:
    /// `0 cols=6 scripted=<name>`.
    pub fn to_weights_text(&self) -> String {
        match self {
            PolicyParams::Scripted(kind) => format!("0 cols={NUM_ACTIONS} scripted={kind}\n"),
            PolicyParams::Linear(p) => {
                let mut out = format!("{} cols={NUM_ACTIONS}\n", p.feature_len);
                for row in p.weights.chunks_exact(NUM_ACTIONS) {
                    let cells: Vec<String> = row.iter().map(|w| format!("{w:?}")).collect();
                    out.push_str(&cells.join(" "));
                    out.push('\n');
                }
                out
            }
        }
    }

    pub fn from_weights_text(text: &str) -> Result<PolicyParams, PolicyError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| PolicyError::Malformed("empty file".into()))?;
        let mut parts = header.split_whitespace();
        let rows: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PolicyError::Malformed(format!("bad header {header:?}")))?;
        if parts.next() != Some("cols=6") {
            return Err(PolicyError::Malformed(format!("bad header {header:?}")));
        }
        if let Some(tag) = parts.next() {
            let name = tag
                .strip_prefix("scripted=")
                .ok_or_else(|| PolicyError::Malformed(format!("bad header {header:?}")))?;
            return scripted_policy(name);
        }
        let mut weights = Vec::with_capacity(rows * NUM_ACTIONS);
        for (i, line) in lines.enumerate() {
            let before = weights.len();
            for cell in line.split_whitespace() {
                let w: f64 = cell
                    .parse()
                    .map_err(|_| PolicyError::Malformed(format!("row {i}: {cell:?}")))?;
                if !w.is_finite() {
                    return Err(PolicyError::Malformed(format!("row {i}: non-finite weight")));
                }
                weights.push(w);
            }
            if weights.len() - before != NUM_ACTIONS {
                return Err(PolicyError::Malformed(format!(
                    "row {i} has {} cells",
                    weights.len() - before
                )));
            }
        }
        LinearPolicy::from_weights(rows, weights).map(PolicyParams::Linear)
    }
}

/// Probabilities over [`Action::ALL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionDistribution {
    pub probs: [f64; NUM_ACTIONS],
}

impl ActionDistribution {
    pub fn uniform() -> Self {
        ActionDistribution {
            probs: [1.0 / NUM_ACTIONS as f64; NUM_ACTIONS],
        }
    }

    pub fn one_hot(action: Action) -> Self {
        let mut probs = [0.0; NUM_ACTIONS];
        probs[action.index()] = 1.0;
        ActionDistribution { probs }
    }

    pub fn softmax(logits: &[f64; NUM_ACTIONS]) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs = [0.0; NUM_ACTIONS];
        let mut total = 0.0;
        for (p, &z) in probs.iter_mut().zip(logits) {
            *p = (z - max).exp();
            total += *p;
        }
        for p in &mut probs {
            *p /= total;
        }
        ActionDistribution { probs }
    }

    /// Inverse-CDF draw; consumes exactly one `f64` from the generator.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Action {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return Action::ALL[i];
            }
        }
        // Rounding left `acc` just below 1; take the last action with mass.
        let last = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Action::ALL[last]
    }

    /// Most likely action; ties go to the lowest action index.
    pub fn argmax(&self) -> Action {
        let mut best = 0;
        for i in 1..NUM_ACTIONS {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        Action::ALL[best]
    }
}

/// What a scripted policy needs besides the observation.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    pub state: &'a GameState,
    pub layout: &'a Layout,
    pub seat: usize,
}

pub fn action_distribution(
    params: &PolicyParams,
    obs: &[f64],
    ctx: PolicyContext<'_>,
) -> Result<ActionDistribution, PolicyError> {
    match params {
        PolicyParams::Linear(p) => p.distribution(obs),
        PolicyParams::Scripted(ScriptedKind::Random) => Ok(ActionDistribution::uniform()),
        PolicyParams::Scripted(ScriptedKind::Stationary) => {
            Ok(ActionDistribution::one_hot(Action::Stay))
        }
        PolicyParams::Scripted(ScriptedKind::GreedyCook) => Ok(ActionDistribution::one_hot(
            greedy_cook_action(ctx.state, ctx.layout, ctx.seat),
        )),
    }
}
