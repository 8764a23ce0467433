//! REINFORCE with a running-mean baseline for [`LinearPolicy`].

use super::{ActionDistribution, LinearPolicy, PolicyError, PolicyParams, NUM_ACTIONS};
use crate::engine::Action;

/// One seat's experience over an episode. `obs` is flat, `feature_len` per tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub feature_len: usize,
    pub obs: Vec<f64>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
}

impl Trajectory {
    pub fn new(feature_len: usize) -> Self {
        Trajectory {
            feature_len,
            obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
        }
    }

    pub fn with_capacity(feature_len: usize, ticks: usize) -> Self {
        Trajectory {
            feature_len,
            obs: Vec::with_capacity(feature_len * ticks),
            actions: Vec::with_capacity(ticks),
            rewards: Vec::with_capacity(ticks),
        }
    }

    pub fn push(&mut self, obs: &[f64], action: Action, reward: f64) {
        self.obs.extend_from_slice(obs);
        self.actions.push(action);
        self.rewards.push(reward);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn obs_at(&self, t: usize) -> &[f64] {
        &self.obs[t * self.feature_len..(t + 1) * self.feature_len]
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReinforceConfig {
    pub lr: f64,
    pub gamma: f64,
    /// EMA coefficient on the previous baseline value.
    pub baseline_decay: f64,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        ReinforceConfig {
            lr: 0.01,
            gamma: 0.99,
            baseline_decay: 0.99,
        }
    }
}

/// Exponential moving average of per-timestep returns. Before the first
/// update the baseline is the current batch's mean return.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Baseline {
    pub value: f64,
    pub initialized: bool,
}

impl Baseline {
    pub fn at(value: f64) -> Self {
        Baseline {
            value,
            initialized: true,
        }
    }
}

/// `G_t = sum_k gamma^k r_{t+k}`.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

fn check_dims(policy: &LinearPolicy, batch: &[Trajectory]) -> Result<usize, PolicyError> {
    let mut steps = 0;
    for traj in batch {
        if traj.feature_len != policy.feature_len {
            return Err(PolicyError::DimensionMismatch {
                expected: policy.feature_len,
                found: traj.feature_len,
            });
        }
        if traj.obs.len() != traj.len() * traj.feature_len || traj.rewards.len() != traj.len() {
            return Err(PolicyError::DimensionMismatch {
                expected: traj.len() * traj.feature_len,
                found: traj.obs.len(),
            });
        }
        steps += traj.len();
    }
    if steps == 0 {
        return Err(PolicyError::EmptyBatch);
    }
    Ok(steps)
}

fn mean_return(batch: &[Trajectory], gamma: f64, steps: usize) -> f64 {
    batch
        .iter()
        .flat_map(|t| discounted_returns(&t.rewards, gamma))
        .sum::<f64>()
        / steps as f64
}

/// Average over all timesteps of `(G_t - b) * grad log pi(a_t | o_t)`.
/// The gradient of the log-softmax w.r.t. `W[i][j]` is `o_i (1[a = j] - p_j)`.
pub fn policy_gradient(
    policy: &LinearPolicy,
    batch: &[Trajectory],
    baseline: f64,
    gamma: f64,
) -> Result<Vec<f64>, PolicyError> {
    let steps = check_dims(policy, batch)?;
    let mut grad = vec![0.0; policy.weights.len()];
    for traj in batch {
        let returns = discounted_returns(&traj.rewards, gamma);
        for (t, g) in returns.into_iter().enumerate() {
            let advantage = g - baseline;
            if advantage == 0.0 {
                continue;
            }
            let obs = traj.obs_at(t);
            let probs = policy.distribution(obs)?.probs;
            let mut coeff = [0.0; NUM_ACTIONS];
            for (j, c) in coeff.iter_mut().enumerate() {
                let indicator = if traj.actions[t].index() == j { 1.0 } else { 0.0 };
                *c = advantage * (indicator - probs[j]);
            }
            for (row, &x) in grad.chunks_exact_mut(NUM_ACTIONS).zip(obs) {
                if x != 0.0 {
                    for (r, c) in row.iter_mut().zip(&coeff) {
                        *r += x * c;
                    }
                }
            }
        }
    }
    let scale = 1.0 / steps as f64;
    for g in &mut grad {
        *g *= scale;
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(PolicyError::NonFiniteGradient);
    }
    Ok(grad)
}

/// `(1/T) sum_t (G_t - b) log pi(a_t | o_t)`, whose gradient is [`policy_gradient`].
pub fn surrogate_objective(
    policy: &LinearPolicy,
    batch: &[Trajectory],
    baseline: f64,
    gamma: f64,
) -> Result<f64, PolicyError> {
    let steps = check_dims(policy, batch)?;
    let mut total = 0.0;
    for traj in batch {
        for (t, g) in discounted_returns(&traj.rewards, gamma).into_iter().enumerate() {
            let ActionDistribution { probs } = policy.distribution(traj.obs_at(t))?;
            total += (g - baseline) * probs[traj.actions[t].index()].ln();
        }
    }
    Ok(total / steps as f64)
}

/// One gradient-ascent step on the batch. Returns the new parameters and
/// the updated baseline; the inputs are left untouched.
pub fn reinforce_update(
    params: &PolicyParams,
    batch: &[Trajectory],
    config: &ReinforceConfig,
    baseline: Baseline,
) -> Result<(PolicyParams, Baseline), PolicyError> {
    let PolicyParams::Linear(policy) = params else {
        return Err(PolicyError::NotLinear);
    };
    let steps = check_dims(policy, batch)?;
    let batch_mean = mean_return(batch, config.gamma, steps);
    if !batch_mean.is_finite() {
        return Err(PolicyError::NonFiniteGradient);
    }
    let b = if baseline.initialized {
        baseline.value
    } else {
        batch_mean
    };
    let grad = policy_gradient(policy, batch, b, config.gamma)?;

    let mut next = policy.clone();
    for (w, g) in next.weights.iter_mut().zip(&grad) {
        *w += config.lr * g;
    }
    if next.weights.iter().any(|w| !w.is_finite()) {
        return Err(PolicyError::NonFiniteGradient);
    }
    let value = if baseline.initialized {
        config.baseline_decay * baseline.value + (1.0 - config.baseline_decay) * batch_mean
    } else {
        batch_mean
    };
    Ok((PolicyParams::Linear(next), Baseline::at(value)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn returns_are_discounted_sums() {
        let g = discounted_returns(&[1.0, 0.0, 2.0], 0.5);
        assert_eq!(g, vec![1.5, 1.0, 2.0]);
    }

    #[test]
    fn zero_advantage_leaves_weights() {
        let mut p = LinearPolicy::zeros(2);
        p.weights[1] = 0.4;
        let params = PolicyParams::Linear(p);
        let mut traj = Trajectory::new(2);
        for a in [Action::North, Action::Interact, Action::West] {
            traj.push(&[1.0, -0.5], a, 2.0);
        }
        let cfg = ReinforceConfig {
            lr: 0.5,
            gamma: 0.0,
            baseline_decay: 0.99,
        };
        let (next, b) = reinforce_update(&params, &[traj], &cfg, Baseline::at(2.0)).unwrap();
        assert_eq!(next, params);
        assert_eq!(b.value, 2.0);
    }

    #[test]
    fn errors() {
        let params = PolicyParams::Linear(LinearPolicy::zeros(2));
        let cfg = ReinforceConfig::default();
        assert_eq!(
            reinforce_update(&params, &[], &cfg, Baseline::default()).unwrap_err(),
            PolicyError::EmptyBatch
        );
        let mut bad = Trajectory::new(3);
        bad.push(&[0.0; 3], Action::Stay, 1.0);
        assert!(matches!(
            reinforce_update(&params, &[bad], &cfg, Baseline::default()).unwrap_err(),
            PolicyError::DimensionMismatch { .. }
        ));
        let mut inf = Trajectory::new(2);
        inf.push(&[1.0, 1.0], Action::Stay, f64::INFINITY);
        assert_eq!(
            reinforce_update(&params, &[inf], &cfg, Baseline::at(0.0)).unwrap_err(),
            PolicyError::NonFiniteGradient
        );
        let scripted = PolicyParams::Scripted(super::super::ScriptedKind::Random);
        assert_eq!(
            reinforce_update(&scripted, &[], &cfg, Baseline::default()).unwrap_err(),
            PolicyError::NotLinear
        );
    }
}
