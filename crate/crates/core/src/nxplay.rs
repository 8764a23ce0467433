//! Ego-team training. In every episode `n - x` seats share the learning
//! policy and `x` seats are filled by frozen checkpoints drawn from a
//! population. Self-play is `x = 0`.
//!
//! Episode `e` of a run with seed `s` draws its seat assignment from
//! `stream(s, [COMPOSE, e])` and its actions from `stream(s, [ROLLOUT, e])`,
//! so results do not depend on how a batch is scheduled across threads.

use std::time::{Duration, Instant};

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::digest::Fnv1a;
use crate::engine::{reset, Action, EngineConfig, EngineError, Event};
use crate::features::{feature_len, featurize_into};
use crate::layout::Layout;
use crate::policy::{
    action_distribution, reinforce_update, Baseline, LinearPolicy, PolicyContext, PolicyError,
    PolicyParams, ReinforceConfig, Trajectory,
};
use crate::population::{
    sample_indices, snapshot_points, Checkpoint, Population, PopulationError, SamplingMode,
};
use crate::replay::TickRecord;
use crate::seeding::{self, COMPOSE, ROLLOUT};

#[derive(Debug, Error)]
pub enum NxError {
    #[error("x must satisfy 0 <= x <= n-1 (n = {n}, x = {x})")]
    InvalidX { n: usize, x: usize },
    #[error("layout has {layout} seats but n = {n}")]
    SeatCountMismatch { n: usize, layout: usize },
    #[error("x > 0 needs a collaborator population")]
    PopulationRequired,
    #[error("population is for {found} agents, expected {expected}")]
    PopulationMismatch { expected: usize, found: usize },
    #[error("population is empty")]
    EmptyPopulation,
    #[error("{0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("update after episode {episode} failed: {source}")]
    Update { episode: u64, source: PolicyError },
}

impl From<PopulationError> for NxError {
    fn from(e: PopulationError) -> Self {
        match e {
            PopulationError::EmptyPopulation => NxError::EmptyPopulation,
            other => NxError::InvalidConfig(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgoTrainConfig {
    pub layout_name: String,
    pub n: usize,
    pub x: usize,
    pub total_episodes: u64,
    pub horizon: u32,
    pub lr: f64,
    pub gamma: f64,
    pub baseline_decay: f64,
    pub seed: u64,
    pub checkpoints_to_save: usize,
    /// Shaped rewards for the learner. Never used in evaluation.
    pub shaping: bool,
    /// Episodes rolled out (in parallel) per parameter update.
    pub batch_episodes: usize,
    pub sampling: SamplingMode,
}

impl Default for EgoTrainConfig {
    fn default() -> Self {
        let rc = ReinforceConfig::default();
        EgoTrainConfig {
            layout_name: String::new(),
            n: 2,
            x: 0,
            total_episodes: 1000,
            horizon: EngineConfig::default().horizon,
            lr: rc.lr,
            gamma: rc.gamma,
            baseline_decay: rc.baseline_decay,
            seed: 0,
            checkpoints_to_save: 3,
            shaping: false,
            batch_episodes: 1,
            sampling: SamplingMode::Uniform,
        }
    }
}

impl EgoTrainConfig {
    pub fn validate(&self, layout: &Layout, pop: Option<&Population>) -> Result<(), NxError> {
        check_x(self.n, self.x)?;
        if layout.num_agents != self.n {
            return Err(NxError::SeatCountMismatch {
                n: self.n,
                layout: layout.num_agents,
            });
        }
        if self.x > 0 {
            let pop = pop.ok_or(NxError::PopulationRequired)?;
            if pop.num_agents != self.n {
                return Err(NxError::PopulationMismatch {
                    expected: self.n,
                    found: pop.num_agents,
                });
            }
        }
        if self.batch_episodes == 0 {
            return Err(NxError::InvalidConfig("batch_episodes must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(NxError::InvalidConfig("lr must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(NxError::InvalidConfig("gamma must lie in [0, 1]".into()));
        }
        Ok(())
    }

    fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            horizon: self.horizon,
            ..EngineConfig::default()
        }
        .with_shaping(self.shaping)
    }
}

pub fn check_x(n: usize, x: usize) -> Result<(), NxError> {
    if n == 0 || x > n - 1 {
        Err(NxError::InvalidX { n, x })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seat {
    Ego,
    /// Index into the population's checkpoint list.
    Collaborator(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeatAssignment {
    pub seats: Vec<Seat>,
}

impl SeatAssignment {
    pub fn all_ego(n: usize) -> Self {
        SeatAssignment {
            seats: vec![Seat::Ego; n],
        }
    }

    pub fn ego_seats(&self) -> Vec<usize> {
        (0..self.seats.len())
            .filter(|&i| self.seats[i] == Seat::Ego)
            .collect()
    }

    /// Checkpoint ids per seat, `None` for ego seats.
    pub fn ids<'p>(&self, pop: &'p Population) -> Vec<Option<&'p str>> {
        self.seats
            .iter()
            .map(|s| match s {
                Seat::Ego => None,
                Seat::Collaborator(i) => Some(pop.checkpoints[*i].id.as_str()),
            })
            .collect()
    }
}

/// A uniform `(n - x)`-subset of seats for the ego team; the rest are filled
/// in ascending seat order by independent population draws. `x = 0` draws
/// nothing from `rng`.
pub fn compose_episode<R: Rng + ?Sized>(
    n: usize,
    x: usize,
    pop: Option<&Population>,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<SeatAssignment, NxError> {
    check_x(n, x)?;
    if x == 0 {
        return Ok(SeatAssignment::all_ego(n));
    }
    let pop = pop.ok_or(NxError::PopulationRequired)?;
    let mut seats = vec![None; n];
    for i in index::sample(rng, n, n - x).into_iter() {
        seats[i] = Some(Seat::Ego);
    }
    let mut draws = sample_indices(pop, x, mode, rng)?.into_iter();
    Ok(SeatAssignment {
        seats: seats
            .into_iter()
            .map(|s| s.unwrap_or_else(|| Seat::Collaborator(draws.next().expect("x draws"))))
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Draw from the action distribution (deterministic policies draw nothing).
    Sample,
    /// Most likely action.
    Greedy,
}

/// Everything an episode needs besides the seat assignment and the stream.
#[derive(Debug, Clone, Copy)]
pub struct RolloutSpec<'a> {
    pub layout: &'a Layout,
    pub config: &'a EngineConfig,
    pub ego: &'a PolicyParams,
    pub ego_selection: Selection,
    pub population: Option<&'a Population>,
    /// Keep per-tick records for a replay file.
    pub record: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    /// One trajectory per ego seat, ascending seat order. Rewards are the
    /// shared reward plus that seat's shaped reward.
    pub trajectories: Vec<Trajectory>,
    /// Collective (delivery) reward for the episode.
    pub reward: f64,
    pub deliveries: u32,
    /// FNV-1a over the per-tick state digests.
    pub digest: u64,
    pub ticks: Vec<TickRecord>,
}

/// Plays one episode of `config.horizon` ticks. Seats act in ascending order
/// and every stochastic seat consumes one draw per tick.
pub fn run_episode<R: Rng + ?Sized>(
    assignment: &SeatAssignment,
    spec: &RolloutSpec<'_>,
    rng: &mut R,
) -> Result<EpisodeResult, NxError> {
    let layout = spec.layout;
    let n = layout.num_agents;
    if assignment.seats.len() != n {
        return Err(NxError::SeatCountMismatch {
            n: assignment.seats.len(),
            layout: n,
        });
    }
    let flen = feature_len(n);
    let horizon = spec.config.horizon as usize;

    let mut policies: Vec<(&PolicyParams, Selection)> = Vec::with_capacity(n);
    for seat in &assignment.seats {
        policies.push(match *seat {
            Seat::Ego => (spec.ego, spec.ego_selection),
            Seat::Collaborator(i) => {
                let pop = spec.population.ok_or(NxError::PopulationRequired)?;
                let c = pop.checkpoints.get(i).ok_or(NxError::EmptyPopulation)?;
                (&c.params, Selection::Sample)
            }
        });
    }
    let ego_seats = assignment.ego_seats();
    let mut trajectories: Vec<Trajectory> = ego_seats
        .iter()
        .map(|_| Trajectory::with_capacity(flen, horizon))
        .collect();

    let mut state = reset(layout);
    let mut obs = vec![vec![0.0; flen]; n];
    let mut actions = vec![Action::Stay; n];
    let mut events: Vec<Event> = Vec::new();
    let mut shaped = vec![0.0; n];
    let mut digest = Fnv1a::new();
    let mut ticks = Vec::new();

    for _ in 0..horizon {
        for seat in 0..n {
            let (params, selection) = policies[seat];
            let o: &[f64] = if matches!(params, PolicyParams::Linear(_)) {
                featurize_into(&state, seat, layout, spec.config, &mut obs[seat])?;
                &obs[seat]
            } else {
                &[]
            };
            let ctx = PolicyContext {
                state: &state,
                layout,
                seat,
            };
            let dist = action_distribution(params, o, ctx)?;
            actions[seat] = match selection {
                Selection::Sample if params.is_stochastic() => dist.sample(rng),
                _ => dist.argmax(),
            };
        }
        for (k, &seat) in ego_seats.iter().enumerate() {
            if !matches!(policies[seat].0, PolicyParams::Linear(_)) {
                featurize_into(&state, seat, layout, spec.config, &mut obs[seat])?;
            }
            // Reward is filled in after the step.
            trajectories[k].push(&obs[seat], actions[seat], 0.0);
        }
        events.clear();
        shaped.fill(0.0);
        let reward = state.advance(&actions, layout, spec.config, &mut events, &mut shaped)?;
        for (k, &seat) in ego_seats.iter().enumerate() {
            *trajectories[k].rewards.last_mut().expect("pushed above") = reward + shaped[seat];
        }
        let d = state.digest();
        digest.write_u64(d);
        if spec.record {
            ticks.push(TickRecord {
                tick: state.tick - 1,
                actions: actions.clone(),
                reward,
                digest: d,
            });
        }
    }

    Ok(EpisodeResult {
        trajectories,
        reward: state.score,
        deliveries: state.deliveries,
        digest: digest.finish(),
        ticks,
    })
}

/// Logged every 100 episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub episode: u64,
    pub mean_reward_ema: f64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Snapshots at evenly spaced episode counts, first and last included.
    /// `eval_reward` is the mean collective reward of the training episodes
    /// since the previous snapshot (0 for the initial one).
    pub checkpoints: Vec<Checkpoint>,
    pub params: PolicyParams,
    pub episode_rewards: Vec<f64>,
    pub episode_digests: Vec<u64>,
    /// Tick records of the final episode.
    pub last_episode: Vec<TickRecord>,
}

/// The ego's parameters start at zero (uniform policy).
pub fn initial_params(n: usize) -> PolicyParams {
    PolicyParams::Linear(LinearPolicy::zeros(feature_len(n)))
}

pub fn train_ego(
    cfg: &EgoTrainConfig,
    layout: &Layout,
    pop: Option<&Population>,
    mut progress: impl FnMut(&Progress),
) -> Result<TrainOutcome, NxError> {
    cfg.validate(layout, pop)?;
    let config = cfg.engine_config();
    let rc = ReinforceConfig {
        lr: cfg.lr,
        gamma: cfg.gamma,
        baseline_decay: cfg.baseline_decay,
    };
    let started = Instant::now();
    let total = cfg.total_episodes;
    let targets = snapshot_points(total, cfg.checkpoints_to_save);
    let mut next_target = targets.iter().peekable();

    let mut params = initial_params(cfg.n);
    let mut baseline = Baseline::default();
    let mut checkpoints = Vec::new();
    let mut rewards: Vec<f64> = Vec::with_capacity(total as usize);
    let mut digests = Vec::with_capacity(total as usize);
    let mut last_episode = Vec::new();
    let mut ema: Option<f64> = None;
    let mut window_start = 0usize;

    let snapshot = |done: u64, params: &PolicyParams, rewards: &[f64], window_start: &mut usize| {
        let window = &rewards[*window_start..];
        let mean = if window.is_empty() {
            0.0
        } else {
            window.iter().sum::<f64>() / window.len() as f64
        };
        *window_start = rewards.len();
        Checkpoint {
            id: format!("ego-e{done}"),
            params: params.clone(),
            run_id: format!("seed{}", cfg.seed),
            training_episodes: done,
            eval_reward: mean,
            tier: None,
        }
    };

    let mut done = 0u64;
    loop {
        while next_target.peek().is_some_and(|&&t| t <= done) {
            next_target.next();
            checkpoints.push(snapshot(done, &params, &rewards, &mut window_start));
        }
        if done >= total {
            break;
        }
        let batch = (cfg.batch_episodes as u64).min(total - done);
        let spec = RolloutSpec {
            layout,
            config: &config,
            ego: &params,
            ego_selection: Selection::Sample,
            population: pop,
            record: false,
        };
        let play = |ep: u64| -> Result<EpisodeResult, NxError> {
            let mut compose_rng = seeding::stream(cfg.seed, &[COMPOSE, ep]);
            let assignment = compose_episode(cfg.n, cfg.x, pop, cfg.sampling, &mut compose_rng)?;
            let mut rng = seeding::stream(cfg.seed, &[ROLLOUT, ep]);
            let spec = RolloutSpec {
                record: ep + 1 == total,
                ..spec
            };
            run_episode(&assignment, &spec, &mut rng)
        };
        let results: Vec<EpisodeResult> = if batch == 1 {
            vec![play(done)?]
        } else {
            (done..done + batch)
                .into_par_iter()
                .map(play)
                .collect::<Result<_, _>>()?
        };

        let mut trajectories = Vec::new();
        for r in results {
            rewards.push(r.reward);
            digests.push(r.digest);
            ema = Some(match ema {
                None => r.reward,
                Some(m) => 0.95 * m + 0.05 * r.reward,
            });
            if !r.ticks.is_empty() {
                last_episode = r.ticks;
            }
            trajectories.extend(r.trajectories);
        }
        let (next, b) = reinforce_update(&params, &trajectories, &rc, baseline).map_err(|source| {
            NxError::Update {
                episode: done + batch - 1,
                source,
            }
        })?;
        params = next;
        baseline = b;

        let before = done;
        done += batch;
        if done / 100 > before / 100 {
            progress(&Progress {
                episode: done,
                mean_reward_ema: ema.unwrap_or(0.0),
                elapsed: started.elapsed(),
            });
        }
    }

    Ok(TrainOutcome {
        checkpoints,
        params,
        episode_rewards: rewards,
        episode_digests: digests,
        last_episode,
    })
}
