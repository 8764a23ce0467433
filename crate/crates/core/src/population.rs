//! Checkpoint populations: building from self-play runs, performance tiers,
//! collaborator sampling and on-disk persistence.
//!
//! On disk a population is a directory holding `manifest.txt` and one
//! `weights/<id>.txt` per checkpoint:
//!
//! ```text
//! version 1
//! layout open_room
//! n 2
//! seed 7
//! checkpoint r0-c0 run=run0 episodes=0 eval_reward=0.0 tier=Low weights=weights/r0-c0.txt fnv1a=...
//! ```
//!
//! An optional `population_seed <s>` line records the seed of the
//! population an ego team was trained against.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::digest::fnv1a;
use crate::engine::EngineConfig;
use crate::layout::Layout;
use crate::nxplay::{run_episode, train_ego, EgoTrainConfig, NxError, RolloutSpec, Selection, SeatAssignment};
use crate::policy::{PolicyError, PolicyParams, ScriptedKind};
use crate::seeding::{self, EVAL};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    Low,
    Medium,
    High,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Low, Tier::Medium, Tier::High];
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Low => "Low",
            Tier::Medium => "Medium",
            Tier::High => "High",
        })
    }
}

impl FromStr for Tier {
    type Err = PopulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Low" => Ok(Tier::Low),
            "Medium" => Ok(Tier::Medium),
            "High" => Ok(Tier::High),
            _ => Err(PopulationError::Malformed(format!("unknown tier {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub id: String,
    pub params: PolicyParams,
    pub run_id: String,
    pub training_episodes: u64,
    pub eval_reward: f64,
    pub tier: Option<Tier>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub layout_name: String,
    pub num_agents: usize,
    pub seed: u64,
    /// Seed of the population these checkpoints were trained against, if any.
    pub population_seed: Option<u64>,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// Uniform over all checkpoints.
    #[default]
    Uniform,
    /// Uniform tier, then uniform member of that tier.
    Stratified,
}

#[derive(Debug, Error)]
pub enum PopulationError {
    #[error("tiering needs at least 3 checkpoints, got {found}")]
    TooFewCheckpoints { found: usize },
    #[error("population is empty")]
    EmptyPopulation,
    #[error("eval_episodes must be positive")]
    EvalEpisodesZero,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("manifest version {found} is not supported (expected {MANIFEST_VERSION})")]
    ManifestVersionMismatch { found: String },
    #[error("weights file for checkpoint {id} is missing")]
    MissingWeightsFile { id: String },
    #[error("checksum mismatch for checkpoint {id}")]
    ChecksumMismatch { id: String },
    #[error("duplicate checkpoint id {0}")]
    DuplicateId(String),
    #[error("invalid checkpoint id {0:?}")]
    InvalidId(String),
    #[error("malformed manifest: {0}")]
    Malformed(String),
    #[error("weights for {id}: {source}")]
    Weights { id: String, source: PolicyError },
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Training(#[from] NxError),
}

/// Labels checkpoints Low/Medium/High by rank of `(eval_reward, id)`.
/// Group sizes differ by at most one, extra members going to lower tiers.
/// Input order is preserved.
pub fn assign_tiers(mut checkpoints: Vec<Checkpoint>) -> Result<Vec<Checkpoint>, PopulationError> {
    let n = checkpoints.len();
    if n < 3 {
        return Err(PopulationError::TooFewCheckpoints { found: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&checkpoints[a], &checkpoints[b]);
        ca.eval_reward
            .total_cmp(&cb.eval_reward)
            .then_with(|| ca.id.cmp(&cb.id))
    });
    let sizes = tier_sizes(n);
    let mut rank = 0;
    for (tier, size) in Tier::ALL.into_iter().zip(sizes) {
        for &i in &order[rank..rank + size] {
            checkpoints[i].tier = Some(tier);
        }
        rank += size;
    }
    Ok(checkpoints)
}

/// `[low, medium, high]` group sizes for `n` checkpoints.
pub fn tier_sizes(n: usize) -> [usize; 3] {
    let (base, rem) = (n / 3, n % 3);
    [base + usize::from(rem > 0), base + usize::from(rem > 1), base]
}

/// `x` independent draws with replacement, as checkpoint indices.
pub fn sample_indices<R: Rng + ?Sized>(
    pop: &Population,
    x: usize,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<Vec<usize>, PopulationError> {
    if x == 0 {
        return Ok(Vec::new());
    }
    let len = pop.checkpoints.len();
    if len == 0 {
        return Err(PopulationError::EmptyPopulation);
    }
    match mode {
        SamplingMode::Uniform => Ok((0..x).map(|_| below(rng, len)).collect()),
        SamplingMode::Stratified => {
            let mut groups: Vec<(Option<Tier>, Vec<usize>)> = Vec::new();
            for (i, c) in pop.checkpoints.iter().enumerate() {
                match groups.iter_mut().find(|(t, _)| *t == c.tier) {
                    Some((_, members)) => members.push(i),
                    None => groups.push((c.tier, vec![i])),
                }
            }
            groups.sort_by_key(|(t, _)| *t);
            Ok((0..x)
                .map(|_| {
                    let members = &groups[below(rng, groups.len())].1;
                    members[below(rng, members.len())]
                })
                .collect())
        }
    }
}

/// Uniform index in `0..n`, drawn as u64 so 32-bit targets see the same
/// sequence.
fn below<R: Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    rng.gen_range(0..n as u64) as usize
}

pub fn sample_collaborators<'p, R: Rng + ?Sized>(
    pop: &'p Population,
    x: usize,
    rng: &mut R,
) -> Result<Vec<&'p Checkpoint>, PopulationError> {
    Ok(sample_indices(pop, x, SamplingMode::Uniform, rng)?
        .into_iter()
        .map(|i| &pop.checkpoints[i])
        .collect())
}

/// `checkpoints_per_run` evenly spaced points over `episodes`, both ends included.
pub fn snapshot_points(episodes: u64, count: usize) -> Vec<u64> {
    match count {
        0 => Vec::new(),
        1 => vec![episodes],
        _ => {
            let mut pts: Vec<u64> = (0..count)
                .map(|i| (i as f64 * episodes as f64 / (count - 1) as f64).round() as u64)
                .collect();
            pts.dedup();
            pts
        }
    }
}

/// Mean collective reward of `params` in self-play over `episodes` episodes,
/// shaping off, actions sampled. Episode `e` draws from `seed / path / e`.
pub fn self_play_reward(
    params: &PolicyParams,
    layout: &Layout,
    horizon: u32,
    episodes: usize,
    seed: u64,
    path: &[u64],
) -> Result<f64, NxError> {
    let config = EngineConfig {
        horizon,
        ..EngineConfig::default()
    };
    let spec = RolloutSpec {
        layout,
        config: &config,
        ego: params,
        ego_selection: Selection::Sample,
        population: None,
        record: false,
    };
    let assignment = SeatAssignment::all_ego(layout.num_agents);
    let rewards = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut p = path.to_vec();
            p.push(e as u64);
            let mut rng = seeding::stream(seed, &p);
            run_episode(&assignment, &spec, &mut rng).map(|r| r.reward)
        })
        .collect::<Result<Vec<f64>, NxError>>()?;
    Ok(rewards.iter().sum::<f64>() / episodes as f64)
}

/// Trains `num_runs` independent self-play runs and keeps
/// `checkpoints_per_run` snapshots of each, evaluated and tiered.
///
/// `train` supplies the learner settings; its `x`, `seed` and
/// `checkpoints_to_save` are overridden per run.
pub fn build_population(
    layout: &Layout,
    num_runs: usize,
    checkpoints_per_run: usize,
    train: &EgoTrainConfig,
    eval_episodes: usize,
    seed: u64,
) -> Result<Population, PopulationError> {
    if num_runs == 0 {
        return Err(PopulationError::InvalidArgument("num_runs must be at least 1".into()));
    }
    if checkpoints_per_run < 2 {
        return Err(PopulationError::InvalidArgument(
            "checkpoints_per_run must be at least 2".into(),
        ));
    }
    if eval_episodes == 0 {
        return Err(PopulationError::EvalEpisodesZero);
    }
    let runs = (0..num_runs)
        .into_par_iter()
        .map(|r| {
            let cfg = EgoTrainConfig {
                layout_name: layout.name.clone(),
                n: layout.num_agents,
                x: 0,
                seed: seeding::derive_seed(seed, &[seeding::RUN, r as u64]),
                checkpoints_to_save: checkpoints_per_run,
                ..train.clone()
            };
            train_ego(&cfg, layout, None, |_| {}).map(|out| out.checkpoints)
        })
        .collect::<Result<Vec<_>, NxError>>()?;

    let mut jobs = Vec::new();
    for (r, run) in runs.into_iter().enumerate() {
        for (k, c) in run.into_iter().enumerate() {
            jobs.push((r, k, c));
        }
    }
    let checkpoints = jobs
        .into_par_iter()
        .map(|(r, k, c)| {
            let reward = self_play_reward(
                &c.params,
                layout,
                train.horizon,
                eval_episodes,
                seed,
                &[EVAL, r as u64, k as u64],
            )?;
            Ok(Checkpoint {
                id: format!("r{r}-c{k}"),
                run_id: format!("run{r}"),
                eval_reward: reward,
                tier: None,
                ..c
            })
        })
        .collect::<Result<Vec<_>, NxError>>()?;

    Ok(Population {
        layout_name: layout.name.clone(),
        num_agents: layout.num_agents,
        seed,
        population_seed: None,
        checkpoints: assign_tiers(checkpoints)?,
    })
}

/// A population of scripted policies, one checkpoint per entry of `kinds`,
/// each scored by scripted self-play. Needs at least three entries.
pub fn build_scripted_population(
    layout: &Layout,
    kinds: &[ScriptedKind],
    horizon: u32,
    eval_episodes: usize,
    seed: u64,
) -> Result<Population, PopulationError> {
    if eval_episodes == 0 {
        return Err(PopulationError::EvalEpisodesZero);
    }
    let checkpoints = kinds
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let params = PolicyParams::Scripted(kind);
            let reward = self_play_reward(&params, layout, horizon, eval_episodes, seed, &[EVAL, i as u64])?;
            Ok(Checkpoint {
                id: format!("s{i}-{kind}"),
                params,
                run_id: "scripted".into(),
                training_episodes: 0,
                eval_reward: reward,
                tier: None,
            })
        })
        .collect::<Result<Vec<_>, NxError>>()?;
    Ok(Population {
        layout_name: layout.name.clone(),
        num_agents: layout.num_agents,
        seed,
        population_seed: None,
        checkpoints: assign_tiers(checkpoints)?,
    })
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !id.starts_with('.')
}

/// Weights file text and manifest text, without touching the filesystem.
pub fn manifest_text(pop: &Population) -> Result<(String, Vec<(String, String)>), PopulationError> {
    let mut out = format!(
        "version {MANIFEST_VERSION}\nlayout {}\nn {}\nseed {}\n",
        pop.layout_name, pop.num_agents, pop.seed
    );
    if let Some(s) = pop.population_seed {
        out.push_str(&format!("population_seed {s}\n"));
    }
    let mut files = Vec::with_capacity(pop.checkpoints.len());
    for c in &pop.checkpoints {
        if !valid_id(&c.id) || !valid_id(&c.run_id) {
            return Err(PopulationError::InvalidId(c.id.clone()));
        }
        if files.iter().any(|(id, _): &(String, String)| *id == c.id) {
            return Err(PopulationError::DuplicateId(c.id.clone()));
        }
        let weights = c.params.to_weights_text();
        let tier = c.tier.map_or_else(|| "-".to_string(), |t| t.to_string());
        out.push_str(&format!(
            "checkpoint {} run={} episodes={} eval_reward={:?} tier={} weights=weights/{}.txt fnv1a={:016x}\n",
            c.id,
            c.run_id,
            c.training_episodes,
            c.eval_reward,
            tier,
            c.id,
            fnv1a(weights.as_bytes())
        ));
        files.push((c.id.clone(), weights));
    }
    Ok((out, files))
}

pub fn save_population(pop: &Population, dir: impl AsRef<Path>) -> Result<(), PopulationError> {
    let dir = dir.as_ref();
    let (manifest, files) = manifest_text(pop)?;
    fs::create_dir_all(dir.join("weights"))?;
    for (id, text) in files {
        fs::write(dir.join("weights").join(format!("{id}.txt")), text)?;
    }
    fs::write(dir.join("manifest.txt"), manifest)?;
    Ok(())
}

fn field<'a>(parts: &[&'a str], key: &str) -> Result<&'a str, PopulationError> {
    parts
        .iter()
        .find_map(|p| p.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| PopulationError::Malformed(format!("checkpoint line lacks {key}")))
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T, PopulationError> {
    s.parse()
        .map_err(|_| PopulationError::Malformed(format!("bad {what} {s:?}")))
}

pub fn load_population(dir: impl AsRef<Path>) -> Result<Population, PopulationError> {
    let dir = dir.as_ref();
    let text = fs::read_to_string(dir.join("manifest.txt"))?;
    let mut lines = text.lines();
    let version = lines
        .next()
        .and_then(|l| l.strip_prefix("version "))
        .ok_or_else(|| PopulationError::Malformed("missing version line".into()))?;
    if version.trim() != MANIFEST_VERSION.to_string() {
        return Err(PopulationError::ManifestVersionMismatch {
            found: version.trim().to_string(),
        });
    }

    let mut layout_name = None;
    let mut num_agents = None;
    let mut seed = None;
    let mut population_seed = None;
    let mut checkpoints: Vec<Checkpoint> = Vec::new();
    for line in lines {
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        match key {
            "layout" => layout_name = Some(rest.to_string()),
            "n" => num_agents = Some(parse_num(rest, "n")?),
            "seed" => seed = Some(parse_num(rest, "seed")?),
            "population_seed" => population_seed = Some(parse_num(rest, "population_seed")?),
            "checkpoint" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let id = parts
                    .first()
                    .filter(|id| valid_id(id))
                    .ok_or_else(|| PopulationError::Malformed(format!("bad checkpoint line {line:?}")))?
                    .to_string();
                if checkpoints.iter().any(|c| c.id == id) {
                    return Err(PopulationError::DuplicateId(id));
                }
                let weights_rel = field(&parts, "weights")?;
                let expected = u64::from_str_radix(field(&parts, "fnv1a")?, 16)
                    .map_err(|_| PopulationError::Malformed(format!("bad checksum for {id}")))?;
                let path = dir.join(weights_rel);
                let weights = match fs::read(&path) {
                    Ok(b) => b,
                    Err(e) if e.kind() == io::ErrorKind::NotFound => {
                        return Err(PopulationError::MissingWeightsFile { id })
                    }
                    Err(e) => return Err(e.into()),
                };
                if fnv1a(&weights) != expected {
                    return Err(PopulationError::ChecksumMismatch { id });
                }
                let weights = String::from_utf8(weights)
                    .map_err(|_| PopulationError::ChecksumMismatch { id: id.clone() })?;
                let params = PolicyParams::from_weights_text(&weights).map_err(|source| {
                    PopulationError::Weights {
                        id: id.clone(),
                        source,
                    }
                })?;
                let tier = match field(&parts, "tier")? {
                    "-" => None,
                    t => Some(t.parse()?),
                };
                let eval_reward: f64 = parse_num(field(&parts, "eval_reward")?, "eval_reward")?;
                if !eval_reward.is_finite() {
                    return Err(PopulationError::Malformed(format!("non-finite eval_reward for {id}")));
                }
                checkpoints.push(Checkpoint {
                    run_id: field(&parts, "run")?.to_string(),
                    training_episodes: parse_num(field(&parts, "episodes")?, "episodes")?,
                    eval_reward,
                    tier,
                    params,
                    id,
                });
            }
            "" => {}
            other => return Err(PopulationError::Malformed(format!("unknown key {other:?}"))),
        }
    }
    Ok(Population {
        layout_name: layout_name.ok_or_else(|| PopulationError::Malformed("missing layout".into()))?,
        num_agents: num_agents.ok_or_else(|| PopulationError::Malformed("missing n".into()))?,
        seed: seed.ok_or_else(|| PopulationError::Malformed("missing seed".into()))?,
        population_seed,
        checkpoints,
    })
}
