//! Cross-play evaluation against an unseen population.
//!
//! Episode `e` of the cell with `x` unseen teammates draws from
//! `stream(seed, [EVAL, x, e])`, so a cell's row depends only on its own
//! configuration, not on the other cells of a sweep or on thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EngineConfig;
use crate::layout::Layout;
use crate::nxplay::{check_x, compose_episode, run_episode, NxError, RolloutSpec, Selection};
use crate::policy::PolicyParams;
use crate::population::{Population, SamplingMode};
use crate::seeding::{self, EVAL};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unseen population seed {seed} equals the ego's training population seed")]
    SeedCollision { seed: u64 },
    #[error("population is for {found} agents, layout has {expected}")]
    PopulationMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Nx(#[from] NxError),
    #[error("report: {0}")]
    Report(String),
}

/// The policy under evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Ego {
    pub params: PolicyParams,
    /// Seed of the population it was trained against, if any.
    pub population_seed: Option<u64>,
    /// Sampling by default: the argmax of a linear policy tends to lock into
    /// a loop and never deliver.
    pub selection: Selection,
}

impl Ego {
    pub fn new(params: PolicyParams) -> Self {
        Ego {
            params,
            population_seed: None,
            selection: Selection::Sample,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub layout_name: String,
    pub n: usize,
    pub x_values: Vec<usize>,
    pub episodes_per_cell: usize,
    pub seed: u64,
    pub horizon: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            layout_name: String::new(),
            n: 2,
            x_values: Vec::new(),
            episodes_per_cell: 100,
            seed: 0,
            horizon: EngineConfig::default().horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub layout_name: String,
    pub n: usize,
    pub x: usize,
    pub ratio: f64,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-episode collective rewards for one cell. Shaping is off; the ego acts
/// per [`Ego::selection`] and collaborators follow their own rules.
pub fn cell_rewards(
    ego: &Ego,
    pop: &Population,
    layout: &Layout,
    x: usize,
    episodes: usize,
    seed: u64,
    horizon: u32,
) -> Result<Vec<f64>, EvalError> {
    let n = layout.num_agents;
    check_x(n, x)?;
    if x > 0 {
        if pop.num_agents != n {
            return Err(EvalError::PopulationMismatch {
                expected: n,
                found: pop.num_agents,
            });
        }
        if ego.population_seed == Some(pop.seed) {
            return Err(EvalError::SeedCollision { seed: pop.seed });
        }
    }
    let config = EngineConfig {
        horizon,
        ..EngineConfig::default()
    };
    let spec = RolloutSpec {
        layout,
        config: &config,
        ego: &ego.params,
        ego_selection: ego.selection,
        population: Some(pop),
        record: false,
    };
    (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut rng = seeding::stream(seed, &[EVAL, x as u64, e as u64]);
            let assignment = compose_episode(n, x, Some(pop), SamplingMode::Uniform, &mut rng)?;
            Ok(run_episode(&assignment, &spec, &mut rng)?.reward)
        })
        .collect()
}

pub fn evaluate_cell(
    ego: &Ego,
    pop: &Population,
    layout: &Layout,
    x: usize,
    episodes: usize,
    seed: u64,
    horizon: u32,
) -> Result<EvalRow, EvalError> {
    let rewards = cell_rewards(ego, pop, layout, x, episodes, seed, horizon)?;
    let (mean_reward, std_reward) = mean_std(&rewards);
    let n = layout.num_agents;
    Ok(EvalRow {
        layout_name: layout.name.clone(),
        n,
        x,
        ratio: x as f64 / n as f64,
        mean_reward,
        std_reward,
        episodes,
    })
}

/// One row per entry of `x_values`, ordered by `x`.
pub fn ratio_sweep(
    cfg: &EvalConfig,
    ego: &Ego,
    pop: &Population,
    layout: &Layout,
) -> Result<EvalReport, EvalError> {
    if cfg.n != layout.num_agents {
        return Err(EvalError::Nx(NxError::SeatCountMismatch {
            n: cfg.n,
            layout: layout.num_agents,
        }));
    }
    let mut xs = cfg.x_values.clone();
    xs.sort_unstable();
    let rows = xs
        .into_iter()
        .map(|x| evaluate_cell(ego, pop, layout, x, cfg.episodes_per_cell, cfg.seed, cfg.horizon))
        .collect::<Result<_, _>>()?;
    Ok(EvalReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    /// One JSON object per report, loadable with [`load_report`].
    Structured,
}

pub const CSV_HEADER: &str = "layout,n,x,ratio,mean_reward,std_reward,episodes";

pub fn emit_report(report: &EvalReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in &report.rows {
                out.push_str(&format!(
                    "{},{},{},{:.4},{},{},{}\n",
                    r.layout_name, r.n, r.x, r.ratio, r.mean_reward, r.std_reward, r.episodes
                ));
            }
            out.into_bytes()
        }
        ReportFormat::Structured => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            out
        }
    }
}

pub fn load_report(bytes: &[u8]) -> Result<EvalReport, EvalError> {
    serde_json::from_slice(bytes).map_err(|e| EvalError::Report(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layouts;
    use crate::policy::ScriptedKind;
    use crate::population::build_scripted_population;

    fn fixture() -> (Layout, Population) {
        let l = layouts::builtin("open_room").unwrap();
        let pop = build_scripted_population(&l, &ScriptedKind::ALL, 100, 2, 21).unwrap();
        (l, pop)
    }

    #[test]
    fn deterministic_ego_at_x0_has_zero_std() {
        let (l, pop) = fixture();
        let ego = Ego::new(PolicyParams::Scripted(ScriptedKind::GreedyCook));
        let row = evaluate_cell(&ego, &pop, &l, 0, 5, 3, 100).unwrap();
        assert_eq!(row.std_reward, 0.0);
        assert_eq!(row, evaluate_cell(&ego, &pop, &l, 0, 5, 3, 100).unwrap());
    }

    #[test]
    fn sweep_rows_and_ratios() {
        let l = layouts::builtin("wide_open5").unwrap();
        let pop = build_scripted_population(&l, &ScriptedKind::ALL, 40, 1, 2).unwrap();
        let ego = Ego {
            population_seed: Some(99),
            ..Ego::new(PolicyParams::Scripted(ScriptedKind::Stationary))
        };
        let cfg = EvalConfig {
            n: 5,
            x_values: vec![4, 1, 3],
            episodes_per_cell: 2,
            horizon: 40,
            ..EvalConfig::default()
        };
        let report = ratio_sweep(&cfg, &ego, &pop, &l).unwrap();
        let csv = String::from_utf8(emit_report(&report, ReportFormat::Csv)).unwrap();
        let ratios: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
        assert_eq!(ratios, ["0.2000", "0.6000", "0.8000"]);
        assert_eq!(csv.lines().count(), 4);
        let bytes = emit_report(&report, ReportFormat::Structured);
        assert_eq!(load_report(&bytes).unwrap(), report);
        let empty = ratio_sweep(&EvalConfig { x_values: vec![], ..cfg }, &ego, &pop, &l).unwrap();
        assert!(empty.rows.is_empty());
    }

    #[test]
    fn seed_collision() {
        let (l, pop) = fixture();
        let ego = Ego {
            population_seed: Some(pop.seed),
            ..Ego::new(PolicyParams::Scripted(ScriptedKind::Stationary))
        };
        assert!(matches!(
            evaluate_cell(&ego, &pop, &l, 1, 1, 0, 10),
            Err(EvalError::SeedCollision { .. })
        ));
    }
}
