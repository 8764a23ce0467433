use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use nxplay::eval::{emit_report, ratio_sweep, Ego, EvalConfig, ReportFormat};
use nxplay::layout::Layout;
use nxplay::layouts;
use nxplay::nxplay::{check_x, train_ego, EgoTrainConfig, Selection};
use nxplay::policy::ScriptedKind;
use nxplay::population::{
    build_population, build_scripted_population, load_population, save_population, Population,
    SamplingMode,
};
use nxplay::render::render_frame;
use nxplay::replay::{header_for, read_replay, reconstruct, write_replay};
use nxplay::{check_reachability, EngineConfig};

#[derive(Parser, Debug)]
#[command(name = "nxplay", version, about = "N-player cooking engine and N-XPlay pipeline")]
struct Cli {
    /// Root seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress the config echo and progress lines.
    #[arg(long, global = true)]
    quiet: bool,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a checkpoint population from independent self-play runs.
    Population(PopulationArgs),
    /// Train an ego team with N-X learning seats.
    Train(TrainArgs),
    /// Evaluate an ego checkpoint against an unseen population.
    Eval(EvalArgs),
    /// Re-simulate a replay file and print its frames.
    Replay(ReplayArgs),
    /// Check a layout file.
    ValidateLayout(ValidateArgs),
}

#[derive(Args, Debug)]
struct LearnerArgs {
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0.99)]
    gamma: f64,
    #[arg(long, default_value_t = 400)]
    horizon: u32,
    /// Episodes per update.
    #[arg(long, default_value_t = 1)]
    batch: usize,
    /// Train without shaped rewards.
    #[arg(long)]
    no_shaping: bool,
}

#[derive(Args, Debug)]
struct PopulationArgs {
    /// Layout file, or the name of a shipped layout.
    #[arg(long)]
    layout: String,
    #[arg(long, default_value_t = 4)]
    runs: usize,
    #[arg(long, default_value_t = 3)]
    checkpoints: usize,
    /// Training episodes per run.
    #[arg(long, default_value_t = 2000)]
    episodes: u64,
    #[arg(long, default_value_t = 10)]
    eval_episodes: usize,
    /// Build from scripted policies instead of training (e.g. greedy_cook,random,stationary).
    #[arg(long, value_delimiter = ',')]
    scripted: Vec<String>,
    #[command(flatten)]
    learner: LearnerArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SamplingArg {
    Uniform,
    Stratified,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    layout: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    x: usize,
    #[arg(long)]
    episodes: u64,
    #[arg(long)]
    population: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    checkpoints: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    sampling: SamplingArg,
    #[command(flatten)]
    learner: LearnerArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Directory written by `train`.
    #[arg(long)]
    ego: PathBuf,
    /// Checkpoint id inside the ego directory (default: the most trained).
    #[arg(long)]
    checkpoint: Option<String>,
    /// Unseen population directory.
    #[arg(long)]
    population: PathBuf,
    #[arg(long)]
    layout: String,
    #[arg(long)]
    n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long, default_value_t = 400)]
    horizon: u32,
    /// Ego picks its most likely action instead of sampling.
    #[arg(long)]
    greedy: bool,
    /// Report path; `.json` gives the structured form, anything else CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    path: PathBuf,
    /// Frames per second; 0 prints without pausing.
    #[arg(long, default_value_t = 0.0)]
    fps: f64,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    path: PathBuf,
}

enum Failure {
    Usage(String),
    Domain(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Domain(e)
    }
}

fn load_layout(spec: &str) -> anyhow::Result<Layout> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(l) = layouts::builtin(spec) {
            return Ok(l);
        }
    }
    Layout::from_file(path).with_context(|| format!("layout {spec}"))
}

fn log(quiet: bool, line: impl AsRef<str>) {
    if !quiet {
        eprintln!("{}", line.as_ref());
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .expect("thread pool is configured once");
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            let _ = Cli::command().print_help();
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let quiet = cli.quiet;
    if !quiet {
        eprintln!("config: seed={} threads={:?} {:?}", cli.seed, cli.threads, cli.command);
    }
    match &cli.command {
        Command::Population(a) => population(a, cli.seed, quiet),
        Command::Train(a) => train(a, cli.seed, quiet),
        Command::Eval(a) => eval(a, cli.seed, quiet),
        Command::Replay(a) => replay(a),
        Command::ValidateLayout(a) => validate(a, quiet),
    }
}

fn learner_config(l: &LearnerArgs, layout: &Layout, seed: u64) -> EgoTrainConfig {
    EgoTrainConfig {
        layout_name: layout.name.clone(),
        n: layout.num_agents,
        lr: l.lr,
        gamma: l.gamma,
        horizon: l.horizon,
        batch_episodes: l.batch,
        shaping: !l.no_shaping,
        seed,
        ..EgoTrainConfig::default()
    }
}

fn population(a: &PopulationArgs, seed: u64, quiet: bool) -> Result<(), Failure> {
    let layout = load_layout(&a.layout)?;
    let pop = if a.scripted.is_empty() {
        let mut base = learner_config(&a.learner, &layout, seed);
        base.total_episodes = a.episodes;
        build_population(&layout, a.runs, a.checkpoints, &base, a.eval_episodes, seed)
            .map_err(anyhow::Error::from)?
    } else {
        let kinds = a
            .scripted
            .iter()
            .map(|s| s.parse::<ScriptedKind>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        build_scripted_population(&layout, &kinds, a.learner.horizon, a.eval_episodes, seed)
            .map_err(anyhow::Error::from)?
    };
    save_population(&pop, &a.out).map_err(anyhow::Error::from)?;
    for c in &pop.checkpoints {
        log(
            quiet,
            format!(
                "{} eval_reward {:.2} tier {}",
                c.id,
                c.eval_reward,
                c.tier.map_or("-".to_string(), |t| t.to_string())
            ),
        );
    }
    Ok(())
}

fn train(a: &TrainArgs, seed: u64, quiet: bool) -> Result<(), Failure> {
    check_x(a.n, a.x).map_err(|_| Failure::Usage("x must satisfy 0 <= x <= n-1".into()))?;
    if a.x > 0 && a.population.is_none() {
        return Err(Failure::Usage("--population is required when x > 0".into()));
    }
    let layout = load_layout(&a.layout)?;
    if layout.num_agents != a.n {
        return Err(Failure::Domain(anyhow!(
            "layout {} has {} seats, --n is {}",
            layout.name,
            layout.num_agents,
            a.n
        )));
    }
    let pop: Option<Population> = a
        .population
        .as_ref()
        .filter(|_| a.x > 0)
        .map(load_population)
        .transpose()
        .map_err(anyhow::Error::from)?;
    let cfg = EgoTrainConfig {
        x: a.x,
        total_episodes: a.episodes,
        checkpoints_to_save: a.checkpoints,
        sampling: match a.sampling {
            SamplingArg::Uniform => SamplingMode::Uniform,
            SamplingArg::Stratified => SamplingMode::Stratified,
        },
        ..learner_config(&a.learner, &layout, seed)
    };
    let out = train_ego(&cfg, &layout, pop.as_ref(), |p| {
        if quiet {
            return;
        }
        eprintln!(
            "episode {}, mean_reward_ema {:.4}, wallclock {:.2}s",
            p.episode,
            p.mean_reward_ema,
            p.elapsed.as_secs_f64()
        );
    })
    .map_err(anyhow::Error::from)?;

    let ego = Population {
        layout_name: layout.name.clone(),
        num_agents: layout.num_agents,
        seed,
        population_seed: pop.as_ref().map(|p| p.seed),
        checkpoints: out.checkpoints,
    };
    save_population(&ego, &a.out).map_err(anyhow::Error::from)?;
    let engine = EngineConfig {
        horizon: cfg.horizon,
        ..EngineConfig::default()
    }
    .with_shaping(cfg.shaping);
    fs::write(
        a.out.join("replay.ndjson"),
        write_replay(&header_for(&layout, &engine), &out.last_episode),
    )
    .context("writing replay")?;
    Ok(())
}

fn eval(a: &EvalArgs, seed: u64, quiet: bool) -> Result<(), Failure> {
    for &x in &a.x {
        check_x(a.n, x).map_err(|_| Failure::Usage("x must satisfy 0 <= x <= n-1".into()))?;
    }
    let layout = load_layout(&a.layout)?;
    let ego_dir = load_population(&a.ego).map_err(anyhow::Error::from)?;
    let unseen = load_population(&a.population).map_err(anyhow::Error::from)?;
    let chosen = match &a.checkpoint {
        Some(id) => ego_dir
            .checkpoints
            .iter()
            .find(|c| &c.id == id)
            .ok_or_else(|| anyhow!("no checkpoint {id} in {}", a.ego.display()))?,
        None => ego_dir
            .checkpoints
            .iter()
            .max_by(|p, q| {
                p.training_episodes
                    .cmp(&q.training_episodes)
                    .then_with(|| q.id.cmp(&p.id))
            })
            .ok_or_else(|| anyhow!("{} holds no checkpoints", a.ego.display()))?,
    };
    log(quiet, format!("ego checkpoint {}", chosen.id));
    let ego = Ego {
        population_seed: ego_dir.population_seed,
        selection: if a.greedy {
            Selection::Greedy
        } else {
            Selection::Sample
        },
        ..Ego::new(chosen.params.clone())
    };
    let cfg = EvalConfig {
        layout_name: layout.name.clone(),
        n: a.n,
        x_values: a.x.clone(),
        episodes_per_cell: a.episodes,
        seed,
        horizon: a.horizon,
    };
    let report = ratio_sweep(&cfg, &ego, &unseen, &layout).map_err(anyhow::Error::from)?;
    match &a.out {
        Some(path) => {
            let format = if path.extension().is_some_and(|e| e == "json") {
                ReportFormat::Structured
            } else {
                ReportFormat::Csv
            };
            fs::write(path, emit_report(&report, format))
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => print!(
            "{}",
            String::from_utf8(emit_report(&report, ReportFormat::Csv)).expect("csv is utf-8")
        ),
    }
    Ok(())
}

fn replay(a: &ReplayArgs) -> Result<(), Failure> {
    if !(a.fps >= 0.0 && a.fps.is_finite()) {
        return Err(Failure::Usage("--fps must be a non-negative number".into()));
    }
    let text = fs::read_to_string(&a.path).with_context(|| format!("reading {}", a.path.display()))?;
    let (header, ticks) = read_replay(&text).map_err(anyhow::Error::from)?;
    let (layout, states) = reconstruct(&header, &ticks).map_err(anyhow::Error::from)?;
    let pause = (a.fps > 0.0).then(|| Duration::from_secs_f64(1.0 / a.fps));
    let mut out = io::stdout().lock();
    for (i, state) in states.iter().enumerate() {
        let caption = match i.checked_sub(1).map(|t| &ticks[t]) {
            None => "start".to_string(),
            Some(t) => format!(
                "tick {} actions {} reward {}",
                t.tick,
                t.actions.iter().map(|a| a.code()).collect::<String>(),
                t.reward
            ),
        };
        let frame = format!(
            "{caption}  score {}  deliveries {}\n{}\n",
            state.score,
            state.deliveries,
            render_frame(state, &layout)
        );
        match out.write_all(frame.as_bytes()).and_then(|()| out.flush()) {
            Ok(()) => {}
            // The reader went away (e.g. piped into `head`).
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => return Ok(()),
            Err(e) => return Err(anyhow::Error::from(e).into()),
        }
        if let Some(p) = pause {
            thread::sleep(p);
        }
    }
    Ok(())
}

fn validate(a: &ValidateArgs, quiet: bool) -> Result<(), Failure> {
    let layout = Layout::from_file(&a.path).map_err(|e| anyhow!("{}: {e}", a.path.display()))?;
    let findings = check_reachability(&layout);
    if findings.is_empty() {
        if !quiet {
            println!(
                "{}: ok ({}x{}, {} seats)",
                a.path.display(),
                layout.width,
                layout.height,
                layout.num_agents
            );
        }
        return Ok(());
    }
    for f in &findings {
        println!("{}: {f}", a.path.display());
    }
    Err(Failure::Domain(anyhow!("{} unreachable station(s)", findings.len())))
}
