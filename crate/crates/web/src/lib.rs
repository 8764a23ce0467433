//! Browser bindings for the demo page in `www/`.
//!
//! Errors cross the boundary as plain strings, which keeps every function
//! callable from native tests as well.

use nxplay::engine::Event;
use nxplay::eval::{emit_report, ratio_sweep, Ego, EvalConfig, ReportFormat};
use nxplay::layout::check_reachability;
use nxplay::policy::{action_distribution, scripted_policy, PolicyContext, PolicyParams, ScriptedKind};
use nxplay::population::build_scripted_population;
use nxplay::render::render_frame;
use nxplay::seeding;
use nxplay::{reset, Action, EngineConfig, GameState, Layout};
use wasm_bindgen::prelude::*;

/// Builtin texts keep their names; anything else is "custom".
fn parse(text: &str) -> Result<Layout, String> {
    let layout = Layout::parse(text).map_err(|e| e.to_string())?;
    let name = nxplay::layouts::ALL
        .iter()
        .find(|(_, t)| Layout::parse(t).ok().as_ref() == Some(&layout))
        .map_or("custom", |(n, _)| n);
    Ok(layout.with_name(name))
}

/// One line per finding, or a summary when the layout is playable.
#[wasm_bindgen]
pub fn validate_layout(text: &str) -> Result<String, String> {
    let layout = parse(text)?;
    let findings = check_reachability(&layout);
    if findings.is_empty() {
        return Ok(format!(
            "ok: {}x{}, {} seats, every station reachable",
            layout.width, layout.height, layout.num_agents
        ));
    }
    Ok(findings
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join("\n"))
}

/// A kitchen played by scripted agents, one tick per [`Simulation::step`].
#[wasm_bindgen]
pub struct Simulation {
    layout: Layout,
    config: EngineConfig,
    policies: Vec<PolicyParams>,
    state: GameState,
    rng: seeding::Rng,
    events: Vec<Event>,
    shaped: Vec<f64>,
}

#[wasm_bindgen]
impl Simulation {
    /// `policies` is a comma-separated list of scripted policy names; the
    /// last one fills any remaining seats.
    #[wasm_bindgen(constructor)]
    pub fn new(layout_text: &str, policies: &str, seed: u32) -> Result<Simulation, String> {
        let layout = parse(layout_text)?;
        let named = policies
            .split(',')
            .map(|s| scripted_policy(s.trim()).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        let last = named.last().cloned().ok_or("no policies given")?;
        let policies = (0..layout.num_agents)
            .map(|i| named.get(i).cloned().unwrap_or_else(|| last.clone()))
            .collect();
        let n = layout.num_agents;
        Ok(Simulation {
            state: reset(&layout),
            config: EngineConfig::default(),
            policies,
            rng: seeding::stream(seed as u64, &[]),
            events: Vec::new(),
            shaped: vec![0.0; n],
            layout,
        })
    }

    /// Advances one tick and returns the new frame.
    pub fn step(&mut self) -> String {
        if self.state.tick >= self.config.horizon {
            return self.frame();
        }
        let actions: Vec<Action> = (0..self.layout.num_agents)
            .map(|seat| {
                let ctx = PolicyContext {
                    state: &self.state,
                    layout: &self.layout,
                    seat,
                };
                action_distribution(&self.policies[seat], &[], ctx)
                    .expect("scripted policies need no features")
                    .sample(&mut self.rng)
            })
            .collect();
        self.events.clear();
        self.state
            .advance(&actions, &self.layout, &self.config, &mut self.events, &mut self.shaped)
            .expect("one action per seat");
        self.frame()
    }

    pub fn frame(&self) -> String {
        render_frame(&self.state, &self.layout)
    }

    pub fn tick(&self) -> u32 {
        self.state.tick
    }

    pub fn score(&self) -> f64 {
        self.state.score
    }

    pub fn done(&self) -> bool {
        self.state.tick >= self.config.horizon
    }
}

/// CSV report of a scripted ego against the three scripted kinds, for the
/// comma-separated `x_values`.
#[wasm_bindgen]
pub fn scripted_sweep(
    layout_text: &str,
    ego: &str,
    x_values: &str,
    episodes: u32,
    seed: u32,
) -> Result<String, String> {
    let layout = parse(layout_text)?;
    let ego = Ego::new(scripted_policy(ego.trim()).map_err(|e| e.to_string())?);
    let x_values = x_values
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().map_err(|e| format!("x value {s:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let seed = seed as u64;
    let pop = build_scripted_population(&layout, &ScriptedKind::ALL, 400, 1, seed)
        .map_err(|e| e.to_string())?;
    let cfg = EvalConfig {
        layout_name: layout.name.clone(),
        n: layout.num_agents,
        x_values,
        episodes_per_cell: episodes as usize,
        seed,
        ..EvalConfig::default()
    };
    let report = ratio_sweep(&cfg, &ego, &pop, &layout).map_err(|e| e.to_string())?;
    String::from_utf8(emit_report(&report, ReportFormat::Csv)).map_err(|e| e.to_string())
}

/// Text of a builtin layout, or an empty string.
#[wasm_bindgen]
pub fn builtin_layout(name: &str) -> String {
    nxplay::layouts::ALL
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| text.to_string())
        .unwrap_or_default()
}
