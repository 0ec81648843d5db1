//! WebAssembly bindings for the browser demo.
//!
//! Every export takes and returns plain numbers or JSON strings so the page
//! needs no generated glue beyond what `wasm-bindgen` emits.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use ltr_core::diffusion::{AlphaTable, ControlInstance, Mode};
use ltr_core::election::{margin, ScoringRule};
use ltr_core::evaluation::expected_mov;
use ltr_core::harness::{assign_random_preferences, scale_free_graph};
use ltr_core::live_edge::{sample_live_edge, ShiftDistribution};
use ltr_core::optimizer::{random_seeds, solve, top_degree_seeds, Estimator};
use ltr_core::seeding::rng_for;
use ltr_core::{InfluenceGraph, WeightMode};

/// `P(r, ℓ)` for `ℓ = 1..=r`.
#[wasm_bindgen]
pub fn shift_distribution(r: usize, alpha: f64) -> Vec<f64> {
    ShiftDistribution::upward(r.max(1), alpha.clamp(0.0, 1.0)).probs().to_vec()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct DemoParams {
    pub nodes: usize,
    pub attach: usize,
    pub candidates: usize,
    pub rule: String,
    pub alpha: f64,
    pub budget: usize,
    pub samples: usize,
    pub destructive: bool,
    pub seed: u64,
}

impl Default for DemoParams {
    fn default() -> Self {
        Self {
            nodes: 60,
            attach: 2,
            candidates: 3,
            rule: "plurality".into(),
            alpha: 1.0,
            budget: 4,
            samples: 200,
            destructive: false,
            seed: 1,
        }
    }
}

#[derive(Serialize)]
struct StrategyResult {
    name: &'static str,
    seeds: Vec<usize>,
    expected_mov: f64,
    stderr: f64,
    expected_scores: Vec<f64>,
}

#[derive(Serialize)]
struct Demo {
    nodes: usize,
    edges: Vec<(usize, usize, f64)>,
    /// Position of the target in every node's ranking (1-based).
    target_position: Vec<usize>,
    /// Estimated probability that each node is reached from the greedy seeds.
    reach: Vec<f64>,
    gains: Vec<f64>,
    mu_empty: i64,
    strategies: Vec<StrategyResult>,
}

fn build(params: &DemoParams) -> Result<ControlInstance, String> {
    let graph = scale_free_graph(params.nodes, params.attach, WeightMode::UniformByInDegree, params.seed)
        .map_err(|e| e.to_string())?;
    let m = params.candidates;
    let profile = assign_random_preferences(params.nodes, m, params.seed ^ 0x9e37).map_err(|e| e.to_string())?;
    ControlInstance::new(
        Arc::new(graph),
        profile,
        ScoringRule::parse(&params.rule, m).map_err(|e| e.to_string())?,
        0,
        AlphaTable::constant(m, params.alpha).map_err(|e| e.to_string())?,
        params.budget.min(params.nodes),
        if params.destructive { Mode::Destructive } else { Mode::Constructive },
    )
    .map_err(|e| e.to_string())
}

fn reach_frequencies(graph: &InfluenceGraph, seeds: &[usize], samples: usize, seed: u64) -> Vec<f64> {
    let n = graph.node_count();
    let mut hits = vec![0usize; n];
    let mut reached = vec![false; n];
    for i in 0..samples {
        let mut rng = rng_for(seed, &[i as u64]);
        reached.iter_mut().for_each(|r| *r = false);
        sample_live_edge(graph, &mut rng).children().mark_reachable(seeds, &mut reached);
        for (h, &r) in hits.iter_mut().zip(&reached) {
            *h += r as usize;
        }
    }
    hits.into_iter().map(|h| h as f64 / samples.max(1) as f64).collect()
}

fn run_demo(params: &DemoParams) -> Result<Demo, String> {
    let inst = build(params)?;
    let est = Estimator::new(params.samples, params.seed);
    let greedy = solve(&inst, &est).map_err(|e| e.to_string())?;
    let graph = inst.graph();
    let candidates = [
        ("greedy", greedy.nodes.clone()),
        ("degree", top_degree_seeds(graph, inst.budget())),
        ("random", random_seeds(graph.node_count(), inst.budget(), params.seed)),
    ];
    let eval = Estimator::new(params.samples, params.seed.wrapping_add(1));
    let strategies = candidates
        .into_iter()
        .map(|(name, seeds)| {
            let r = expected_mov(&inst, &seeds, &eval);
            StrategyResult { name, seeds, expected_mov: r.expected_mov, stderr: r.stderr, expected_scores: r.expected_scores }
        })
        .collect::<Vec<_>>();
    Ok(Demo {
        nodes: graph.node_count(),
        edges: graph.edges().iter().map(|e| (e.source, e.target, e.weight)).collect(),
        target_position: (0..graph.node_count()).map(|v| inst.profile().position(v, 0)).collect(),
        reach: reach_frequencies(graph, &greedy.nodes, params.samples, params.seed.wrapping_add(2)),
        gains: greedy.gains,
        mu_empty: margin(inst.profile(), inst.rule(), inst.target()),
        strategies,
    })
}

fn parse_params(json: &str) -> Result<DemoParams, String> {
    if json.trim().is_empty() {
        return Ok(DemoParams::default());
    }
    serde_json::from_str(json).map_err(|e| e.to_string())
}

fn respond<T: Serialize>(result: Result<T, String>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e),
    }
}

fn error_json(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}

/// Builds a random scale-free instance, selects seeds greedily and compares
/// them with the degree and random baselines. Returns JSON.
#[wasm_bindgen]
pub fn optimize_demo(params_json: &str) -> String {
    respond(parse_params(params_json).and_then(|p| run_demo(&p)))
}

#[derive(Serialize)]
struct SweepPoint {
    alpha: f64,
    greedy: f64,
    degree: f64,
    random: f64,
}

/// Expected MoV of each strategy for α = 0, 0.1, …, 1 on the demo instance.
#[wasm_bindgen]
pub fn alpha_sweep(params_json: &str) -> String {
    let result = parse_params(params_json).and_then(|params| {
        let base = build(&params)?;
        let est = Estimator::new(params.samples, params.seed);
        let eval = Estimator::new(params.samples, params.seed.wrapping_add(1));
        let n = base.node_count();
        let degree = top_degree_seeds(base.graph(), base.budget());
        let random = random_seeds(n, base.budget(), params.seed);
        (0..=10)
            .map(|k| {
                let alpha = k as f64 / 10.0;
                let inst = base
                    .with_alpha(AlphaTable::constant(base.candidate_count(), alpha).map_err(|e| e.to_string())?)
                    .map_err(|e| e.to_string())?;
                let greedy = solve(&inst, &est).map_err(|e| e.to_string())?.nodes;
                let mov = |s: &[usize]| expected_mov(&inst, s, &eval).expected_mov;
                Ok(SweepPoint { alpha, greedy: mov(&greedy), degree: mov(&degree), random: mov(&random) })
            })
            .collect::<Result<Vec<_>, String>>()
    });
    respond(result)
}
