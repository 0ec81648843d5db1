use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ltr_core::diffusion::{AlphaTable, ControlInstance, Mode};
use ltr_core::election::{parse_preferences, ParsedPreferences, ScoringRule};
use ltr_core::evaluation::{evaluate, simulate};
use ltr_core::graph::{self, InfluenceGraph, NodeId, WeightMode};
use ltr_core::harness::{run_experiment, ExperimentConfig};
use ltr_core::optimizer::{solve, Estimator, DEFAULT_SAMPLES};

#[derive(Parser)]
#[command(name = "ltr", version, about = "Election control under linear threshold ranking")]
struct Cli {
    /// Worker threads (overrides LTR_THREADS).
    #[arg(long, global = true, env = "LTR_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load an edge list and report invariant violations.
    Validate(GraphArgs),
    /// Run LTR simulations for a fixed seed set; one CSV row per run.
    Simulate(SimulateArgs),
    /// Choose seeds greedily.
    Optimize(OptimizeArgs),
    /// Expected margin of victory and probability of victory for a seed set.
    Evaluate(EvaluateArgs),
    /// Run a parameter sweep described by a TOML config.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Treat every line as an undirected edge (both directions).
    #[arg(long)]
    undirected: bool,
    #[arg(long, default_value = "uniform")]
    weights: WeightMode,
    /// Master seed for weights and simulation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InstanceArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    prefs: PathBuf,
    /// plurality | approval:t | veto:t | borda | custom:s1,s2,...
    #[arg(long, default_value = "plurality")]
    rule: String,
    /// Target candidate, by label or id.
    #[arg(long, default_value = "0")]
    target: String,
    /// One shift rate, or one per position.
    #[arg(long, default_value = "1.0")]
    alpha: String,
    #[arg(long, default_value = "constructive")]
    mode: Mode,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Comma-separated seed node labels.
    #[arg(long, default_value = "")]
    seeds: String,
    #[arg(long, default_value_t = 20)]
    runs: usize,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value = "")]
    seeds: String,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 20)]
    pov_runs: usize,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output`).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
    let result = match cli.command {
        Command::Validate(args) => validate(args),
        Command::Simulate(args) => simulate_cmd(args),
        Command::Optimize(args) => optimize(args),
        Command::Evaluate(args) => evaluate_cmd(args),
        Command::Experiment(args) => experiment(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn open(path: &PathBuf) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn load_graph(args: &GraphArgs) -> Result<InfluenceGraph> {
    graph::load_edge_list(open(&args.graph)?, !args.undirected, args.weights, args.seed)
        .with_context(|| format!("loading {}", args.graph.display()))
}

struct Loaded {
    instance: ControlInstance,
    prefs: ParsedPreferences,
    seed: u64,
}

fn load_instance(args: &InstanceArgs, budget: usize) -> Result<Loaded> {
    let graph = load_graph(&args.graph)?;
    let prefs = parse_preferences(open(&args.prefs)?, &graph).with_context(|| format!("loading {}", args.prefs.display()))?;
    let m = prefs.profile.candidate_count();
    let target = prefs
        .candidate(&args.target)
        .with_context(|| format!("unknown target candidate `{}`", args.target))?;
    let instance = ControlInstance::new(
        Arc::new(graph),
        prefs.profile.clone(),
        ScoringRule::parse(&args.rule, m)?,
        target,
        AlphaTable::parse(&args.alpha, m)?,
        budget,
        args.mode,
    )?;
    Ok(Loaded { instance, prefs, seed: args.graph.seed })
}

fn parse_seeds(text: &str, graph: &InfluenceGraph) -> Result<Vec<NodeId>> {
    let index = graph.label_index();
    let mut seeds = Vec::new();
    for label in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let v = *index.get(label).with_context(|| format!("unknown seed node `{label}`"))?;
        if !seeds.contains(&v) {
            seeds.push(v);
        }
    }
    Ok(seeds)
}

fn csv_writer() -> csv::Writer<io::StdoutLock<'static>> {
    csv::Writer::from_writer(io::stdout().lock())
}

fn validate(args: GraphArgs) -> Result<i32> {
    let graph = graph::parse_edge_list(open(&args.graph)?, !args.undirected, args.weights, args.seed)
        .with_context(|| format!("loading {}", args.graph.display()))?;
    let report = graph::validate(&graph);
    let mut out = io::stdout().lock();
    writeln!(out, "nodes: {}", graph.node_count())?;
    writeln!(out, "edges: {}", graph.edge_count())?;
    if report.is_valid() {
        writeln!(out, "valid")?;
        return Ok(0);
    }
    writeln!(out, "violations: {}", report.violations.len())?;
    for v in &report.violations {
        writeln!(out, "  {}", v.describe(&graph))?;
    }
    Ok(1)
}

fn simulate_cmd(args: SimulateArgs) -> Result<i32> {
    let loaded = load_instance(&args.instance, 0)?;
    let seeds = parse_seeds(&args.seeds, loaded.instance.graph())?;
    let mut w = csv_writer();
    w.write_record(["run", "target_score", "winner", "margin", "target_wins"])?;
    for r in simulate(&loaded.instance, &seeds, args.runs, loaded.seed) {
        let winner = ltr_core::election::winner(&r.tally);
        w.write_record([
            r.run.to_string(),
            r.target_score.to_string(),
            loaded.prefs.candidates[winner].clone(),
            r.margin.to_string(),
            r.target_wins().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(0)
}

fn optimize(args: OptimizeArgs) -> Result<i32> {
    let loaded = load_instance(&args.instance, args.budget)?;
    let graph = loaded.instance.graph();
    let est = Estimator::new(args.samples, loaded.seed);
    let result = solve(&loaded.instance, &est)?;
    let mut cumulative = result.base_score;
    let rows: Vec<[String; 4]> = result
        .nodes
        .iter()
        .zip(&result.gains)
        .enumerate()
        .map(|(i, (&v, &g))| {
            cumulative += g;
            [(i + 1).to_string(), graph.label(v).to_owned(), g.to_string(), cumulative.to_string()]
        })
        .collect();
    let score_label = match loaded.instance.mode() {
        Mode::Constructive => "estimated F(A0)",
        Mode::Destructive => "estimated F'(A0) (reduced instance)",
    };
    match args.format {
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["step", "node", "marginal_gain", "estimated_score"])?;
            for row in &rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Format::Table => {
            let mut out = io::stdout().lock();
            writeln!(out, "{:>4}  {:>12}  {:>16}  {:>16}", "step", "node", "marginal gain", "estimate")?;
            for [step, node, gain, score] in &rows {
                let (g, s): (f64, f64) = (gain.parse()?, score.parse()?);
                writeln!(out, "{step:>4}  {node:>12}  {g:>16.6}  {s:>16.6}")?;
            }
            writeln!(out, "F(empty set): {:.6}", result.base_score)?;
            writeln!(out, "{score_label}: {:.6}", result.estimated_score)?;
            writeln!(out, "samples: {}", args.samples)?;
        }
    }
    Ok(0)
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<i32> {
    let loaded = load_instance(&args.instance, 0)?;
    let seeds = parse_seeds(&args.seeds, loaded.instance.graph())?;
    if args.samples == 0 {
        bail!("--samples must be positive");
    }
    let est = Estimator::new(args.samples, loaded.seed);
    let report = evaluate(&loaded.instance, &seeds, &est, args.pov_runs, loaded.seed);
    let pov = report.pov.map_or_else(String::new, |p| p.to_string());
    let mut header: Vec<String> =
        ["expected_mov", "stderr", "mov_samples", "pov", "pov_runs", "mu_empty"].map(String::from).to_vec();
    let mut row = vec![
        report.expected_mov.to_string(),
        report.stderr.to_string(),
        report.mov_samples.to_string(),
        pov,
        report.pov_runs.to_string(),
        report.mu_empty.to_string(),
    ];
    for (c, s) in report.expected_scores.iter().enumerate() {
        header.push(format!("score_{}", loaded.prefs.candidates[c]));
        row.push(s.to_string());
    }
    match args.format {
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(&header)?;
            w.write_record(&row)?;
            w.flush()?;
        }
        Format::Table => {
            let width = header.iter().map(String::len).max().unwrap_or(0);
            let mut out = io::stdout().lock();
            for (h, v) in header.iter().zip(&row) {
                writeln!(out, "{h:<width$}  {v}")?;
            }
        }
    }
    Ok(0)
}

fn experiment(args: ExperimentArgs) -> Result<i32> {
    let mut config = ExperimentConfig::load(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    if let Some(output) = args.output {
        config.output = output;
    }
    let result = run_experiment(&config)?;
    let mut out = io::stdout().lock();
    writeln!(out, "{} detail rows, {} aggregate rows", result.detail.len(), result.aggregate.len())?;
    writeln!(out, "{:<14} {:>6} {:>6} {:>8} {:>10} {:>12} {:>10}", "rule", "B", "alpha", "strategy", "PoV", "MoV mean", "MoV sd")?;
    for r in &result.aggregate {
        writeln!(
            out,
            "{:<14} {:>6} {:>6} {:>8} {:>10.3} {:>12.3} {:>10.3}",
            r.rule,
            r.budget,
            r.alpha,
            r.strategy.name(),
            r.pov_mean,
            r.mov_mean,
            r.mov_std
        )?;
    }
    writeln!(out, "written to {}", result.output.display())?;
    Ok(0)
}
