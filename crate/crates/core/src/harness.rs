//! Batch experiments: random preference assignment, parameter sweeps and
//! CSV/SVG output.
//!
//! A sweep covers every combination of rule, budget, α and seeding strategy,
//! repeated over `permutations` independent preference draws. For each cell
//! the chosen seeds are evaluated by `runs` LTR simulations (PoV and MoV as
//! `-μ(A₀)`) and by the live-edge estimate of `μ(∅) - μ(A₀)`.
//!
//! Randomness is keyed by permutation only: preferences, the greedy sample
//! set, random baselines and the simulation thresholds are shared by every
//! cell of one permutation, so differences between budgets, α values and
//! strategies are not masked by resampling noise. Greedy selection for the
//! largest budget is computed once per (rule, α, permutation); smaller
//! budgets use its prefixes, which is exactly what greedy returns for them.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::diffusion::{AlphaTable, ControlInstance, Mode};
use crate::election::{PreferenceProfile, ScoringRule};
use crate::error::{Error, Result};
use crate::evaluation::{expected_mov, simulate};
use crate::graph::{self, InfluenceGraph, NodeId, WeightMode};
use crate::optimizer::{random_seeds, solve, top_degree_seeds, Estimator};
use crate::parallel::map_indexed;
use crate::seeding::{derive_seed, rng_for};

pub const DETAIL_SCHEMA: &str = "#schema=ltr-experiment-detail/1";
pub const AGGREGATE_SCHEMA: &str = "#schema=ltr-experiment-aggregate/1";

const STREAM_PREFERENCES: u64 = 1;
const STREAM_SELECTION: u64 = 2;
const STREAM_RANDOM: u64 = 3;
const STREAM_RUNS: u64 = 4;
const STREAM_EVAL: u64 = 5;
const STREAM_GRAPH: u64 = 6;

/// Independent uniform permutation per node.
pub fn assign_random_preferences(node_count: usize, candidates: usize, seed: u64) -> Result<PreferenceProfile> {
    if candidates < 2 {
        return Err(Error::InvalidProfile(format!("need at least 2 candidates, got {candidates}")));
    }
    let mut rng = rng_for(seed, &[]);
    let rankings = (0..node_count)
        .map(|_| {
            let mut r: Vec<usize> = (0..candidates).collect();
            r.shuffle(&mut rng);
            r
        })
        .collect();
    PreferenceProfile::new(candidates, rankings)
}

/// Undirected preferential-attachment graph (both directions of every edge):
/// a clique on `attach + 1` nodes, then every new node links to `attach`
/// distinct existing nodes chosen proportionally to degree.
pub fn scale_free_graph(nodes: usize, attach: usize, mode: WeightMode, seed: u64) -> Result<InfluenceGraph> {
    if attach == 0 || nodes <= attach {
        return Err(Error::Config(format!("scale-free graph needs nodes > attach >= 1 (got {nodes}, {attach})")));
    }
    let mut rng = rng_for(seed, &[STREAM_GRAPH]);
    let mut pairs = Vec::new();
    let mut endpoints: Vec<NodeId> = Vec::new();
    for u in 0..=attach {
        for v in 0..u {
            pairs.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    for u in attach + 1..nodes {
        let mut chosen: Vec<NodeId> = Vec::with_capacity(attach);
        while chosen.len() < attach {
            let v = endpoints[rng.gen_range(0..endpoints.len())];
            if !chosen.contains(&v) {
                chosen.push(v);
            }
        }
        for v in chosen {
            pairs.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    let directed: Vec<(NodeId, NodeId)> = pairs.iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect();
    graph::from_pairs(nodes, &directed, mode, seed)
}

/// How seeds are chosen in a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Greedy,
    Random,
    Degree,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Greedy => "greedy",
            Strategy::Random => "random",
            Strategy::Degree => "degree",
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Strategy::Greedy),
            "random" => Ok(Strategy::Random),
            "degree" => Ok(Strategy::Degree),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File { path: PathBuf, undirected: bool },
    ScaleFree { nodes: usize, attach: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub weights: WeightMode,
    pub candidates: usize,
    pub target: usize,
    pub budgets: Vec<usize>,
    pub alphas: Vec<f64>,
    /// Rule specs as accepted by [`ScoringRule::parse`].
    pub rules: Vec<String>,
    pub mode: Mode,
    pub strategies: Vec<Strategy>,
    pub permutations: usize,
    pub runs: usize,
    pub samples: usize,
    /// Live-edge samples for the expected-MoV column; 0 disables it.
    pub eval_samples: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub plots: bool,
}

const KNOWN_KEYS: &[&str] = &[
    "graph", "generator", "nodes", "attach", "undirected", "weights", "candidates", "target", "budgets", "alphas",
    "rules", "mode", "strategies", "permutations", "runs", "samples", "eval_samples", "seed", "output", "plots",
];

impl ExperimentConfig {
    /// Reads a TOML config. Relative `graph` and `output` paths are resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses a flat TOML document. List-valued keys accept an array or a
    /// comma-separated string (`rules` uses `;`, since custom rules contain commas).
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if let Some(k) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
        let keys = Keys(&table);
        let graph = match (keys.string("graph")?, keys.string("generator")?) {
            (Some(path), None) => GraphSource::File {
                path: base.join(path),
                undirected: keys.boolean("undirected")?.unwrap_or(false),
            },
            (None, Some(g)) if g == "scale-free" => GraphSource::ScaleFree {
                nodes: keys.integer("nodes")?.unwrap_or(200),
                attach: keys.integer("attach")?.unwrap_or(3),
            },
            (None, Some(g)) => return Err(Error::Config(format!("unknown generator `{g}`"))),
            (Some(_), Some(_)) => return Err(Error::Config("set either `graph` or `generator`, not both".into())),
            (None, None) => return Err(Error::Config("missing `graph` or `generator`".into())),
        };
        let config = Self {
            graph,
            weights: keys.parsed("weights")?.unwrap_or_default(),
            candidates: keys.integer("candidates")?.unwrap_or(2),
            target: keys.integer("target")?.unwrap_or(0),
            budgets: keys.list("budgets", ',')?.unwrap_or_else(|| vec![5]),
            alphas: keys.list("alphas", ',')?.unwrap_or_else(|| vec![1.0]),
            rules: keys.list("rules", ';')?.unwrap_or_else(|| vec!["plurality".into()]),
            mode: keys.parsed("mode")?.unwrap_or_default(),
            strategies: keys.list("strategies", ',')?.unwrap_or_else(|| vec![Strategy::Greedy]),
            permutations: keys.integer("permutations")?.unwrap_or(1),
            runs: keys.integer("runs")?.unwrap_or(20),
            samples: keys.integer("samples")?.unwrap_or(crate::optimizer::DEFAULT_SAMPLES),
            eval_samples: keys.integer("eval_samples")?.unwrap_or(crate::optimizer::DEFAULT_SAMPLES),
            seed: keys.integer::<u64>("seed")?.unwrap_or(0),
            output: base.join(keys.string("output")?.unwrap_or_else(|| "results".into())),
            plots: keys.boolean("plots")?.unwrap_or(false),
        };
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        let empty = [
            ("budgets", self.budgets.is_empty()),
            ("alphas", self.alphas.is_empty()),
            ("rules", self.rules.is_empty()),
            ("strategies", self.strategies.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("`{name}` must not be empty")));
        }
        if self.candidates < 2 {
            return Err(Error::Config("`candidates` must be at least 2".into()));
        }
        if self.target >= self.candidates {
            return Err(Error::Config(format!("`target` {} outside 0..{}", self.target, self.candidates)));
        }
        if self.permutations == 0 || self.runs == 0 || self.samples == 0 {
            return Err(Error::Config("`permutations`, `runs` and `samples` must be positive".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Config(format!("alpha {a} outside [0, 1]")));
        }
        for rule in &self.rules {
            ScoringRule::parse(rule, self.candidates)?;
        }
        Ok(())
    }

    pub fn load_graph(&self) -> Result<InfluenceGraph> {
        match &self.graph {
            GraphSource::File { path, undirected } => {
                let file = std::io::BufReader::new(File::open(path)?);
                graph::load_edge_list(file, !undirected, self.weights, self.seed)
            }
            GraphSource::ScaleFree { nodes, attach } => scale_free_graph(*nodes, *attach, self.weights, self.seed),
        }
    }

    /// Number of detail rows a run produces.
    pub fn cell_count(&self) -> usize {
        self.rules.len() * self.budgets.len() * self.alphas.len() * self.strategies.len() * self.permutations
    }
}

struct Keys<'a>(&'a toml::Table);

impl Keys<'_> {
    fn bad(key: &str, expected: &str) -> Error {
        Error::Config(format!("`{key}` must be {expected}"))
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(Self::bad(key, "a string")),
        }
    }

    fn boolean(&self, key: &str) -> Result<Option<bool>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(Self::bad(key, "a boolean")),
        }
    }

    fn integer<T: TryFrom<i64>>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) => {
                T::try_from(*i).map(Some).map_err(|_| Self::bad(key, "a nonnegative integer in range"))
            }
            Some(_) => Err(Self::bad(key, "an integer")),
        }
    }

    fn parsed<T: FromStr<Err = Error>>(&self, key: &str) -> Result<Option<T>> {
        self.string(key)?.map(|s| s.parse()).transpose()
    }

    fn list<T: FromStr>(&self, key: &str, sep: char) -> Result<Option<Vec<T>>> {
        let items: Vec<String> = match self.0.get(key) {
            None => return Ok(None),
            Some(toml::Value::String(s)) => s.split(sep).map(|t| t.trim().to_owned()).filter(|t| !t.is_empty()).collect(),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    toml::Value::String(s) => Ok(s.clone()),
                    toml::Value::Integer(i) => Ok(i.to_string()),
                    toml::Value::Float(f) => Ok(f.to_string()),
                    _ => Err(Self::bad(key, "a list of scalars")),
                })
                .collect::<Result<_>>()?,
            Some(toml::Value::Integer(i)) => vec![i.to_string()],
            Some(toml::Value::Float(f)) => vec![f.to_string()],
            Some(_) => return Err(Self::bad(key, "a list")),
        };
        items
            .iter()
            .map(|t| t.parse::<T>().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{t}`"))))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }
}

/// One (rule, budget, α, strategy, permutation) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailRow {
    pub cell: usize,
    pub rule: String,
    pub candidates: usize,
    pub budget: usize,
    pub alpha: f64,
    pub mode: Mode,
    pub strategy: Strategy,
    pub permutation: usize,
    pub seeds: Vec<NodeId>,
    pub pov: f64,
    /// Mean over runs of `-μ(A₀)`: target score minus strongest opponent's.
    pub mov_mean: f64,
    pub mov_std: f64,
    /// Mean over runs of `μ(∅) - μ(A₀)`.
    pub margin_change_mean: f64,
    /// Live-edge estimate of `μ(∅) - μ(A₀)` (or `μ(A₀) - μ(∅)` when destructive).
    pub expected_mov: f64,
    pub expected_mov_stderr: f64,
    pub mu_empty: i64,
    /// Per-run `-μ(A₀)` values, kept for plotting.
    pub run_movs: Vec<f64>,
}

/// Mean and spread of one (rule, budget, α, strategy) group over permutations.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub rule: String,
    pub candidates: usize,
    pub budget: usize,
    pub alpha: f64,
    pub mode: Mode,
    pub strategy: Strategy,
    pub permutations: usize,
    pub runs: usize,
    pub pov_mean: f64,
    pub pov_std: f64,
    /// Mean of the per-permutation `mov_mean`.
    pub mov_mean: f64,
    /// Standard deviation of the per-permutation `mov_mean`.
    pub mov_std: f64,
    /// `sqrt(Σ_p s_p² / N) / P`, standard error of `mov_mean` from run-level spread.
    pub mov_stderr: f64,
    pub expected_mov_mean: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub detail: Vec<DetailRow>,
    pub aggregate: Vec<AggregateRow>,
    pub output: PathBuf,
}

/// Sample mean and standard deviation (`n - 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Writes records in index order as soon as every earlier index has arrived.
struct OrderedAppender<W: Write> {
    next: usize,
    pending: BTreeMap<usize, String>,
    out: W,
}

impl<W: Write> OrderedAppender<W> {
    fn new(out: W) -> Self {
        Self { next: 0, pending: BTreeMap::new(), out }
    }

    fn push(&mut self, index: usize, record: String) -> std::io::Result<()> {
        self.pending.insert(index, record);
        while let Some(record) = self.pending.remove(&self.next) {
            self.out.write_all(record.as_bytes())?;
            self.next += 1;
        }
        self.out.flush()
    }
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(fields).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

const DETAIL_HEADER: &[&str] = &[
    "cell", "rule", "candidates", "budget", "alpha", "mode", "strategy", "permutation", "seed_count", "seeds", "pov",
    "mov_mean", "mov_std", "margin_change_mean", "expected_mov", "expected_mov_stderr", "mu_empty",
];

const AGGREGATE_HEADER: &[&str] = &[
    "rule", "candidates", "budget", "alpha", "mode", "strategy", "permutations", "runs", "pov_mean", "pov_std",
    "mov_mean", "mov_std", "mov_stderr", "expected_mov_mean",
];

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Constructive => "constructive",
        Mode::Destructive => "destructive",
    }
}

impl DetailRow {
    fn record(&self, graph: &InfluenceGraph) -> String {
        let seeds: Vec<&str> = self.seeds.iter().map(|&s| graph.label(s)).collect();
        csv_line(&[
            self.cell.to_string(),
            self.rule.clone(),
            self.candidates.to_string(),
            self.budget.to_string(),
            self.alpha.to_string(),
            mode_name(self.mode).into(),
            self.strategy.name().into(),
            self.permutation.to_string(),
            self.seeds.len().to_string(),
            seeds.join(" "),
            self.pov.to_string(),
            self.mov_mean.to_string(),
            self.mov_std.to_string(),
            self.margin_change_mean.to_string(),
            self.expected_mov.to_string(),
            self.expected_mov_stderr.to_string(),
            self.mu_empty.to_string(),
        ])
    }
}

impl AggregateRow {
    fn record(&self) -> String {
        csv_line(&[
            self.rule.clone(),
            self.candidates.to_string(),
            self.budget.to_string(),
            self.alpha.to_string(),
            mode_name(self.mode).into(),
            self.strategy.name().into(),
            self.permutations.to_string(),
            self.runs.to_string(),
            self.pov_mean.to_string(),
            self.pov_std.to_string(),
            self.mov_mean.to_string(),
            self.mov_std.to_string(),
            self.mov_stderr.to_string(),
            self.expected_mov_mean.to_string(),
        ])
    }
}

/// Averages detail rows over permutations. Rows of one group must be
/// contiguous, as produced by [`run_experiment`].
pub fn aggregate(detail: &[DetailRow], runs: usize) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < detail.len() {
        let first = &detail[start];
        let same = |r: &DetailRow| {
            r.rule == first.rule && r.budget == first.budget && r.alpha == first.alpha && r.strategy == first.strategy
        };
        let end = start + detail[start..].iter().take_while(|r| same(r)).count();
        let group = &detail[start..end];
        let p = group.len() as f64;
        let (pov_mean, pov_std) = mean_std(&group.iter().map(|r| r.pov).collect::<Vec<_>>());
        let (mov_mean, mov_std) = mean_std(&group.iter().map(|r| r.mov_mean).collect::<Vec<_>>());
        let within: f64 = group.iter().map(|r| r.mov_std * r.mov_std).sum();
        let expected: f64 = group.iter().map(|r| r.expected_mov).sum::<f64>() / p;
        out.push(AggregateRow {
            rule: first.rule.clone(),
            candidates: first.candidates,
            budget: first.budget,
            alpha: first.alpha,
            mode: first.mode,
            strategy: first.strategy,
            permutations: group.len(),
            runs,
            pov_mean,
            pov_std,
            mov_mean,
            mov_std,
            mov_stderr: (within / runs.max(1) as f64).sqrt() / p,
            expected_mov_mean: expected,
        });
        start = end;
    }
    out
}

struct Layout<'a> {
    config: &'a ExperimentConfig,
}

impl Layout<'_> {
    /// Cell index with order rule, budget, α, strategy, permutation.
    fn cell(&self, rule: usize, budget: usize, alpha: usize, strategy: usize, perm: usize) -> usize {
        let c = self.config;
        (((rule * c.budgets.len() + budget) * c.alphas.len() + alpha) * c.strategies.len() + strategy)
            * c.permutations
            + perm
    }
}

/// Runs the sweep and writes `results_detail.csv`, `results_aggregate.csv`,
/// `timings.csv` and, if enabled, `plots/*.svg` under `config.output`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.check()?;
    let graph = Arc::new(config.load_graph()?);
    let n = graph.node_count();
    if let Some(&b) = config.budgets.iter().find(|&&b| b > n) {
        return Err(Error::BudgetTooLarge { budget: b, nodes: n });
    }
    fs::create_dir_all(&config.output)?;
    let detail_file = BufWriter::new(File::create(config.output.join("results_detail.csv"))?);
    let mut appender = OrderedAppender::new(detail_file);
    appender.out.write_all(format!("{DETAIL_SCHEMA}\n").as_bytes())?;
    appender.out.write_all(csv_line(&DETAIL_HEADER.iter().map(|s| s.to_string()).collect::<Vec<_>>()).as_bytes())?;
    appender.out.flush()?;
    let appender = Mutex::new(appender);

    let m = config.candidates;
    let rules: Vec<ScoringRule> = config.rules.iter().map(|r| ScoringRule::parse(r, m)).collect::<Result<_>>()?;
    let layout = Layout { config };
    let max_budget = *config.budgets.iter().max().expect("non-empty");
    let units = config.rules.len() * config.alphas.len() * config.permutations;

    let results: Vec<Result<(Vec<DetailRow>, f64)>> = map_indexed(units, |unit| {
        let started = Instant::now();
        let perm = unit % config.permutations;
        let alpha_idx = (unit / config.permutations) % config.alphas.len();
        let rule_idx = unit / (config.permutations * config.alphas.len());
        let alpha = config.alphas[alpha_idx];
        let profile = assign_random_preferences(n, m, derive_seed(config.seed, &[STREAM_PREFERENCES, perm as u64]))?;
        let base = ControlInstance::new(
            Arc::clone(&graph),
            profile,
            rules[rule_idx].clone(),
            config.target,
            AlphaTable::constant(m, alpha)?,
            max_budget,
            config.mode,
        )?;
        let full: BTreeMap<Strategy, Vec<NodeId>> = config
            .strategies
            .iter()
            .map(|&s| {
                let seeds = match s {
                    Strategy::Greedy => {
                        let est = Estimator::new(config.samples, derive_seed(config.seed, &[STREAM_SELECTION, perm as u64]));
                        solve(&base, &est)?.nodes
                    }
                    Strategy::Random => {
                        random_seeds(n, max_budget, derive_seed(config.seed, &[STREAM_RANDOM, perm as u64]))
                    }
                    Strategy::Degree => top_degree_seeds(&graph, max_budget),
                };
                Ok((s, seeds))
            })
            .collect::<Result<_>>()?;

        let mut rows = Vec::new();
        for (budget_idx, &budget) in config.budgets.iter().enumerate() {
            let instance = base.with_budget(budget)?;
            for (strategy_idx, &strategy) in config.strategies.iter().enumerate() {
                let seeds: Vec<NodeId> = full[&strategy].iter().copied().take(budget).collect();
                let records = simulate(&instance, &seeds, config.runs, derive_seed(config.seed, &[STREAM_RUNS, perm as u64]));
                let run_movs: Vec<f64> = records.iter().map(|r| -(r.margin as f64)).collect();
                let (mov_mean, mov_std) = mean_std(&run_movs);
                let wins = records.iter().filter(|r| r.target_wins()).count();
                let (expected, stderr, mu_empty) = if config.eval_samples > 0 {
                    let est = Estimator::new(config.eval_samples, derive_seed(config.seed, &[STREAM_EVAL, perm as u64]));
                    let report = expected_mov(&instance, &seeds, &est);
                    (report.expected_mov, report.stderr, report.mu_empty)
                } else {
                    let mu = crate::election::margin(instance.profile(), instance.rule(), instance.target());
                    (f64::NAN, f64::NAN, mu)
                };
                let row = DetailRow {
                    cell: layout.cell(rule_idx, budget_idx, alpha_idx, strategy_idx, perm),
                    rule: config.rules[rule_idx].clone(),
                    candidates: m,
                    budget,
                    alpha,
                    mode: config.mode,
                    strategy,
                    permutation: perm,
                    seeds,
                    pov: wins as f64 / config.runs as f64,
                    mov_mean,
                    mov_std,
                    margin_change_mean: mu_empty as f64 + mov_mean,
                    expected_mov: expected,
                    expected_mov_stderr: stderr,
                    mu_empty,
                    run_movs,
                };
                appender.lock().expect("appender lock").push(row.cell, row.record(&graph))?;
                rows.push(row);
            }
        }
        Ok((rows, started.elapsed().as_secs_f64()))
    });

    let mut detail = Vec::with_capacity(config.cell_count());
    let mut timings = Vec::with_capacity(units);
    for r in results {
        let (rows, seconds) = r?;
        detail.extend(rows);
        timings.push(seconds);
    }
    detail.sort_by_key(|r| r.cell);
    let aggregate_rows = aggregate(&detail, config.runs);

    let mut agg = BufWriter::new(File::create(config.output.join("results_aggregate.csv"))?);
    writeln!(agg, "{AGGREGATE_SCHEMA}")?;
    agg.write_all(csv_line(&AGGREGATE_HEADER.iter().map(|s| s.to_string()).collect::<Vec<_>>()).as_bytes())?;
    for row in &aggregate_rows {
        agg.write_all(row.record().as_bytes())?;
    }
    agg.flush()?;

    let mut t = BufWriter::new(File::create(config.output.join("timings.csv"))?);
    writeln!(t, "unit,rule,alpha,permutation,seconds")?;
    for (unit, seconds) in timings.iter().enumerate() {
        let perm = unit % config.permutations;
        let alpha_idx = (unit / config.permutations) % config.alphas.len();
        let rule_idx = unit / (config.permutations * config.alphas.len());
        t.write_all(
            csv_line(&[
                unit.to_string(),
                config.rules[rule_idx].clone(),
                config.alphas[alpha_idx].to_string(),
                perm.to_string(),
                seconds.to_string(),
            ])
            .as_bytes(),
        )?;
    }
    t.flush()?;

    if config.plots {
        write_plots(&config.output.join("plots"), config, &detail)?;
    }
    Ok(ExperimentResult { detail, aggregate: aggregate_rows, output: config.output.clone() })
}

fn file_stem(rule: &str) -> String {
    rule.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

/// One boxplot per (rule, budget): a box per (strategy, α) over the pooled
/// per-run MoV values of every permutation.
fn write_plots(dir: &Path, config: &ExperimentConfig, detail: &[DetailRow]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut written = HashSet::new();
    for rule in &config.rules {
        for &budget in &config.budgets {
            let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
            for &strategy in &config.strategies {
                for &alpha in &config.alphas {
                    let values: Vec<f64> = detail
                        .iter()
                        .filter(|r| &r.rule == rule && r.budget == budget && r.alpha == alpha && r.strategy == strategy)
                        .flat_map(|r| r.run_movs.iter().copied())
                        .collect();
                    groups.push((format!("{} α={alpha}", strategy.name()), values));
                }
            }
            let mut name = format!("mov_{}_B{budget}.svg", file_stem(rule));
            let mut k = 1;
            while !written.insert(name.clone()) {
                k += 1;
                name = format!("mov_{}_{k}_B{budget}.svg", file_stem(rule));
            }
            fs::write(dir.join(name), boxplot_svg(&format!("MoV, {rule}, B={budget}"), &groups))?;
        }
    }
    Ok(())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

const PALETTE: &[&str] = &["#d62728", "#2ca02c", "#1f77b4", "#9467bd", "#ff7f0e", "#8c564b"];

/// Minimal static SVG boxplot (whiskers at min and max).
pub fn boxplot_svg(title: &str, groups: &[(String, Vec<f64>)]) -> String {
    let (width, height, left, top, bottom) = (80.0 * groups.len().max(1) as f64 + 80.0, 360.0, 60.0, 40.0, 80.0);
    let all = groups.iter().flat_map(|(_, v)| v.iter().copied());
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let plot_h = height - top - bottom;
    let y = |v: f64| top + (hi - v) / (hi - lo) * plot_h;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, xml(title));
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, top + plot_h);
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
            left - 4.0,
            y(v) + 4.0
        );
    }
    for (i, (label, values)) in groups.iter().enumerate() {
        let cx = left + 40.0 + 80.0 * i as f64;
        let colour = PALETTE[i % PALETTE.len()];
        if !values.is_empty() {
            let mut v = values.clone();
            v.sort_by(f64::total_cmp);
            let (q0, q1, q2, q3, q4) =
                (v[0], quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75), v[v.len() - 1]);
            let _ = writeln!(s, r#"<line x1="{cx}" y1="{:.1}" x2="{cx}" y2="{:.1}" stroke="{colour}"/>"#, y(q4), y(q0));
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{:.1}" width="40" height="{:.1}" fill="{colour}" fill-opacity="0.35" stroke="{colour}"/>"#,
                cx - 20.0,
                y(q3),
                (y(q1) - y(q3)).max(0.5)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{:.1}" x2="{}" y2="{:.1}" stroke="black" stroke-width="2"/>"#,
                cx - 20.0,
                y(q2),
                cx + 20.0,
                y(q2)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" text-anchor="middle">{}</text>"#,
            top + plot_h + 16.0,
            xml(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
