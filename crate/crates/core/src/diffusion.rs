//! Forward simulation of the linear threshold model and the ranking shift
//! that follows it.

use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::election::{Candidate, PreferenceProfile, ScoringRule};
use crate::error::{Error, Result};
use crate::graph::{InfluenceGraph, NodeId};
use crate::seeding::unit_open_closed;

/// Per-position shift rate `α(1..m)`, each entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaTable {
    values: Vec<f64>,
}

impl AlphaTable {
    pub fn constant(m: usize, alpha: f64) -> Result<Self> {
        Self::custom(vec![alpha; m])
    }

    pub fn custom(values: Vec<f64>) -> Result<Self> {
        if let Some(a) = values.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidInstance(format!("alpha {a} outside [0, 1]")));
        }
        Ok(Self { values })
    }

    /// Parses a single value (constant table) or a comma-separated list.
    pub fn parse(text: &str, m: usize) -> Result<Self> {
        let values = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::InvalidInstance(format!("bad alpha `{text}`")))?;
        match values.len() {
            1 => Self::constant(m, values[0]),
            n if n == m => Self::custom(values),
            n => Err(Error::InvalidInstance(format!("alpha lists {n} values for {m} positions"))),
        }
    }

    /// `α(position)`, 1-based.
    #[inline]
    pub fn at(&self, position: usize) -> f64 {
        self.values[position - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `α'(r) = α(m - r + 1)`.
    pub fn reversed(&self) -> Self {
        Self { values: self.values.iter().rev().copied().collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Constructive,
    Destructive,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constructive" => Ok(Mode::Constructive),
            "destructive" => Ok(Mode::Destructive),
            other => Err(Error::InvalidInstance(format!("unknown mode `{other}`"))),
        }
    }
}

/// Everything the control problem is defined over.
#[derive(Debug, Clone)]
pub struct ControlInstance {
    graph: Arc<InfluenceGraph>,
    profile: PreferenceProfile,
    rule: ScoringRule,
    target: Candidate,
    alpha: AlphaTable,
    budget: usize,
    mode: Mode,
}

impl ControlInstance {
    pub fn new(
        graph: Arc<InfluenceGraph>,
        profile: PreferenceProfile,
        rule: ScoringRule,
        target: Candidate,
        alpha: AlphaTable,
        budget: usize,
        mode: Mode,
    ) -> Result<Self> {
        let m = profile.candidate_count();
        if profile.node_count() != graph.node_count() {
            return Err(Error::InvalidInstance(format!(
                "profile covers {} nodes, graph has {}",
                profile.node_count(),
                graph.node_count()
            )));
        }
        if rule.candidate_count() != m || alpha.len() != m {
            return Err(Error::InvalidInstance(format!(
                "rule ({}) and alpha ({}) must both cover {m} positions",
                rule.candidate_count(),
                alpha.len()
            )));
        }
        if target >= m {
            return Err(Error::InvalidInstance(format!("target {target} outside 0..{m}")));
        }
        if budget > graph.node_count() {
            return Err(Error::BudgetTooLarge { budget, nodes: graph.node_count() });
        }
        Ok(Self { graph, profile, rule, target, alpha, budget, mode })
    }

    pub fn graph(&self) -> &InfluenceGraph {
        &self.graph
    }

    pub fn shared_graph(&self) -> Arc<InfluenceGraph> {
        Arc::clone(&self.graph)
    }

    pub fn profile(&self) -> &PreferenceProfile {
        &self.profile
    }

    pub fn rule(&self) -> &ScoringRule {
        &self.rule
    }

    pub fn target(&self) -> Candidate {
        self.target
    }

    pub fn alpha(&self) -> &AlphaTable {
        &self.alpha
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn candidate_count(&self) -> usize {
        self.profile.candidate_count()
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn with_budget(&self, budget: usize) -> Result<Self> {
        let mut out = self.clone();
        if budget > out.node_count() {
            return Err(Error::BudgetTooLarge { budget, nodes: out.node_count() });
        }
        out.budget = budget;
        Ok(out)
    }

    pub fn with_alpha(&self, alpha: AlphaTable) -> Result<Self> {
        Self::new(self.shared_graph(), self.profile.clone(), self.rule.clone(), self.target, alpha, self.budget, self.mode)
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Self { mode, ..self.clone() }
    }

    /// Whether the target at `position` can still move in this instance's direction.
    pub fn shiftable(&self, position: usize) -> bool {
        match self.mode {
            Mode::Constructive => position > 1,
            Mode::Destructive => position < self.candidate_count(),
        }
    }
}

/// Result of one LTR run.
#[derive(Debug, Clone)]
pub struct DiffusionOutcome {
    /// Membership mask of the quiesced active set `A`.
    pub active: Vec<bool>,
    pub shifted_profile: PreferenceProfile,
    pub rounds: usize,
}

impl DiffusionOutcome {
    pub fn active_nodes(&self) -> Vec<NodeId> {
        self.active.iter().enumerate().filter_map(|(v, &a)| a.then_some(v)).collect()
    }
}

/// Quiesced LTM run: active mask and number of rounds until no change.
#[derive(Debug, Clone, PartialEq)]
pub struct LtmRun {
    pub active: Vec<bool>,
    pub rounds: usize,
}

/// Synchronous linear threshold process: in each round every inactive node
/// whose active in-weight from the previous round reaches its threshold
/// becomes active.
pub fn run_ltm(graph: &InfluenceGraph, seeds: &[NodeId], thresholds: &[f64]) -> Result<LtmRun> {
    let n = graph.node_count();
    if thresholds.len() != n {
        return Err(Error::InvalidInstance(format!(
            "{} thresholds for {n} nodes",
            thresholds.len()
        )));
    }
    if let Some(&t) = thresholds.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::ThresholdOutOfRange(t));
    }
    if let Some(&s) = seeds.iter().find(|&&s| s >= n) {
        return Err(Error::InvalidInstance(format!("seed {s} outside 0..{n}")));
    }
    Ok(quiesce(graph, seeds, thresholds))
}

fn quiesce(graph: &InfluenceGraph, seeds: &[NodeId], thresholds: &[f64]) -> LtmRun {
    let n = graph.node_count();
    let mut active = vec![false; n];
    let mut frontier: Vec<NodeId> = Vec::new();
    for &s in seeds {
        if !active[s] {
            active[s] = true;
            frontier.push(s);
        }
    }
    let mut pressure = vec![0.0f64; n];
    let mut touched: Vec<NodeId> = Vec::new();
    let mut rounds = 0;
    while !frontier.is_empty() {
        touched.clear();
        for &u in &frontier {
            for &(v, w) in graph.outgoing(u) {
                if !active[v] {
                    touched.push(v);
                    pressure[v] += w;
                }
            }
        }
        touched.sort_unstable();
        touched.dedup();
        frontier.clear();
        for &v in &touched {
            if !active[v] && pressure[v] >= thresholds[v] {
                frontier.push(v);
            }
        }
        for &v in &frontier {
            active[v] = true;
        }
        if !frontier.is_empty() {
            rounds += 1;
        }
    }
    debug_assert!(rounds <= n);
    LtmRun { active, rounds }
}

/// `π↑ = min(r - 1, ⌊α(r) · W / t⌋)`.
pub fn shift_up(position: usize, alpha: f64, threshold: f64, active_weight: f64) -> usize {
    capped_floor(alpha * active_weight / threshold, position.saturating_sub(1))
}

/// `π↓ = min(m - r, ⌊α(r) · W / t⌋)`.
pub fn shift_down(position: usize, alpha: f64, threshold: f64, active_weight: f64, m: usize) -> usize {
    capped_floor(alpha * active_weight / threshold, m.saturating_sub(position))
}

fn capped_floor(x: f64, cap: usize) -> usize {
    if !(x >= 0.0) {
        return 0;
    }
    if x >= cap as f64 {
        cap
    } else {
        x.floor() as usize
    }
}

/// One LTR run.
///
/// Activation thresholds `t_v` are drawn uniform on (0, 1] and the LTM
/// process runs to quiescence. Every node whose target position can move and
/// that has influence on it then draws a second, independent uniform
/// threshold and shifts the target by `π↑` (or `π↓`). The influence on a
/// non-seed node is the total weight of its active in-neighbours; a seed is
/// targeted directly and counts as fully influenced (weight 1).
///
/// The generator is consumed in a fixed order (all activation thresholds,
/// then all shift thresholds) so runs are reproducible.
pub fn run_ltr<R: Rng + ?Sized>(instance: &ControlInstance, seeds: &[NodeId], rng: &mut R) -> DiffusionOutcome {
    let graph = instance.graph();
    let n = graph.node_count();
    let activation: Vec<f64> = (0..n).map(|_| unit_open_closed(rng)).collect();
    let shift: Vec<f64> = (0..n).map(|_| unit_open_closed(rng)).collect();
    ltr_with_thresholds(instance, seeds, &activation, &shift)
}

/// LTR with explicit activation and shift thresholds.
pub fn ltr_with_thresholds(
    instance: &ControlInstance,
    seeds: &[NodeId],
    activation: &[f64],
    shift: &[f64],
) -> DiffusionOutcome {
    let graph = instance.graph();
    let profile = instance.profile();
    let target = instance.target();
    let m = instance.candidate_count();
    let run = quiesce(graph, seeds, activation);

    let mut is_seed = vec![false; graph.node_count()];
    for &s in seeds {
        is_seed[s] = true;
    }
    let mut shifted = profile.clone();
    for v in 0..graph.node_count() {
        let r = profile.position(v, target);
        if !instance.shiftable(r) {
            continue;
        }
        let weight = if is_seed[v] {
            1.0
        } else {
            graph.incoming(v).iter().filter(|&&(u, _)| run.active[u]).map(|&(_, w)| w).sum()
        };
        if weight <= 0.0 {
            continue;
        }
        let alpha = instance.alpha().at(r);
        let new_position = match instance.mode() {
            Mode::Constructive => r - shift_up(r, alpha, shift[v], weight),
            Mode::Destructive => r + shift_down(r, alpha, shift[v], weight, m),
        };
        if new_position != r {
            shifted.move_candidate(v, target, new_position);
        }
    }
    DiffusionOutcome { active: run.active, shifted_profile: shifted, rounds: run.rounds }
}
