//! Directed influence graphs with linear-threshold edge weights.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::seeding::{rng_for, unit_open_closed};

pub type NodeId = usize;

/// Slack allowed on the per-node incoming weight sum.
pub const LTM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
    pub weight: f64,
}

/// How edge weights are assigned when a graph is loaded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// Use the third column of the edge list.
    AsGiven,
    /// `b_uv = 1 / |N_v|`.
    #[default]
    UniformByInDegree,
    /// Raw weights uniform on (0, 1], each node's incoming weights divided by
    /// `max(1, sum)`.
    RandomNormalized,
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "given" | "as-given" => Ok(WeightMode::AsGiven),
            "uniform" => Ok(WeightMode::UniformByInDegree),
            "random" => Ok(WeightMode::RandomNormalized),
            other => Err(Error::InvalidGraph(format!(
                "unknown weight mode `{other}` (expected given, uniform or random)"
            ))),
        }
    }
}

/// Directed graph `G = (V, E)` with weights `b_uv`.
///
/// Nodes are dense ids `0..n`; the original labels are kept for reporting.
/// Graphs built through [`InfluenceGraph::from_edges`] or
/// [`load_edge_list`] satisfy every invariant checked by [`validate`];
/// [`InfluenceGraph::from_edges_unchecked`] skips those checks so that
/// malformed inputs can still be inspected.
#[derive(Debug, Clone)]
pub struct InfluenceGraph {
    labels: Vec<String>,
    edges: Vec<Edge>,
    incoming: Vec<Vec<(NodeId, f64)>>,
    outgoing: Vec<Vec<(NodeId, f64)>>,
}

impl InfluenceGraph {
    /// Builds a graph with labels `"0".."n-1"`, rejecting any invariant violation.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let labels = (0..node_count).map(|v| v.to_string()).collect();
        let graph = Self::from_edges_unchecked(labels, edges)?;
        validate(&graph).into_result()?;
        Ok(graph)
    }

    /// Builds a graph without checking weights, loops or duplicates. Only
    /// out-of-range node ids are rejected.
    pub fn from_edges_unchecked<I>(labels: Vec<String>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let n = labels.len();
        let mut incoming = vec![Vec::new(); n];
        let mut outgoing = vec![Vec::new(); n];
        let mut list = Vec::new();
        for (source, target, weight) in edges {
            if source >= n || target >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {source} -> {target} references a node outside 0..{n}"
                )));
            }
            incoming[target].push((source, weight));
            outgoing[source].push((target, weight));
            list.push(Edge { source, target, weight });
        }
        Ok(Self { labels, edges: list, incoming, outgoing })
    }

    pub fn empty() -> Self {
        Self { labels: Vec::new(), edges: Vec::new(), incoming: Vec::new(), outgoing: Vec::new() }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// In-neighbours `N_v` with their weights, in insertion order.
    pub fn incoming(&self, v: NodeId) -> &[(NodeId, f64)] {
        &self.incoming[v]
    }

    pub fn outgoing(&self, v: NodeId) -> &[(NodeId, f64)] {
        &self.outgoing[v]
    }

    pub fn in_weight(&self, v: NodeId) -> f64 {
        self.incoming[v].iter().map(|&(_, w)| w).sum()
    }

    /// Weight of the edge `(u, v)`, if present.
    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<f64> {
        self.incoming[v].iter().find(|&&(s, _)| s == u).map(|&(_, w)| w)
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self) -> HashMap<&str, NodeId> {
        self.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SelfLoop { node: NodeId },
    DuplicateEdge { source: NodeId, target: NodeId },
    WeightOutOfRange { source: NodeId, target: NodeId, weight: f64 },
    IncomingSumExceeded { node: NodeId, sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop { node } => write!(f, "self-loop on node {node}"),
            Violation::DuplicateEdge { source, target } => {
                write!(f, "duplicate edge {source} -> {target}")
            }
            Violation::WeightOutOfRange { source, target, weight } => {
                write!(f, "edge {source} -> {target}: weight {weight} outside [0, 1]")
            }
            Violation::IncomingSumExceeded { node, sum } => {
                write!(f, "node {node}: incoming weight sum {sum} > 1")
            }
        }
    }
}

impl Violation {
    /// Same as the `Display` form, with node labels in place of ids.
    pub fn describe(&self, graph: &InfluenceGraph) -> String {
        let l = |v: &NodeId| graph.label(*v);
        match self {
            Violation::SelfLoop { node } => format!("self-loop on node `{}`", l(node)),
            Violation::DuplicateEdge { source, target } => format!("duplicate edge `{}` -> `{}`", l(source), l(target)),
            Violation::WeightOutOfRange { source, target, weight } => {
                format!("edge `{}` -> `{}`: weight {weight} outside [0, 1]", l(source), l(target))
            }
            Violation::IncomingSumExceeded { node, sum } => {
                format!("node `{}`: incoming weight sum {sum} exceeds 1", l(node))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn into_result(self) -> Result<()> {
        match self.violations.into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidGraph(v.to_string())),
        }
    }
}

/// Checks every graph invariant and lists the violations; an empty report
/// means the graph is LTM-valid.
pub fn validate(graph: &InfluenceGraph) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for e in graph.edges() {
        if e.source == e.target {
            violations.push(Violation::SelfLoop { node: e.source });
        }
        if !seen.insert((e.source, e.target)) {
            violations.push(Violation::DuplicateEdge { source: e.source, target: e.target });
        }
        if !(0.0..=1.0).contains(&e.weight) {
            violations.push(Violation::WeightOutOfRange {
                source: e.source,
                target: e.target,
                weight: e.weight,
            });
        }
    }
    for v in 0..graph.node_count() {
        let sum = graph.in_weight(v);
        if sum > 1.0 + LTM_TOLERANCE || sum.is_nan() {
            violations.push(Violation::IncomingSumExceeded { node: v, sum });
        }
    }
    ValidationReport { violations }
}

/// Reads an edge list without enforcing weight invariants, so the result can
/// be passed to [`validate`]. Loops, duplicates and syntax errors are still
/// rejected with their line number.
pub fn parse_edge_list<R: BufRead>(
    reader: R,
    directed: bool,
    mode: WeightMode,
    seed: u64,
) -> Result<InfluenceGraph> {
    let mut labels: Vec<String> = Vec::new();
    let mut ids: HashMap<String, NodeId> = HashMap::new();
    let mut intern = |label: &str, labels: &mut Vec<String>| -> NodeId {
        *ids.entry(label.to_owned()).or_insert_with(|| {
            labels.push(label.to_owned());
            labels.len() - 1
        })
    };

    let mut edges: Vec<(NodeId, NodeId, f64)> = Vec::new();
    let mut seen: HashSet<(NodeId, NodeId)> = HashSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = index + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: lineno, message };
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 && tokens.len() != 3 {
            return Err(parse_err(format!(
                "expected `u v` or `u v w`, found {} fields",
                tokens.len()
            )));
        }
        let weight = match tokens.get(2) {
            Some(t) => Some(
                t.parse::<f64>().map_err(|_| parse_err(format!("invalid weight `{t}`")))?,
            ),
            None => None,
        };
        let weight = match (mode, weight) {
            (WeightMode::AsGiven, None) => {
                return Err(parse_err("missing weight column for given weights".into()))
            }
            (_, w) => w.unwrap_or(0.0),
        };
        let u = intern(tokens[0], &mut labels);
        let v = intern(tokens[1], &mut labels);
        if u == v {
            return Err(parse_err(format!("self-loop on node `{}`", tokens[0])));
        }
        let mut push = |s: NodeId, t: NodeId| -> Result<()> {
            if !seen.insert((s, t)) {
                return Err(parse_err(format!(
                    "duplicate edge `{}` -> `{}`",
                    labels[s], labels[t]
                )));
            }
            edges.push((s, t, weight));
            Ok(())
        };
        push(u, v)?;
        if !directed {
            push(v, u)?;
        }
    }

    assign_weights(&mut edges, labels.len(), mode, seed);
    InfluenceGraph::from_edges_unchecked(labels, edges)
}

/// Builds a graph from unweighted pairs, assigning weights by `mode`
/// (`AsGiven` is treated as uniform). Pairs must be loop-free and distinct.
pub fn from_pairs(node_count: usize, pairs: &[(NodeId, NodeId)], mode: WeightMode, seed: u64) -> Result<InfluenceGraph> {
    let mode = if mode == WeightMode::AsGiven { WeightMode::UniformByInDegree } else { mode };
    let mut edges: Vec<(NodeId, NodeId, f64)> = pairs.iter().map(|&(u, v)| (u, v, 0.0)).collect();
    assign_weights(&mut edges, node_count, mode, seed);
    InfluenceGraph::from_edges(node_count, edges)
}

fn assign_weights(edges: &mut [(NodeId, NodeId, f64)], n: usize, mode: WeightMode, seed: u64) {
    match mode {
        WeightMode::AsGiven => {}
        WeightMode::UniformByInDegree => {
            let mut indegree = vec![0usize; n];
            for &(_, t, _) in edges.iter() {
                indegree[t] += 1;
            }
            for e in edges.iter_mut() {
                e.2 = 1.0 / indegree[e.1] as f64;
            }
        }
        WeightMode::RandomNormalized => {
            let mut rng = rng_for(seed, &[]);
            let mut sums = vec![0.0f64; n];
            for e in edges.iter_mut() {
                e.2 = unit_open_closed(&mut rng);
                sums[e.1] += e.2;
            }
            for e in edges.iter_mut() {
                e.2 /= sums[e.1].max(1.0);
            }
        }
    }
}

/// Loads an edge list (`u v` or `u v w` per line, `#` comments). Undirected
/// inputs contribute both directions of every line. The result satisfies all
/// graph invariants; violations are reported as errors.
pub fn load_edge_list<R: BufRead>(
    reader: R,
    directed: bool,
    mode: WeightMode,
    seed: u64,
) -> Result<InfluenceGraph> {
    let graph = parse_edge_list(reader, directed, mode, seed)?;
    if let Some(v) = validate(&graph).violations.first() {
        let message = v.describe(&graph);
        return Err(Error::InvalidGraph(message));
    }
    Ok(graph)
}
