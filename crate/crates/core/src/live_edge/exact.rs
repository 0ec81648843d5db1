//! Exact evaluation by enumerating every live-edge graph. Only usable on
//! tiny graphs; it refuses instead of falling back to sampling.

use std::collections::BTreeMap;

use super::{reach_deltas, LiveEdgeGraph, ShiftDistribution};
use crate::diffusion::ControlInstance;
use crate::election::total_score;
use crate::error::{Error, Result};
use crate::graph::{InfluenceGraph, NodeId};

pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Every live-edge graph with nonzero probability, with that probability.
#[derive(Debug, Clone)]
pub struct Enumeration {
    graphs: Vec<(LiveEdgeGraph, f64)>,
}

impl Enumeration {
    pub fn iter(&self) -> impl Iterator<Item = (&LiveEdgeGraph, f64)> {
        self.graphs.iter().map(|(g, p)| (g, *p))
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn into_vec(self) -> Vec<(LiveEdgeGraph, f64)> {
        self.graphs
    }
}

/// Materializes the live-edge family. Options with zero probability (a
/// zero-weight edge, or "no edge" when the in-weights sum to 1) are skipped.
pub fn enumerate_live_edges(graph: &InfluenceGraph) -> Result<Enumeration> {
    let n = graph.node_count();
    let options: Vec<Vec<(Option<NodeId>, f64)>> = (0..n)
        .map(|v| {
            let mut opts: Vec<(Option<NodeId>, f64)> = graph
                .incoming(v)
                .iter()
                .filter(|&&(_, w)| w > 0.0)
                .map(|&(u, w)| (Some(u), w))
                .collect();
            let rest = 1.0 - graph.in_weight(v);
            if rest > 0.0 {
                opts.push((None, rest));
            }
            opts
        })
        .collect();
    let count = options.iter().map(|o| o.len() as u128).try_fold(1u128, |acc, k| acc.checked_mul(k));
    match count {
        Some(c) if c <= ENUMERATION_LIMIT => {}
        Some(c) => return Err(Error::TooLarge { count: c, limit: ENUMERATION_LIMIT }),
        None => return Err(Error::TooLarge { count: u128::MAX, limit: ENUMERATION_LIMIT }),
    }

    let mut graphs = Vec::new();
    let mut digits = vec![0usize; n];
    loop {
        let mut prob = 1.0;
        let mut parent = Vec::with_capacity(n);
        for v in 0..n {
            let (p, w) = options[v][digits[v]];
            parent.push(p);
            prob *= w;
        }
        graphs.push((LiveEdgeGraph::from_parents(parent), prob));
        // mixed-radix increment
        let mut v = 0;
        loop {
            if v == n {
                return Ok(Enumeration { graphs });
            }
            digits[v] += 1;
            if digits[v] < options[v].len() {
                break;
            }
            digits[v] = 0;
            v += 1;
        }
    }
}

/// `Pr[v ∈ R(seeds)] = Σ_{G'} Pr[G'] · 1_{(G', v)}` for every node.
pub fn reach_probabilities(enumeration: &Enumeration, seeds: &[NodeId]) -> Vec<f64> {
    let n = enumeration.graphs.first().map_or(0, |(g, _)| g.node_count());
    let mut probs = vec![0.0; n];
    for (g, p) in enumeration.iter() {
        let reached = super::reachable(g, seeds);
        for v in 0..n {
            if reached[v] {
                probs[v] += p;
            }
        }
    }
    probs
}

/// `Σ_{U ⊆ N_v} Σ_{u ∈ U} b_uv · Pr[R(seeds) ∩ N_v = U]`, with the law of
/// `R ∩ N_v` tabulated from the enumeration.
pub fn reach_probability_by_neighbors(
    graph: &InfluenceGraph,
    enumeration: &Enumeration,
    seeds: &[NodeId],
    v: NodeId,
) -> f64 {
    let neighbours = graph.incoming(v);
    let mut law: BTreeMap<Vec<NodeId>, f64> = BTreeMap::new();
    for (g, p) in enumeration.iter() {
        let reached = super::reachable(g, seeds);
        let subset: Vec<NodeId> = neighbours.iter().map(|&(u, _)| u).filter(|&u| reached[u]).collect();
        *law.entry(subset).or_insert(0.0) += p;
    }
    law.iter()
        .map(|(subset, &p)| {
            let weight: f64 = subset.iter().map(|&u| graph.weight(u, v).unwrap_or(0.0)).sum();
            weight * p
        })
        .sum()
}

/// Law of the reachable set, keyed by the sorted member list.
pub fn reachable_set_distribution(enumeration: &Enumeration, seeds: &[NodeId]) -> BTreeMap<Vec<NodeId>, f64> {
    let mut law = BTreeMap::new();
    for (g, p) in enumeration.iter() {
        let members: Vec<NodeId> = super::reachable(g, seeds)
            .iter()
            .enumerate()
            .filter_map(|(v, &r)| r.then_some(v))
            .collect();
        *law.entry(members).or_insert(0.0) += p;
    }
    law
}

/// Exact `F(A₀)`: static score plus, over every live-edge graph, the
/// expected dice-roll change of every reached node. Destructive instances use
/// downward shifts, giving `F_D(A₀)`.
pub fn exact_expected_score(instance: &ControlInstance, seeds: &[NodeId]) -> Result<f64> {
    let enumeration = enumerate_live_edges(instance.graph())?;
    Ok(expected_score_over(instance, &enumeration, seeds))
}

/// [`exact_expected_score`] over a precomputed enumeration.
pub fn expected_score_over(instance: &ControlInstance, enumeration: &Enumeration, seeds: &[NodeId]) -> f64 {
    let base = total_score(instance.profile(), instance.rule(), instance.target()) as f64;
    let deltas = reach_deltas(instance);
    let gain: f64 = enumeration
        .iter()
        .map(|(g, p)| {
            let reached = super::reachable(g, seeds);
            p * reached.iter().zip(&deltas).filter(|(&r, _)| r).map(|(_, d)| d).sum::<f64>()
        })
        .sum();
    base + gain
}

/// Exact law of the target's final position at every node under the
/// dice-roll process: `dist[v][ℓ - 1] = Pr[π̃_v(c⋆) = ℓ]`.
pub fn exact_position_distribution(instance: &ControlInstance, seeds: &[NodeId]) -> Result<Vec<Vec<f64>>> {
    let enumeration = enumerate_live_edges(instance.graph())?;
    let reach = reach_probabilities(&enumeration, seeds);
    let m = instance.candidate_count();
    Ok((0..instance.node_count())
        .map(|v| {
            let r = instance.profile().position(v, instance.target());
            let mut row = vec![0.0; m];
            if instance.shiftable(r) {
                let d = ShiftDistribution::for_instance(instance, r);
                for (l, p) in d.iter() {
                    row[l - 1] += reach[v] * p;
                }
                row[r - 1] += 1.0 - reach[v];
            } else {
                row[r - 1] = 1.0;
            }
            row
        })
        .collect())
}
