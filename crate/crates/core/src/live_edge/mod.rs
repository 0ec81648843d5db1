//! Live-edge graphs and the dice-roll reformulation of LTR.
//!
//! In a live-edge graph every node keeps at most one incoming edge, picked
//! with probability equal to its weight. Nodes reachable from the seeds play
//! the role of LTM-active nodes, and each reachable node draws the target's
//! final position from a [`ShiftDistribution`] instead of simulating
//! thresholds.

pub mod exact;

use rand::Rng;

use crate::diffusion::{ControlInstance, DiffusionOutcome, Mode};
use crate::election::ScoringRule;
use crate::error::{Error, Result};
use crate::graph::{InfluenceGraph, NodeId};

/// One member `G'` of the live-edge family: `parent[v]` is the source of the
/// in-edge `v` kept, if any.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LiveEdgeGraph {
    parent: Vec<Option<NodeId>>,
}

impl LiveEdgeGraph {
    pub fn from_parents(parent: Vec<Option<NodeId>>) -> Self {
        Self { parent }
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<NodeId>] {
        &self.parent
    }

    /// Forward adjacency along kept edges.
    pub fn children(&self) -> Children {
        let n = self.parent.len();
        let mut offsets = vec![0usize; n + 1];
        for p in self.parent.iter().flatten() {
            offsets[p + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0; offsets[n]];
        for (v, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                targets[fill[p]] = v;
                fill[p] += 1;
            }
        }
        Children { offsets, targets }
    }
}

/// Compressed child lists of a [`LiveEdgeGraph`].
#[derive(Debug, Clone)]
pub struct Children {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

impl Children {
    #[inline]
    pub fn of(&self, v: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Marks everything reachable from `seeds`; returns the search depth.
    pub fn mark_reachable(&self, seeds: &[NodeId], reached: &mut [bool]) -> usize {
        let mut frontier: Vec<NodeId> = Vec::new();
        for &s in seeds {
            if !reached[s] {
                reached[s] = true;
                frontier.push(s);
            }
        }
        let mut depth = 0;
        let mut next = Vec::new();
        while !frontier.is_empty() {
            next.clear();
            for &u in &frontier {
                for &v in self.of(u) {
                    if !reached[v] {
                        reached[v] = true;
                        next.push(v);
                    }
                }
            }
            if !next.is_empty() {
                depth += 1;
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        depth
    }
}

/// Draws one live-edge graph: node `v` keeps in-edge `(u, v)` with
/// probability `b_uv` and nothing with probability `1 - Σ b_uv`. Exactly one
/// uniform is consumed per node.
pub fn sample_live_edge<R: Rng + ?Sized>(graph: &InfluenceGraph, rng: &mut R) -> LiveEdgeGraph {
    let parent = (0..graph.node_count())
        .map(|v| {
            let draw: f64 = rng.gen();
            let mut acc = 0.0;
            for &(u, w) in graph.incoming(v) {
                acc += w;
                if draw < acc {
                    return Some(u);
                }
            }
            None
        })
        .collect();
    LiveEdgeGraph { parent }
}

/// `Pr[G'] = Π_{kept} b_uv · Π_{none} (1 - Σ_w b_wv)`.
pub fn live_edge_probability(graph: &InfluenceGraph, g: &LiveEdgeGraph) -> Result<f64> {
    if g.node_count() != graph.node_count() {
        return Err(Error::InvalidGraph(format!(
            "live-edge graph has {} nodes, source has {}",
            g.node_count(),
            graph.node_count()
        )));
    }
    let mut prob = 1.0;
    for v in 0..graph.node_count() {
        prob *= match g.parent(v) {
            Some(u) => graph.weight(u, v).ok_or(Error::InconsistentLiveEdge(v))?,
            None => (1.0 - graph.in_weight(v)).max(0.0),
        };
    }
    Ok(prob)
}

/// Membership mask of `R_{G'}(seeds)`, seeds included.
pub fn reachable(g: &LiveEdgeGraph, seeds: &[NodeId]) -> Vec<bool> {
    let mut reached = vec![false; g.node_count()];
    g.children().mark_reachable(seeds, &mut reached);
    reached
}

/// Final-position distribution of the target for a reached node.
///
/// Upward (constructive) for origin `r`:
/// `P(r,1) = α/(r-1)`, `P(r,ℓ) = α/(r-ℓ) - α/(r-ℓ+1)` for `1 < ℓ < r`,
/// `P(r,r) = 1 - α`. The downward version mirrors it over positions `r..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftDistribution {
    origin: usize,
    first: usize,
    probs: Vec<f64>,
}

impl ShiftDistribution {
    pub fn upward(r: usize, alpha: f64) -> Self {
        assert!(r >= 1, "positions are 1-based");
        if r == 1 {
            return Self { origin: 1, first: 1, probs: vec![1.0] };
        }
        let mut probs = vec![0.0; r];
        probs[0] = alpha / (r - 1) as f64;
        for l in 2..r {
            probs[l - 1] = alpha / (r - l) as f64 - alpha / (r - l + 1) as f64;
        }
        probs[r - 1] = 1.0 - alpha;
        Self { origin: r, first: 1, probs }
    }

    /// Target at `r` moving down by `k ≤ m - r` steps: `Pr[k = m-r] = α/(m-r)`,
    /// `Pr[k] = α/k - α/(k+1)` for `0 < k < m-r`, `Pr[k = 0] = 1 - α`.
    pub fn downward(r: usize, m: usize, alpha: f64) -> Self {
        assert!(r >= 1 && r <= m);
        let span = m - r;
        if span == 0 {
            return Self { origin: r, first: r, probs: vec![1.0] };
        }
        let mut probs = vec![0.0; span + 1];
        probs[0] = 1.0 - alpha;
        for k in 1..span {
            probs[k] = alpha / k as f64 - alpha / (k + 1) as f64;
        }
        probs[span] = alpha / span as f64;
        Self { origin: r, first: r, probs }
    }

    /// Distribution for a reached node whose target sits at `r` in `instance`.
    pub fn for_instance(instance: &ControlInstance, r: usize) -> Self {
        let alpha = instance.alpha().at(r);
        match instance.mode() {
            Mode::Constructive => Self::upward(r, alpha),
            Mode::Destructive => Self::downward(r, instance.candidate_count(), alpha),
        }
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    /// Probability of ending at 1-based `position`.
    pub fn prob(&self, position: usize) -> f64 {
        if position < self.first {
            return 0.0;
        }
        self.probs.get(position - self.first).copied().unwrap_or(0.0)
    }

    /// `(position, probability)` pairs over the support range.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(i, &p)| (self.first + i, p))
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `Σ_ℓ f(ℓ) P(r, ℓ)`.
    pub fn expected_score(&self, rule: &ScoringRule) -> f64 {
        self.iter().map(|(l, p)| p * rule.score(l) as f64).sum()
    }

    /// Inverse-CDF draw from a uniform `u` in `[0, 1)`.
    pub fn sample_position(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (l, p) in self.iter() {
            acc += p;
            if u < acc {
                return l;
            }
        }
        // rounding slack: fall back to the heaviest tail that has mass
        self.iter().filter(|&(_, p)| p > 0.0).map(|(l, _)| l).last().unwrap_or(self.origin)
    }
}

/// Convenience for the upward distribution, `P(r, ·)`.
pub fn shift_distribution(r: usize, alpha: f64) -> ShiftDistribution {
    ShiftDistribution::upward(r, alpha)
}

/// Expected change of the target's score at node `v` if `v` is reached.
pub fn reach_deltas(instance: &ControlInstance) -> Vec<f64> {
    let profile = instance.profile();
    let rule = instance.rule();
    (0..instance.node_count())
        .map(|v| {
            let r = profile.position(v, instance.target());
            if !instance.shiftable(r) {
                return 0.0;
            }
            ShiftDistribution::for_instance(instance, r).expected_score(rule) - rule.score(r) as f64
        })
        .collect()
}

/// Dice-roll process: sample a live-edge graph, then every reached node with
/// a movable target draws its final position from [`ShiftDistribution`].
/// Destructive instances use the downward distribution.
pub fn run_ldr<R: Rng + ?Sized>(instance: &ControlInstance, seeds: &[NodeId], rng: &mut R) -> DiffusionOutcome {
    let g = sample_live_edge(instance.graph(), rng);
    let mut reached = vec![false; instance.node_count()];
    let rounds = g.children().mark_reachable(seeds, &mut reached);
    let profile = instance.profile();
    let target = instance.target();
    let mut shifted = profile.clone();
    for v in 0..instance.node_count() {
        let u: f64 = rng.gen();
        let r = profile.position(v, target);
        if !reached[v] || !instance.shiftable(r) {
            continue;
        }
        let position = ShiftDistribution::for_instance(instance, r).sample_position(u);
        if position != r {
            shifted.move_candidate(v, target, position);
        }
    }
    DiffusionOutcome { active: reached, shifted_profile: shifted, rounds }
}
