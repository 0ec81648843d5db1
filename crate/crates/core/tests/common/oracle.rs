//! Brute-force reference implementation for tiny instances, written against
//! the model definitions only (no library internals beyond plain data types).

#![allow(dead_code)]

use std::sync::Arc;

use ltr_core::{AlphaTable, ControlInstance, InfluenceGraph, Mode, PreferenceProfile, ScoringRule};
use rand::seq::SliceRandom;
use rand::Rng;

/// A tiny instance as plain data.
#[derive(Debug, Clone)]
pub struct Tiny {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub m: usize,
    pub rankings: Vec<Vec<usize>>,
    pub scores: Vec<u64>,
    pub target: usize,
    pub alpha: Vec<f64>,
    pub destructive: bool,
}

impl Tiny {
    pub fn instance(&self, budget: usize) -> ControlInstance {
        let graph = InfluenceGraph::from_edges(self.n, self.edges.clone()).expect("valid tiny graph");
        ControlInstance::new(
            Arc::new(graph),
            PreferenceProfile::new(self.m, self.rankings.clone()).expect("valid profile"),
            ScoringRule::custom(self.scores.clone()).expect("valid rule"),
            self.target,
            AlphaTable::custom(self.alpha.clone()).expect("valid alpha"),
            budget,
            if self.destructive { Mode::Destructive } else { Mode::Constructive },
        )
        .expect("valid instance")
    }

    /// Random instance: up to `max_nodes` nodes and `max_edges` edges, up to
    /// `max_m` candidates, random rule and per-position α.
    pub fn random<R: Rng>(rng: &mut R, max_nodes: usize, max_edges: usize, max_m: usize) -> Self {
        let n = rng.gen_range(2..=max_nodes);
        let mut pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v))).collect();
        pairs.shuffle(rng);
        pairs.truncate(rng.gen_range(1..=max_edges.min(n * (n - 1))));
        let mut edges = Vec::new();
        for v in 0..n {
            let incoming: Vec<usize> = pairs.iter().filter(|p| p.1 == v).map(|p| p.0).collect();
            if incoming.is_empty() {
                continue;
            }
            let raw: Vec<f64> = incoming.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mass = if rng.gen_bool(0.3) { 1.0 } else { rng.gen_range(0.1..1.0) };
            for (&u, w) in incoming.iter().zip(raw) {
                edges.push((u, v, w / total * mass));
            }
        }
        let m = rng.gen_range(2..=max_m);
        let rankings = (0..n)
            .map(|_| {
                let mut r: Vec<usize> = (0..m).collect();
                r.shuffle(rng);
                r
            })
            .collect();
        let scores = match rng.gen_range(0..4) {
            0 => std::iter::once(1).chain(std::iter::repeat_n(0, m - 1)).collect(),
            1 => (0..m as u64).rev().collect(),
            2 => (0..m).map(|i| if i + 1 < m { 1 } else { 0 }).collect(),
            _ => {
                let mut s: Vec<u64> = (0..m).map(|_| rng.gen_range(0..6)).collect();
                s.sort_unstable_by(|a, b| b.cmp(a));
                s
            }
        };
        let alpha = (0..m).map(|_| rng.gen::<f64>()).collect();
        Tiny { n, edges, m, rankings, scores, target: rng.gen_range(0..m), alpha, destructive: false }
    }

    pub fn in_weight(&self, v: usize) -> f64 {
        self.edges.iter().filter(|e| e.1 == v).map(|e| e.2).sum()
    }

    pub fn position(&self, v: usize, c: usize) -> usize {
        self.rankings[v].iter().position(|&x| x == c).unwrap() + 1
    }

    pub fn has_cycle(&self) -> bool {
        // Kahn's algorithm
        let mut indeg = vec![0; self.n];
        for e in &self.edges {
            indeg[e.1] += 1;
        }
        let mut queue: Vec<usize> = (0..self.n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop() {
            seen += 1;
            for e in self.edges.iter().filter(|e| e.0 == u) {
                indeg[e.1] -= 1;
                if indeg[e.1] == 0 {
                    queue.push(e.1);
                }
            }
        }
        seen < self.n
    }

    /// Reversed rankings, complemented scores, α re-indexed from the bottom.
    pub fn reduced(&self) -> Tiny {
        let fmax = *self.scores.iter().max().unwrap();
        Tiny {
            rankings: self.rankings.iter().map(|r| r.iter().rev().copied().collect()).collect(),
            scores: (1..=self.m).map(|r| fmax - self.scores[self.m - r]).collect(),
            alpha: (1..=self.m).map(|r| self.alpha[self.m - r]).collect(),
            destructive: false,
            ..self.clone()
        }
    }
}

/// Every live-edge world: one parent choice per node, with its probability.
pub fn worlds(t: &Tiny) -> Vec<(Vec<Option<usize>>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for v in 0..t.n {
        let mut options: Vec<(Option<usize>, f64)> =
            t.edges.iter().filter(|e| e.1 == v).map(|e| (Some(e.0), e.2)).collect();
        options.push((None, 1.0 - t.in_weight(v)));
        let mut next = Vec::new();
        for (parents, p) in &out {
            for &(choice, q) in &options {
                if q <= 0.0 {
                    continue;
                }
                let mut parents: Vec<Option<usize>> = parents.clone();
                parents.push(choice);
                next.push((parents, p * q));
            }
        }
        out = next;
    }
    out
}

/// Fixpoint reachability along parent pointers.
pub fn reach(parents: &[Option<usize>], seeds: &[usize]) -> Vec<bool> {
    let mut r = vec![false; parents.len()];
    for &s in seeds {
        r[s] = true;
    }
    for _ in 0..parents.len() {
        for v in 0..parents.len() {
            if let Some(u) = parents[v] {
                r[v] |= r[u];
            }
        }
    }
    r
}

/// Law of the target's final position for a reached node, indexed by `ℓ - 1`.
pub fn dice(t: &Tiny, r: usize) -> Vec<f64> {
    let a = t.alpha[r - 1];
    let mut law = vec![0.0; t.m];
    if !t.destructive {
        if r == 1 {
            law[0] = 1.0;
            return law;
        }
        for l in 1..r {
            law[l - 1] = if l == 1 {
                a / (r - 1) as f64
            } else {
                a / (r - l) as f64 - a / (r - l + 1) as f64
            };
        }
        law[r - 1] = 1.0 - a;
    } else {
        let span = t.m - r;
        if span == 0 {
            law[r - 1] = 1.0;
            return law;
        }
        law[r - 1] = 1.0 - a;
        for k in 1..=span {
            law[r + k - 1] = if k == span { a / k as f64 } else { a / k as f64 - a / (k + 1) as f64 };
        }
    }
    law
}

pub fn reach_probability(t: &Tiny, seeds: &[usize]) -> Vec<f64> {
    let mut p = vec![0.0; t.n];
    for (parents, q) in worlds(t) {
        for (v, hit) in reach(&parents, seeds).into_iter().enumerate() {
            if hit {
                p[v] += q;
            }
        }
    }
    p
}

/// `Σ_{U ⊆ N_v} Σ_{u ∈ U} b_uv · Pr[R ∩ N_v = U]`, which reduces to
/// `Σ_u b_uv · Pr[u ∈ R]`.
pub fn neighbour_decomposition(t: &Tiny, seeds: &[usize], v: usize) -> f64 {
    let p = reach_probability(t, seeds);
    t.edges.iter().filter(|e| e.1 == v).map(|e| e.2 * p[e.0]).sum()
}

/// `law[v][ℓ - 1] = Pr[final position of the target at v is ℓ]`.
pub fn position_law(t: &Tiny, seeds: &[usize]) -> Vec<Vec<f64>> {
    let p = reach_probability(t, seeds);
    (0..t.n)
        .map(|v| {
            let r = t.position(v, t.target);
            let mut row: Vec<f64> = dice(t, r).iter().map(|x| x * p[v]).collect();
            row[r - 1] += 1.0 - p[v];
            row
        })
        .collect()
}

pub fn expected_score(t: &Tiny, seeds: &[usize]) -> f64 {
    position_law(t, seeds)
        .iter()
        .map(|row| row.iter().enumerate().map(|(i, p)| p * t.scores[i] as f64).sum::<f64>())
        .sum()
}

fn moved(ranking: &[usize], c: usize, to: usize) -> Vec<usize> {
    let mut r: Vec<usize> = ranking.iter().copied().filter(|&x| x != c).collect();
    r.insert(to - 1, c);
    r
}

fn margin(t: &Tiny, rankings: &[Vec<usize>]) -> i64 {
    let mut tally = vec![0i64; t.m];
    for r in rankings {
        for (i, &c) in r.iter().enumerate() {
            tally[c] += t.scores[i] as i64;
        }
    }
    let best = (0..t.m).filter(|&c| c != t.target).map(|c| tally[c]).max().unwrap();
    best - tally[t.target]
}

/// `E[μ(A₀)]` by enumerating worlds and every joint dice outcome.
pub fn expected_margin(t: &Tiny, seeds: &[usize]) -> f64 {
    let mut total = 0.0;
    for (parents, q) in worlds(t) {
        let reached = reach(&parents, seeds);
        let mut outcomes: Vec<(Vec<Vec<usize>>, f64)> = vec![(Vec::new(), q)];
        for v in 0..t.n {
            let r = t.position(v, t.target);
            let choices: Vec<(usize, f64)> = if reached[v] {
                dice(t, r).into_iter().enumerate().filter(|&(_, p)| p > 0.0).map(|(i, p)| (i + 1, p)).collect()
            } else {
                vec![(r, 1.0)]
            };
            let mut next = Vec::new();
            for (profile, p) in &outcomes {
                for &(l, pl) in &choices {
                    let mut profile = profile.clone();
                    profile.push(moved(&t.rankings[v], t.target, l));
                    next.push((profile, p * pl));
                }
            }
            outcomes = next;
        }
        total += outcomes.iter().map(|(profile, p)| p * margin(t, profile) as f64).sum::<f64>();
    }
    total
}

/// Exact `E[μ(∅) - μ(A₀)]`, or `E[μ(A₀) - μ(∅)]` for destructive instances.
pub fn expected_mov(t: &Tiny, seeds: &[usize]) -> f64 {
    let before = margin(t, &t.rankings) as f64;
    let after = expected_margin(t, seeds);
    if t.destructive {
        after - before
    } else {
        before - after
    }
}

/// Every subset of `0..n` with exactly `k` elements, in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
        .collect()
}

/// Every subset of `0..n`.
pub fn all_subsets(n: usize) -> Vec<Vec<usize>> {
    (0..=n).flat_map(|k| subsets(n, k)).collect()
}

impl Tiny {
    /// Reads a library instance back into plain data.
    pub fn from_instance(inst: &ControlInstance) -> Self {
        let g = inst.graph();
        Tiny {
            n: g.node_count(),
            edges: g.edges().iter().map(|e| (e.source, e.target, e.weight)).collect(),
            m: inst.candidate_count(),
            rankings: (0..g.node_count()).map(|v| inst.profile().ranking(v).to_vec()).collect(),
            scores: inst.rule().scores().to_vec(),
            target: inst.target(),
            alpha: inst.alpha().values().to_vec(),
            destructive: inst.mode() == Mode::Destructive,
        }
    }
}
