//! Margin of victory (MoV) and probability of victory (PoV).
//!
//! On a fixed live-edge graph `G'` the dice rolls of reached nodes are
//! independent, so every candidate's expected final score is a static tally
//! plus a per-node correction summed over the reached set. The per-graph
//! margin is then `μ_G'(A₀) = max_z E[S̃_z] - E[S̃⋆]` over opponents `z`, and
//! `MoV_G'(A₀) = μ(∅) - μ_G'(A₀)` (constructive) or `μ_G'(A₀) - μ(∅)`
//! (destructive). Because the maximum is taken after the expectation this
//! overstates the true constructive MoV and understates the destructive one;
//! the two coincide when `m = 2`.
//! [`exact_expected_mov`] computes the true expectation on tiny graphs.

use crate::diffusion::{run_ltr, ControlInstance, Mode};
use crate::election::{apply_shift, margin_from_tally, strongest_opponent, tally, Candidate};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::live_edge::exact::{enumerate_live_edges, ENUMERATION_LIMIT};
use crate::live_edge::{reachable, sample_live_edge, LiveEdgeGraph, ShiftDistribution};
use crate::optimizer::{mean_and_stderr, Estimator};
use crate::parallel::map_indexed;
use crate::seeding::rng_for;

/// Static tallies plus the expected per-candidate score change of every node
/// should it be reached.
#[derive(Debug, Clone)]
pub struct MarginModel {
    candidates: usize,
    target: Candidate,
    mode: Mode,
    static_tally: Vec<u64>,
    deltas: Vec<f64>,
    mu_empty: i64,
}

impl MarginModel {
    pub fn new(instance: &ControlInstance) -> Self {
        let profile = instance.profile();
        let rule = instance.rule();
        let m = instance.candidate_count();
        let target = instance.target();
        let mut deltas = vec![0.0; instance.node_count() * m];
        for v in 0..instance.node_count() {
            let r = profile.position(v, target);
            if !instance.shiftable(r) {
                continue;
            }
            let ranking = profile.ranking(v);
            let row = &mut deltas[v * m..(v + 1) * m];
            for (l, p) in ShiftDistribution::for_instance(instance, r).iter() {
                if p == 0.0 || l == r {
                    continue;
                }
                let moved = apply_shift(ranking, target, l);
                for (i, (&after, &before)) in moved.iter().zip(ranking).enumerate() {
                    if after != before {
                        let s = rule.score(i + 1) as f64;
                        row[after] += p * s;
                        row[before] -= p * s;
                    }
                }
            }
        }
        let static_tally = tally(profile, rule);
        let mu_empty = margin_from_tally(&static_tally, target);
        Self { candidates: m, target, mode: instance.mode(), static_tally, deltas, mu_empty }
    }

    /// `μ(∅)`: strongest opponent's score minus the target's before diffusion.
    pub fn mu_empty(&self) -> i64 {
        self.mu_empty
    }

    pub fn static_tally(&self) -> &[u64] {
        &self.static_tally
    }

    /// Expected final score of every candidate given the reached set.
    pub fn expected_tallies(&self, reached: &[bool]) -> Vec<f64> {
        let m = self.candidates;
        let mut totals: Vec<f64> = self.static_tally.iter().map(|&s| s as f64).collect();
        for (v, _) in reached.iter().enumerate().filter(|(_, &r)| r) {
            for (t, d) in totals.iter_mut().zip(&self.deltas[v * m..(v + 1) * m]) {
                *t += d;
            }
        }
        totals
    }

    /// Per-graph MoV with the sign convention of the instance's mode.
    pub fn mov(&self, reached: &[bool]) -> f64 {
        let totals = self.expected_tallies(reached);
        let z = strongest_opponent(&totals, self.target);
        let mu = totals[z] - totals[self.target];
        match self.mode {
            Mode::Constructive => self.mu_empty as f64 - mu,
            Mode::Destructive => mu - self.mu_empty as f64,
        }
    }
}

/// Expected candidate tallies after the dice rolls on `g`.
pub fn expected_tallies_on_live_edge(instance: &ControlInstance, seeds: &[NodeId], g: &LiveEdgeGraph) -> Vec<f64> {
    MarginModel::new(instance).expected_tallies(&reachable(g, seeds))
}

/// `MoV_G'(A₀)` on one live-edge graph.
pub fn mov_on_live_edge(instance: &ControlInstance, seeds: &[NodeId], g: &LiveEdgeGraph) -> f64 {
    MarginModel::new(instance).mov(&reachable(g, seeds))
}

/// Constructive `MoV_G'(A₀)` written as a gain term plus the smallest
/// opponent slack:
///
/// `Σ_v (Σ_ℓ f(ℓ)P(r,ℓ) - f(r)) + min_z (max_i S_i - S_z + loss_z)`,
///
/// where `loss_z = Σ_v Σ_{ℓ ≤ h} P(r,ℓ)(f(h) - f(h+1))` over reached nodes
/// ranking `z` at `h < r`. Plurality is the case `f = (1, 0, …, 0)`.
pub fn mov_gain_loss_form(instance: &ControlInstance, seeds: &[NodeId], g: &LiveEdgeGraph) -> Result<f64> {
    if instance.mode() != Mode::Constructive {
        return Err(Error::NotConstructive);
    }
    let profile = instance.profile();
    let rule = instance.rule();
    let target = instance.target();
    let m = instance.candidate_count();
    let reached = reachable(g, seeds);
    let static_tally = tally(profile, rule);
    let mut gain = 0.0;
    let mut loss = vec![0.0; m];
    for v in (0..instance.node_count()).filter(|&v| reached[v]) {
        let r = profile.position(v, target);
        if r == 1 {
            continue;
        }
        let d = ShiftDistribution::for_instance(instance, r);
        gain += d.expected_score(rule) - rule.score(r) as f64;
        for h in 1..r {
            let z = profile.at(v, h);
            let step = (rule.score(h) - rule.score(h + 1)) as f64;
            loss[z] += (1..=h).map(|l| d.prob(l)).sum::<f64>() * step;
        }
    }
    let opponents = || (0..m).filter(|&c| c != target);
    let top = opponents().map(|c| static_tally[c]).max().unwrap_or(0) as f64;
    let slack = opponents()
        .map(|z| top - static_tally[z] as f64 + loss[z])
        .fold(f64::INFINITY, f64::min);
    Ok(gain + slack)
}

/// Expected MoV with Monte-Carlo error and, optionally, PoV.
#[derive(Debug, Clone, PartialEq)]
pub struct MovReport {
    pub expected_mov: f64,
    pub stderr: f64,
    pub mov_samples: usize,
    pub pov: Option<f64>,
    pub pov_runs: usize,
    pub mu_empty: i64,
    /// Expected final score of every candidate, averaged over samples.
    pub expected_scores: Vec<f64>,
}

/// Mean and standard error of `MoV_G'` over `R` sampled live-edge graphs.
pub fn expected_mov(instance: &ControlInstance, seeds: &[NodeId], est: &Estimator) -> MovReport {
    let model = MarginModel::new(instance);
    let graph = instance.graph();
    let samples = est.samples.max(1);
    let per_sample = map_indexed(samples, |i| {
        let mut rng = rng_for(est.seed, &[i as u64]);
        let g = sample_live_edge(graph, &mut rng);
        let mut reached = vec![false; graph.node_count()];
        g.children().mark_reachable(seeds, &mut reached);
        (model.mov(&reached), model.expected_tallies(&reached))
    });
    let movs: Vec<f64> = per_sample.iter().map(|(m, _)| *m).collect();
    let stats = mean_and_stderr(&movs);
    let mut expected_scores = vec![0.0; instance.candidate_count()];
    for (_, t) in &per_sample {
        for (acc, x) in expected_scores.iter_mut().zip(t) {
            *acc += x;
        }
    }
    expected_scores.iter_mut().for_each(|x| *x /= samples as f64);
    MovReport {
        expected_mov: stats.mean,
        stderr: stats.stderr,
        mov_samples: samples,
        pov: None,
        pov_runs: 0,
        mu_empty: model.mu_empty(),
        expected_scores,
    }
}

/// [`expected_mov`] plus PoV from `pov_runs` LTR simulations.
pub fn evaluate(
    instance: &ControlInstance,
    seeds: &[NodeId],
    est: &Estimator,
    pov_runs: usize,
    pov_seed: u64,
) -> MovReport {
    let mut report = expected_mov(instance, seeds, est);
    if pov_runs > 0 {
        report.pov = Some(pov(instance, seeds, pov_runs, pov_seed));
        report.pov_runs = pov_runs;
    }
    report
}

/// Outcome of one LTR simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    pub run: usize,
    pub target_score: u64,
    pub tally: Vec<u64>,
    /// `μ(A₀)`: strongest opponent's score minus the target's.
    pub margin: i64,
}

impl RunRecord {
    /// The target wins only with a strictly larger score than every opponent.
    pub fn target_wins(&self) -> bool {
        self.margin < 0
    }
}

/// `runs` LTR simulations; run `i` draws from a generator derived from `(seed, i)`.
pub fn simulate(instance: &ControlInstance, seeds: &[NodeId], runs: usize, seed: u64) -> Vec<RunRecord> {
    let target = instance.target();
    map_indexed(runs, |run| {
        let mut rng = rng_for(seed, &[run as u64]);
        let outcome = run_ltr(instance, seeds, &mut rng);
        let t = tally(&outcome.shifted_profile, instance.rule());
        RunRecord { run, target_score: t[target], margin: margin_from_tally(&t, target), tally: t }
    })
}

/// Fraction of `runs` LTR simulations the target wins outright; ties lose.
pub fn pov(instance: &ControlInstance, seeds: &[NodeId], runs: usize, seed: u64) -> f64 {
    if runs == 0 {
        return 0.0;
    }
    let wins = simulate(instance, seeds, runs, seed).iter().filter(|r| r.target_wins()).count();
    wins as f64 / runs as f64
}

/// Exact `E[μ(∅) - μ(A₀)]` (constructive) or `E[μ(A₀) - μ(∅)]` (destructive)
/// under the dice-roll process, enumerating every live-edge graph and every
/// joint dice outcome of the reached nodes.
pub fn exact_expected_mov(instance: &ControlInstance, seeds: &[NodeId]) -> Result<f64> {
    let enumeration = enumerate_live_edges(instance.graph())?;
    let profile = instance.profile();
    let rule = instance.rule();
    let target = instance.target();
    let base: Vec<i64> = tally(profile, rule).iter().map(|&s| s as i64).collect();
    let mu_empty = margin_from_tally(&tally(profile, rule), target) as f64;

    let mut expected_mu = 0.0;
    for (g, pg) in enumeration.iter() {
        let reached = reachable(g, seeds);
        // every reached node contributes a law over score-change vectors
        let mut laws: Vec<Vec<(f64, Vec<i64>)>> = Vec::new();
        let mut outcomes: u128 = 1;
        for v in (0..instance.node_count()).filter(|&v| reached[v]) {
            let r = profile.position(v, target);
            if !instance.shiftable(r) {
                continue;
            }
            let ranking = profile.ranking(v);
            let law: Vec<(f64, Vec<i64>)> = ShiftDistribution::for_instance(instance, r)
                .iter()
                .filter(|&(_, p)| p > 0.0)
                .map(|(l, p)| {
                    let mut change = vec![0i64; base.len()];
                    for (i, (&a, &b)) in apply_shift(ranking, target, l).iter().zip(ranking).enumerate() {
                        let s = rule.score(i + 1) as i64;
                        change[a] += s;
                        change[b] -= s;
                    }
                    (p, change)
                })
                .collect();
            outcomes = outcomes.saturating_mul(law.len() as u128);
            laws.push(law);
        }
        if outcomes > ENUMERATION_LIMIT {
            return Err(Error::TooLarge { count: outcomes, limit: ENUMERATION_LIMIT });
        }
        let mut scores = base.clone();
        expected_mu += pg * expected_margin(&laws, &mut scores, target);
    }
    Ok(match instance.mode() {
        Mode::Constructive => mu_empty - expected_mu,
        Mode::Destructive => expected_mu - mu_empty,
    })
}

fn expected_margin(laws: &[Vec<(f64, Vec<i64>)>], scores: &mut Vec<i64>, target: Candidate) -> f64 {
    let Some((law, rest)) = laws.split_first() else {
        let z = strongest_opponent(scores, target);
        return (scores[z] - scores[target]) as f64;
    };
    let mut total = 0.0;
    for (p, change) in law {
        scores.iter_mut().zip(change).for_each(|(s, c)| *s += c);
        total += p * expected_margin(rest, scores, target);
        scores.iter_mut().zip(change).for_each(|(s, c)| *s -= c);
    }
    total
}

/// `Σ_{G'} Pr[G'] · MoV_G'(A₀)` by enumeration.
pub fn exact_live_edge_mov(instance: &ControlInstance, seeds: &[NodeId]) -> Result<f64> {
    let enumeration = enumerate_live_edges(instance.graph())?;
    let model = MarginModel::new(instance);
    Ok(enumeration.iter().map(|(g, p)| p * model.mov(&reachable(g, seeds))).sum())
}
