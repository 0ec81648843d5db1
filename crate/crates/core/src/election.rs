//! Candidates, preference profiles and positional scoring rules.
//!
//! Positions are 1-based throughout: position 1 is a voter's favourite.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::graph::{InfluenceGraph, NodeId};

pub type Candidate = usize;

/// One ranking per node, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceProfile {
    candidates: usize,
    // rankings[v * m + i] = candidate at position i + 1 for node v
    rankings: Vec<Candidate>,
    // positions[v * m + c] = 1-based position of c for node v
    positions: Vec<usize>,
}

impl PreferenceProfile {
    pub fn new(candidates: usize, rankings: Vec<Vec<Candidate>>) -> Result<Self> {
        if candidates < 2 {
            return Err(Error::InvalidProfile(format!("need at least 2 candidates, got {candidates}")));
        }
        let mut flat = Vec::with_capacity(rankings.len() * candidates);
        let mut positions = vec![0usize; rankings.len() * candidates];
        for (v, ranking) in rankings.iter().enumerate() {
            if ranking.len() != candidates {
                return Err(Error::InvalidProfile(format!(
                    "node {v} ranks {} candidates, expected {candidates}",
                    ranking.len()
                )));
            }
            for (i, &c) in ranking.iter().enumerate() {
                if c >= candidates || positions[v * candidates + c] != 0 {
                    return Err(Error::InvalidProfile(format!(
                        "node {v}: ranking is not a permutation of 0..{candidates}"
                    )));
                }
                positions[v * candidates + c] = i + 1;
            }
            flat.extend_from_slice(ranking);
        }
        Ok(Self { candidates, rankings: flat, positions })
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates
    }

    pub fn node_count(&self) -> usize {
        self.rankings.len() / self.candidates
    }

    pub fn ranking(&self, v: NodeId) -> &[Candidate] {
        &self.rankings[v * self.candidates..(v + 1) * self.candidates]
    }

    /// `π_v(c)`, 1-based.
    pub fn position(&self, v: NodeId, c: Candidate) -> usize {
        self.positions[v * self.candidates + c]
    }

    /// Candidate at 1-based `position` for node `v`.
    pub fn at(&self, v: NodeId, position: usize) -> Candidate {
        self.rankings[v * self.candidates + position - 1]
    }

    /// Moves `target` to `new_position` in node `v`'s ranking.
    pub fn move_candidate(&mut self, v: NodeId, target: Candidate, new_position: usize) {
        let m = self.candidates;
        let row = &mut self.rankings[v * m..(v + 1) * m];
        shift_in_place(row, target, new_position);
        for (i, &c) in row.iter().enumerate() {
            self.positions[v * m + c] = i + 1;
        }
    }

    /// Nodes ranking `c` at `position` (the set `V^r_c`).
    pub fn nodes_at(&self, c: Candidate, position: usize) -> Vec<NodeId> {
        (0..self.node_count()).filter(|&v| self.position(v, c) == position).collect()
    }

    /// Same profile with every ranking reversed.
    pub fn reversed(&self) -> Self {
        let rankings = (0..self.node_count())
            .map(|v| self.ranking(v).iter().rev().copied().collect())
            .collect();
        Self::new(self.candidates, rankings).expect("reversal preserves permutations")
    }
}

/// Positional scoring function `f(1..m)`, nonincreasing, integer valued.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoringRule {
    scores: Vec<u64>,
}

impl ScoringRule {
    pub fn custom(scores: Vec<u64>) -> Result<Self> {
        if scores.len() < 2 {
            return Err(Error::InvalidRule("need scores for at least 2 positions".into()));
        }
        if scores.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidRule(format!("scores {scores:?} are not nonincreasing")));
        }
        Ok(Self { scores })
    }

    pub fn plurality(m: usize) -> Self {
        Self::approval(m, 1).expect("plurality is valid for m >= 2")
    }

    /// One point to each of the first `t` positions.
    pub fn approval(m: usize, t: usize) -> Result<Self> {
        if t > m {
            return Err(Error::InvalidRule(format!("approval t = {t} exceeds m = {m}")));
        }
        Self::custom((0..m).map(|i| u64::from(i < t)).collect())
    }

    /// One point to each of the first `m - t` positions.
    pub fn veto(m: usize, t: usize) -> Result<Self> {
        if t > m {
            return Err(Error::InvalidRule(format!("veto t = {t} exceeds m = {m}")));
        }
        Self::approval(m, m - t)
    }

    /// `f(l) = m - l`.
    pub fn borda(m: usize) -> Self {
        Self::custom((1..=m).map(|l| (m - l) as u64).collect()).expect("borda is nonincreasing")
    }

    /// Parses `plurality`, `approval:t`, `veto:t`, `borda` or `custom:s1,s2,...`.
    pub fn parse(text: &str, m: usize) -> Result<Self> {
        let (name, arg) = match text.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (text.trim(), None),
        };
        let param = |arg: Option<&str>| -> Result<usize> {
            arg.ok_or_else(|| Error::InvalidRule(format!("`{name}` needs a parameter")))?
                .parse()
                .map_err(|_| Error::InvalidRule(format!("bad parameter in `{text}`")))
        };
        let rule = match name {
            "plurality" => Self::plurality(m),
            "borda" => Self::borda(m),
            "approval" => Self::approval(m, param(arg)?)?,
            "veto" => Self::veto(m, param(arg)?)?,
            "custom" => {
                let scores = arg
                    .ok_or_else(|| Error::InvalidRule("`custom` needs scores".into()))?
                    .split([',', '/'])
                    .map(|s| s.trim().parse::<u64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::InvalidRule(format!("bad score list in `{text}`")))?;
                Self::custom(scores)?
            }
            other => return Err(Error::InvalidRule(format!("unknown rule `{other}`"))),
        };
        if rule.candidate_count() != m {
            return Err(Error::InvalidRule(format!(
                "rule covers {} positions but there are {m} candidates",
                rule.candidate_count()
            )));
        }
        Ok(rule)
    }

    pub fn candidate_count(&self) -> usize {
        self.scores.len()
    }

    pub fn scores(&self) -> &[u64] {
        &self.scores
    }

    /// `f(position)`.
    pub fn score_of(&self, position: usize) -> Result<u64> {
        if position == 0 || position > self.scores.len() {
            return Err(Error::PositionOutOfRange { position, candidates: self.scores.len() });
        }
        Ok(self.scores[position - 1])
    }

    /// `f(position)` without the range check.
    #[inline]
    pub fn score(&self, position: usize) -> u64 {
        self.scores[position - 1]
    }

    pub fn max_score(&self) -> u64 {
        self.scores[0]
    }

    /// `f'(r) = f_max - f(m - r + 1)`, the rule seen through reversed rankings.
    pub fn complemented(&self) -> Self {
        let top = self.max_score();
        Self { scores: self.scores.iter().rev().map(|&s| top - s).collect() }
    }
}

/// Total score of every candidate.
pub fn tally(profile: &PreferenceProfile, rule: &ScoringRule) -> Vec<u64> {
    let mut totals = vec![0u64; profile.candidate_count()];
    for v in 0..profile.node_count() {
        for (i, &c) in profile.ranking(v).iter().enumerate() {
            totals[c] += rule.score(i + 1);
        }
    }
    totals
}

pub fn total_score(profile: &PreferenceProfile, rule: &ScoringRule, candidate: Candidate) -> u64 {
    (0..profile.node_count()).map(|v| rule.score(profile.position(v, candidate))).sum()
}

/// Highest-scoring candidate other than `target`; ties go to the lowest id.
pub fn strongest_opponent<T: PartialOrd + Copy>(scores: &[T], target: Candidate) -> Candidate {
    let mut best: Option<Candidate> = None;
    for (c, &s) in scores.iter().enumerate() {
        if c == target {
            continue;
        }
        match best {
            Some(b) if !(s > scores[b]) => {}
            _ => best = Some(c),
        }
    }
    best.expect("at least two candidates")
}

/// Overall winner, lowest id on ties.
pub fn winner<T: PartialOrd + Copy>(scores: &[T]) -> Candidate {
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = c;
        }
    }
    best
}

/// Score of the strongest opponent minus the score of `target` (`μ`).
pub fn margin_from_tally(scores: &[u64], target: Candidate) -> i64 {
    let c = strongest_opponent(scores, target);
    scores[c] as i64 - scores[target] as i64
}

pub fn margin(profile: &PreferenceProfile, rule: &ScoringRule, target: Candidate) -> i64 {
    margin_from_tally(&tally(profile, rule), target)
}

/// Copy of `ranking` with `target` moved to `new_position`; everything
/// strictly between the old and new slots slides one step toward the vacated
/// slot.
pub fn apply_shift(ranking: &[Candidate], target: Candidate, new_position: usize) -> Vec<Candidate> {
    let mut out = ranking.to_vec();
    shift_in_place(&mut out, target, new_position);
    out
}

fn shift_in_place(ranking: &mut [Candidate], target: Candidate, new_position: usize) {
    assert!(
        (1..=ranking.len()).contains(&new_position),
        "position {new_position} outside 1..={}",
        ranking.len()
    );
    let from = ranking.iter().position(|&c| c == target).expect("target is ranked");
    let to = new_position - 1;
    if from > to {
        ranking[to..=from].rotate_right(1);
    } else {
        ranking[from..=to].rotate_left(1);
    }
}

/// A profile read from a preference file together with candidate labels.
#[derive(Debug, Clone)]
pub struct ParsedPreferences {
    pub profile: PreferenceProfile,
    pub candidates: Vec<String>,
}

impl ParsedPreferences {
    /// Resolves a candidate by label, falling back to a numeric id.
    pub fn candidate(&self, name: &str) -> Option<Candidate> {
        self.candidates
            .iter()
            .position(|c| c == name)
            .or_else(|| name.parse::<usize>().ok().filter(|&id| id < self.candidates.len()))
    }
}

/// Reads `node_label: c_a,c_b,...` lines (most preferred first, `#`
/// comments allowed) and aligns them with the graph's node labels. If every
/// candidate token is an integer the integers are the ids; otherwise ids
/// follow sorted label order.
pub fn parse_preferences<R: BufRead>(reader: R, graph: &InfluenceGraph) -> Result<ParsedPreferences> {
    let index = graph.label_index();
    let mut rows: Vec<Option<Vec<String>>> = vec![None; graph.node_count()];
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse { line: lineno, message };
        let (node, list) = trimmed
            .split_once(':')
            .ok_or_else(|| err("expected `node: c1,c2,...`".into()))?;
        let node = node.trim();
        let &v = index.get(node).ok_or_else(|| err(format!("unknown node `{node}`")))?;
        if rows[v].is_some() {
            return Err(err(format!("node `{node}` listed twice")));
        }
        let ranking: Vec<String> =
            list.split(',').map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect();
        rows[v] = Some(ranking);
    }

    if let Some(v) = rows.iter().position(Option::is_none) {
        return Err(Error::InvalidProfile(format!("no preferences for node `{}`", graph.label(v))));
    }
    let rows: Vec<Vec<String>> = rows.into_iter().map(Option::unwrap).collect();
    let names: BTreeSet<&str> = rows.iter().flatten().map(String::as_str).collect();
    let numeric: Option<Vec<usize>> = names.iter().map(|n| n.parse::<usize>().ok()).collect();
    let candidates: Vec<String> = match numeric {
        Some(mut ids) => {
            ids.sort_unstable();
            if ids.iter().enumerate().any(|(i, &id)| i != id) {
                return Err(Error::InvalidProfile(
                    "numeric candidate ids must be exactly 0..m-1".into(),
                ));
            }
            ids.iter().map(|id| id.to_string()).collect()
        }
        None => names.iter().map(|s| s.to_string()).collect(),
    };
    let lookup: HashMap<&str, Candidate> =
        candidates.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let rankings = rows
        .iter()
        .map(|r| r.iter().map(|n| lookup[n.as_str()]).collect())
        .collect();
    let profile = PreferenceProfile::new(candidates.len(), rankings)?;
    Ok(ParsedPreferences { profile, candidates })
}
