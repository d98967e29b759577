//! Greedy structure search and equivalence-class helpers.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dag, Hyper, StandardizedDataset};
use crate::scores::{MetricKind, Scorer};
use crate::seeds::substream;

/// Improvements at or below this are treated as no improvement.
pub const IMPROVEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveSet {
    pub add: bool,
    pub delete: bool,
    pub reverse: bool,
}

impl Default for MoveSet {
    fn default() -> Self {
        MoveSet {
            add: true,
            delete: true,
            reverse: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub metric: MetricKind,
    pub max_in_degree: usize,
    pub restarts: usize,
    pub seed: u64,
    pub move_set: MoveSet,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            metric: MetricKind::Bge,
            max_in_degree: 4,
            restarts: 1,
            seed: 0,
            move_set: MoveSet::default(),
        }
    }
}

impl SearchConfig {
    pub fn check(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Invalid("restarts must be at least 1".into()));
        }
        if self.max_in_degree == 0 {
            return Err(Error::Invalid("max_in_degree must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Move {
    Add { from: usize, to: usize },
    Delete { from: usize, to: usize },
    Reverse { from: usize, to: usize },
}

impl Move {
    /// Applies the move; the caller guarantees it is legal.
    pub fn apply(self, g: &mut Dag) -> Result<()> {
        match self {
            Move::Add { from, to } => g.add_edge(from, to),
            Move::Delete { from, to } => {
                if g.remove_edge(from, to) {
                    Ok(())
                } else {
                    Err(Error::InvalidGraph(format!("no edge {from} -> {to}")))
                }
            }
            Move::Reverse { from, to } => {
                if !g.remove_edge(from, to) {
                    return Err(Error::InvalidGraph(format!("no edge {from} -> {to}")));
                }
                g.add_edge(to, from)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub restart: usize,
    pub iteration: usize,
    /// `None` for the starting graph of a restart.
    pub mv: Option<Move>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: Dag,
    pub score: f64,
    pub best_restart: usize,
    pub starts: Vec<Dag>,
    pub trace: Vec<TraceEntry>,
}

/// Hill climbing with random restarts.
///
/// Restart 0 starts from the empty graph, later restarts from a random DAG:
/// a seeded node permutation with each forward pair joined with probability
/// [`start_edge_probability`], subject to the in-degree cap.
pub fn hill_climb(ds: &StandardizedDataset, h: &Hyper, cfg: &SearchConfig) -> Result<SearchResult> {
    let scorer = Scorer::new(cfg.metric, ds, h)?;
    hill_climb_with(&scorer, cfg)
}

/// As [`hill_climb`], reusing an existing scorer and its cache.
pub fn hill_climb_with(scorer: &Scorer, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.check()?;
    if scorer.metric() != cfg.metric {
        return Err(Error::Invalid(format!(
            "scorer uses {} but the search asks for {}",
            scorer.metric(),
            cfg.metric
        )));
    }
    let p = scorer.node_count();
    let runs: Vec<Result<(Dag, Dag, f64, Vec<TraceEntry>)>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                Dag::empty(p)
            } else {
                random_dag(p, cfg.max_in_degree, cfg.seed, r as u64)
            };
            let (best, score, trace) = climb(scorer, cfg, start.clone(), r)?;
            Ok((start, best, score, trace))
        })
        .collect();

    let mut starts = Vec::with_capacity(cfg.restarts);
    let mut trace = Vec::new();
    let mut best: Option<(usize, Dag, f64)> = None;
    for (r, run) in runs.into_iter().enumerate() {
        let (start, g, score, t) = run?;
        starts.push(start);
        trace.extend(t);
        if best.as_ref().is_none_or(|(_, _, s)| score > *s) {
            best = Some((r, g, score));
        }
    }
    let (best_restart, best, score) = best.expect("at least one restart");
    Ok(SearchResult {
        best,
        score,
        best_restart,
        starts,
        trace,
    })
}

/// Edge probability for random starting graphs: about `p` expected edges,
/// at most one half.
pub fn start_edge_probability(p: usize) -> f64 {
    if p < 2 {
        0.0
    } else {
        (2.0 / (p as f64 - 1.0)).min(0.5)
    }
}

/// Random DAG for restart `restart` under `seed`.
pub fn random_dag(p: usize, max_in_degree: usize, seed: u64, restart: u64) -> Dag {
    let mut rng = substream(seed, &[0x5EA2C4, restart]);
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut rng);
    let prob = start_edge_probability(p);
    let mut g = Dag::empty(p);
    for a in 0..p {
        for b in (a + 1)..p {
            let coin = rng.random::<f64>() < prob;
            let (from, to) = (order[a], order[b]);
            if coin && g.parents(to).len() < max_in_degree {
                g.add_edge(from, to).expect("edges follow a fixed order");
            }
        }
    }
    g
}

fn with_parent(ps: &[usize], extra: usize) -> Vec<usize> {
    let mut v = ps.to_vec();
    let pos = v.binary_search(&extra).unwrap_err();
    v.insert(pos, extra);
    v
}

fn without_parent(ps: &[usize], gone: usize) -> Vec<usize> {
    ps.iter().copied().filter(|&v| v != gone).collect()
}

fn climb(scorer: &Scorer, cfg: &SearchConfig, mut g: Dag, restart: usize) -> Result<(Dag, f64, Vec<TraceEntry>)> {
    let p = g.node_count();
    let mut local: Vec<f64> = (0..p).map(|i| scorer.local(i, g.parents(i))).collect::<Result<_>>()?;
    let mut score: f64 = local.iter().sum();
    let mut trace = vec![TraceEntry {
        restart,
        iteration: 0,
        mv: None,
        score,
    }];
    let moves = cfg.move_set;
    loop {
        let mut best: Option<(f64, Move)> = None;
        let mut consider = |delta: f64, mv: Move| {
            if delta > IMPROVEMENT_TOL && best.is_none_or(|(d, _)| delta > d) {
                best = Some((delta, mv));
            }
        };
        for from in 0..p {
            for to in 0..p {
                if from == to {
                    continue;
                }
                if g.has_edge(from, to) {
                    let dropped = scorer.local(to, &without_parent(g.parents(to), from))? - local[to];
                    if moves.delete {
                        consider(dropped, Move::Delete { from, to });
                    }
                    if moves.reverse && g.parents(from).len() < cfg.max_in_degree {
                        let mut h = g.clone();
                        h.remove_edge(from, to);
                        if !h.reachable(from, to) {
                            let gained = scorer.local(from, &with_parent(g.parents(from), to))? - local[from];
                            consider(dropped + gained, Move::Reverse { from, to });
                        }
                    }
                } else if moves.add
                    && !g.has_edge(to, from)
                    && g.parents(to).len() < cfg.max_in_degree
                    && !g.reachable(to, from)
                {
                    let gained = scorer.local(to, &with_parent(g.parents(to), from))? - local[to];
                    consider(gained, Move::Add { from, to });
                }
            }
        }
        let Some((_, mv)) = best else { break };
        mv.apply(&mut g)?;
        let (first, second) = match mv {
            Move::Add { to, .. } | Move::Delete { to, .. } => (to, None),
            Move::Reverse { from, to } => (to, Some(from)),
        };
        for i in std::iter::once(first).chain(second) {
            local[i] = scorer.local(i, g.parents(i))?;
        }
        score = local.iter().sum();
        trace.push(TraceEntry {
            restart,
            iteration: trace.len(),
            mv: Some(mv),
            score,
        });
    }
    Ok((g, score, trace))
}

/// Largest `p` accepted by [`enumerate_dags`].
pub const MAX_ENUMERATION: usize = 4;

/// Every DAG on `p ≤ 4` labelled nodes (1, 1, 3, 25, 543 for p = 0..4).
pub fn enumerate_dags(p: usize) -> Result<Vec<Dag>> {
    if p > MAX_ENUMERATION {
        return Err(Error::Invalid(format!(
            "enumeration is limited to p <= {MAX_ENUMERATION}, got {p}"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|a| (0..p).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        if let Ok(g) = Dag::from_edges(p, &edges) {
            out.push(g);
        }
    }
    Ok(out)
}

/// Canonical Markov-equivalence key: undirected skeleton plus colliders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EquivalenceKey {
    /// `(min, max)` node pairs.
    pub skeleton: BTreeSet<(usize, usize)>,
    /// `(j, i, k)` with `j → i ← k`, `j < k`, and `j`, `k` non-adjacent.
    pub colliders: BTreeSet<(usize, usize, usize)>,
}

pub fn equivalence_class(g: &Dag) -> EquivalenceKey {
    let skeleton: BTreeSet<(usize, usize)> = g.edges().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
    let mut colliders = BTreeSet::new();
    for i in 0..g.node_count() {
        let ps = g.parents(i);
        for (x, &j) in ps.iter().enumerate() {
            for &k in &ps[x + 1..] {
                if !skeleton.contains(&(j, k)) {
                    colliders.insert((j, i, k));
                }
            }
        }
    }
    EquivalenceKey { skeleton, colliders }
}
