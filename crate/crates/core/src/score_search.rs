//! Decomposable network scores and skeleton-constrained hill climbing with a tabu list.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bn::Dag;
use crate::dataset::{configurations, CategoricalDataset};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::skeleton::Skeleton;
use crate::special::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    #[default]
    Bdeu,
    Bic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ScoreConfig<T: Real> {
    pub score: ScoreKind,
    /// Equivalent sample size of the BDeu prior.
    pub ess: T,
    pub tabu_length: usize,
    pub patience: usize,
}

impl<T: Real> Default for ScoreConfig<T> {
    fn default() -> Self {
        ScoreConfig {
            score: ScoreKind::Bdeu,
            ess: T::lit(10.0),
            tabu_length: 100,
            patience: 15,
        }
    }
}

impl<T: Real> ScoreConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.ess > T::zero()) {
            return Err(Error::invalid(format!("ess must be positive, got {}", self.ess)));
        }
        if self.patience == 0 {
            return Err(Error::invalid("patience must be at least 1"));
        }
        Ok(())
    }
}

/// Counts `n_jk` over observed parent configurations, `r` entries per configuration.
fn family_counts(data: &CategoricalDataset, node: usize, parents: &[usize]) -> (Vec<u64>, usize) {
    let r = data.arity(node);
    let (ids, distinct) = configurations(data, parents);
    let mut counts = vec![0u64; distinct * r];
    for (&id, &lvl) in ids.iter().zip(data.column(node)) {
        counts[id as usize * r + lvl as usize] += 1;
    }
    (counts, r)
}

fn nominal_configs<T: Real>(data: &CategoricalDataset, parents: &[usize]) -> T {
    parents.iter().fold(T::one(), |q, &p| q * T::from_count(data.arity(p)))
}

/// BDeu local score of `node` given `parents`.
pub fn bdeu_local<T: Real>(data: &CategoricalDataset, node: usize, parents: &[usize], ess: T) -> T {
    assert!(!parents.contains(&node), "node among its own parents");
    let (counts, r) = family_counts(data, node, parents);
    let q = nominal_configs::<T>(data, parents);
    let a_j = ess / q;
    let a_jk = a_j / T::from_count(r);
    let ln_a_j = ln_gamma(a_j);
    let ln_a_jk = ln_gamma(a_jk);
    let mut score = T::zero();
    for row in counts.chunks(r) {
        let n_j: u64 = row.iter().sum();
        score += ln_a_j - ln_gamma(a_j + T::from_count(n_j as usize));
        for &n in row.iter().filter(|&&n| n > 0) {
            score += ln_gamma(a_jk + T::from_count(n as usize)) - ln_a_jk;
        }
    }
    score
}

/// BIC local score of `node` given `parents`.
pub fn bic_local<T: Real>(data: &CategoricalDataset, node: usize, parents: &[usize]) -> T {
    assert!(!parents.contains(&node), "node among its own parents");
    let (counts, r) = family_counts(data, node, parents);
    let mut ll = T::zero();
    for row in counts.chunks(r) {
        let n_j = T::from_count(row.iter().sum::<u64>() as usize);
        for &n in row.iter().filter(|&&n| n > 0) {
            let n = T::from_count(n as usize);
            ll += n * (n / n_j).ln();
        }
    }
    let n = T::from_count(data.n_rows());
    let q = nominal_configs::<T>(data, parents);
    ll - n.ln() / T::lit(2.0) * q * T::from_count(r - 1)
}

/// Memoized local scores keyed by `(node, sorted parents)`.
#[derive(Debug, Clone, Default)]
pub struct LocalScoreCache<T> {
    map: HashMap<(usize, Vec<usize>), T>,
}

impl<T: Real> LocalScoreCache<T> {
    pub fn new() -> Self {
        LocalScoreCache { map: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub struct Scorer<'a, T: Real> {
    data: &'a CategoricalDataset,
    cfg: ScoreConfig<T>,
    cache: Option<LocalScoreCache<T>>,
}

impl<'a, T: Real> Scorer<'a, T> {
    pub fn new(data: &'a CategoricalDataset, cfg: ScoreConfig<T>) -> Self {
        Scorer { data, cfg, cache: None }
    }

    pub fn with_cache(mut self) -> Self {
        self.cache = Some(LocalScoreCache::new());
        self
    }

    pub fn config(&self) -> &ScoreConfig<T> {
        &self.cfg
    }

    pub fn cache(&self) -> Option<&LocalScoreCache<T>> {
        self.cache.as_ref()
    }

    fn compute(&self, node: usize, parents: &[usize]) -> T {
        match self.cfg.score {
            ScoreKind::Bdeu => bdeu_local(self.data, node, parents, self.cfg.ess),
            ScoreKind::Bic => bic_local(self.data, node, parents),
        }
    }

    /// Local score; `parents` may be in any order.
    pub fn local(&mut self, node: usize, parents: &[usize]) -> T {
        let mut key = parents.to_vec();
        key.sort_unstable();
        if let Some(&s) = self.cache.as_ref().and_then(|c| c.map.get(&(node, key.clone()))) {
            return s;
        }
        let s = self.compute(node, &key);
        if let Some(cache) = self.cache.as_mut() {
            cache.map.insert((node, key), s);
        }
        s
    }

    pub fn total(&mut self, g: &Dag) -> T {
        (0..g.n_nodes()).map(|v| self.local(v, g.parents(v))).sum()
    }
}

/// Sum of local scores over all nodes of `g`.
pub fn total_score<T: Real>(data: &CategoricalDataset, g: &Dag, cfg: &ScoreConfig<T>) -> T {
    Scorer::new(data, *cfg).total(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Add,
    Delete,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Move<T: Real> {
    pub kind: MoveKind,
    pub source: usize,
    pub target: usize,
    pub delta: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult<T: Real> {
    pub dag: Dag,
    pub score: T,
    pub initial_score: T,
    /// Moves applied, in order, including those after the best structure.
    pub moves: Vec<Move<T>>,
}

struct Zobrist {
    n: usize,
    keys: Vec<u64>,
}

impl Zobrist {
    fn new(n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7a0b_7157);
        Zobrist {
            n,
            keys: (0..n * n).map(|_| rng.gen()).collect(),
        }
    }

    fn key(&self, u: usize, v: usize) -> u64 {
        self.keys[u * self.n + v]
    }

    fn hash(&self, g: &Dag) -> u64 {
        g.edges().into_iter().fold(0, |h, (u, v)| h ^ self.key(u, v))
    }
}

fn reachability(g: &Dag) -> Vec<Vec<bool>> {
    let n = g.n_nodes();
    (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = g.children(s).to_vec();
            while let Some(v) = stack.pop() {
                if !seen[v] {
                    seen[v] = true;
                    stack.extend_from_slice(g.children(v));
                }
            }
            seen
        })
        .collect()
}

fn with(parents: &[usize], extra: usize) -> Vec<usize> {
    let mut p = parents.to_vec();
    p.push(extra);
    p
}

fn without(parents: &[usize], gone: usize) -> Vec<usize> {
    parents.iter().copied().filter(|&p| p != gone).collect()
}

/// Greedy search from the empty graph; additions are restricted to skeleton edges.
pub fn hill_climb<T: Real>(
    data: &CategoricalDataset,
    skeleton: &Skeleton,
    cfg: &ScoreConfig<T>,
) -> Result<SearchResult<T>> {
    cfg.validate()?;
    let n = data.n_vars();
    if skeleton.n_nodes() != n {
        return Err(Error::Mismatch(format!(
            "skeleton has {} nodes, data has {n} variables",
            skeleton.n_nodes()
        )));
    }
    let mut scorer = Scorer::new(data, *cfg).with_cache();
    let zobrist = Zobrist::new(n);

    let mut g = Dag::empty(n);
    let mut local: Vec<T> = (0..n).map(|v| scorer.local(v, &[])).collect();
    let mut hash = 0u64;
    let mut tabu: VecDeque<u64> = VecDeque::from([hash]);
    let initial_score: T = local.iter().copied().sum();
    let mut best = (g.clone(), initial_score);
    let mut since_best = 0usize;
    let mut moves = Vec::new();

    loop {
        let reach = reachability(&g);
        let mut chosen: Option<Move<T>> = None;
        let mut consider = |m: Move<T>, h: u64| {
            if tabu.contains(&h) {
                return;
            }
            if chosen.is_none_or(|c| m.delta > c.delta) {
                chosen = Some(m);
            }
        };

        for u in 0..n {
            for &v in skeleton.pc(u) {
                if g.adjacent(u, v) || reach[v][u] {
                    continue;
                }
                let delta = scorer.local(v, &with(g.parents(v), u)) - local[v];
                consider(Move { kind: MoveKind::Add, source: u, target: v, delta }, hash ^ zobrist.key(u, v));
            }
        }
        for (u, v) in g.edges() {
            let delta = scorer.local(v, &without(g.parents(v), u)) - local[v];
            consider(Move { kind: MoveKind::Delete, source: u, target: v, delta }, hash ^ zobrist.key(u, v));
        }
        for (u, v) in g.edges() {
            let other_path = g.children(u).iter().any(|&c| c != v && reach[c][v]);
            if other_path {
                continue;
            }
            let delta = scorer.local(v, &without(g.parents(v), u)) - local[v]
                + scorer.local(u, &with(g.parents(u), v))
                - local[u];
            consider(
                Move { kind: MoveKind::Reverse, source: u, target: v, delta },
                hash ^ zobrist.key(u, v) ^ zobrist.key(v, u),
            );
        }

        let Some(m) = chosen else { break };
        let (u, v) = (m.source, m.target);
        match m.kind {
            MoveKind::Add => {
                g.add_edge(u, v)?;
                hash ^= zobrist.key(u, v);
            }
            MoveKind::Delete => {
                g.remove_edge(u, v);
                hash ^= zobrist.key(u, v);
            }
            MoveKind::Reverse => {
                g.reverse_edge(u, v)?;
                hash ^= zobrist.key(u, v) ^ zobrist.key(v, u);
            }
        }
        local[v] = scorer.local(v, g.parents(v));
        local[u] = scorer.local(u, g.parents(u));
        moves.push(m);
        tabu.push_back(hash);
        while tabu.len() > cfg.tabu_length {
            tabu.pop_front();
        }

        let current: T = local.iter().copied().sum();
        if current > best.1 {
            best = (g.clone(), current);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    debug_assert_eq!(zobrist.hash(&g), hash);

    Ok(SearchResult {
        dag: best.0,
        score: best.1,
        initial_score,
        moves,
    })
}
