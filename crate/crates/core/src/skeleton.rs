//! Constraint-based local discovery: parents-and-children supersets,
//! spouse supersets, FDR-controlled Markov boundary search, HPC and the
//! symmetric skeleton assembly.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bn::{d_separated, Dag};
use crate::citest::CiTester;
use crate::error::{Error, Result};
use crate::real::Real;

/// Outcome of one independence query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict<T> {
    pub independent: bool,
    pub p_value: T,
}

/// Anything that can answer `x ⫫ y | z`; must be symmetric in `x` and `y`.
pub trait IndependenceSource: Sync {
    type Real: Real;

    fn n_vars(&self) -> usize;

    fn test(&self, x: usize, y: usize, z: &[usize]) -> Verdict<Self::Real>;
}

impl<T: Real> IndependenceSource for CiTester<'_, T> {
    type Real = T;

    fn n_vars(&self) -> usize {
        self.data().n_vars()
    }

    fn test(&self, x: usize, y: usize, z: &[usize]) -> Verdict<T> {
        let r = CiTester::test(self, x, y, z);
        Verdict {
            independent: r.independent,
            p_value: r.p_value,
        }
    }
}

/// Perfect tests read off a known DAG: p-value 1 when d-separated, else 0.
pub struct DSeparationOracle<'g> {
    dag: &'g Dag,
}

impl<'g> DSeparationOracle<'g> {
    pub fn new(dag: &'g Dag) -> Self {
        DSeparationOracle { dag }
    }
}

impl IndependenceSource for DSeparationOracle<'_> {
    type Real = f64;

    fn n_vars(&self) -> usize {
        self.dag.n_nodes()
    }

    fn test(&self, x: usize, y: usize, z: &[usize]) -> Verdict<f64> {
        let independent = d_separated(self.dag, x, y, z);
        Verdict {
            independent,
            p_value: if independent { 1.0 } else { 0.0 },
        }
    }
}

/// Wraps a source and records the number of calls and the largest conditioning set seen.
pub struct CondSizeProbe<'s, S> {
    inner: &'s S,
    calls: AtomicUsize,
    max_condset: AtomicUsize,
}

impl<'s, S: IndependenceSource> CondSizeProbe<'s, S> {
    pub fn new(inner: &'s S) -> Self {
        CondSizeProbe {
            inner,
            calls: AtomicUsize::new(0),
            max_condset: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn max_condset(&self) -> usize {
        self.max_condset.load(Ordering::Relaxed)
    }
}

impl<S: IndependenceSource> IndependenceSource for CondSizeProbe<'_, S> {
    type Real = S::Real;

    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    fn test(&self, x: usize, y: usize, z: &[usize]) -> Verdict<S::Real> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.max_condset.fetch_max(z.len(), Ordering::Relaxed);
        self.inner.test(x, y, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HpcConfig<T: Real> {
    /// False discovery rate level of the Markov boundary search.
    pub alpha: T,
    /// Cap on the subset size of the spouse-removal search.
    pub max_condset: Option<usize>,
}

impl<T: Real> Default for HpcConfig<T> {
    fn default() -> Self {
        HpcConfig {
            alpha: T::lit(0.05),
            max_condset: None,
        }
    }
}

impl<T: Real> From<&crate::citest::TestConfig<T>> for HpcConfig<T> {
    fn from(t: &crate::citest::TestConfig<T>) -> Self {
        HpcConfig {
            alpha: t.alpha,
            max_condset: t.max_condset,
        }
    }
}

/// Superset of the parents and children of a target, with the separating
/// set (empty or a single variable) of every variable that was removed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PcsResult {
    pub pcs: Vec<usize>,
    pub dsep: BTreeMap<usize, Option<usize>>,
}

pub fn de_pcs<S: IndependenceSource>(target: usize, src: &S, universe: &[usize]) -> PcsResult {
    let mut dsep = BTreeMap::new();
    let mut pcs = Vec::new();
    for &x in universe.iter().filter(|&&x| x != target) {
        if src.test(target, x, &[]).independent {
            dsep.insert(x, None);
        } else {
            pcs.push(x);
        }
    }
    let candidates = pcs.clone();
    for x in candidates {
        let separator = pcs
            .iter()
            .copied()
            .filter(|&y| y != x)
            .find(|&y| src.test(target, x, &[y]).independent);
        if let Some(y) = separator {
            pcs.retain(|&v| v != x);
            dsep.insert(x, Some(y));
        }
    }
    PcsResult { pcs, dsep }
}

/// Superset of the spouses of `target`, given the output of [`de_pcs`].
pub fn de_sps<S: IndependenceSource>(
    target: usize,
    src: &S,
    universe: &[usize],
    pcs: &PcsResult,
) -> Vec<usize> {
    let mut sps = BTreeSet::new();
    let outside: Vec<usize> = universe
        .iter()
        .copied()
        .filter(|&y| y != target && !pcs.pcs.contains(&y))
        .collect();
    for &x in &pcs.pcs {
        let mut sps_x = Vec::new();
        for &y in &outside {
            let mut z = vec![x];
            if let Some(Some(s)) = pcs.dsep.get(&y) {
                if *s != x {
                    z.push(*s);
                }
            }
            if !src.test(target, y, &z).independent {
                sps_x.push(y);
            }
        }
        let grown = sps_x.clone();
        for y in grown {
            let redundant = sps_x
                .iter()
                .copied()
                .filter(|&w| w != y)
                .any(|w| src.test(target, y, &[x, w]).independent);
            if redundant {
                sps_x.retain(|&v| v != y);
            }
        }
        sps.extend(sps_x);
    }
    sps.into_iter().collect()
}

/// Benjamini–Hochberg step-up: the largest `p_(k)` with `p_(k) ≤ k·alpha/m`.
pub fn bh_threshold<T: Real>(p_values: &[T], alpha: T) -> Option<T> {
    let mut sorted = p_values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("p-values are not NaN"));
    let m = T::from_count(sorted.len());
    sorted
        .iter()
        .enumerate()
        .rev()
        .find(|&(k, &p)| p <= T::from_count(k + 1) * alpha / m)
        .map(|(_, &p)| p)
}

/// Markov boundary of `target` within `universe`, grown and shrunk under
/// Benjamini–Hochberg control at level `alpha`.
pub fn iamb_fdr<S: IndependenceSource>(
    target: usize,
    src: &S,
    universe: &[usize],
    alpha: S::Real,
) -> Vec<usize> {
    let mut mb: Vec<usize> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::from([Vec::new()]);
    loop {
        let mut changed = false;

        let candidates: Vec<usize> = universe
            .iter()
            .copied()
            .filter(|&x| x != target && !mb.contains(&x))
            .collect();
        if !candidates.is_empty() {
            let p: Vec<S::Real> = candidates.iter().map(|&x| src.test(target, x, &mb).p_value).collect();
            if let Some(thr) = bh_threshold(&p, alpha) {
                let (best, _) = candidates
                    .iter()
                    .zip(&p)
                    .filter(|(_, &pv)| pv <= thr)
                    .fold(None::<(usize, S::Real)>, |acc, (&x, &pv)| match acc {
                        Some((_, bp)) if bp <= pv => acc,
                        _ => Some((x, pv)),
                    })
                    .expect("threshold is attained by some candidate");
                let pos = mb.binary_search(&best).unwrap_err();
                mb.insert(pos, best);
                changed = true;
            }
        }

        while !mb.is_empty() {
            let p: Vec<S::Real> = mb
                .iter()
                .map(|&x| {
                    let rest: Vec<usize> = mb.iter().copied().filter(|&v| v != x).collect();
                    src.test(target, x, &rest).p_value
                })
                .collect();
            let thr = bh_threshold(&p, alpha);
            let worst = mb
                .iter()
                .zip(&p)
                .filter(|(_, &pv)| thr.is_none_or(|t| pv > t))
                .fold(None::<(usize, S::Real)>, |acc, (&x, &pv)| match acc {
                    Some((_, wp)) if wp >= pv => acc,
                    _ => Some((x, pv)),
                });
            match worst {
                Some((x, _)) => {
                    mb.retain(|&v| v != x);
                    changed = true;
                }
                None => break,
            }
        }

        if !changed || !seen.insert(mb.clone()) {
            break;
        }
    }
    mb
}

fn for_each_subset(items: &[usize], size: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn rec(items: &[usize], size: usize, start: usize, buf: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if buf.len() == size {
            return f(buf);
        }
        let need = size - buf.len();
        for i in start..=items.len() - need {
            buf.push(items[i]);
            if rec(items, size, i + 1, buf, f) {
                return true;
            }
            buf.pop();
        }
        false
    }
    rec(items, size, 0, &mut Vec::with_capacity(size), f)
}

/// Parents and children of `target`: the Markov boundary with every member
/// removed that some subset of the rest of the boundary separates from the target.
pub fn fdr_iapc<S: IndependenceSource>(
    target: usize,
    src: &S,
    universe: &[usize],
    cfg: &HpcConfig<S::Real>,
) -> Vec<usize> {
    let mb = iamb_fdr(target, src, universe, cfg.alpha);
    let mut pc = mb.clone();
    for &x in &mb {
        let others: Vec<usize> = mb.iter().copied().filter(|&v| v != x).collect();
        let max_size = cfg.max_condset.map_or(others.len(), |c| c.min(others.len()));
        let separated = (0..=max_size).any(|size| {
            for_each_subset(&others, size, &mut |z| src.test(target, x, z).independent)
        });
        if separated {
            pc.retain(|&v| v != x);
        }
    }
    pc
}

/// Parents and children of `target` within `universe`.
pub fn hpc<S: IndependenceSource>(
    target: usize,
    src: &S,
    universe: &[usize],
    cfg: &HpcConfig<S::Real>,
) -> Vec<usize> {
    let pcs = de_pcs(target, src, universe);
    let sps = de_sps(target, src, universe, &pcs);
    let mut restricted: Vec<usize> = pcs.pcs.iter().chain(&sps).copied().chain([target]).collect();
    restricted.sort_unstable();
    restricted.dedup();
    let mut pc = fdr_iapc(target, src, &restricted, cfg);
    for &x in &pcs.pcs {
        if !pc.contains(&x) && fdr_iapc(x, src, &restricted, cfg).contains(&target) {
            pc.push(x);
        }
    }
    pc.sort_unstable();
    pc
}

/// Runs [`hpc`] for each target on `jobs` worker threads; output order follows `targets`.
pub fn hpc_many<S: IndependenceSource>(
    targets: &[usize],
    src: &S,
    universe: &[usize],
    cfg: &HpcConfig<S::Real>,
    jobs: usize,
) -> Vec<Vec<usize>> {
    let run = || {
        targets
            .par_iter()
            .map(|&t| hpc(t, src, universe, cfg))
            .collect()
    };
    if jobs <= 1 {
        return targets.iter().map(|&t| hpc(t, src, universe, cfg)).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

/// Undirected skeleton; adjacency is kept symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pc: Vec<BTreeSet<usize>>,
}

impl Skeleton {
    pub fn empty(n: usize) -> Self {
        Skeleton {
            pc: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut s = Skeleton::empty(n);
        for (u, v) in edges {
            s.insert(u, v);
        }
        s
    }

    pub fn from_dag(g: &Dag) -> Self {
        Skeleton::from_edges(g.n_nodes(), g.edges())
    }

    /// AND rule: `{x, y}` is kept iff each is in the other's PC estimate.
    pub fn from_pc_sets(pc_sets: &[Vec<usize>]) -> Self {
        let n = pc_sets.len();
        let mut s = Skeleton::empty(n);
        for (x, pcx) in pc_sets.iter().enumerate() {
            for &y in pcx {
                if y > x && pc_sets[y].contains(&x) {
                    s.insert(x, y);
                }
            }
        }
        s
    }

    pub fn insert(&mut self, u: usize, v: usize) {
        assert!(u != v, "skeleton self-loop");
        self.pc[u].insert(v);
        self.pc[v].insert(u);
    }

    pub fn n_nodes(&self) -> usize {
        self.pc.len()
    }

    pub fn n_edges(&self) -> usize {
        self.pc.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.pc[u].contains(&v)
    }

    pub fn pc(&self, v: usize) -> &BTreeSet<usize> {
        &self.pc[v]
    }

    /// Edges as `(min, max)` pairs in order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.pc
            .iter()
            .enumerate()
            .flat_map(|(u, s)| s.range(u + 1..).map(move |&v| (u, v)))
            .collect()
    }

    pub fn to_json(&self, names: &[String]) -> Result<String> {
        let file = SkeletonFile {
            nodes: names.to_vec(),
            edges: self
                .edges()
                .into_iter()
                .map(|(u, v)| [names[u].clone(), names[v].clone()])
                .collect(),
            pc: names
                .iter()
                .zip(&self.pc)
                .map(|(n, s)| (n.clone(), s.iter().map(|&v| names[v].clone()).collect()))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Parses skeleton JSON, returning the node names and the skeleton.
    pub fn from_json(text: &str) -> Result<(Vec<String>, Self)> {
        let file: SkeletonFile = serde_json::from_str(text)?;
        let index: BTreeMap<&str, usize> = file
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut s = Skeleton::empty(file.nodes.len());
        for [a, b] in &file.edges {
            let lookup = |name: &String| {
                index
                    .get(name.as_str())
                    .copied()
                    .ok_or_else(|| Error::Mismatch(format!("skeleton edge names unknown node `{name}`")))
            };
            let (u, v) = (lookup(a)?, lookup(b)?);
            if u == v {
                return Err(Error::invalid(format!("skeleton self-loop on `{a}`")));
            }
            s.insert(u, v);
        }
        Ok((file.nodes, s))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SkeletonFile {
    nodes: Vec<String>,
    edges: Vec<[String; 2]>,
    pc: BTreeMap<String, Vec<String>>,
}

/// Skeleton over all variables of the source, using every variable as target.
pub fn build_skeleton<S: IndependenceSource>(src: &S, cfg: &HpcConfig<S::Real>, jobs: usize) -> Skeleton {
    let universe: Vec<usize> = (0..src.n_vars()).collect();
    let pcs = hpc_many(&universe, src, &universe, cfg, jobs);
    Skeleton::from_pc_sets(&pcs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::markov_sets;

    fn dag(n: usize, edges: &[(usize, usize)]) -> Dag {
        Dag::from_edges(n, edges).unwrap()
    }

    fn all(n: usize) -> Vec<usize> {
        (0..n).collect()
    }

    #[test]
    fn de_pcs_keeps_true_neighbours() {
        // A=0, B=1, C=2, D=3: A→C←B, C→D
        let g = dag(4, &[(0, 2), (1, 2), (2, 3)]);
        let r = de_pcs(2, &DSeparationOracle::new(&g), &all(4));
        assert_eq!(r.pcs, vec![0, 1, 3]);
    }

    #[test]
    fn de_pcs_records_separators() {
        // X=0 → Z=1 → Y=2
        let g = dag(3, &[(0, 1), (1, 2)]);
        let r = de_pcs(0, &DSeparationOracle::new(&g), &all(3));
        assert_eq!(r.pcs, vec![1]);
        assert_eq!(r.dsep[&2], Some(1));
        // X=0 → Z=1 ← Y=2
        let g = dag(3, &[(0, 1), (2, 1)]);
        let r = de_pcs(0, &DSeparationOracle::new(&g), &all(3));
        assert_eq!(r.dsep[&2], None);
    }

    #[test]
    fn de_sps_examples() {
        let collider = dag(3, &[(0, 1), (2, 1)]);
        let src = DSeparationOracle::new(&collider);
        let pcs = de_pcs(0, &src, &all(3));
        assert_eq!(de_sps(0, &src, &all(3), &pcs), vec![2]);

        let chain = dag(4, &[(0, 1), (1, 2), (2, 3)]);
        let src = DSeparationOracle::new(&chain);
        let pcs = de_pcs(0, &src, &all(4));
        assert!(de_sps(0, &src, &all(4), &pcs).is_empty());
    }

    #[test]
    fn de_sps_prunes_descendant_of_spouse() {
        // T=0 → C=1 ← S=2, S → A=3
        let g = dag(4, &[(0, 1), (2, 1), (2, 3)]);
        let src = DSeparationOracle::new(&g);
        let pcs = de_pcs(0, &src, &all(4));
        assert_eq!(pcs.pcs, vec![1]);
        // A is admitted in the growing phase for X = C ...
        assert!(!src.test(0, 3, &[1]).independent);
        // ... and removed in the shrinking phase via Z = S
        assert!(src.test(0, 3, &[1, 2]).independent);
        assert_eq!(de_sps(0, &src, &all(4), &pcs), vec![2]);
    }

    #[test]
    fn iamb_fdr_finds_markov_blanket() {
        let g = dag(4, &[(0, 2), (1, 2), (2, 3)]);
        let src = DSeparationOracle::new(&g);
        assert_eq!(iamb_fdr(0, &src, &all(4), 0.05), vec![1, 2]);
        assert!(iamb_fdr(0, &src, &[0], 0.05).is_empty());
    }

    #[test]
    fn fdr_iapc_drops_spouses_only() {
        let g = dag(3, &[(0, 2), (1, 2)]);
        let src = DSeparationOracle::new(&g);
        assert_eq!(fdr_iapc(0, &src, &all(3), &HpcConfig::default()), vec![2]);
        let g = dag(3, &[(0, 2), (1, 2), (0, 1)]);
        let src = DSeparationOracle::new(&g);
        assert_eq!(fdr_iapc(0, &src, &all(3), &HpcConfig::default()), vec![1, 2]);
        let g = Dag::empty(3);
        assert!(fdr_iapc(0, &DSeparationOracle::new(&g), &all(3), &HpcConfig::default()).is_empty());
    }

    #[test]
    fn bh_threshold_examples() {
        assert_eq!(bh_threshold(&[0.01, 0.04, 0.03, 0.5], 0.05), Some(0.01));
        assert_eq!(bh_threshold(&[0.01, 0.02, 0.03, 0.04], 0.05), Some(0.04));
        assert_eq!(bh_threshold(&[0.2, 0.3], 0.05), None);
        assert_eq!(bh_threshold::<f64>(&[], 0.05), None);
    }

    #[test]
    fn hpc_isolated_target() {
        let g = dag(4, &[(1, 2), (2, 3)]);
        assert!(hpc(0, &DSeparationOracle::new(&g), &all(4), &HpcConfig::default()).is_empty());
    }

    #[test]
    fn skeleton_of_single_variable_is_empty() {
        let g = Dag::empty(1);
        let s = build_skeleton(&DSeparationOracle::new(&g), &HpcConfig::default(), 1);
        assert_eq!(s.n_edges(), 0);
    }

    #[test]
    fn oracle_skeleton_matches_truth_on_small_graphs() {
        let g = dag(6, &[(0, 2), (1, 2), (2, 3), (3, 4), (1, 5), (5, 4)]);
        let src = DSeparationOracle::new(&g);
        let s = build_skeleton(&src, &HpcConfig::default(), 1);
        assert_eq!(s, Skeleton::from_dag(&g));
        let m = markov_sets(&g);
        for t in 0..6 {
            let pcs = de_pcs(t, &src, &all(6));
            assert!(m.pc[t].iter().all(|v| pcs.pcs.contains(v)));
        }
    }

    #[test]
    fn skeleton_json_round_trip() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let s = Skeleton::from_edges(3, [(0, 2), (1, 2)]);
        let (back_names, back) = Skeleton::from_json(&s.to_json(&names).unwrap()).unwrap();
        assert_eq!(back_names, names);
        assert_eq!(back, s);
    }

    #[test]
    fn parallel_and_serial_agree() {
        let g = dag(7, &[(0, 1), (1, 2), (3, 2), (2, 4), (4, 5), (6, 5)]);
        let src = DSeparationOracle::new(&g);
        let a = build_skeleton(&src, &HpcConfig::default(), 1);
        let b = build_skeleton(&src, &HpcConfig::default(), 4);
        assert_eq!(a, b);
    }
}
