//! Structure quality: skeleton metrics, DAG patterns, structural Hamming distance and holdout scores.

use serde::{Deserialize, Serialize};

use crate::bn::{Dag, Pdag};
use crate::dataset::CategoricalDataset;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::score_search::{bdeu_local, bic_local, ScoreConfig};
use crate::skeleton::Skeleton;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SkeletonMetrics<T: Real> {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: T,
    pub recall: T,
    pub fpr: T,
    pub euclidean: T,
}

/// Edge-level comparison of a learned skeleton against the truth.
///
/// Precision is 1 when nothing is output, recall is 1 when the truth has no
/// edges, and the false positive rate is 0 when the truth is complete.
pub fn skeleton_metrics<T: Real>(learned: &Skeleton, truth: &Skeleton) -> Result<SkeletonMetrics<T>> {
    let n = truth.n_nodes();
    if learned.n_nodes() != n {
        return Err(Error::Mismatch(format!(
            "learned skeleton has {} nodes, truth has {n}",
            learned.n_nodes()
        )));
    }
    let learned_edges = learned.edges();
    let tp = learned_edges.iter().filter(|&&(u, v)| truth.contains(u, v)).count();
    let fp = learned_edges.len() - tp;
    let fn_ = truth.n_edges() - tp;
    let ratio = |num: usize, den: usize, empty: f64| {
        if den == 0 {
            T::lit(empty)
        } else {
            T::from_count(num) / T::from_count(den)
        }
    };
    let precision = ratio(tp, tp + fp, 1.0);
    let recall = ratio(tp, tp + fn_, 1.0);
    let non_edges = n * n.saturating_sub(1) / 2 - truth.n_edges();
    let fpr = ratio(fp, non_edges, 0.0);
    let one = T::one();
    let euclidean = ((one - precision).powi(2) + (one - recall).powi(2)).sqrt();
    Ok(SkeletonMetrics {
        tp,
        fp,
        fn_,
        precision,
        recall,
        fpr,
        euclidean,
    })
}

/// Unshielded colliders `(a, c, b)` with `a < b`, `a -> c <- b` and `a`, `b` non-adjacent.
pub fn v_structures(g: &Dag) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for c in 0..g.n_nodes() {
        let pa = g.parents(c);
        for (i, &a) in pa.iter().enumerate() {
            for &b in &pa[i + 1..] {
                if !g.adjacent(a, b) {
                    out.push((a, c, b));
                }
            }
        }
    }
    out
}

fn undirected_neighbours(p: &Pdag, v: usize) -> Vec<usize> {
    (0..p.n_nodes()).filter(|&w| w != v && p.has_undirected(v, w)).collect()
}

/// Applies one of Meek's rules to the undirected edge `a - b` in the direction `a -> b`.
fn meek_orients(p: &Pdag, a: usize, b: usize) -> bool {
    let n = p.n_nodes();
    // R1: c -> a - b, c and b non-adjacent
    if (0..n).any(|c| p.has_directed(c, a) && !p.adjacent(c, b)) {
        return true;
    }
    // R2: a -> c -> b
    if (0..n).any(|c| p.has_directed(a, c) && p.has_directed(c, b)) {
        return true;
    }
    let und_a = undirected_neighbours(p, a);
    // R3: a - c -> b, a - d -> b, c and d non-adjacent
    for (i, &c) in und_a.iter().enumerate() {
        if !p.has_directed(c, b) {
            continue;
        }
        if und_a[i + 1..].iter().any(|&d| p.has_directed(d, b) && !p.adjacent(c, d)) {
            return true;
        }
    }
    // R4: a - d -> c -> b, a adjacent to c, b and d non-adjacent
    for &d in &und_a {
        if d == b || p.adjacent(b, d) {
            continue;
        }
        if (0..n).any(|c| p.has_directed(d, c) && p.has_directed(c, b) && p.adjacent(a, c)) {
            return true;
        }
    }
    false
}

/// The completed partially directed graph of the Markov equivalence class of `g`.
pub fn dag_to_cpdag(g: &Dag) -> Pdag {
    let mut p = Pdag::new(g.n_nodes());
    for (u, v) in g.edges() {
        p.set_undirected(u, v);
    }
    for (a, c, b) in v_structures(g) {
        p.set_directed(a, c);
        p.set_directed(b, c);
    }
    loop {
        let undirected: Vec<(usize, usize)> = p.undirected().iter().copied().collect();
        let hit = undirected.into_iter().find_map(|(u, v)| {
            if meek_orients(&p, u, v) {
                Some((u, v))
            } else if meek_orients(&p, v, u) {
                Some((v, u))
            } else {
                None
            }
        });
        match hit {
            Some((u, v)) => p.set_directed(u, v),
            None => break,
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairState {
    Absent,
    Undirected,
    Forward,
    Backward,
}

fn pair_state(p: &Pdag, u: usize, v: usize) -> PairState {
    if p.has_undirected(u, v) {
        PairState::Undirected
    } else if p.has_directed(u, v) {
        PairState::Forward
    } else if p.has_directed(v, u) {
        PairState::Backward
    } else {
        PairState::Absent
    }
}

/// Structural Hamming distance: node pairs whose adjacency or orientation differs.
pub fn shd(a: &Pdag, b: &Pdag) -> Result<usize> {
    let n = a.n_nodes();
    if b.n_nodes() != n {
        return Err(Error::Mismatch(format!("graphs have {n} and {} nodes", b.n_nodes())));
    }
    let mut d = 0;
    for u in 0..n {
        for v in u + 1..n {
            if pair_state(a, u, v) != pair_state(b, u, v) {
                d += 1;
            }
        }
    }
    Ok(d)
}

/// SHD between the equivalence classes of two DAGs.
pub fn dag_shd(a: &Dag, b: &Dag) -> Result<usize> {
    shd(&dag_to_cpdag(a), &dag_to_cpdag(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HoldoutScores<T: Real> {
    pub bdeu_train: T,
    pub bic_train: T,
    pub bdeu_test: T,
    pub bic_test: T,
}

fn check_compatible(g: &Dag, a: &CategoricalDataset, b: &CategoricalDataset) -> Result<()> {
    if a.n_vars() != g.n_nodes() || b.n_vars() != g.n_nodes() {
        return Err(Error::Mismatch(format!(
            "structure has {} nodes, datasets have {} and {} variables",
            g.n_nodes(),
            a.n_vars(),
            b.n_vars()
        )));
    }
    for (va, vb) in a.variables().iter().zip(b.variables()) {
        if va.name != vb.name || va.arity() != vb.arity() {
            return Err(Error::Mismatch(format!(
                "variable `{}` (arity {}) does not match `{}` (arity {})",
                va.name,
                va.arity(),
                vb.name,
                vb.arity()
            )));
        }
    }
    Ok(())
}

/// BDeu and BIC of a fixed structure on the training and test data.
pub fn holdout_scores<T: Real>(
    g: &Dag,
    train: &CategoricalDataset,
    test: &CategoricalDataset,
    cfg: &ScoreConfig<T>,
) -> Result<HoldoutScores<T>> {
    check_compatible(g, train, test)?;
    let bdeu = |d: &CategoricalDataset| (0..g.n_nodes()).map(|v| bdeu_local(d, v, g.parents(v), cfg.ess)).sum();
    let bic = |d: &CategoricalDataset| (0..g.n_nodes()).map(|v| bic_local(d, v, g.parents(v))).sum();
    Ok(HoldoutScores {
        bdeu_train: bdeu(train),
        bic_train: bic(train),
        bdeu_test: bdeu(test),
        bic_test: bic(test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dag(n: usize, e: &[(usize, usize)]) -> Dag {
        Dag::from_edges(n, e).unwrap()
    }

    #[test]
    fn metrics_examples() {
        let truth = Skeleton::from_edges(3, [(0, 1), (1, 2)]);
        let m: SkeletonMetrics<f64> = skeleton_metrics(&truth, &truth).unwrap();
        assert_eq!((m.precision, m.recall, m.euclidean), (1.0, 1.0, 0.0));

        let m: SkeletonMetrics<f64> = skeleton_metrics(&Skeleton::empty(3), &truth).unwrap();
        assert_eq!((m.precision, m.recall, m.euclidean), (1.0, 0.0, 1.0));

        assert!(skeleton_metrics::<f64>(&Skeleton::empty(2), &truth).is_err());
    }

    #[test]
    fn metrics_arithmetic() {
        // 25 true edges, 30 learned of which 20 correct, on 12 nodes (66 pairs)
        let pairs: Vec<(usize, usize)> = (0..12).flat_map(|u| (u + 1..12).map(move |v| (u, v))).collect();
        let truth = Skeleton::from_edges(12, pairs[..25].iter().copied());
        let learned = Skeleton::from_edges(12, pairs[5..35].iter().copied());
        let m: SkeletonMetrics<f64> = skeleton_metrics(&learned, &truth).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_), (20, 10, 5));
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.recall - 0.8).abs() < 1e-15);
        assert!((m.euclidean - ((1.0f64 / 3.0).powi(2) + 0.04).sqrt()).abs() < 1e-15);
        assert!((m.fpr - 10.0 / 41.0).abs() < 1e-15);
    }

    #[test]
    fn cpdag_examples() {
        let chain = dag_to_cpdag(&dag(3, &[(0, 1), (1, 2)]));
        assert!(chain.directed().is_empty());
        assert_eq!(chain.undirected().len(), 2);

        let collider = dag_to_cpdag(&dag(3, &[(0, 1), (2, 1)]));
        assert!(collider.has_directed(0, 1) && collider.has_directed(2, 1));

        // collider followed by a chain: R1 compels 1 -> 3
        let p = dag_to_cpdag(&dag(4, &[(0, 1), (2, 1), (1, 3)]));
        assert!(p.has_directed(1, 3));
    }

    #[test]
    fn shd_examples() {
        let mut a = Pdag::new(3);
        a.set_directed(0, 1);
        assert_eq!(shd(&a, &a).unwrap(), 0);
        let mut b = Pdag::new(3);
        b.set_undirected(0, 1);
        assert_eq!(shd(&a, &b).unwrap(), 1);
        let mut c = a.clone();
        c.set_undirected(1, 2);
        assert_eq!(shd(&a, &c).unwrap(), 1);
        let mut r = Pdag::new(3);
        r.set_directed(1, 0);
        assert_eq!(shd(&a, &r).unwrap(), 1);
    }
}
