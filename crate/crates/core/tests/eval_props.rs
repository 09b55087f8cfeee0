use std::collections::{BTreeMap, BTreeSet};

use h2pc::bn::{Dag, Pdag};
use h2pc::eval::{dag_to_cpdag, shd, skeleton_metrics, SkeletonMetrics};
use h2pc::skeleton::Skeleton;
use proptest::prelude::*;

/// Every DAG on `n` labelled nodes, by trying all three states of each pair.
fn all_dags(n: usize) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        for &(u, v) in &pairs {
            match c % 3 {
                1 => edges.push((u, v)),
                2 => edges.push((v, u)),
                _ => {}
            }
            c /= 3;
        }
        if let Ok(g) = Dag::from_edges(n, &edges) {
            out.push(g);
        }
    }
    out
}

type ClassKey = (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize, usize)>);

fn class_key(g: &Dag) -> ClassKey {
    let edges = g.edges();
    let skel: BTreeSet<(usize, usize)> = edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    let mut vs = BTreeSet::new();
    for &(a, c) in &edges {
        for &(b, c2) in &edges {
            if c == c2 && a < b && !skel.contains(&(a, b)) {
                vs.insert((a, c, b));
            }
        }
    }
    (skel, vs)
}

#[test]
fn cpdag_matches_equivalence_class_enumeration() {
    for n in 1..=5 {
        let dags = all_dags(n);
        let mut classes: BTreeMap<ClassKey, Vec<usize>> = BTreeMap::new();
        for (i, g) in dags.iter().enumerate() {
            classes.entry(class_key(g)).or_default().push(i);
        }
        for (key, members) in &classes {
            let mut expected = Pdag::new(n);
            for &(u, v) in &key.0 {
                let fwd = members.iter().all(|&m| dags[m].has_edge(u, v));
                let bwd = members.iter().all(|&m| dags[m].has_edge(v, u));
                match (fwd, bwd) {
                    (true, _) => expected.set_directed(u, v),
                    (_, true) => expected.set_directed(v, u),
                    _ => expected.set_undirected(u, v),
                }
            }
            for &m in members {
                assert_eq!(dag_to_cpdag(&dags[m]), expected, "n={n} dag {:?}", dags[m].edges());
            }
        }
    }
}

fn arb_pdag(n: usize) -> impl Strategy<Value = Pdag> {
    proptest::collection::vec(0u8..4, n * (n - 1) / 2).prop_map(move |states| {
        let mut p = Pdag::new(n);
        let pairs = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        for ((u, v), s) in pairs.zip(states) {
            match s {
                1 => p.set_undirected(u, v),
                2 => p.set_directed(u, v),
                3 => p.set_directed(v, u),
                _ => {}
            }
        }
        p
    })
}

proptest! {
    #[test]
    fn shd_is_a_metric(a in arb_pdag(6), b in arb_pdag(6), c in arb_pdag(6)) {
        let ab = shd(&a, &b).unwrap();
        prop_assert_eq!(shd(&a, &a).unwrap(), 0);
        prop_assert_eq!(ab, shd(&b, &a).unwrap());
        prop_assert_eq!(ab == 0, a == b);
        prop_assert!(shd(&a, &c).unwrap() <= ab + shd(&b, &c).unwrap());
    }

    #[test]
    fn metrics_are_consistent(
        t in proptest::collection::btree_set((0usize..8, 0usize..8), 0..20),
        l in proptest::collection::btree_set((0usize..8, 0usize..8), 0..20),
    ) {
        let clean = |s: BTreeSet<(usize, usize)>| s.into_iter().filter(|(u, v)| u != v);
        let truth = Skeleton::from_edges(8, clean(t));
        let learned = Skeleton::from_edges(8, clean(l));
        let m: SkeletonMetrics<f64> = skeleton_metrics(&learned, &truth).unwrap();
        prop_assert_eq!(m.tp + m.fn_, truth.n_edges());
        prop_assert_eq!(m.tp + m.fp, learned.n_edges());
        prop_assert!((0.0..=1.0).contains(&m.precision) && (0.0..=1.0).contains(&m.recall));
        let e = ((1.0 - m.precision).powi(2) + (1.0 - m.recall).powi(2)).sqrt();
        prop_assert!((m.euclidean - e).abs() < 1e-15);
    }
}
