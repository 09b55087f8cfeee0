//! Random graphs and networks with known structure, for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bn::{BayesianNetwork, Dag};
use crate::dataset::Variable;

/// Random DAG: nodes are shuffled into a hidden order, each earlier node
/// becomes a parent with probability `edge_prob`, keeping at most
/// `max_parents` parents per node.
pub fn random_dag<R: Rng + ?Sized>(n: usize, max_parents: usize, edge_prob: f64, rng: &mut R) -> Dag {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for j in 1..n {
        let mut chosen: Vec<usize> = order[..j]
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(edge_prob))
            .collect();
        chosen.shuffle(rng);
        chosen.truncate(max_parents);
        edges.extend(chosen.into_iter().map(|p| (p, order[j])));
    }
    Dag::from_edges(n, &edges).expect("edges follow a topological order")
}

/// Binary network whose tables make every parent matter: roots get
/// `P(1) ∈ [0.3, 0.7]`, children `P(1) = 0.1 + 0.8·s` where `s` is the
/// fraction of parents "switched on" (each parent with a random polarity).
pub fn strong_binary_network<R: Rng + ?Sized>(dag: Dag, names: Vec<String>, rng: &mut R) -> BayesianNetwork {
    let n = dag.n_nodes();
    assert_eq!(names.len(), n);
    let variables: Vec<Variable> = names.into_iter().map(|nm| Variable::with_arity(nm, 2)).collect();
    let mut cpts = Vec::with_capacity(n);
    for v in 0..n {
        let k = dag.parents(v).len();
        if k == 0 {
            let p1 = rng.gen_range(0.3..0.7);
            cpts.push(vec![1.0 - p1, p1]);
            continue;
        }
        let polarity: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.5)).collect();
        let mut table = Vec::with_capacity(2 << k);
        for config in 0..(1usize << k) {
            // last parent is the fastest digit
            let on = (0..k)
                .filter(|&i| {
                    let bit = (config >> (k - 1 - i)) & 1 == 1;
                    bit == polarity[i]
                })
                .count();
            let p1 = 0.1 + 0.8 * on as f64 / k as f64;
            table.extend([1.0 - p1, p1]);
        }
        cpts.push(table);
    }
    BayesianNetwork::new(variables, dag, cpts).expect("valid tables")
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Fixed 10-node, 12-edge benchmark graph with four v-structures.
pub fn ten_node_dag() -> Dag {
    let edges = [
        (0, 2),
        (1, 2),
        (1, 3),
        (2, 4),
        (3, 4),
        (3, 5),
        (4, 6),
        (5, 6),
        (5, 7),
        (6, 8),
        (7, 8),
        (8, 9),
    ];
    Dag::from_edges(10, &edges).expect("acyclic")
}

pub fn ten_node_network<R: Rng + ?Sized>(rng: &mut R) -> BayesianNetwork {
    strong_binary_network(ten_node_dag(), names("X", 10), rng)
}

/// Layout of a multi-label generator: which variables are labels.
#[derive(Debug, Clone)]
pub struct MultiLabelNetwork {
    pub net: BayesianNetwork,
    pub labels: Vec<usize>,
}

/// Two label clusters that are independent given the features. Cluster `c`
/// has labels `Y{3c}..Y{3c+2}` chained `Y → Y → Y` and four root features,
/// two feeding the first label and one feeding each of the other two.
pub fn two_cluster_multilabel<R: Rng + ?Sized>(rng: &mut R) -> MultiLabelNetwork {
    // features 0..8, labels 8..14
    let mut edges = Vec::new();
    for c in 0..2 {
        let f = 4 * c;
        let y = 8 + 3 * c;
        edges.extend([(f, y), (f + 1, y), (f + 2, y + 1), (f + 3, y + 2)]);
        edges.extend([(y, y + 1), (y + 1, y + 2)]);
    }
    let dag = Dag::from_edges(14, &edges).expect("acyclic");
    let mut all = names("X", 8);
    all.extend(names("Y", 6));
    MultiLabelNetwork {
        net: strong_binary_network(dag, all, rng),
        labels: (8..14).collect(),
    }
}

/// Every label has private features and no label-label or shared-child
/// connections, so all labels are mutually separated given the features.
pub fn independent_labels_multilabel<R: Rng + ?Sized>(n_labels: usize, rng: &mut R) -> MultiLabelNetwork {
    let n_features = 2 * n_labels;
    let mut edges = Vec::new();
    for l in 0..n_labels {
        edges.extend([(2 * l, n_features + l), (2 * l + 1, n_features + l)]);
    }
    let dag = Dag::from_edges(n_features + n_labels, &edges).expect("acyclic");
    let mut all = names("X", n_features);
    all.extend(names("Y", n_labels));
    MultiLabelNetwork {
        net: strong_binary_network(dag, all, rng),
        labels: (n_features..n_features + n_labels).collect(),
    }
}

/// The 20-node, 25-edge structure of the classic CHILD network with
/// arities 2..6 and random tables.
pub fn child_shaped_network<R: Rng + ?Sized>(rng: &mut R) -> BayesianNetwork {
    let nodes: [(&str, usize); 20] = [
        ("BirthAsphyxia", 2),
        ("Disease", 6),
        ("Age", 3),
        ("LVH", 2),
        ("DuctFlow", 3),
        ("CardiacMixing", 4),
        ("LungParench", 3),
        ("LungFlow", 3),
        ("Sick", 2),
        ("LVHreport", 2),
        ("HypDistrib", 2),
        ("HypoxiaInO2", 3),
        ("CO2", 3),
        ("ChestXray", 5),
        ("Grunting", 2),
        ("LowerBodyO2", 3),
        ("RUQO2", 3),
        ("CO2Report", 2),
        ("XrayReport", 5),
        ("GruntingReport", 2),
    ];
    let edges = [
        (0, 1),
        (1, 2),
        (1, 3),
        (1, 4),
        (1, 5),
        (1, 6),
        (1, 7),
        (1, 8),
        (3, 9),
        (4, 10),
        (5, 10),
        (5, 11),
        (6, 11),
        (6, 12),
        (6, 13),
        (6, 14),
        (7, 13),
        (8, 14),
        (8, 2),
        (10, 15),
        (11, 15),
        (11, 16),
        (12, 17),
        (13, 18),
        (14, 19),
    ];
    let dag = Dag::from_edges(20, &edges).expect("acyclic");
    let variables: Vec<Variable> = nodes
        .iter()
        .map(|&(nm, a)| Variable::with_arity(nm, a))
        .collect();
    let cpts = (0..20)
        .map(|v| {
            let r = variables[v].arity();
            let q: usize = dag.parents(v).iter().map(|&p| variables[p].arity()).product();
            (0..q)
                .flat_map(|_| {
                    let w: Vec<f64> = (0..r).map(|_| rng.gen_range(0.05..1.0)).collect();
                    let s: f64 = w.iter().sum();
                    w.into_iter().map(move |x| x / s)
                })
                .collect()
        })
        .collect();
    BayesianNetwork::new(variables, dag, cpts).expect("valid tables")
}
