use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dag, Pdag};
use crate::dataset::{CategoricalDataset, Level, Variable};
use crate::error::{Error, Result};

const READ_TOLERANCE: f64 = 1e-6;

/// A DAG with one conditional probability table per node.
///
/// The table of node `v` is stored row-major as `[parent configuration][level]`;
/// configurations are mixed-radix over the sorted parent list, last parent fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork {
    variables: Vec<Variable>,
    dag: Dag,
    cpts: Vec<Vec<f64>>,
}

impl BayesianNetwork {
    pub fn new(variables: Vec<Variable>, dag: Dag, cpts: Vec<Vec<f64>>) -> Result<Self> {
        if variables.len() != dag.n_nodes() || cpts.len() != dag.n_nodes() {
            return Err(Error::Mismatch(format!(
                "{} variables, {} nodes, {} tables",
                variables.len(),
                dag.n_nodes(),
                cpts.len()
            )));
        }
        let net = BayesianNetwork {
            variables,
            dag,
            cpts,
        };
        for v in 0..net.n_nodes() {
            net.validate_cpt(v, READ_TOLERANCE)?;
        }
        Ok(net)
    }

    fn validate_cpt(&self, v: usize, tol: f64) -> Result<()> {
        let name = &self.variables[v].name;
        let r = self.variables[v].arity();
        let q = self.n_configs(v);
        let cpt = &self.cpts[v];
        if cpt.len() != r * q {
            return Err(Error::Schema {
                node: name.clone(),
                message: format!("table has {} entries, expected {}x{}", cpt.len(), q, r),
            });
        }
        for (config, column) in cpt.chunks(r).enumerate() {
            if column.iter().any(|p| !(0.0..=1.0 + tol).contains(p)) {
                return Err(Error::Schema {
                    node: name.clone(),
                    message: format!("probability out of range in configuration {config}"),
                });
            }
            let sum: f64 = column.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::CptNotNormalized {
                    node: name.clone(),
                    config,
                    sum,
                });
            }
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.dag.n_nodes()
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn cpt(&self, v: usize) -> &[f64] {
        &self.cpts[v]
    }

    pub fn n_configs(&self, v: usize) -> usize {
        self.dag
            .parents(v)
            .iter()
            .map(|&p| self.variables[p].arity())
            .product()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Maximum-likelihood tables for `dag` with `pseudo_count` added to every
    /// cell; unobserved configurations without smoothing become uniform.
    pub fn fit(dag: Dag, data: &CategoricalDataset, pseudo_count: f64) -> Result<Self> {
        if dag.n_nodes() != data.n_vars() {
            return Err(Error::Mismatch(format!(
                "graph has {} nodes, data {} variables",
                dag.n_nodes(),
                data.n_vars()
            )));
        }
        let mut cpts = Vec::with_capacity(dag.n_nodes());
        for v in 0..dag.n_nodes() {
            let r = data.arity(v);
            let parents = dag.parents(v);
            let q: usize = parents.iter().map(|&p| data.arity(p)).product();
            let mut counts = vec![0.0; q * r];
            for row in 0..data.n_rows() {
                let mut config = 0;
                for &p in parents {
                    config = config * data.arity(p) + data.value(row, p) as usize;
                }
                counts[config * r + data.value(row, v) as usize] += 1.0;
            }
            for column in counts.chunks_mut(r) {
                let total: f64 = column.iter().sum::<f64>() + pseudo_count * r as f64;
                for c in column.iter_mut() {
                    *c = if total > 0.0 {
                        (*c + pseudo_count) / total
                    } else {
                        1.0 / r as f64
                    };
                }
            }
            cpts.push(counts);
        }
        BayesianNetwork::new(data.variables().to_vec(), dag, cpts)
    }

    fn config_of(&self, v: usize, columns: &[Vec<Level>], row: usize) -> usize {
        self.dag.parents(v).iter().fold(0, |acc, &p| {
            acc * self.variables[p].arity() + columns[p][row] as usize
        })
    }
}

/// Draws `n` rows ancestrally. One generator is seeded per call and consumed
/// node by node in topological order, rows in order within a node.
pub fn forward_sample(net: &BayesianNetwork, n: usize, seed: u64) -> CategoricalDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns: Vec<Vec<Level>> = vec![Vec::new(); net.n_nodes()];
    for v in net.dag.topological_order() {
        let r = net.variables[v].arity();
        let mut col = Vec::with_capacity(n);
        for row in 0..n {
            let config = net.config_of(v, &columns, row);
            let probs = &net.cpts[v][config * r..(config + 1) * r];
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut level = r - 1;
            for (l, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    level = l;
                    break;
                }
            }
            // skip trailing zero-probability levels when rounding leaves u ≥ Σp
            while level > 0 && probs[level] == 0.0 {
                level -= 1;
            }
            col.push(level as Level);
        }
        columns[v] = col;
    }
    CategoricalDataset::new(net.variables.clone(), columns).expect("sampled levels are in range")
}

#[derive(Debug, Serialize, Deserialize)]
struct VariableSpec {
    name: String,
    levels: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    variables: Vec<VariableSpec>,
    edges: Vec<[String; 2]>,
    cpts: BTreeMap<String, Vec<f64>>,
}

impl BayesianNetwork {
    pub fn to_json(&self) -> Result<String> {
        let variables = self
            .variables
            .iter()
            .map(|v| VariableSpec {
                name: v.name.clone(),
                levels: v.levels.clone(),
            })
            .collect();
        // grouped by child so each child's parents appear in sorted order
        let mut edges: Vec<(usize, usize)> = self.dag.edges();
        edges.sort_by_key(|&(p, c)| (c, p));
        let edges = edges
            .into_iter()
            .map(|(p, c)| [self.variables[p].name.clone(), self.variables[c].name.clone()])
            .collect();
        let cpts = self
            .variables
            .iter()
            .zip(&self.cpts)
            .map(|(v, t)| (v.name.clone(), t.clone()))
            .collect();
        Ok(serde_json::to_string_pretty(&NetworkFile {
            variables,
            edges,
            cpts,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        let mut index = HashMap::new();
        let mut variables = Vec::with_capacity(file.variables.len());
        for (i, spec) in file.variables.into_iter().enumerate() {
            if spec.levels.is_empty() {
                return Err(Error::Schema {
                    node: spec.name,
                    message: "variable has no levels".into(),
                });
            }
            if index.insert(spec.name.clone(), i).is_some() {
                return Err(Error::Schema {
                    node: spec.name,
                    message: "duplicate variable name".into(),
                });
            }
            variables.push(Variable::new(spec.name, spec.levels));
        }
        let n = variables.len();
        let lookup = |name: &str| {
            index.get(name).copied().ok_or_else(|| Error::Schema {
                node: name.to_string(),
                message: "edge refers to an undeclared variable".into(),
            })
        };
        // parents in the order they are listed
        let mut listed: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(file.edges.len());
        for [p, c] in &file.edges {
            let (pi, ci) = (lookup(p)?, lookup(c)?);
            if pi == ci || listed[ci].contains(&pi) {
                return Err(Error::Schema {
                    node: c.clone(),
                    message: format!("invalid or repeated edge from `{p}`"),
                });
            }
            listed[ci].push(pi);
            edges.push((pi, ci));
        }
        let dag = Dag::from_edges(n, &edges).map_err(|e| match e {
            Error::Cycle => Error::Schema {
                node: "<graph>".into(),
                message: "edges form a directed cycle".into(),
            },
            other => other,
        })?;
        let mut cpts = Vec::with_capacity(n);
        for (v, var) in variables.iter().enumerate() {
            let raw = file.cpts.get(&var.name).ok_or_else(|| Error::Schema {
                node: var.name.clone(),
                message: "missing cpt".into(),
            })?;
            let arities: Vec<usize> = listed[v].iter().map(|&p| variables[p].arity()).collect();
            let q: usize = arities.iter().product();
            let r = var.arity();
            if raw.len() != q * r {
                return Err(Error::Schema {
                    node: var.name.clone(),
                    message: format!("table has {} entries, expected {}x{}", raw.len(), q, r),
                });
            }
            cpts.push(reorder_parents(raw, &listed[v], &arities, r));
        }
        if let Some(extra) = file.cpts.keys().find(|k| !index.contains_key(*k)) {
            return Err(Error::Schema {
                node: extra.clone(),
                message: "cpt for an undeclared variable".into(),
            });
        }
        BayesianNetwork::new(variables, dag, cpts)
    }
}

// Re-indexes a table from listed-parent order to sorted-parent order.
fn reorder_parents(raw: &[f64], listed: &[usize], arities: &[usize], r: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..listed.len()).collect();
    order.sort_by_key(|&i| listed[i]);
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return raw.to_vec();
    }
    let q: usize = arities.iter().product();
    let mut out = vec![0.0; raw.len()];
    let mut digits = vec![0usize; listed.len()];
    for config in 0..q {
        // digits of `config` in listed order, last fastest
        let mut rest = config;
        for i in (0..listed.len()).rev() {
            digits[i] = rest % arities[i];
            rest /= arities[i];
        }
        let sorted_config = order.iter().fold(0, |acc, &i| acc * arities[i] + digits[i]);
        out[sorted_config * r..(sorted_config + 1) * r]
            .copy_from_slice(&raw[config * r..(config + 1) * r]);
    }
    out
}

pub fn read_network(path: impl AsRef<Path>) -> Result<BayesianNetwork> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    BayesianNetwork::from_json(&text)
}

pub fn write_network(net: &BayesianNetwork, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, net.to_json()? + "\n").map_err(|e| Error::io(path, e))
}

fn dot_id(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn dag_to_dot(names: &[String], g: &Dag) -> String {
    let mut out = String::from("digraph {\n");
    for name in names {
        let _ = writeln!(out, "  {};", dot_id(name));
    }
    for (u, v) in g.edges() {
        let _ = writeln!(out, "  {} -> {};", dot_id(&names[u]), dot_id(&names[v]));
    }
    out.push_str("}\n");
    out
}

/// Undirected edges are drawn with `dir=none`.
pub fn pdag_to_dot(names: &[String], g: &Pdag) -> String {
    let mut out = String::from("digraph {\n");
    for name in names {
        let _ = writeln!(out, "  {};", dot_id(name));
    }
    for &(u, v) in g.directed() {
        let _ = writeln!(out, "  {} -> {};", dot_id(&names[u]), dot_id(&names[v]));
    }
    for &(u, v) in g.undirected() {
        let _ = writeln!(out, "  {} -> {} [dir=none];", dot_id(&names[u]), dot_id(&names[v]));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> BayesianNetwork {
        let vars = vec![
            Variable::with_arity("a", 2),
            Variable::with_arity("b", 2),
            Variable::with_arity("c", 3),
        ];
        let dag = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let cpts = vec![
            vec![0.0, 1.0],
            vec![0.0, 1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
        ];
        BayesianNetwork::new(vars, dag, cpts).unwrap()
    }

    #[test]
    fn deterministic_chain_forces_every_row() {
        let ds = forward_sample(&chain(), 50, 1);
        for row in 0..50 {
            assert_eq!(ds.row(row), vec![1, 0, 2]);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let vars = vec![Variable::with_arity("x", 2)];
        let net = BayesianNetwork::new(vars, Dag::empty(1), vec![vec![0.5, 0.5]]).unwrap();
        let a = forward_sample(&net, 10_000, 99);
        assert_eq!(a, forward_sample(&net, 10_000, 99));
        let zeros = a.column(0).iter().filter(|&&v| v == 0).count() as f64 / 10_000.0;
        // 4σ of a Binomial(10000, 0.5) proportion is 0.02
        assert!((zeros - 0.5).abs() <= 0.02, "{zeros}");
    }

    #[test]
    fn json_round_trip() {
        let net = chain();
        let back = BayesianNetwork::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn unnormalized_column_is_rejected() {
        let text = r#"{"variables":[{"name":"x","levels":["a","b"]}],"edges":[],
                       "cpts":{"x":[0.5,0.4]}}"#;
        match BayesianNetwork::from_json(text) {
            Err(Error::CptNotNormalized { node, .. }) => assert_eq!(node, "x"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_errors_name_the_node() {
        let text = r#"{"variables":[{"name":"x","levels":["a","b"]}],"edges":[["x","ghost"]],
                       "cpts":{"x":[0.5,0.5]}}"#;
        let err = BayesianNetwork::from_json(text).unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
        let text = r#"{"variables":[{"name":"x","levels":["a","b"]}],"edges":[],"cpts":{}}"#;
        let err = BayesianNetwork::from_json(text).unwrap_err();
        assert!(err.to_string().contains("`x`"), "{err}");
    }

    #[test]
    fn listed_parent_order_is_honoured() {
        // child c with parents listed (b, a); b has 3 levels, a has 2
        let text = r#"{
          "variables":[{"name":"a","levels":["0","1"]},{"name":"b","levels":["0","1","2"]},
                       {"name":"c","levels":["0","1"]}],
          "edges":[["b","c"],["a","c"]],
          "cpts":{"a":[0.5,0.5],"b":[0.2,0.3,0.5],
                  "c":[1,0, 0,1, 0.1,0.9, 0.2,0.8, 0.3,0.7, 0.4,0.6]}}"#;
        let net = BayesianNetwork::from_json(text).unwrap();
        // listed config (b=1, a=0) = 2 holds (0.1, 0.9); sorted config (a=0, b=1) = 1
        assert_eq!(&net.cpt(2)[2..4], &[0.1, 0.9]);
        // listed (b=0, a=1) = 1 → sorted (a=1, b=0) = 3
        assert_eq!(&net.cpt(2)[6..8], &[0.0, 1.0]);
        let again = BayesianNetwork::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(again, net);
    }

    #[test]
    fn fit_recovers_frequencies() {
        let net = chain();
        let data = forward_sample(&net, 20, 3);
        let fitted = BayesianNetwork::fit(net.dag().clone(), &data, 0.0).unwrap();
        assert_eq!(fitted.cpt(0), &[0.0, 1.0]);
        // unobserved parent configuration b=1 becomes uniform over c
        assert_eq!(&fitted.cpt(2)[3..6], &[1.0 / 3.0; 3]);
    }

    #[test]
    fn dot_marks_undirected_edges() {
        let names = vec!["x".to_string(), "y".to_string()];
        let mut p = Pdag::new(2);
        p.set_undirected(0, 1);
        let dot = pdag_to_dot(&names, &p);
        assert!(dot.contains("\"x\" -> \"y\" [dir=none];"));
        let g = Dag::from_edges(2, &[(1, 0)]).unwrap();
        assert!(dag_to_dot(&names, &g).contains("\"y\" -> \"x\";"));
    }
}
