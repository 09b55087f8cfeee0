use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// True iff the directed graph on `n` nodes with the given edges has a topological order.
pub fn is_acyclic(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0usize; n];
    let mut out = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u >= n || v >= n {
            return false;
        }
        out[u].push(v);
        indeg[v] += 1;
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(u) = queue.pop_front() {
        seen += 1;
        for &v in &out[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                queue.push_back(v);
            }
        }
    }
    seen == n
}

/// Directed acyclic graph over nodes `0..n` with sorted parent and child lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dag {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Dag {
    pub fn empty(n: usize) -> Self {
        Dag {
            parents: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Dag::empty(n);
        for &(u, v) in edges {
            g.check_new_edge(u, v)?;
            g.insert(u, v);
        }
        if !is_acyclic(n, edges) {
            return Err(Error::Cycle);
        }
        Ok(g)
    }

    pub fn n_nodes(&self) -> usize {
        self.parents.len()
    }

    pub fn n_edges(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.parents[v].binary_search(&u).is_ok()
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.has_edge(u, v) || self.has_edge(v, u)
    }

    /// Edges `(parent, child)` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self
            .children
            .iter()
            .enumerate()
            .flat_map(|(u, cs)| cs.iter().map(move |&v| (u, v)))
            .collect();
        e.sort_unstable();
        e
    }

    /// Unordered adjacencies as `(min, max)` pairs.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.edges()
            .into_iter()
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect()
    }

    fn check_new_edge(&self, u: usize, v: usize) -> Result<()> {
        let n = self.n_nodes();
        if u >= n || v >= n {
            return Err(Error::invalid(format!("edge {u}->{v} outside {n} nodes")));
        }
        if u == v {
            return Err(Error::invalid(format!("self-loop on node {u}")));
        }
        if self.adjacent(u, v) {
            return Err(Error::invalid(format!("duplicate edge between {u} and {v}")));
        }
        Ok(())
    }

    fn insert(&mut self, u: usize, v: usize) {
        let p = &mut self.parents[v];
        let pos = p.binary_search(&u).unwrap_err();
        p.insert(pos, u);
        let c = &mut self.children[u];
        let pos = c.binary_search(&v).unwrap_err();
        c.insert(pos, v);
    }

    /// Adds `u -> v`, refusing self-loops, duplicates and cycles.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        self.check_new_edge(u, v)?;
        if self.has_path(v, u) {
            return Err(Error::Cycle);
        }
        self.insert(u, v);
        Ok(())
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        match self.parents[v].binary_search(&u) {
            Ok(pos) => {
                self.parents[v].remove(pos);
                let cpos = self.children[u].binary_search(&v).expect("child list in sync");
                self.children[u].remove(cpos);
                true
            }
            Err(_) => false,
        }
    }

    /// Turns `u -> v` into `v -> u`; the graph is unchanged on error.
    pub fn reverse_edge(&mut self, u: usize, v: usize) -> Result<()> {
        if !self.remove_edge(u, v) {
            return Err(Error::invalid(format!("no edge {u}->{v} to reverse")));
        }
        if self.has_path(u, v) {
            self.insert(u, v);
            return Err(Error::Cycle);
        }
        self.insert(v, u);
        Ok(())
    }

    /// Whether a directed path `from ⇝ to` exists (length ≥ 0).
    pub fn has_path(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.n_nodes()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            for &c in &self.children[u] {
                if c == to {
                    return true;
                }
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    /// Kahn order, smallest available index first.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.n_nodes();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = ready.pop_first() {
            order.push(u);
            for &c in &self.children[u] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }

    /// Membership mask of the ancestors of `nodes`, the nodes included.
    pub fn ancestral_mask(&self, nodes: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.n_nodes()];
        let mut stack: Vec<usize> = nodes.to_vec();
        for &v in nodes {
            mask[v] = true;
        }
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !mask[p] {
                    mask[p] = true;
                    stack.push(p);
                }
            }
        }
        mask
    }

    /// Induced subgraph on `nodes`, relabelled to positions in `nodes`.
    pub fn induced(&self, nodes: &[usize]) -> Dag {
        let mut pos = vec![usize::MAX; self.n_nodes()];
        for (i, &v) in nodes.iter().enumerate() {
            pos[v] = i;
        }
        let mut g = Dag::empty(nodes.len());
        for (u, v) in self.edges() {
            if pos[u] != usize::MAX && pos[v] != usize::MAX {
                g.insert(pos[u], pos[v]);
            }
        }
        g
    }
}

/// Partially directed graph: directed edges plus undirected `(min, max)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pdag {
    n: usize,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
}

impl Pdag {
    pub fn new(n: usize) -> Self {
        Pdag {
            n,
            directed: BTreeSet::new(),
            undirected: BTreeSet::new(),
        }
    }

    pub fn from_dag(g: &Dag) -> Self {
        Pdag {
            n: g.n_nodes(),
            directed: g.edges().into_iter().collect(),
            undirected: BTreeSet::new(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn directed(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    pub fn undirected(&self) -> &BTreeSet<(usize, usize)> {
        &self.undirected
    }

    pub fn has_directed(&self, u: usize, v: usize) -> bool {
        self.directed.contains(&(u, v))
    }

    pub fn has_undirected(&self, u: usize, v: usize) -> bool {
        self.undirected.contains(&(u.min(v), u.max(v)))
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.has_directed(u, v) || self.has_directed(v, u) || self.has_undirected(u, v)
    }

    /// Adds or replaces the adjacency between `u` and `v` with `u -> v`.
    pub fn set_directed(&mut self, u: usize, v: usize) {
        self.remove(u, v);
        self.directed.insert((u, v));
    }

    pub fn set_undirected(&mut self, u: usize, v: usize) {
        self.remove(u, v);
        self.undirected.insert((u.min(v), u.max(v)));
    }

    pub fn remove(&mut self, u: usize, v: usize) {
        self.directed.remove(&(u, v));
        self.directed.remove(&(v, u));
        self.undirected.remove(&(u.min(v), u.max(v)));
    }

    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.directed
            .iter()
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .chain(self.undirected.iter().copied())
            .collect()
    }
}
