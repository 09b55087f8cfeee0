use std::collections::{BTreeSet, VecDeque};

use super::Dag;

/// Nodes d-connected to `x` given `z` (Bayes-ball reachability).
///
/// The result excludes `x` itself and every member of `z`.
pub fn d_connected(g: &Dag, x: usize, z: &[usize]) -> Vec<bool> {
    let n = g.n_nodes();
    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    // colliders open only when they are ancestors of the conditioning set
    let opens = g.ancestral_mask(z);

    const UP: usize = 0; // arrived from a child
    const DOWN: usize = 1; // arrived from a parent
    let mut visited = vec![[false; 2]; n];
    let mut reach = vec![false; n];
    let mut queue = VecDeque::from([(x, UP)]);
    while let Some((v, dir)) = queue.pop_front() {
        if visited[v][dir] {
            continue;
        }
        visited[v][dir] = true;
        if !in_z[v] {
            reach[v] = true;
        }
        if dir == UP && !in_z[v] {
            queue.extend(g.parents(v).iter().map(|&p| (p, UP)));
            queue.extend(g.children(v).iter().map(|&c| (c, DOWN)));
        } else if dir == DOWN {
            if !in_z[v] {
                queue.extend(g.children(v).iter().map(|&c| (c, DOWN)));
            }
            if opens[v] {
                queue.extend(g.parents(v).iter().map(|&p| (p, UP)));
            }
        }
    }
    reach[x] = false;
    reach
}

/// `x ⫫ y | z` in the graph.
pub fn d_separated(g: &Dag, x: usize, y: usize, z: &[usize]) -> bool {
    debug_assert!(x != y && !z.contains(&x) && !z.contains(&y));
    !d_connected(g, x, z)[y]
}

/// Set query `xs ⫫ ys | zs`, decided by separation in the moralized
/// ancestral graph of `xs ∪ ys ∪ zs`.
pub fn d_separated_sets(g: &Dag, xs: &[usize], ys: &[usize], zs: &[usize]) -> bool {
    if xs.is_empty() || ys.is_empty() {
        return true;
    }
    let n = g.n_nodes();
    let seeds: Vec<usize> = xs.iter().chain(ys).chain(zs).copied().collect();
    let keep = g.ancestral_mask(&seeds);
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for v in (0..n).filter(|&v| keep[v]) {
        let ps = g.parents(v);
        for (i, &p) in ps.iter().enumerate() {
            adj[v].insert(p);
            adj[p].insert(v);
            for &q in &ps[i + 1..] {
                adj[p].insert(q);
                adj[q].insert(p);
            }
        }
    }
    let mut blocked = vec![false; n];
    for &v in zs {
        blocked[v] = true;
    }
    let mut target = vec![false; n];
    for &v in ys {
        target[v] = true;
    }
    let mut seen = blocked.clone();
    let mut stack = Vec::new();
    for &x in xs {
        if target[x] {
            return false;
        }
        if !seen[x] {
            seen[x] = true;
            stack.push(x);
        }
    }
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if target[w] {
                return false;
            }
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    true
}

/// Parents-and-children, spouses and Markov blanket of every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovSets {
    pub pc: Vec<BTreeSet<usize>>,
    pub sp: Vec<BTreeSet<usize>>,
    pub mb: Vec<BTreeSet<usize>>,
}

pub fn markov_sets(g: &Dag) -> MarkovSets {
    let n = g.n_nodes();
    let mut pc = vec![BTreeSet::new(); n];
    let mut sp = vec![BTreeSet::new(); n];
    for v in 0..n {
        pc[v].extend(g.parents(v));
        pc[v].extend(g.children(v));
        for &c in g.children(v) {
            sp[v].extend(g.parents(c).iter().copied().filter(|&p| p != v));
        }
    }
    let mb = pc.iter().zip(&sp).map(|(a, b)| a | b).collect();
    MarkovSets { pc, sp, mb }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::random_dag;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // All simple undirected paths x..y; a path is open when every inner
    // non-collider is outside z and every inner collider has a descendant in z.
    fn path_oracle_separated(g: &Dag, x: usize, y: usize, z: &[usize]) -> bool {
        let n = g.n_nodes();
        let has_desc_in_z = |v: usize| z.iter().any(|&w| g.has_path(v, w));
        fn walk(
            g: &Dag,
            path: &mut Vec<usize>,
            y: usize,
            on_path: &mut Vec<bool>,
            open: &mut dyn FnMut(&[usize]) -> bool,
        ) -> bool {
            let last = *path.last().unwrap();
            if last == y {
                return open(path);
            }
            let nbrs: Vec<usize> = g.parents(last).iter().chain(g.children(last)).copied().collect();
            for w in nbrs {
                if on_path[w] {
                    continue;
                }
                on_path[w] = true;
                path.push(w);
                let found = walk(g, path, y, on_path, open);
                path.pop();
                on_path[w] = false;
                if found {
                    return true;
                }
            }
            false
        }
        let mut open = |p: &[usize]| {
            (1..p.len() - 1).all(|i| {
                let (a, v, b) = (p[i - 1], p[i], p[i + 1]);
                let collider = g.has_edge(a, v) && g.has_edge(b, v);
                if collider {
                    has_desc_in_z(v)
                } else {
                    !z.contains(&v)
                }
            })
        };
        let mut on_path = vec![false; n];
        on_path[x] = true;
        !walk(g, &mut vec![x], y, &mut on_path, &mut open)
    }

    #[test]
    fn chain_and_collider() {
        let chain = Dag::from_edges(3, &[(0, 2), (2, 1)]).unwrap();
        assert!(d_separated(&chain, 0, 1, &[2]));
        assert!(!d_separated(&chain, 0, 1, &[]));
        let collider = Dag::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        assert!(d_separated(&collider, 0, 1, &[]));
        assert!(!d_separated(&collider, 0, 1, &[2]));
    }

    #[test]
    fn markov_sets_read_off_graph() {
        // A=0, B=1, C=2, D=3: A→C←B, C→D
        let g = Dag::from_edges(4, &[(0, 2), (1, 2), (2, 3)]).unwrap();
        let m = markov_sets(&g);
        assert_eq!(m.pc[2], BTreeSet::from([0, 1, 3]));
        assert_eq!(m.sp[0], BTreeSet::from([1]));
        assert_eq!(m.mb[0], BTreeSet::from([1, 2]));
        let empty = markov_sets(&Dag::empty(4));
        assert!(empty.mb.iter().all(BTreeSet::is_empty));
    }

    fn subsets(items: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0u32..1 << items.len()).map(move |mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &v)| v)
                .collect()
        })
    }

    #[test]
    fn bayes_ball_moral_graph_and_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..60 {
            let n = 3 + trial % 6;
            let g = random_dag(n, 3, 0.4, &mut rng);
            for x in 0..n {
                for y in 0..n {
                    if x == y {
                        continue;
                    }
                    let rest: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
                    for z in subsets(&rest) {
                        let ball = d_separated(&g, x, y, &z);
                        assert_eq!(ball, d_separated(&g, y, x, &z), "symmetry");
                        assert_eq!(ball, d_separated_sets(&g, &[x], &[y], &z), "moral graph");
                        assert_eq!(ball, path_oracle_separated(&g, x, y, &z), "paths {g:?} {x} {y} {z:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn markov_blanket_is_minimal_separator() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let g = random_dag(8, 3, 0.35, &mut rng);
            let m = markov_sets(&g);
            for x in 0..8 {
                let mb: Vec<usize> = m.mb[x].iter().copied().collect();
                let others: Vec<usize> = (0..8).filter(|&v| v != x && !m.mb[x].contains(&v)).collect();
                assert!(others.iter().all(|&y| d_separated(&g, x, y, &mb)));
                for drop in &mb {
                    let smaller: Vec<usize> = mb.iter().copied().filter(|v| v != drop).collect();
                    let mut outside = others.clone();
                    outside.push(*drop);
                    assert!(!d_separated_sets(&g, &[x], &outside, &smaller));
                }
            }
        }
    }

    #[test]
    fn adding_an_edge_updates_pc() {
        let mut g = Dag::empty(3);
        g.add_edge(0, 2).unwrap();
        let m = markov_sets(&g);
        assert!(m.pc[0].contains(&2) && m.pc[2].contains(&0));
    }
}
