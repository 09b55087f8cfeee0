use h2pc::bn::{markov_sets, Dag};
use h2pc::skeleton::{build_skeleton, de_pcs, de_sps, hpc, CondSizeProbe, DSeparationOracle, HpcConfig, Skeleton};
use h2pc::synthetic::random_dag;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graphs(count: usize, seed: u64) -> Vec<Dag> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(2..=12);
            let p = rng.gen_range(0.1..0.6);
            random_dag(n, 3, p, &mut rng)
        })
        .collect()
}

#[test]
fn hpc_is_exact_under_d_separation() {
    let cfg = HpcConfig::default();
    let mut failures = Vec::new();
    for (i, g) in random_graphs(200, 11).iter().enumerate() {
        let src = DSeparationOracle::new(g);
        let universe: Vec<usize> = (0..g.n_nodes()).collect();
        let truth = markov_sets(g);
        for t in 0..g.n_nodes() {
            let got = hpc(t, &src, &universe, &cfg);
            let want: Vec<usize> = truth.pc[t].iter().copied().collect();
            if got != want {
                failures.push(format!("graph {i} {:?} node {t}: got {got:?} want {want:?}", g.edges()));
            }
        }
        assert_eq!(build_skeleton(&src, &cfg, 1), Skeleton::from_dag(g), "graph {i}");
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn supersets_contain_the_truth() {
    for g in random_graphs(100, 12) {
        let src = DSeparationOracle::new(&g);
        let universe: Vec<usize> = (0..g.n_nodes()).collect();
        let truth = markov_sets(&g);
        for t in 0..g.n_nodes() {
            let pcs = de_pcs(t, &src, &universe);
            assert!(truth.pc[t].iter().all(|v| pcs.pcs.contains(v)));
            assert!(pcs.pcs.iter().all(|v| !pcs.dsep.contains_key(v)));
            let sps = de_sps(t, &src, &universe, &pcs);
            assert!(truth.sp[t].iter().all(|v| sps.contains(v) || pcs.pcs.contains(v)));
        }
    }
}

#[test]
fn conditioning_caps_hold() {
    for g in random_graphs(100, 13) {
        let oracle = DSeparationOracle::new(&g);
        let universe: Vec<usize> = (0..g.n_nodes()).collect();
        for t in 0..g.n_nodes() {
            let probe = CondSizeProbe::new(&oracle);
            let pcs = de_pcs(t, &probe, &universe);
            assert!(probe.max_condset() <= 1);
            let probe = CondSizeProbe::new(&oracle);
            de_sps(t, &probe, &universe, &pcs);
            assert!(probe.max_condset() <= 2);
        }
    }
}
