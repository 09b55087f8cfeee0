//! The JSON networks under `fixtures/` are generator outputs with fixed seeds.
//! Regenerate with `cargo test -p h2pc --test fixtures -- --ignored`.

use std::path::PathBuf;

use h2pc::bn::{read_network, BayesianNetwork};
use h2pc::synthetic::{child_shaped_network, ten_node_network, two_cluster_multilabel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixtures() -> Vec<(&'static str, BayesianNetwork)> {
    vec![
        ("strong10.json", ten_node_network(&mut ChaCha8Rng::seed_from_u64(1))),
        ("child.json", child_shaped_network(&mut ChaCha8Rng::seed_from_u64(2))),
        ("mlc6.json", two_cluster_multilabel(&mut ChaCha8Rng::seed_from_u64(3)).net),
    ]
}

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
#[ignore]
fn regenerate() {
    for (name, net) in fixtures() {
        std::fs::write(path(name), net.to_json().unwrap() + "\n").unwrap();
    }
}

#[test]
fn fixtures_match_generators() {
    for (name, net) in fixtures() {
        let stored = read_network(path(name)).unwrap();
        assert_eq!(stored.dag(), net.dag(), "{name}");
        for v in 0..net.n_nodes() {
            let a = stored.cpt(v);
            let b = net.cpt(v);
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12), "{name} node {v}");
        }
    }
}
