//! Directed acyclic graphs, d-separation and discrete Bayesian networks.

mod dag;
mod dsep;
mod network;

pub use dag::{is_acyclic, Dag, Pdag};
pub use dsep::{d_connected, d_separated, d_separated_sets, markov_sets, MarkovSets};
pub use network::{dag_to_dot, forward_sample, pdag_to_dot, read_network, write_network, BayesianNetwork};
