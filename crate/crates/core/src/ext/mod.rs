//! Applications of the hierarchy and the skeleton spanner: distance
//! sketches, diameter approximation and generalized Steiner forest.

pub mod diameter;
pub mod gsf;
pub mod sketch;

use rand::Rng;

use crate::graph::NodeId;
use crate::sim::{mix, node_stream};

/// Every node joins independently with probability `p`, using its own
/// random stream.
pub fn sample_nodes(n: usize, p: f64, seed: u64) -> Vec<NodeId> {
    (0..n)
        .map(NodeId::from_index)
        .filter(|&v| node_stream(mix(seed, 0x5a3e), v).gen::<f64>() < p)
        .collect()
}
