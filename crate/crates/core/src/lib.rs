//! Simulation of the CONGEST model with bounded per-edge bandwidth, and
//! distributed constructions on top of it: bounded-hop multi-source
//! shortest paths, a landmark hierarchy for short-range routing, a skeleton
//! spanner for long-range routing, a stateless compact routing scheme with
//! relabeling, distance sketches, diameter approximation and a
//! generalized Steiner forest approximation.

pub mod bfs;
pub mod bsp;
pub mod forest;
pub mod error;
pub mod ext;
pub mod generate;
pub mod graph;
pub mod oracle;
pub mod routing;
pub mod short_range;
pub mod skeleton;
pub mod sim;

pub use error::{Error, Result};
pub use graph::{NodeId, Weight, WeightedGraph, INF};
