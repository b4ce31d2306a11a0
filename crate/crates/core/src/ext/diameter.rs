//! Diameter approximation within a factor `2k+1`.
//!
//! A random skeleton `S` with `Pr[v ∈ S] = n^(-1/2)` gets a spanner of stretch
//! `2k-1`, whose diameter `WD^k` every node computes locally. A bounded-hop
//! search from all of `S` as one source gives each node its distance to `S`;
//! the output is `2 d_max + WD^k` where `d_max` is the largest of these.

use serde::Serialize;

use crate::bfs::tree_max;
use crate::bsp::{bsp, SourceAssignment};
use crate::error::{Error, Result};
use crate::graph::{NodeId, Weight, WeightedGraph, INF};
use crate::oracle::DistanceMatrix;
use crate::short_range::log2n;
use crate::sim::{mix, with_retries, RoundTrace, SimConfig};
use crate::skeleton::{build_spanner, check_distance_preservation, SkeletonParams, SpannerOptions, DEFAULT_C};

use super::sample_nodes;

#[derive(Clone, Debug)]
pub struct DiameterOptions {
    pub retries: u32,
    pub seed: u64,
    pub c: f64,
    /// Use this skeleton instead of sampling one.
    pub skeleton: Option<Vec<NodeId>>,
}

impl Default for DiameterOptions {
    fn default() -> Self {
        DiameterOptions { retries: 5, seed: 1, c: DEFAULT_C, skeleton: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiameterEstimate {
    pub estimate: Weight,
    pub d_max: Weight,
    pub spanner_diameter: Weight,
    pub skeleton: Vec<NodeId>,
    /// Hop bound of the search from the skeleton.
    pub h: usize,
    pub trace: RoundTrace,
}

/// With an oracle, every attempt checks the preconditions of the bound:
/// distance preservation on `S`, the spanner stretch and exact distances
/// to `S`.
pub fn approx_diameter(
    g: &WeightedGraph,
    k: usize,
    cfg: &SimConfig,
    oracle: Option<&DistanceMatrix>,
    opts: &DiameterOptions,
) -> Result<DiameterEstimate> {
    let n = g.n();
    if k < 1 || k as f64 > log2n(n).max(1.0) {
        return Err(Error::InvalidParam(format!("k = {k} outside 1..=log n")));
    }
    let mut trace = RoundTrace::default();
    let budget = if oracle.is_some() && opts.skeleton.is_none() { opts.retries } else { 0 };
    let mut result = with_retries(budget, &mut trace, |attempt, trace| {
        let seed = mix(opts.seed, attempt as u64);
        let mut skeleton = match &opts.skeleton {
            Some(s) => s.clone(),
            None => sample_nodes(n, (n as f64).powf(-0.5), seed),
        };
        skeleton.sort_unstable();
        skeleton.dedup();
        if skeleton.is_empty() {
            return Ok(Err("empty skeleton".into()));
        }
        let size = skeleton.len();
        let sk = SkeletonParams::new(n, skeleton, size, k, opts.c)?;
        if let Some(o) = oracle {
            if let Err(reason) = check_distance_preservation(g, &sk.skeleton, sk.h, o) {
                return Ok(Err(reason));
            }
        }
        let sopts = SpannerOptions { retries: opts.retries, seed, validate: oracle.is_some() };
        let spanner = match build_spanner(g, &sk, cfg, sopts) {
            Ok(s) => s,
            Err(Error::RetriesExhausted { reason, .. }) => return Ok(Err(reason)),
            Err(e) => return Err(e),
        };
        trace.then(&spanner.trace);
        let dist = spanner.distances();
        let mut spanner_diameter = 0;
        for &a in &sk.skeleton {
            for &b in &sk.skeleton {
                spanner_diameter = spanner_diameter.max(dist.get(a, b));
            }
        }
        if spanner_diameter == INF {
            return Ok(Err("spanner is disconnected".into()));
        }

        let h = ((opts.c * (n as f64).sqrt() * log2n(n)).ceil() as usize).max(1);
        let tokens = g.nodes().map(|v| sk.skeleton.binary_search(&v).is_ok().then_some(0)).collect();
        let (lists, t) = bsp(g, h, 1, &SourceAssignment::new(tokens), cfg)?;
        trace.then(&t);
        let mut to_skeleton = Vec::with_capacity(n);
        for v in g.nodes() {
            match lists.last(v).first() {
                Some(e) => to_skeleton.push(e.d),
                None => return Ok(Err(format!("node {v} is more than {h} hops from the skeleton"))),
            }
        }
        if let Some(o) = oracle {
            for v in g.nodes() {
                let exact = sk.skeleton.iter().map(|&s| o.get(v, s)).min().unwrap_or(INF);
                if to_skeleton[v.index()] != exact {
                    return Ok(Err(format!("node {v} is at {} from the skeleton, not {exact}", to_skeleton[v.index()])));
                }
            }
        }
        let (maxima, t) = tree_max(g, to_skeleton, cfg)?;
        trace.then(&t);
        let d_max = maxima[0];
        let estimate = 2 * d_max + spanner_diameter;
        Ok(Ok(DiameterEstimate {
            estimate,
            d_max,
            spanner_diameter,
            skeleton: sk.skeleton.clone(),
            h,
            trace: RoundTrace::default(),
        }))
    })?;
    result.trace = trace;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::lb_diameter;
    use crate::graph::fixtures::star;
    use crate::oracle::metrics;

    #[test]
    fn unit_star() {
        let g = star(6);
        let oracle = DistanceMatrix::new(&g);
        let d = approx_diameter(&g, 1, &SimConfig::for_graph(&g), Some(&oracle), &DiameterOptions::default()).unwrap();
        assert!((2..=6).contains(&d.estimate));
    }

    #[test]
    fn whole_graph_as_skeleton_is_exact() {
        let g = lb_diameter(3, 16, &[], &[]).unwrap();
        let oracle = DistanceMatrix::new(&g);
        let opts = DiameterOptions { skeleton: Some(g.nodes().collect()), ..Default::default() };
        let d = approx_diameter(&g, 1, &SimConfig::for_graph(&g), Some(&oracle), &opts).unwrap();
        assert_eq!(d.d_max, 0);
        assert_eq!(d.estimate, metrics(&g).wd);
    }

    #[test]
    fn lower_bound_family_within_three() {
        let g = lb_diameter(3, 16, &[], &[]).unwrap();
        let oracle = DistanceMatrix::new(&g);
        let wd = metrics(&g).wd;
        let d = approx_diameter(&g, 1, &SimConfig::for_graph(&g), Some(&oracle), &DiameterOptions::default()).unwrap();
        assert!(d.estimate >= wd && d.estimate <= 3 * wd);
    }
}
