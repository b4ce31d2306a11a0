//! Distance sketches of stretch `2k(8k-3)`.
//!
//! Stages `1..=k` come from the short-range hierarchy with
//! `|S_i| ~ n^(1-i/(2k))`. On top of `S_k` a skeleton spanner is built and
//! broadcast, after which the sets `S_{k+1} ⊇ ... ⊇ S_{2k-1}` are sampled and
//! every node simulates the remaining stages locally with the distance
//! `wd'(v, s) = wd(v, Y_v(k)) + wd^k(Y_v(k), s)`.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::bfs::broadcast_all;
use crate::error::{Error, Result};
use crate::graph::{NodeId, Weight, WeightedGraph, INF};
use crate::oracle::DistanceMatrix;
use crate::short_range::{build_short_range, log2n, BuildOptions, Hierarchy, ShortRange, DEFAULT_C, DEFAULT_C_PRIME};
use crate::sim::{mix, node_stream, with_retries, RoundTrace, SimConfig};
use crate::skeleton::{build_spanner, check_distance_preservation, SkeletonDistances, SkeletonParams, SpannerOptions};

#[derive(Clone, Copy, Debug)]
pub struct SketchOptions {
    pub retries: u32,
    pub seed: u64,
    pub c: f64,
    pub c_prime: f64,
}

impl Default for SketchOptions {
    fn default() -> Self {
        SketchOptions { retries: 5, seed: 1, c: DEFAULT_C, c_prime: DEFAULT_C_PRIME }
    }
}

/// `H_v(i)` with distances for `i = 1..=2k`; `levels[0]` is empty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NodeSketch {
    pub node: NodeId,
    pub levels: Vec<Vec<(NodeId, Weight)>>,
}

impl NodeSketch {
    pub fn lookup(&self, i: usize, u: NodeId) -> Option<Weight> {
        let level = &self.levels[i];
        level.binary_search_by_key(&u, |e| e.0).ok().map(|x| level[x].1)
    }

    pub fn entries(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

/// `(Y_v(i), d(i))` for `i = 0..2k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SketchLabel {
    pub node: NodeId,
    pub stages: Vec<(NodeId, Weight)>,
}

#[derive(Clone, Debug)]
pub struct Sketches {
    pub k: usize,
    /// Level in `0..=2k-1` of every node.
    pub levels: Vec<usize>,
    pub sketches: Vec<NodeSketch>,
    pub labels: Vec<SketchLabel>,
    /// Size bound of `H_v(i)`: `Δ_i` for `i <= k`, `c n^(1/(2k)) log n` above.
    pub level_bounds: Vec<usize>,
    pub spanner_dist: Arc<SkeletonDistances>,
    pub trace: RoundTrace,
}

impl Sketches {
    pub fn sketch(&self, v: NodeId) -> &NodeSketch {
        &self.sketches[v.index()]
    }

    pub fn label(&self, v: NodeId) -> &SketchLabel {
        &self.labels[v.index()]
    }

    pub fn estimate(&self, v: NodeId, w: NodeId) -> Weight {
        sketch_estimate(self.sketch(v), self.label(w))
    }

    /// `wd'(v, s)` for `s ∈ S_k`.
    pub fn wd_prime(&self, v: NodeId, s: NodeId) -> Weight {
        let (y, dy) = self.labels[v.index()].stages[self.k];
        match self.spanner_dist.get(y, s) {
            INF => INF,
            d => dy + d,
        }
    }

    pub fn members(&self, i: usize) -> Vec<NodeId> {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l >= i)
            .map(|(x, _)| NodeId::from_index(x))
            .collect()
    }

    pub fn stretch_bound(&self) -> u64 {
        stretch_bound(self.k)
    }

    pub fn max_entries(&self) -> usize {
        self.sketches.iter().map(NodeSketch::entries).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "k": self.k, "sketches": self.sketches, "labels": self.labels })
    }
}

pub fn stretch_bound(k: usize) -> u64 {
    let k = k as u64;
    2 * k * (8 * k - 3)
}

/// Finds the smallest `i` with `Y_w(i-1) ∈ H_v(i)` and adds the two sides.
/// `INF` only if the sketch and label do not belong to one build.
pub fn sketch_estimate(sketch: &NodeSketch, label: &SketchLabel) -> Weight {
    for i in 1..sketch.levels.len() {
        let (y, dy) = label.stages[i - 1];
        if let Some(d) = sketch.lookup(i, y) {
            return d + dy;
        }
    }
    INF
}

/// `p_i = n^(-i/(2k))` for `i = 0..=k`.
pub fn sketch_probabilities(n: usize, k: usize) -> Vec<f64> {
    (0..=k).map(|i| (n as f64).powf(-(i as f64) / (2 * k) as f64)).collect()
}

pub fn build_sketches(
    g: &WeightedGraph,
    k: usize,
    cfg: &SimConfig,
    oracle: &DistanceMatrix,
    opts: SketchOptions,
) -> Result<Sketches> {
    check_k(g.n(), k)?;
    let mut trace = RoundTrace::default();
    let built = with_retries(opts.retries, &mut trace, |attempt, trace| {
        let seed = mix(opts.seed, attempt as u64);
        let mut hier = Hierarchy::from_probabilities(g.n(), sketch_probabilities(g.n(), k), opts.c, opts.c_prime);
        hier.resample_from(1, seed);
        attempt_build(g, k, hier, cfg, oracle, SketchOptions { seed, ..opts }, trace)
    })?;
    Ok(Sketches { trace, ..built })
}

/// Single attempt on a given hierarchy with `k` stages.
pub fn build_sketches_from(
    g: &WeightedGraph,
    hier: Hierarchy,
    cfg: &SimConfig,
    oracle: &DistanceMatrix,
    opts: SketchOptions,
) -> Result<Sketches> {
    let k = hier.stages;
    check_k(g.n(), k)?;
    let mut trace = RoundTrace::default();
    let built = attempt_build(g, k, hier, cfg, oracle, opts, &mut trace)?
        .map_err(|reason| Error::RetriesExhausted { attempts: 1, reason })?;
    Ok(Sketches { trace, ..built })
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 1 || k as f64 > log2n(n).max(1.0) {
        return Err(Error::InvalidParam(format!("k = {k} outside 1..=log n")));
    }
    Ok(())
}

fn attempt_build(
    g: &WeightedGraph,
    k: usize,
    hier: Hierarchy,
    cfg: &SimConfig,
    oracle: &DistanceMatrix,
    opts: SketchOptions,
    trace: &mut RoundTrace,
) -> Result<std::result::Result<Sketches, String>> {
    let n = g.n();
    let short = match build_short_range(g, hier, cfg, oracle, BuildOptions { retries: opts.retries, seed: opts.seed }) {
        Ok(s) => s,
        Err(Error::RetriesExhausted { reason, .. }) => return Ok(Err(reason)),
        Err(e) => return Err(e),
    };
    trace.then(&short.trace);
    let top = short.hier.members(k);
    let sk = SkeletonParams::new(n, top.clone(), top.len(), k, opts.c)?;
    if let Err(reason) = check_distance_preservation(g, &sk.skeleton, sk.h, oracle) {
        return Ok(Err(reason));
    }
    let spanner = match build_spanner(g, &sk, cfg, SpannerOptions { retries: opts.retries, seed: opts.seed, validate: true }) {
        Ok(s) => s,
        Err(Error::RetriesExhausted { reason, .. }) => return Ok(Err(reason)),
        Err(e) => return Err(e),
    };
    trace.then(&spanner.trace);
    let spanner_dist = Arc::new(spanner.distances());

    // S_k nodes draw their upper levels and announce them
    let q = (n as f64).powf(-1.0 / (2 * k) as f64);
    let mut levels = short.hier.levels.clone();
    for &s in &top {
        let mut rng = node_stream(mix(opts.seed, 0x5ce7), s);
        while levels[s.index()] < 2 * k - 1 && rng.gen::<f64>() < q {
            levels[s.index()] += 1;
        }
    }
    let payloads = g
        .nodes()
        .map(|v| if levels[v.index()] >= k { vec![vec![v.0 as u64, levels[v.index()] as u64]] } else { Vec::new() })
        .collect();
    let (_, t) = broadcast_all(g, payloads, cfg)?;
    trace.then(&t);
    if !levels.iter().any(|&l| l >= 2 * k - 1) {
        return Ok(Err(format!("S_{} is empty", 2 * k - 1)));
    }

    let (sketches, labels) = local_stages(&short, k, &levels, &spanner_dist);
    let upper = (opts.c * (n as f64).powf(1.0 / (2 * k) as f64) * log2n(n)).floor() as usize;
    let level_bounds: Vec<usize> = (0..=2 * k).map(|i| if i <= k { short.hier.delta[i] } else { upper }).collect();
    for s in &sketches {
        for (i, level) in s.levels.iter().enumerate().skip(1) {
            if level.len() > level_bounds[i] {
                return Ok(Err(format!("H_{}({i}) has {} entries, bound {}", s.node, level.len(), level_bounds[i])));
            }
        }
    }
    Ok(Ok(Sketches { k, levels, sketches, labels, level_bounds, spanner_dist, trace: RoundTrace::default() }))
}

fn local_stages(
    short: &ShortRange,
    k: usize,
    levels: &[usize],
    spanner_dist: &SkeletonDistances,
) -> (Vec<NodeSketch>, Vec<SketchLabel>) {
    let n = short.nodes.len();
    let members = |i: usize| -> Vec<NodeId> {
        (0..n).filter(|&x| levels[x] >= i).map(NodeId::from_index).collect()
    };
    let sets: Vec<Vec<NodeId>> = (0..2 * k).map(members).collect();
    let mut sketches = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for x in 0..n {
        let v = NodeId::from_index(x);
        let tables = &short.nodes[x].stages;
        let mut sk_levels = vec![Vec::new()];
        let mut stages: Vec<(NodeId, Weight)> = tables.iter().map(|t| (t.y, t.dy)).collect();
        for t in &tables[1..] {
            sk_levels.push(t.h_set.iter().map(|e| (e.node, e.d)).collect());
        }
        let (anchor, d_anchor) = stages[k];
        let wd_prime = |s: NodeId| d_anchor.saturating_add(spanner_dist.get(anchor, s));
        for i in k + 1..=2 * k {
            let radius = if i < 2 * k {
                let y = *sets[i].iter().min_by_key(|&&s| (wd_prime(s), s)).expect("S_{2k-1} is not empty");
                stages.push((y, wd_prime(y)));
                wd_prime(y)
            } else {
                INF
            };
            sk_levels.push(sets[i - 1].iter().map(|&s| (s, wd_prime(s))).filter(|e| e.1 <= radius).collect());
        }
        sketches.push(NodeSketch { node: v, levels: sk_levels });
        labels.push(SketchLabel { node: v, stages });
    }
    (sketches, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, Family};
    use crate::graph::fixtures::path;

    #[test]
    fn stretch_bound_formula() {
        assert_eq!(stretch_bound(1), 10);
        assert_eq!(stretch_bound(2), 52);
    }

    #[test]
    fn forced_landmarks_on_path() {
        let g = path(8);
        let oracle = DistanceMatrix::new(&g);
        let mut levels = vec![0; 8];
        levels[3] = 1;
        let hier = Hierarchy::with_levels(8, 1, levels, DEFAULT_C, DEFAULT_C_PRIME).unwrap();
        let sk = build_sketches_from(&g, hier, &SimConfig::for_graph(&g), &oracle, SketchOptions::default()).unwrap();
        assert_eq!(sk.estimate(NodeId(1), NodeId(2)), 1);
        assert_eq!(sk.estimate(NodeId(4), NodeId(4)), 0);
        for v in g.nodes() {
            for w in g.nodes() {
                let e = sk.estimate(v, w);
                assert!(e >= oracle.get(v, w) && e <= 10 * oracle.get(v, w));
            }
        }
    }

    #[test]
    fn two_stage_sketches_on_random_graph() {
        let g = generate(&Family::RandomWeighted { n: 48, p: None, max_weight: None }, 3).unwrap();
        let oracle = DistanceMatrix::new(&g);
        let sk = build_sketches(&g, 2, &SimConfig::for_graph(&g), &oracle, SketchOptions::default()).unwrap();
        assert_eq!(sk.labels[0].stages.len(), 4);
        for v in g.nodes() {
            assert_eq!(sk.estimate(v, v), 0);
            for w in g.nodes() {
                let e = sk.estimate(v, w);
                assert!(e >= oracle.get(v, w) && e <= 52 * oracle.get(v, w), "{v} {w}");
            }
        }
    }
}
