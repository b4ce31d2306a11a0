//! Routing tables and labels combining the short-range hierarchy with the
//! skeleton spanner on its top level.
//!
//! A label lists, per stage, the landmark of the node, the distance to it and
//! the node's interval in the landmark's tree. A node decides the next hop
//! from its own table and the destination label alone, taking the cheapest
//! of three kinds of routes: down a shared landmark tree, via a lower-stage
//! landmark of the destination it knows directly, or through the skeleton
//! spanner to the destination's top landmark.

pub mod tight;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{NodeId, Weight, WeightedGraph, INF};
use crate::oracle::DistanceMatrix;
use crate::short_range::{
    build_short_range, log2n, max_stages, tree_next_hop, BuildOptions, Hierarchy, NodeTables, ShortRange, StageLabel,
    DEFAULT_C, DEFAULT_C_PRIME,
};
use crate::sim::{mix, with_retries, RoundTrace, SimConfig};
use crate::skeleton::{
    build_spanner, check_distance_preservation, reverse_paths, Hop, PathPointers, SkeletonDistances, SkeletonParams,
    SkeletonSpanner, SpannerOptions,
};

/// Trade-off parameters derived from `alpha`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoutingParams {
    #[serde(serialize_with = "ratio_str")]
    pub alpha: Ratio<u64>,
    /// Spanner parameter.
    pub k: usize,
    /// Number of short-range stages.
    pub stages: usize,
}

fn ratio_str<S: serde::Serializer>(r: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl RoutingParams {
    /// `k = ceil(1/(2 alpha - 1))` when `alpha >= 1/2 + 1/log n`, otherwise
    /// `ceil(log n)`; stages `ceil(log(k+1))` capped at `ceil(log log n)`.
    pub fn from_alpha(n: usize, alpha: Ratio<u64>) -> Result<Self> {
        let half = Ratio::new(1, 2);
        if alpha < half || alpha > Ratio::from_integer(1) {
            return Err(Error::InvalidParam(format!("alpha = {alpha} outside [1/2, 1]")));
        }
        let log_n = log2n(n);
        let gap = alpha * 2 - 1;
        let gap_f = *gap.numer() as f64 / *gap.denom() as f64;
        let k = if gap_f >= 2.0 / log_n {
            gap.recip().ceil().to_integer() as usize
        } else {
            log_n.ceil() as usize
        };
        let stages = (((k + 1) as f64).log2().ceil() as usize).clamp(1, max_stages(n));
        Ok(RoutingParams { alpha, k, stages })
    }

    /// `8 k L - 1`.
    pub fn stretch(&self) -> u64 {
        8 * self.k as u64 * self.stages as u64 - 1
    }

    /// `4 k 4^L + 2k - 1`, the bound with labels `1..n`.
    pub fn tight_stretch(&self) -> u64 {
        let k = self.k as u64;
        4 * k * 4u64.pow(self.stages as u32) + 2 * k - 1
    }
}

/// Parses `"3/4"`, `"0.75"` or `"1"`.
pub fn parse_alpha(s: &str) -> Result<Ratio<u64>> {
    let bad = || Error::InvalidParam(format!("cannot parse alpha from {s:?}"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if b == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(a, b));
    }
    match s.split_once('.') {
        None => Ok(Ratio::from_integer(s.parse().map_err(|_| bad())?)),
        Some((int, frac)) => {
            if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let denom = 10u64.pow(frac.len() as u32);
            let frac: u64 = frac.parse().map_err(|_| bad())?;
            Ok(Ratio::new(int * denom + frac, denom))
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RoutingOptions {
    pub retries: u32,
    pub seed: u64,
    pub c: f64,
    pub c_prime: f64,
}

impl Default for RoutingOptions {
    fn default() -> Self {
        RoutingOptions { retries: 5, seed: 0, c: DEFAULT_C, c_prime: DEFAULT_C_PRIME }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Label {
    pub node: NodeId,
    /// Stages `0..=L`; stage 0 is the node itself.
    pub stages: Vec<StageLabel>,
}

impl Label {
    /// One word for the id plus four per stage.
    pub fn bits(&self, word_bits: u32) -> u64 {
        (1 + 4 * (self.stages.len() as u64 - 1)) * word_bits as u64
    }
}

/// Everything node `v` consults when deciding.
#[derive(Clone, Copy, Debug)]
pub struct RoutingTable<'a> {
    pub node: NodeId,
    pub short: &'a NodeTables,
    /// Skeleton nodes with a known route: next hop and path weight.
    pub skeleton: &'a BTreeMap<NodeId, Hop>,
    /// Distances on the spanner, known to every node.
    pub spanner: &'a SkeletonDistances,
}

impl RoutingTable<'_> {
    pub fn stages(&self) -> usize {
        self.short.stages.len() - 1
    }

    /// Table size in words times the word width.
    pub fn bits(&self, spanner_edges: usize, word_bits: u32) -> u64 {
        let stage_words: usize = self.short.stages[1..]
            .iter()
            .map(|s| 2 + 3 * s.h_set.len() + 3 + 3 * s.tree.children.len())
            .sum();
        (stage_words + 3 * self.skeleton.len() + 3 * spanner_edges) as u64 * word_bits as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Via {
    Arrived,
    /// Shared landmark tree of this stage.
    Tree(usize),
    /// Landmark of the destination at stage `i - 1`, found in `H_v(i)`.
    Landmark(usize),
    /// Skeleton node on the way to the destination's top landmark.
    Skeleton(NodeId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub next: NodeId,
    pub d: Weight,
    pub via: Via,
}

/// Next hop and distance estimate at `table.node` toward the node labelled
/// `label`. Ties go to the smaller stage index, then the smaller node id.
pub fn decide(table: &RoutingTable, label: &Label) -> Result<Decision> {
    let v = table.node;
    if label.node == v {
        return Ok(Decision { next: v, d: 0, via: Via::Arrived });
    }
    let l = table.stages();
    if label.stages.len() != l + 1 {
        return Err(Error::InvalidParam("label and table disagree on the number of stages".into()));
    }
    // (d, index, kind, node, next)
    let mut best: Option<(Weight, usize, u8, NodeId, NodeId)> = None;
    let mut offer = |c: (Weight, usize, u8, NodeId, NodeId)| {
        if best.is_none_or(|b| c < b) {
            best = Some(c);
        }
    };
    for i in 1..=l {
        let st = &table.short.stages[i];
        let ws = &label.stages[i];
        if st.y == ws.y {
            let (next, d) = tree_next_hop(v, st, ws)?;
            if next != v {
                offer((d, i, 0, ws.y, next));
            }
        }
        let target = label.stages[i - 1];
        if let Some(e) = st.lookup(target.y) {
            if e.next != v {
                offer((e.d.saturating_add(target.dy), i, 1, target.y, e.next));
            }
        }
    }
    let top = label.stages[l];
    for (&s, hop) in table.skeleton {
        if hop.next == v {
            continue;
        }
        let via = table.spanner.get(s, top.y);
        if via < INF {
            offer((hop.rem.saturating_add(via).saturating_add(top.dy), l + 1, 2, s, hop.next));
        }
    }
    let (d, i, kind, node, next) = best.ok_or(Error::MissingEntry { node: v, source_id: label.node.0 as u64 })?;
    let via = match kind {
        0 => Via::Tree(i),
        1 => Via::Landmark(i),
        _ => Via::Skeleton(node),
    };
    Ok(Decision { next, d, via })
}

/// Same as `decide(..).d`.
pub fn estimate_distance(table: &RoutingTable, label: &Label) -> Result<Weight> {
    decide(table, label).map(|x| x.d)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RouteResult {
    pub path: Vec<NodeId>,
    pub weight: Weight,
    /// Distance estimate at the origin.
    pub estimate: Weight,
}

impl RouteResult {
    pub fn stretch(&self, exact: Weight) -> f64 {
        if exact == 0 {
            1.0
        } else {
            self.weight as f64 / exact as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct Routing {
    pub params: RoutingParams,
    pub short: ShortRange,
    pub spanner: SkeletonSpanner,
    pub pointers: PathPointers,
    pub skeleton_routes: Vec<BTreeMap<NodeId, Hop>>,
    pub spanner_dist: Arc<SkeletonDistances>,
    pub labels: Vec<Label>,
    pub trace: RoundTrace,
}

impl Routing {
    pub fn table(&self, v: NodeId) -> RoutingTable<'_> {
        RoutingTable {
            node: v,
            short: &self.short.nodes[v.index()],
            skeleton: &self.skeleton_routes[v.index()],
            spanner: &self.spanner_dist,
        }
    }

    pub fn label(&self, v: NodeId) -> &Label {
        &self.labels[v.index()]
    }

    pub fn skeleton(&self) -> &[NodeId] {
        &self.spanner.params.skeleton
    }

    /// Follows `decide` from `v` until `w`, checking that every hop lowers
    /// the estimate by at least the edge weight.
    pub fn route(&self, g: &WeightedGraph, v: NodeId, w: NodeId) -> Result<RouteResult> {
        let label = self.label(w);
        let first = decide(&self.table(v), label)?;
        let mut path = vec![v];
        let mut weight: Weight = 0;
        let (mut cur, mut step) = (v, first);
        while step.next != cur {
            let edge = g.weight(cur, step.next).ok_or(Error::MissingEntry { node: cur, source_id: w.0 as u64 })?;
            let after = decide(&self.table(step.next), label)?;
            if after.d.saturating_add(edge) > step.d {
                return Err(Error::RoutingCycle { from: v, to: w, at: step.next });
            }
            weight += edge;
            cur = step.next;
            path.push(cur);
            step = after;
        }
        if cur != w {
            return Err(Error::RoutingCycle { from: v, to: w, at: cur });
        }
        Ok(RouteResult { path, weight, estimate: first.d })
    }

    pub fn estimate(&self, v: NodeId, w: NodeId) -> Result<Weight> {
        estimate_distance(&self.table(v), self.label(w))
    }

    pub fn max_table_bits(&self, word_bits: u32) -> u64 {
        (0..self.labels.len())
            .map(|x| self.table(NodeId::from_index(x)).bits(self.spanner.edges.len(), word_bits))
            .max()
            .unwrap_or(0)
    }

    /// Label dump, one object per node.
    pub fn labels_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.labels).expect("labels serialize")
    }
}

/// Samples the hierarchy for `alpha` and builds everything; see
/// [`build_from_hierarchy`].
pub fn build_tables(
    g: &WeightedGraph,
    alpha: Ratio<u64>,
    cfg: &SimConfig,
    oracle: &DistanceMatrix,
    opts: RoutingOptions,
) -> Result<Routing> {
    let params = RoutingParams::from_alpha(g.n(), alpha)?;
    build_with_params(g, params, cfg, oracle, opts)
}

pub fn build_with_params(
    g: &WeightedGraph,
    params: RoutingParams,
    cfg: &SimConfig,
    oracle: &DistanceMatrix,
    opts: RoutingOptions,
) -> Result<Routing> {
    let mut trace = RoundTrace::default();
    let built = with_retries(opts.retries, &mut trace, |attempt, trace| {
        let seed = mix(opts.seed, attempt as u64);
        let hier = Hierarchy::sample(g.n(), params.stages, opts.c, opts.c_prime, seed);
        attempt_build(g, &params, hier, cfg, oracle, RoutingOptions { seed, ..opts }, trace)
    })?;
    Ok(assemble(params, built, trace))
}

/// Builds on a given hierarchy; only the spanner marks are redrawn on
/// failure.
pub fn build_from_hierarchy(
    g: &WeightedGraph,
    params: RoutingParams,
    hier: Hierarchy,
    cfg: &SimConfig,
    oracle: &DistanceMatrix,
    opts: RoutingOptions,
) -> Result<Routing> {
    if hier.stages != params.stages {
        return Err(Error::InvalidParam("hierarchy stage count differs from parameters".into()));
    }
    let mut trace = RoundTrace::default();
    let built = attempt_build(g, &params, hier, cfg, oracle, opts, &mut trace)?
        .map_err(|reason| Error::RetriesExhausted { attempts: 1, reason })?;
    Ok(assemble(params, built, trace))
}

type Parts = (ShortRange, SkeletonSpanner, PathPointers);

fn attempt_build(
    g: &WeightedGraph,
    params: &RoutingParams,
    hier: Hierarchy,
    cfg: &SimConfig,
    oracle: &DistanceMatrix,
    opts: RoutingOptions,
    trace: &mut RoundTrace,
) -> Result<std::result::Result<Parts, String>> {
    let soft = |e: Error| match e {
        Error::RetriesExhausted { reason, .. } => Ok(Err(reason)),
        e => Err(e),
    };
    let short = match build_short_range(g, hier, cfg, oracle, BuildOptions { retries: opts.retries, seed: opts.seed }) {
        Ok(s) => s,
        Err(e) => return soft(e),
    };
    trace.then(&short.trace);
    let top = short.hier.members(params.stages);
    let sample = top.len();
    let sk = SkeletonParams::new(g.n(), top, sample, params.k, opts.c)?;
    if let Err(reason) = check_distance_preservation(g, &sk.skeleton, sk.h, oracle) {
        return Ok(Err(reason));
    }
    let sopts = SpannerOptions { retries: opts.retries, seed: opts.seed, validate: true };
    let mut spanner = match build_spanner(g, &sk, cfg, sopts) {
        Ok(s) => s,
        Err(e) => return soft(e),
    };
    trace.then(&spanner.trace);
    let (pointers, t) = reverse_paths(g, &spanner, cfg)?;
    trace.then(&t);
    spanner.release_lists();
    Ok(Ok((short, spanner, pointers)))
}

fn assemble(params: RoutingParams, (short, spanner, pointers): Parts, trace: RoundTrace) -> Routing {
    let n = short.nodes.len();
    let top = params.stages;
    let mut skeleton_routes = vec![BTreeMap::new(); n];
    for (x, routes) in skeleton_routes.iter_mut().enumerate() {
        let v = NodeId::from_index(x);
        let mut offer = |s: NodeId, hop: Hop| {
            let slot = routes.entry(s).or_insert(hop);
            if (hop.rem, hop.next) < (slot.rem, slot.next) {
                *slot = hop;
            }
        };
        for e in &short.nodes[x].stages[top].h_set {
            if short.hier.in_set(e.node, top) {
                offer(e.node, Hop { next: e.next, rem: e.d });
            }
        }
        for (s, hop) in pointers.targets(v) {
            offer(s, hop);
        }
    }
    let spanner_dist = Arc::new(spanner.distances());
    let labels = (0..n)
        .map(|x| {
            let v = NodeId::from_index(x);
            Label { node: v, stages: short.label(v) }
        })
        .collect();
    Routing { params, short, spanner, pointers, skeleton_routes, spanner_dist, labels, trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{g1, path};

    fn r(a: u64, b: u64) -> Ratio<u64> {
        Ratio::new(a, b)
    }

    #[test]
    fn parameters_from_alpha() {
        let p = RoutingParams::from_alpha(1 << 20, r(1, 1)).unwrap();
        assert_eq!((p.k, p.stages, p.stretch()), (1, 1, 7));
        let p = RoutingParams::from_alpha(1 << 20, r(3, 5)).unwrap();
        assert_eq!((p.k, p.stages, p.stretch()), (5, 3, 119));
        let p = RoutingParams::from_alpha(16, r(1, 2)).unwrap();
        assert_eq!((p.k, p.stages), (4, 2));
        let p = RoutingParams::from_alpha(64, r(3, 4)).unwrap();
        assert_eq!((p.k, p.stages, p.stretch()), (2, 2, 31));
        assert_eq!(RoutingParams::from_alpha(64, r(1, 1)).unwrap().tight_stretch(), 17);
        // 0.6 is below 1/2 + 1/log n for n = 128
        assert_eq!(RoutingParams::from_alpha(128, r(3, 5)).unwrap().k, 7);
        assert!(RoutingParams::from_alpha(64, r(2, 5)).is_err());
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!(parse_alpha("0.75").unwrap(), r(3, 4));
        assert_eq!(parse_alpha("3/4").unwrap(), r(3, 4));
        assert_eq!(parse_alpha("1").unwrap(), r(1, 1));
        assert!(parse_alpha("x").is_err());
        assert!(parse_alpha("1/0").is_err());
    }

    fn g1_routing() -> Routing {
        let g = g1();
        let params = RoutingParams { alpha: r(1, 1), k: 1, stages: 1 };
        let hier = Hierarchy::with_levels(5, 1, vec![0, 0, 1, 0, 0], DEFAULT_C, DEFAULT_C_PRIME).unwrap();
        let oracle = DistanceMatrix::new(&g);
        build_from_hierarchy(&g, params, hier, &SimConfig::for_graph(&g), &oracle, RoutingOptions::default()).unwrap()
    }

    #[test]
    fn g1_decision_uses_known_neighbor() {
        let rt = g1_routing();
        let d = decide(&rt.table(NodeId(1)), rt.label(NodeId(2))).unwrap();
        assert_eq!((d.next, d.d), (NodeId(2), 1));
        let same = decide(&rt.table(NodeId(1)), rt.label(NodeId(2))).unwrap();
        assert_eq!(d, same);
        let home = decide(&rt.table(NodeId(4)), rt.label(NodeId(4))).unwrap();
        assert_eq!((home.next, home.d, home.via), (NodeId(4), 0, Via::Arrived));
    }

    #[test]
    fn g1_routes_are_within_stretch() {
        let g = g1();
        let rt = g1_routing();
        let oracle = DistanceMatrix::new(&g);
        for v in g.nodes() {
            for w in g.nodes() {
                let res = rt.route(&g, v, w).unwrap();
                assert_eq!(*res.path.last().unwrap(), w);
                assert!(res.weight <= res.estimate);
                assert!(res.estimate >= oracle.get(v, w));
                assert!(res.weight <= 7 * oracle.get(v, w));
            }
        }
        assert!(rt.route(&g, NodeId(3), NodeId(3)).unwrap().path == vec![NodeId(3)]);
    }

    #[test]
    fn unit_path_routes_exactly() {
        let g = path(8);
        let oracle = DistanceMatrix::new(&g);
        let rt = build_tables(&g, r(1, 1), &SimConfig::for_graph(&g), &oracle, RoutingOptions::default()).unwrap();
        for v in g.nodes() {
            for w in g.nodes() {
                let res = rt.route(&g, v, w).unwrap();
                assert_eq!(res.weight, oracle.get(v, w), "{v} -> {w}");
            }
        }
        assert!(rt.max_table_bits(SimConfig::for_graph(&g).word_bits) > 0);
    }

    #[test]
    fn labels_dump_has_every_node() {
        let rt = g1_routing();
        let json = rt.labels_json();
        assert_eq!(json.as_array().unwrap().len(), 5);
        assert_eq!(rt.label(NodeId(1)).bits(4), 20);
    }
}
