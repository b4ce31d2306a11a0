//! Generalized Steiner forest: connect every pair of terminals that share a
//! component id.
//!
//! The distributed algorithm builds a skeleton spanner on the terminals plus
//! a random sample, runs a centralized 2-approximation on the complete
//! terminal graph weighted by spanner distances, and marks the physical
//! edges of the chosen spanner paths via the reverse-path pointers.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::bfs::broadcast_all;
use crate::error::{Error, Result};
use crate::graph::{parse_fields, parse_graph, NodeId, Weight, WeightedGraph, INF};
use crate::oracle::DistanceMatrix;
use crate::sim::{mix, with_retries, RoundTrace, SimConfig};
use crate::skeleton::{build_spanner, reverse_paths, SkeletonParams, SkeletonSpanner, SpannerOptions, DEFAULT_C};

use super::sample_nodes;

/// Terminals with their component ids; a node is a terminal at most once.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GsfInstance {
    pub terminals: Vec<(NodeId, u32)>,
}

impl GsfInstance {
    pub fn new(n: usize, mut terminals: Vec<(NodeId, u32)>) -> Result<Self> {
        terminals.sort_unstable();
        if terminals.iter().any(|t| t.0 .0 == 0 || t.0.index() >= n) {
            return Err(Error::InvalidParam("terminal out of range".into()));
        }
        if terminals.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParam("node listed as terminal twice".into()));
        }
        Ok(GsfInstance { terminals })
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        self.terminals.iter().map(|t| t.0).collect()
    }

    /// Terminal lists of components with at least two terminals.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut by_id: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
        for &(t, c) in &self.terminals {
            by_id.entry(c).or_default().push(t);
        }
        by_id.into_values().filter(|ts| ts.len() > 1).collect()
    }

    pub fn to_text(&self) -> String {
        self.terminals.iter().map(|(t, c)| format!("T {t} {c}\n")).collect()
    }
}

/// Graph file with extra lines `T t_id component_id`.
pub fn parse_gsf(text: &str) -> Result<(WeightedGraph, GsfInstance)> {
    let mut graph_text = String::new();
    let mut terminals = Vec::new();
    for (no, line) in text.lines().enumerate() {
        match line.trim().strip_prefix("T ") {
            Some(rest) => {
                let [t, c] = parse_fields::<2>(no + 1, rest)?;
                terminals.push((NodeId(t as u32), c as u32));
                // a comment keeps line numbers aligned for graph errors
                graph_text.push_str("#\n");
            }
            None => {
                graph_text.push_str(line);
                graph_text.push('\n');
            }
        }
    }
    let g = parse_graph(&graph_text)?;
    let inst = GsfInstance::new(g.n(), terminals)?;
    Ok((g, inst))
}

/// Symmetric distances over a sorted node set; the terminal graph of an
/// instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminalMetric {
    pub nodes: Vec<NodeId>,
    pub comps: Vec<u32>,
    dist: Vec<Weight>,
}

impl TerminalMetric {
    pub fn new(inst: &GsfInstance, dist: impl Fn(NodeId, NodeId) -> Weight) -> Self {
        let nodes = inst.nodes();
        let comps = inst.terminals.iter().map(|t| t.1).collect();
        let m = nodes.len();
        let mut d = vec![0; m * m];
        for x in 0..m {
            for y in 0..m {
                d[x * m + y] = if x == y { 0 } else { dist(nodes[x], nodes[y]) };
            }
        }
        TerminalMetric { nodes, comps, dist: d }
    }

    pub fn get(&self, x: usize, y: usize) -> Weight {
        self.dist[x * self.nodes.len() + y]
    }

    pub fn instance(&self) -> GsfInstance {
        GsfInstance { terminals: self.nodes.iter().copied().zip(self.comps.iter().copied()).collect() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GsfSolution {
    /// Physical edges as `(min, max)` pairs, sorted.
    pub edges: Vec<(NodeId, NodeId)>,
    pub weight: Weight,
    pub feasible: bool,
    /// Edges chosen on the terminal graph with their spanner distances.
    pub metric_edges: Vec<(NodeId, NodeId, Weight)>,
    pub skeleton_size: usize,
    pub trace: RoundTrace,
}

impl GsfSolution {
    pub fn to_text(&self) -> String {
        let mut out = format!("weight {}\nfeasible {}\n", self.weight, self.feasible);
        for (a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GsfOptions {
    pub retries: u32,
    pub seed: u64,
    pub c: f64,
    /// Validate the spanner against the hop-bounded oracle.
    pub validate: bool,
}

impl Default for GsfOptions {
    fn default() -> Self {
        GsfOptions { retries: 5, seed: 1, c: DEFAULT_C, validate: true }
    }
}

pub fn gsf_solve(g: &WeightedGraph, inst: &GsfInstance, k: usize, cfg: &SimConfig, opts: GsfOptions) -> Result<GsfSolution> {
    let n = g.n();
    if k < 1 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    let mut trace = RoundTrace::default();
    let mut announce = vec![Vec::new(); n];
    for &(t, c) in &inst.terminals {
        announce[t.index()].push(vec![t.0 as u64, c as u64]);
    }
    let (_, t) = broadcast_all(g, announce, cfg)?;
    trace.then(&t);
    if inst.components().is_empty() {
        return Ok(GsfSolution {
            edges: Vec::new(),
            weight: 0,
            feasible: true,
            metric_edges: Vec::new(),
            skeleton_size: 0,
            trace,
        });
    }

    let budget = if opts.validate { opts.retries } else { 0 };
    let mut sol = with_retries(budget, &mut trace, |attempt, trace| {
        let seed = mix(opts.seed, attempt as u64);
        let sample = sample_nodes(n, (n as f64).powf(-0.5), seed);
        let sample_size = sample.len().max(1);
        let skeleton: Vec<NodeId> = sample.into_iter().chain(inst.nodes()).collect();
        let params = SkeletonParams::new(n, skeleton, sample_size, k, opts.c)?;
        let sopts = SpannerOptions { retries: opts.retries, seed, validate: opts.validate };
        let mut spanner = match build_spanner(g, &params, cfg, sopts) {
            Ok(s) => s,
            Err(Error::RetriesExhausted { reason, .. }) => return Ok(Err(reason)),
            Err(e) => return Err(e),
        };
        trace.then(&spanner.trace);
        let (pointers, t) = reverse_paths(g, &spanner, cfg)?;
        trace.then(&t);
        spanner.release_lists();

        let dist = spanner.distances();
        let metric = TerminalMetric::new(inst, |a, b| dist.get(a, b));
        let chosen = gsf_centralized(&metric);
        let mut metric_edges = Vec::with_capacity(chosen.len());
        let mut marked = BTreeSet::new();
        for (a, b) in chosen {
            let w = dist.get(a, b);
            if w == INF {
                return Ok(Err(format!("terminals {a} and {b} are disconnected in the spanner")));
            }
            metric_edges.push((a, b, w));
            let hops = spanner_path(&spanner, a, b);
            for pair in hops.windows(2) {
                let (path, _) = pointers.follow(g, pair[0], pair[1])?;
                for e in path.windows(2) {
                    marked.insert((e[0].min(e[1]), e[0].max(e[1])));
                }
            }
        }
        let edges: Vec<(NodeId, NodeId)> = marked.into_iter().collect();
        let weight = edges.iter().map(|&(a, b)| g.weight(a, b).expect("marked edges exist")).sum();
        let feasible = is_feasible(g, inst, &edges);
        if !feasible {
            return Ok(Err("marked edges do not connect every component".into()));
        }
        Ok(Ok(GsfSolution {
            edges,
            weight,
            feasible,
            metric_edges,
            skeleton_size: params.skeleton.len(),
            trace: RoundTrace::default(),
        }))
    })?;
    sol.trace = trace;
    Ok(sol)
}

/// Shortest path in the spanner from `a` to `b` as a node sequence, ties by
/// smaller predecessor.
fn spanner_path(spanner: &SkeletonSpanner, a: NodeId, b: NodeId) -> Vec<NodeId> {
    let mut adj: BTreeMap<NodeId, Vec<(NodeId, Weight)>> = BTreeMap::new();
    for e in &spanner.edges {
        adj.entry(e.s).or_default().push((e.t, e.w));
        adj.entry(e.t).or_default().push((e.s, e.w));
    }
    let mut best: BTreeMap<NodeId, (Weight, NodeId)> = BTreeMap::from([(a, (0, a))]);
    let mut heap = BinaryHeap::from([Reverse((0, a))]);
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > best[&v].0 {
            continue;
        }
        for &(u, w) in adj.get(&v).into_iter().flatten() {
            let cand = (d + w, v);
            if best.get(&u).map_or(true, |&cur| cand < cur) {
                best.insert(u, cand);
                heap.push(Reverse((cand.0, u)));
            }
        }
    }
    let mut path = vec![b];
    while *path.last().unwrap() != a {
        path.push(best[path.last().unwrap()].1);
    }
    path.reverse();
    path
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Whether the edges exist in `g` and connect every component.
pub fn is_feasible(g: &WeightedGraph, inst: &GsfInstance, edges: &[(NodeId, NodeId)]) -> bool {
    let mut parent: Vec<usize> = (0..g.n()).collect();
    for &(a, b) in edges {
        if a.0 == 0 || b.0 == 0 || a.index() >= g.n() || b.index() >= g.n() || g.weight(a, b).is_none() {
            return false;
        }
        let (x, y) = (find(&mut parent, a.index()), find(&mut parent, b.index()));
        parent[x] = y;
    }
    inst.components().iter().all(|ts| {
        let root = find(&mut parent, ts[0].index());
        ts.iter().all(|t| find(&mut parent, t.index()) == root)
    })
}

fn rational(x: Weight) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// Primal-dual moat growing on the complete terminal graph. All active moats
/// grow at the same rate; an edge enters when it becomes tight, ties going
/// to the smallest id pair. A moat is active while it separates some
/// component. The final forest is pruned to the union of paths between
/// terminals of a common component.
pub fn gsf_centralized(metric: &TerminalMetric) -> Vec<(NodeId, NodeId)> {
    let m = metric.nodes.len();
    let comps = &metric.comps;
    let mut moat: Vec<usize> = (0..m).collect();
    let mut dual = vec![rational(0); m];
    let mut forest: Vec<(usize, usize)> = Vec::new();
    let active = |moat: &[usize], id: usize| -> bool {
        (0..m).any(|x| moat[x] == id && (0..m).any(|y| comps[y] == comps[x] && moat[y] != id))
    };
    loop {
        let act: Vec<bool> = (0..m).map(|x| active(&moat, moat[x])).collect();
        if !act.iter().any(|&a| a) {
            break;
        }
        let mut best: Option<(BigRational, usize, usize)> = None;
        for x in 0..m {
            for y in x + 1..m {
                if moat[x] == moat[y] || !(act[x] || act[y]) {
                    continue;
                }
                let rate = act[x] as u64 + act[y] as u64;
                let slack = rational(metric.get(x, y)) - &dual[x] - &dual[y];
                let time = slack / rational(rate);
                if best.as_ref().map_or(true, |b| time < b.0) {
                    best = Some((time, x, y));
                }
            }
        }
        let Some((time, x, y)) = best else { break };
        for z in 0..m {
            if act[z] {
                dual[z] += &time;
            }
        }
        forest.push((x, y));
        let (from, to) = (moat[y], moat[x]);
        for id in moat.iter_mut() {
            if *id == from {
                *id = to;
            }
        }
    }
    prune(m, comps, &forest)
        .into_iter()
        .map(|(x, y)| (metric.nodes[x], metric.nodes[y]))
        .collect()
}

/// Keeps the forest edges that lie on a path between two terminals of the
/// same component.
fn prune(m: usize, comps: &[u32], forest: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut adj = vec![Vec::new(); m];
    for (e, &(x, y)) in forest.iter().enumerate() {
        adj[x].push((y, e));
        adj[y].push((x, e));
    }
    let mut keep = vec![false; forest.len()];
    for a in 0..m {
        // parent edges of a DFS from a
        let mut via = vec![None; m];
        let mut seen = vec![false; m];
        let mut stack = vec![a];
        seen[a] = true;
        while let Some(v) = stack.pop() {
            for &(u, e) in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    via[u] = Some((v, e));
                    stack.push(u);
                }
            }
        }
        for b in a + 1..m {
            if comps[b] != comps[a] || !seen[b] {
                continue;
            }
            let mut cur = b;
            while let Some((p, e)) = via[cur] {
                keep[e] = true;
                cur = p;
            }
        }
    }
    forest.iter().zip(keep).filter(|(_, k)| *k).map(|(&e, _)| e).collect()
}

pub const MAX_EXACT_TERMINALS: usize = 12;

/// Minimum Steiner forest weight over a metric on `nodes`: Dreyfus-Wagner
/// Steiner trees for every terminal subset, then the best grouping of
/// components into trees. `dist` is indexed by positions in `nodes`;
/// `terminals` are (position, component) pairs.
pub fn steiner_forest_opt(nodes: usize, dist: impl Fn(usize, usize) -> Weight, terminals: &[(usize, u32)]) -> Result<Weight> {
    let t = terminals.len();
    if t > MAX_EXACT_TERMINALS {
        return Err(Error::InvalidParam(format!("exact optimum limited to {MAX_EXACT_TERMINALS} terminals")));
    }
    let full = 1usize << t;
    let mut dp = vec![vec![INF; nodes]; full];
    for (i, &(pos, _)) in terminals.iter().enumerate() {
        for v in 0..nodes {
            dp[1 << i][v] = dist(pos, v);
        }
    }
    let add = |a: Weight, b: Weight| if a == INF || b == INF { INF } else { a + b };
    for mask in 1..full {
        if mask.count_ones() < 2 {
            continue;
        }
        let low = mask & mask.wrapping_neg();
        for v in 0..nodes {
            let mut best = INF;
            let rest = mask ^ low;
            let mut sub = rest;
            loop {
                // submasks that contain the lowest bit, excluding mask itself
                let part = sub | low;
                if part != mask {
                    best = best.min(add(dp[part][v], dp[mask ^ part][v]));
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
            dp[mask][v] = best;
        }
        let snapshot = dp[mask].clone();
        for v in 0..nodes {
            for (u, &du) in snapshot.iter().enumerate() {
                dp[mask][v] = dp[mask][v].min(add(du, dist(u, v)));
            }
        }
    }
    let tree = |mask: usize| if mask.count_ones() < 2 { 0 } else { dp[mask].iter().copied().min().unwrap_or(INF) };

    let mut by_comp: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, &(_, c)) in terminals.iter().enumerate() {
        *by_comp.entry(c).or_default() |= 1 << i;
    }
    let groups: Vec<usize> = by_comp.into_values().filter(|m| m.count_ones() > 1).collect();
    let q = groups.len();
    let mut best = vec![INF; 1 << q];
    best[0] = 0;
    for cmask in 1..1usize << q {
        let low = cmask & cmask.wrapping_neg();
        let rest = cmask ^ low;
        let mut sub = rest;
        loop {
            let part = sub | low;
            let terms = (0..q).filter(|&j| part >> j & 1 == 1).fold(0, |acc, j| acc | groups[j]);
            best[cmask] = best[cmask].min(add(tree(terms), best[cmask ^ part]));
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    Ok(best[(1 << q) - 1])
}

/// Exact optimum of the instance on `g`.
pub fn gsf_opt(inst: &GsfInstance, oracle: &DistanceMatrix) -> Result<Weight> {
    let terms: Vec<(usize, u32)> = inst.terminals.iter().map(|&(t, c)| (t.index(), c)).collect();
    steiner_forest_opt(oracle.n(), |a, b| oracle.get(NodeId::from_index(a), NodeId::from_index(b)), &terms)
}

/// Exact optimum on the terminal graph, where only terminals are available
/// as tree nodes.
pub fn terminal_opt(metric: &TerminalMetric) -> Result<Weight> {
    let terms: Vec<(usize, u32)> = metric.comps.iter().copied().enumerate().collect();
    steiner_forest_opt(metric.nodes.len(), |a, b| metric.get(a, b), &terms)
}

#[derive(Clone, Debug, Serialize)]
pub struct GsfReport {
    pub feasible: bool,
    pub weight: Weight,
    pub opt: Option<Weight>,
    /// `2 a (2k-1)`.
    pub factor: u64,
    pub ok: bool,
}

/// Checks feasibility and, given an oracle, the weight against
/// `2 a (2k-1)` times the exact optimum.
pub fn gsf_verify(
    g: &WeightedGraph,
    inst: &GsfInstance,
    edges: &[(NodeId, NodeId)],
    k: usize,
    a: u64,
    oracle: Option<&DistanceMatrix>,
) -> Result<GsfReport> {
    let feasible = is_feasible(g, inst, edges);
    let distinct: BTreeSet<(NodeId, NodeId)> = edges.iter().map(|&(x, y)| (x.min(y), x.max(y))).collect();
    let weight = if feasible { distinct.iter().map(|&(x, y)| g.weight(x, y).unwrap_or(0)).sum() } else { 0 };
    let factor = 2 * a * (2 * k as u64 - 1);
    let opt = oracle.map(|o| gsf_opt(inst, o)).transpose()?;
    let ok = feasible && opt.map_or(true, |o| weight as u128 <= factor as u128 * o as u128);
    Ok(GsfReport { feasible, weight, opt, factor, ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::path;

    fn metric(nodes: &[u32], comps: &[u32], d: &[&[Weight]]) -> TerminalMetric {
        let inst = GsfInstance {
            terminals: nodes.iter().zip(comps).map(|(&v, &c)| (NodeId(v), c)).collect(),
        };
        TerminalMetric::new(&inst, |a, b| {
            let x = nodes.iter().position(|&v| v == a.0).unwrap();
            let y = nodes.iter().position(|&v| v == b.0).unwrap();
            d[x][y]
        })
    }

    #[test]
    fn two_terminals_take_the_edge() {
        let m = metric(&[1, 2], &[0, 0], &[&[0, 5], &[5, 0]]);
        assert_eq!(gsf_centralized(&m), vec![(NodeId(1), NodeId(2))]);
    }

    #[test]
    fn triangle_takes_the_two_light_edges() {
        let m = metric(&[1, 2, 3], &[0, 0, 0], &[&[0, 1, 2], &[1, 0, 1], &[2, 1, 0]]);
        let mut f = gsf_centralized(&m);
        f.sort();
        assert_eq!(f, vec![(NodeId(1), NodeId(2)), (NodeId(2), NodeId(3))]);
    }

    #[test]
    fn cheap_cross_edges_within_twice_opt() {
        // {1,2} and {3,4}, each pair 10 apart, cross pairs 1 apart
        let m = metric(
            &[1, 2, 3, 4],
            &[0, 0, 1, 1],
            &[&[0, 10, 1, 10], &[10, 0, 10, 1], &[1, 10, 0, 10], &[10, 1, 10, 0]],
        );
        let f = gsf_centralized(&m);
        let w: Weight = f.iter().map(|&(a, b)| m.get(a.index(), b.index())).sum();
        let opt = terminal_opt(&m).unwrap();
        // both pairs joined through the cheap cross edges
        assert_eq!(opt, 12);
        assert!(w <= 2 * opt);
    }

    #[test]
    fn singletons_need_nothing() {
        let m = metric(&[1, 2], &[0, 1], &[&[0, 5], &[5, 0]]);
        assert!(gsf_centralized(&m).is_empty());
        let g = path(5);
        let inst = GsfInstance::new(5, vec![(NodeId(1), 0), (NodeId(5), 1)]).unwrap();
        let sol = gsf_solve(&g, &inst, 1, &SimConfig::for_graph(&g), GsfOptions::default()).unwrap();
        assert!(sol.edges.is_empty() && sol.feasible);
    }

    #[test]
    fn path_endpoints() {
        let g = path(5);
        let inst = GsfInstance::new(5, vec![(NodeId(1), 0), (NodeId(5), 0)]).unwrap();
        let sol = gsf_solve(&g, &inst, 1, &SimConfig::for_graph(&g), GsfOptions::default()).unwrap();
        assert_eq!(sol.weight, 4);
        assert_eq!(sol.edges.len(), 4);
        let report = gsf_verify(&g, &inst, &sol.edges, 1, 2, Some(&DistanceMatrix::new(&g))).unwrap();
        assert_eq!(report.opt, Some(4));
        assert!(report.ok && report.factor == 4);
    }

    #[test]
    fn verify_rejects_infeasible() {
        let g = path(5);
        let inst = GsfInstance::new(5, vec![(NodeId(1), 0), (NodeId(5), 0)]).unwrap();
        let report = gsf_verify(&g, &inst, &[(NodeId(1), NodeId(2))], 1, 2, None).unwrap();
        assert!(!report.feasible && !report.ok);
        let empty = GsfInstance::default();
        assert!(gsf_verify(&g, &empty, &[], 1, 2, None).unwrap().ok);
    }

    #[test]
    fn steiner_point_in_a_star() {
        // centre 1 is not a terminal; three leaves must connect through it
        let g = crate::graph::fixtures::star(3);
        let inst = GsfInstance::new(4, vec![(NodeId(2), 0), (NodeId(3), 0), (NodeId(4), 0)]).unwrap();
        assert_eq!(gsf_opt(&inst, &DistanceMatrix::new(&g)).unwrap(), 3);
        let m = TerminalMetric::new(&inst, |a, b| DistanceMatrix::new(&g).get(a, b));
        assert_eq!(terminal_opt(&m).unwrap(), 4);
    }

    #[test]
    fn instance_file_round_trip() {
        let text = "5 4\n1 2 1\n2 3 1\n3 4 1\n4 5 1\nT 1 7\nT 5 7\n";
        let (g, inst) = parse_gsf(text).unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(inst.terminals, vec![(NodeId(1), 7), (NodeId(5), 7)]);
        assert_eq!(inst.to_text(), "T 1 7\nT 5 7\n");
        assert!(parse_gsf("2 1\n1 2 1\nT 3 0\n").is_err());
    }
}
