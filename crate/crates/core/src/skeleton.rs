//! Spanner of the h-hop skeleton graph.
//!
//! The skeleton graph has the skeleton nodes as vertices and an edge between
//! every pair joined by a path of at most `h` hops, weighted by the lightest
//! such path. A Baswana-Sen style clustering is simulated on it: every phase
//! runs bounded Bellman-Ford with one source per cluster (the marked bit is
//! the low bit of the token), and each node of an unmarked cluster adds edges
//! to the clusters up to and including the closest marked one. Afterwards
//! the one-directional Bellman-Ford pointers of every spanner edge are
//! reversed so that both endpoints can route along it.

use std::collections::{BTreeMap, VecDeque};

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;

use crate::bfs::broadcast_all;
use crate::bsp::{bsp, LevelLists, SourceAssignment};
use crate::error::{Error, Result};
use crate::graph::{NodeId, Weight, WeightedGraph, INF};
use crate::oracle::{dijkstra_indexed, hop_layers, DistanceMatrix};
use crate::short_range::log2n;
use crate::sim::{mix, node_stream, run, with_retries, NodeCtx, Outbox, Protocol, RoundTrace, SimConfig, Wire};

pub const DEFAULT_C: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonParams {
    /// Skeleton nodes, sorted by id.
    pub skeleton: Vec<NodeId>,
    /// Size of the uniform sample contained in the skeleton; determines `h`.
    pub sample_size: usize,
    pub k: usize,
    pub h: usize,
    pub delta: usize,
}

impl SkeletonParams {
    /// `h = ceil(c n log n / sample_size)`, `delta = ceil(c |S|^(1/k) log n)`.
    pub fn new(n: usize, mut skeleton: Vec<NodeId>, sample_size: usize, k: usize, c: f64) -> Result<Self> {
        skeleton.sort_unstable();
        skeleton.dedup();
        if skeleton.is_empty() {
            return Err(Error::InvalidParam("skeleton must not be empty".into()));
        }
        if skeleton.iter().any(|v| v.0 == 0 || v.index() >= n) {
            return Err(Error::InvalidParam("skeleton node out of range".into()));
        }
        if k < 1 {
            return Err(Error::InvalidParam("k must be at least 1".into()));
        }
        let log_n = log2n(n);
        let h = (c * n as f64 * log_n / sample_size.max(1) as f64).ceil() as usize;
        let delta = (c * (skeleton.len() as f64).powf(1.0 / k as f64) * log_n).ceil() as usize;
        Ok(SkeletonParams { skeleton, sample_size, k, h: h.max(1), delta: delta.max(1) })
    }

    pub fn with_h(mut self, h: usize) -> Self {
        self.h = h;
        self
    }

    pub fn with_delta(mut self, delta: usize) -> Self {
        self.delta = delta;
        self
    }
}

/// Number of clusters marked in phase `i`: `|S|^(1 - i/k)` rounded half up,
/// at least 1.
pub fn marked_count(skeleton_size: usize, i: usize, k: usize) -> usize {
    let x = (skeleton_size as f64).powf(1.0 - i as f64 / k as f64);
    ((x + 0.5).floor() as usize).clamp(1, skeleton_size.max(1))
}

/// Cluster token: `2 * leader + marked`.
fn cluster_token(leader: NodeId, marked: bool) -> u64 {
    2 * leader.0 as u64 + marked as u64
}

fn token_leader(s: u64) -> NodeId {
    NodeId((s / 2) as u32)
}

/// An edge found by `from` in one phase, in the order it was added.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FoundEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub w: Weight,
    /// Leader of the cluster `to` belonged to.
    pub cluster: NodeId,
    pub marked: bool,
}

#[derive(Clone, Debug)]
pub struct PhaseEdges {
    /// Edges per node, in list order.
    pub found: Vec<Vec<FoundEdge>>,
    pub lists: LevelLists,
}

/// Edge detection for one phase. `clusters[i]` is the leader of node `i+1`'s
/// cluster, `marked[i]` whether node `i+1` leads a marked cluster. Every
/// found edge is broadcast to all nodes.
pub fn edges(
    g: &WeightedGraph,
    clusters: &[Option<NodeId>],
    marked: &[bool],
    h: usize,
    delta: usize,
    cfg: &SimConfig,
) -> Result<(PhaseEdges, RoundTrace)> {
    let n = g.n();
    if clusters.len() != n || marked.len() != n {
        return Err(Error::InvalidParam("one cluster entry per node required".into()));
    }
    let tokens = clusters
        .iter()
        .map(|f| f.map(|l| cluster_token(l, marked[l.index()])))
        .collect();
    let (lists, mut trace) = bsp(g, h, delta, &SourceAssignment::new(tokens), cfg)?;

    let mut found = vec![Vec::new(); n];
    for v in g.nodes() {
        let Some(own) = clusters[v.index()] else { continue };
        if marked[own.index()] {
            continue;
        }
        let own_token = cluster_token(own, false);
        for e in lists.last(v).iter().filter(|e| e.s != own_token) {
            let is_marked = e.s % 2 == 1;
            found[v.index()].push(FoundEdge { from: v, to: e.endpoint, w: e.d, cluster: token_leader(e.s), marked: is_marked });
            if is_marked {
                break;
            }
        }
    }
    let payloads = found
        .iter()
        .map(|f| f.iter().map(|e| vec![e.from.0 as u64, e.to.0 as u64, e.w]).collect())
        .collect();
    let (_, t) = broadcast_all(g, payloads, cfg)?;
    trace.then(&t);
    Ok((PhaseEdges { found, lists }, trace))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpannerEdge {
    pub s: NodeId,
    pub t: NodeId,
    pub w: Weight,
    /// Node that found the edge; the Bellman-Ford pointers lead from it.
    pub owner: NodeId,
    /// Phase (1-based) in which the edge was found.
    pub phase: usize,
}

/// One phase of the clustering: leaders of the marked clusters and the
/// cluster map at its start.
#[derive(Clone, Debug)]
pub struct PhaseRecord {
    pub marked: Vec<NodeId>,
    pub clusters: Vec<Option<NodeId>>,
}

#[derive(Clone, Debug)]
pub struct SkeletonSpanner {
    pub params: SkeletonParams,
    /// Edges with `s < t`, sorted by `(s, t)`.
    pub edges: Vec<SpannerEdge>,
    /// Phases `1..=k`; the last one has no marked clusters.
    pub phases: Vec<PhaseRecord>,
    /// Bellman-Ford lists of every phase, needed to reverse the paths.
    pub lists: Vec<LevelLists>,
    pub trace: RoundTrace,
}

impl SkeletonSpanner {
    pub fn edge(&self, a: NodeId, b: NodeId) -> Option<&SpannerEdge> {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search_by_key(&key, |e| (e.s, e.t)).ok().map(|i| &self.edges[i])
    }

    /// All-pairs distances on the spanner between skeleton nodes.
    pub fn distances(&self) -> SkeletonDistances {
        SkeletonDistances::from_edges(&self.params.skeleton, self.edges.iter().map(|e| (e.s, e.t, e.w)))
    }

    /// `[[s, t, w, owner], ...]`
    pub fn to_json(&self) -> serde_json::Value {
        self.edges
            .iter()
            .map(|e| serde_json::json!([e.s, e.t, e.w, e.owner]))
            .collect()
    }

    /// Drops the per-phase lists once the paths are reversed.
    pub fn release_lists(&mut self) {
        self.lists = Vec::new();
    }
}

/// Distance matrix over a node subset.
#[derive(Clone, Debug)]
pub struct SkeletonDistances {
    nodes: Vec<NodeId>,
    dist: Vec<Weight>,
}

impl SkeletonDistances {
    /// `nodes` must be sorted; edges between other nodes are ignored.
    pub fn from_edges(nodes: &[NodeId], edges: impl IntoIterator<Item = (NodeId, NodeId, Weight)>) -> Self {
        let m = nodes.len();
        let mut adj = vec![Vec::new(); m];
        for (a, b, w) in edges {
            if let (Ok(x), Ok(y)) = (nodes.binary_search(&a), nodes.binary_search(&b)) {
                adj[x].push((y, w));
                adj[y].push((x, w));
            }
        }
        let mut dist = Vec::with_capacity(m * m);
        for x in 0..m {
            dist.extend(dijkstra_indexed(&adj, x));
        }
        SkeletonDistances { nodes: nodes.to_vec(), dist }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn index(&self, v: NodeId) -> Option<usize> {
        self.nodes.binary_search(&v).ok()
    }

    /// `INF` if either node is not in the set or they are disconnected.
    pub fn get(&self, a: NodeId, b: NodeId) -> Weight {
        match (self.index(a), self.index(b)) {
            (Some(x), Some(y)) => self.dist[x * self.nodes.len() + y],
            _ => INF,
        }
    }
}

/// `wd_h(s, .)` for every skeleton node `s`, as rows over all nodes.
pub fn hop_bounded_rows(g: &WeightedGraph, skeleton: &[NodeId], h: usize) -> Vec<Vec<Weight>> {
    skeleton
        .iter()
        .map(|&s| hop_layers(g, &[s], h).pop().expect("h + 1 layers"))
        .collect()
}

/// Distances in the skeleton graph, i.e. shortest paths over edges of
/// weight `wd_h`.
pub fn skeleton_graph_distances(skeleton: &[NodeId], rows: &[Vec<Weight>]) -> SkeletonDistances {
    let mut edges = Vec::new();
    for (x, &a) in skeleton.iter().enumerate() {
        for &b in &skeleton[x + 1..] {
            let w = rows[x][b.index()];
            if w < INF {
                edges.push((a, b, w));
            }
        }
    }
    SkeletonDistances::from_edges(skeleton, edges)
}

/// Checks that the skeleton graph preserves all distances between skeleton
/// nodes.
pub fn check_distance_preservation(
    g: &WeightedGraph,
    skeleton: &[NodeId],
    h: usize,
    oracle: &DistanceMatrix,
) -> std::result::Result<(), String> {
    let rows = hop_bounded_rows(g, skeleton, h);
    let sd = skeleton_graph_distances(skeleton, &rows);
    for &a in skeleton {
        for &b in skeleton {
            if sd.get(a, b) != oracle.get(a, b) {
                return Err(format!(
                    "skeleton distance {a}-{b} is {} instead of {}",
                    sd.get(a, b),
                    oracle.get(a, b)
                ));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub struct SpannerOptions {
    pub retries: u32,
    pub seed: u64,
    /// Check weights, stretch and size against the hop-bounded oracle.
    pub validate: bool,
}

/// Runs the clustering phases and the final phase. With `validate`, edge
/// weights must equal `wd_h`, the stretch must be at most `2k-1` against
/// the skeleton graph and the size at most `8 k |S|^(1+1/k) log n`; a failed
/// check redraws the marks.
pub fn build_spanner(
    g: &WeightedGraph,
    params: &SkeletonParams,
    cfg: &SimConfig,
    opts: SpannerOptions,
) -> Result<SkeletonSpanner> {
    let n = g.n();
    let mut trace = RoundTrace::default();
    let skeleton = &params.skeleton;
    let announce: Vec<Vec<Vec<u64>>> = g
        .nodes()
        .map(|v| if skeleton.binary_search(&v).is_ok() { vec![vec![v.0 as u64]] } else { Vec::new() })
        .collect();
    let (_, t) = broadcast_all(g, announce, cfg)?;
    trace.then(&t);

    let oracle_rows = opts.validate.then(|| hop_bounded_rows(g, skeleton, params.h));
    let budget = if opts.validate { opts.retries } else { 0 };
    let (edges, phases, lists) = with_retries(budget, &mut trace, |attempt, trace| {
        let seed = mix(opts.seed, attempt as u64);
        let built = run_phases(g, params, cfg, seed, trace)?;
        if let Some(rows) = &oracle_rows {
            if let Err(reason) = validate(params, n, &built.0, rows) {
                return Ok(Err(reason));
            }
        }
        Ok(Ok(built))
    })?;
    Ok(SkeletonSpanner { params: params.clone(), edges, phases, lists, trace })
}

type Built = (Vec<SpannerEdge>, Vec<PhaseRecord>, Vec<LevelLists>);

fn run_phases(
    g: &WeightedGraph,
    params: &SkeletonParams,
    cfg: &SimConfig,
    seed: u64,
    trace: &mut RoundTrace,
) -> Result<Built> {
    let n = g.n();
    let k = params.k;
    let mut clusters: Vec<Option<NodeId>> = vec![None; n];
    for &v in &params.skeleton {
        clusters[v.index()] = Some(v);
    }
    let mut current: Vec<NodeId> = params.skeleton.clone();
    // the BFS root draws the marks
    let mut rng = node_stream(seed, NodeId(1));
    let mut found_edges: BTreeMap<(NodeId, NodeId), SpannerEdge> = BTreeMap::new();
    let mut phases = Vec::with_capacity(k);
    let mut all_lists = Vec::with_capacity(k);

    for i in 1..=k {
        let marked_leaders: Vec<NodeId> = if i < k {
            let size = marked_count(params.skeleton.len(), i, k).min(current.len());
            let mut picked: Vec<NodeId> = sample(&mut rng, current.len(), size).into_iter().map(|x| current[x]).collect();
            picked.sort_unstable();
            let payload = vec![picked.iter().map(|v| vec![v.0 as u64]).collect()];
            let payloads = payload.into_iter().chain(std::iter::repeat_with(Vec::new)).take(n).collect();
            let (_, t) = broadcast_all(g, payloads, cfg)?;
            trace.then(&t);
            picked
        } else {
            Vec::new()
        };
        let mut marked = vec![false; n];
        for v in &marked_leaders {
            marked[v.index()] = true;
        }
        let (phase, t) = edges(g, &clusters, &marked, params.h, params.delta, cfg)?;
        trace.then(&t);
        for list in &phase.found {
            for e in list {
                let key = (e.from.min(e.to), e.from.max(e.to));
                found_edges.entry(key).or_insert(SpannerEdge { s: key.0, t: key.1, w: e.w, owner: e.from, phase: i });
            }
        }
        phases.push(PhaseRecord { marked: marked_leaders.clone(), clusters: clusters.clone() });
        all_lists.push(phase.lists);

        if i < k {
            let next: Vec<Option<NodeId>> = g
                .nodes()
                .map(|v| {
                    let f = clusters[v.index()]?;
                    if marked[f.index()] {
                        return Some(f);
                    }
                    // the last added edge is the heaviest; join iff its cluster is marked
                    phase.found[v.index()].last().filter(|e| e.marked).map(|e| e.cluster)
                })
                .collect();
            clusters = next;
            let payloads = g
                .nodes()
                .map(|v| clusters[v.index()].map(|f| vec![v.0 as u64, f.0 as u64]).into_iter().collect())
                .collect();
            let (_, t) = broadcast_all(g, payloads, cfg)?;
            trace.then(&t);
            current = marked_leaders;
        }
    }
    Ok((found_edges.into_values().collect(), phases, all_lists))
}

fn validate(params: &SkeletonParams, n: usize, edges: &[SpannerEdge], rows: &[Vec<Weight>]) -> std::result::Result<(), String> {
    let skeleton = &params.skeleton;
    let row_of = |v: NodeId| &rows[skeleton.binary_search(&v).expect("skeleton node")];
    for e in edges {
        let exact = row_of(e.s)[e.t.index()];
        if e.w != exact {
            return Err(format!("edge {}-{} has weight {} instead of wd_h = {exact}", e.s, e.t, e.w));
        }
    }
    let k = params.k as f64;
    let size_bound = 8.0 * k * (skeleton.len() as f64).powf(1.0 + 1.0 / k) * log2n(n);
    if edges.len() as f64 > size_bound {
        return Err(format!("{} edges exceed the size bound {size_bound:.0}", edges.len()));
    }
    let sd = skeleton_graph_distances(skeleton, rows);
    let spanner = SkeletonDistances::from_edges(skeleton, edges.iter().map(|e| (e.s, e.t, e.w)));
    let stretch = 2 * params.k as u128 - 1;
    for &a in skeleton {
        for &b in skeleton {
            let (d, base) = (spanner.get(a, b), sd.get(a, b));
            if base < INF && (d == INF || d as u128 > stretch * base as u128) {
                return Err(format!("spanner distance {a}-{b} is {d}, skeleton distance {base}"));
            }
        }
    }
    Ok(())
}

/// Next hop and the remaining path weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hop {
    pub next: NodeId,
    pub rem: Weight,
}

/// Pointers stored at one node for the path of spanner edge `(s, t)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgePointers {
    pub toward_s: Option<Hop>,
    pub toward_t: Option<Hop>,
}

/// Per-node pointers keyed by `(s, t)` with `s < t`.
#[derive(Clone, Debug)]
pub struct PathPointers {
    pub nodes: Vec<BTreeMap<(NodeId, NodeId), EdgePointers>>,
}

impl PathPointers {
    pub fn get(&self, v: NodeId, s: NodeId, t: NodeId) -> Option<&EdgePointers> {
        self.nodes[v.index()].get(&(s.min(t), s.max(t)))
    }

    /// Skeleton nodes `v` can reach along a stored path, with next hop and
    /// weight.
    pub fn targets(&self, v: NodeId) -> impl Iterator<Item = (NodeId, Hop)> + '_ {
        self.nodes[v.index()].iter().flat_map(|(&(s, t), p)| {
            p.toward_s.map(|h| (s, h)).into_iter().chain(p.toward_t.map(|h| (t, h)))
        })
    }

    /// Follows the pointers of edge `(s, t)` from `from` toward `to`.
    pub fn follow(&self, g: &WeightedGraph, from: NodeId, to: NodeId) -> Result<(Vec<NodeId>, Weight)> {
        let toward_t = from < to;
        let mut cur = from;
        let mut path = vec![from];
        let mut weight = 0;
        while cur != to {
            let p = self.get(cur, from, to).ok_or(Error::NotInCell { node: cur })?;
            let hop = if toward_t { p.toward_t } else { p.toward_s }.ok_or(Error::NotInCell { node: cur })?;
            weight += g.weight(cur, hop.next).ok_or(Error::NotInCell { node: cur })?;
            cur = hop.next;
            path.push(cur);
            if path.len() > g.n() {
                return Err(Error::RoutingCycle { from, to, at: cur });
            }
        }
        Ok((path, weight))
    }

    /// `{"v": {"s-t": {"toward_s": [next, rem], "toward_t": [next, rem]}}}`
    pub fn to_json(&self) -> serde_json::Value {
        let hop = |h: Option<Hop>| h.map(|h| serde_json::json!([h.next, h.rem]));
        let mut out = serde_json::Map::new();
        for (i, m) in self.nodes.iter().enumerate() {
            let entries: serde_json::Map<String, serde_json::Value> = m
                .iter()
                .map(|(&(s, t), p)| {
                    (format!("{s}-{t}"), serde_json::json!({"toward_s": hop(p.toward_s), "toward_t": hop(p.toward_t)}))
                })
                .collect();
            out.insert(NodeId::from_index(i).to_string(), entries.into());
        }
        out.into()
    }
}

/// Announcement travelling from the owner along the Bellman-Ford pointers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Reverse {
    owner: NodeId,
    other: NodeId,
    phase: u64,
    token: u64,
    hop: u64,
    walked: Weight,
}

impl Wire for Reverse {
    fn encode(&self, out: &mut Vec<u64>) {
        out.extend_from_slice(&[self.owner.0 as u64, self.other.0 as u64, self.phase, self.token, self.hop, self.walked]);
    }

    fn decode(words: &[u64]) -> Option<Self> {
        match *words {
            [o, t, phase, token, hop, walked] => Some(Reverse {
                owner: NodeId(o as u32),
                other: NodeId(t as u32),
                phase,
                token,
                hop,
                walked,
            }),
            _ => None,
        }
    }
}

struct ReversePaths<'a> {
    spanner: &'a SkeletonSpanner,
    /// Edges per owner.
    owned: Vec<Vec<&'a SpannerEdge>>,
}

#[derive(Default)]
struct ReverseState {
    queues: Vec<VecDeque<Reverse>>,
    pointers: BTreeMap<(NodeId, NodeId), EdgePointers>,
    next_wake: Option<u64>,
}

impl ReversePaths<'_> {
    /// Records the forward pointer at `v` for `msg` and queues the message
    /// on that port, unless `v` is the far endpoint.
    fn forward(&self, ctx: &NodeCtx, st: &mut ReverseState, msg: Reverse) {
        let lists = &self.spanner.lists[msg.phase as usize - 1];
        let level = lists.h.saturating_sub(msg.hop as usize);
        let entry = lists.at(ctx.id).find(level, msg.token).copied();
        let key = (msg.owner.min(msg.other), msg.owner.max(msg.other));
        let owner_is_s = msg.owner < msg.other;
        let Some(e) = entry.filter(|e| e.next != ctx.id) else { return };
        let hop = Some(Hop { next: e.next, rem: e.d });
        let p = st.pointers.entry(key).or_default();
        if owner_is_s {
            p.toward_t = hop;
        } else {
            p.toward_s = hop;
        }
        let port = ctx.graph.port_of(ctx.id, e.next).expect("next hop is a neighbor");
        st.queues[port].push_back(Reverse { hop: msg.hop + 1, walked: msg.walked + ctx.edge_weight(port), ..msg });
    }
}

impl Protocol for ReversePaths<'_> {
    type State = ReverseState;
    type Msg = Reverse;
    type Output = BTreeMap<(NodeId, NodeId), EdgePointers>;

    fn init(&self, ctx: &NodeCtx, _rng: &mut ChaCha8Rng) -> ReverseState {
        let mut st = ReverseState { queues: vec![VecDeque::new(); ctx.degree()], ..Default::default() };
        for e in &self.owned[ctx.id.index()] {
            let other = if e.s == ctx.id { e.t } else { e.s };
            let phase = &self.spanner.phases[e.phase - 1];
            let leader = phase.clusters[other.index()].expect("endpoint was clustered");
            let marked = phase.marked.binary_search(&leader).is_ok();
            let msg = Reverse { owner: ctx.id, other, phase: e.phase as u64, token: cluster_token(leader, marked), hop: 0, walked: 0 };
            self.forward(ctx, &mut st, msg);
        }
        st.next_wake = st.queues.iter().any(|q| !q.is_empty()).then_some(0);
        st
    }

    fn step(
        &self,
        ctx: &NodeCtx,
        st: &mut ReverseState,
        round: u64,
        inbox: &[(usize, Reverse)],
        out: &mut Outbox<Reverse>,
        _rng: &mut ChaCha8Rng,
    ) {
        for &(port, msg) in inbox {
            let key = (msg.owner.min(msg.other), msg.owner.max(msg.other));
            let back = Some(Hop { next: ctx.neighbor(port), rem: msg.walked });
            let p = st.pointers.entry(key).or_default();
            if msg.owner < msg.other {
                p.toward_s = back;
            } else {
                p.toward_t = back;
            }
            self.forward(ctx, st, msg);
        }
        for (port, q) in st.queues.iter_mut().enumerate() {
            if let Some(m) = q.pop_front() {
                out.send(port, m);
            }
        }
        st.next_wake = st.queues.iter().any(|q| !q.is_empty()).then_some(round + 1);
    }

    fn wake(&self, st: &ReverseState) -> Option<u64> {
        st.next_wake
    }

    fn output(&self, _ctx: &NodeCtx, st: ReverseState) -> Self::Output {
        st.pointers
    }
}

/// Sends one announcement per spanner edge from its owner along the
/// Bellman-Ford pointers of its phase; every node on the way stores the next
/// hop and remaining weight in both directions.
pub fn reverse_paths(g: &WeightedGraph, spanner: &SkeletonSpanner, cfg: &SimConfig) -> Result<(PathPointers, RoundTrace)> {
    if spanner.lists.len() != spanner.phases.len() {
        return Err(Error::InvalidParam("spanner lists were released".into()));
    }
    let mut owned = vec![Vec::new(); g.n()];
    for e in &spanner.edges {
        owned[e.owner.index()].push(e);
    }
    let (nodes, trace) = run(g, &ReversePaths { spanner, owned }, cfg, 0)?;
    Ok((PathPointers { nodes }, trace))
}
