//! Exact centralized reference computations: distances, hop-bounded
//! distances, balls and diameters.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, Weight, WeightedGraph, INF};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceTable {
    pub source: NodeId,
    pub dist: Vec<Weight>,
    pub pred: Vec<Option<NodeId>>,
}

impl DistanceTable {
    pub fn dist(&self, v: NodeId) -> Weight {
        self.dist[v.index()]
    }

    pub fn pred(&self, v: NodeId) -> Option<NodeId> {
        self.pred[v.index()]
    }

    /// Node sequence from the source to `v` along predecessor pointers.
    pub fn path_to(&self, v: NodeId) -> Vec<NodeId> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.pred(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

pub fn dijkstra(g: &WeightedGraph, s: NodeId) -> DistanceTable {
    let n = g.n();
    let mut dist = vec![INF; n];
    let mut pred = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[s.index()] = 0;
    heap.push(Reverse((0, s)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v.index()] {
            continue;
        }
        for nb in g.neighbors(v) {
            let nd = d + nb.weight;
            let u = nb.node.index();
            if nd < dist[u] {
                dist[u] = nd;
                pred[u] = Some(v);
                heap.push(Reverse((nd, nb.node)));
            }
        }
    }
    DistanceTable { source: s, dist, pred }
}

/// Single-source distances on an index-based adjacency list.
pub fn dijkstra_indexed(adj: &[Vec<(usize, Weight)>], s: usize) -> Vec<Weight> {
    let mut dist = vec![INF; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[s] = 0;
    heap.push(Reverse((0, s)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(u, w) in &adj[v] {
            let nd = d + w;
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(Reverse((nd, u)));
            }
        }
    }
    dist
}

/// All-pairs exact distances, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<Weight>,
}

impl DistanceMatrix {
    pub fn new(g: &WeightedGraph) -> Self {
        let n = g.n();
        let mut d = Vec::with_capacity(n * n);
        for s in g.nodes() {
            d.extend_from_slice(&dijkstra(g, s).dist);
        }
        DistanceMatrix { n, d }
    }

    #[inline]
    pub fn get(&self, u: NodeId, v: NodeId) -> Weight {
        self.d[u.index() * self.n + v.index()]
    }

    pub fn row(&self, u: NodeId) -> &[Weight] {
        &self.d[u.index() * self.n..(u.index() + 1) * self.n]
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HopBoundedTable {
    pub source: NodeId,
    pub h: usize,
    pub dist: Vec<Weight>,
}

impl HopBoundedTable {
    pub fn dist(&self, v: NodeId) -> Weight {
        self.dist[v.index()]
    }
}

/// Lightest-path weights using at most `h` edges (Bellman-Ford layers).
pub fn hop_bounded_dist(g: &WeightedGraph, s: NodeId, h: usize) -> HopBoundedTable {
    let layers = hop_layers(g, &[s], h.min(g.n().saturating_sub(1)));
    HopBoundedTable { source: s, h, dist: layers.into_iter().last().unwrap() }
}

/// `result[t][v]` = min over sources s of wd_t(s, v), for t = 0..=h.
pub fn hop_layers(g: &WeightedGraph, sources: &[NodeId], h: usize) -> Vec<Vec<Weight>> {
    let n = g.n();
    let mut cur = vec![INF; n];
    for s in sources {
        cur[s.index()] = 0;
    }
    let mut out = Vec::with_capacity(h + 1);
    out.push(cur.clone());
    for _ in 0..h {
        let mut next = cur.clone();
        for e in g.edges() {
            let (a, b) = (e.u.index(), e.v.index());
            if cur[a] != INF && cur[a] + e.w < next[b] {
                next[b] = cur[a] + e.w;
            }
            if cur[b] != INF && cur[b] + e.w < next[a] {
                next[a] = cur[b] + e.w;
            }
        }
        let stable = next == cur;
        cur = next;
        out.push(cur.clone());
        if stable {
            // remaining layers are identical
            while out.len() < h + 1 {
                out.push(cur.clone());
            }
            break;
        }
    }
    out
}

/// Hop distances from `s`.
pub fn bfs_hops(g: &WeightedGraph, s: NodeId) -> Vec<usize> {
    let mut hops = vec![usize::MAX; g.n()];
    hops[s.index()] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        for nb in g.neighbors(v) {
            if hops[nb.node.index()] == usize::MAX {
                hops[nb.node.index()] = hops[v.index()] + 1;
                queue.push_back(nb.node);
            }
        }
    }
    hops
}

/// The `i` nodes closest to `v`, ordered by (distance, id).
pub fn ball(g: &WeightedGraph, v: NodeId, i: usize) -> Result<Vec<NodeId>> {
    if i < 1 || i > g.n() {
        return Err(Error::InvalidParam(format!("ball size {i} outside 1..={}", g.n())));
    }
    let dt = dijkstra(g, v);
    Ok(ball_from_distances(&dt.dist, i))
}

pub fn ball_from_distances(dist: &[Weight], i: usize) -> Vec<NodeId> {
    let mut order: Vec<NodeId> = (0..dist.len()).map(NodeId::from_index).collect();
    order.sort_by_key(|u| (dist[u.index()], *u));
    order.truncate(i);
    order
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphMetrics {
    /// Hop diameter.
    pub hd: usize,
    /// Weighted diameter.
    pub wd: Weight,
    /// Shortest-paths diameter.
    pub spd: usize,
}

/// Lexicographic (weight, hops) Dijkstra: minimum hop count among
/// minimum-weight paths.
fn weight_hops(g: &WeightedGraph, s: NodeId) -> Vec<(Weight, usize)> {
    let mut best = vec![(INF, usize::MAX); g.n()];
    best[s.index()] = (0, 0);
    let mut heap = BinaryHeap::from([Reverse((0, 0usize, s))]);
    while let Some(Reverse((d, h, v))) = heap.pop() {
        if (d, h) > best[v.index()] {
            continue;
        }
        for nb in g.neighbors(v) {
            let cand = (d + nb.weight, h + 1);
            if cand < best[nb.node.index()] {
                best[nb.node.index()] = cand;
                heap.push(Reverse((cand.0, cand.1, nb.node)));
            }
        }
    }
    best
}

pub fn metrics(g: &WeightedGraph) -> GraphMetrics {
    let mut m = GraphMetrics { hd: 0, wd: 0, spd: 0 };
    for s in g.nodes() {
        m.hd = m.hd.max(*bfs_hops(g, s).iter().max().unwrap());
        for (d, h) in weight_hops(g, s) {
            m.wd = m.wd.max(d);
            m.spd = m.spd.max(h);
        }
    }
    m
}
