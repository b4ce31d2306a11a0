//! Weighted undirected graphs and the plain-text edge-list format.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Weight = u64;

/// Distance value used for "unreachable".
pub const INF: Weight = Weight::MAX;

/// Node identifier in `1..=n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        NodeId(i as u32 + 1)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub w: Weight,
}

/// One adjacency entry. `back_port` is the position of the reverse entry in
/// the neighbor's adjacency list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Neighbor {
    pub node: NodeId,
    pub weight: Weight,
    pub back_port: usize,
}

/// Simple connected undirected graph with positive integer weights.
/// Adjacency lists are sorted by neighbor id, edges are stored with `u < v`
/// in sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<Neighbor>>,
}

/// Default weight cap: n^3.
pub fn default_weight_bound(n: usize) -> Weight {
    let n = n.max(2) as u128;
    (n * n * n).min(Weight::MAX as u128 / 4) as Weight
}

impl WeightedGraph {
    /// Builds and validates a graph with the default weight cap of n^3.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (u32, u32, Weight)>) -> Result<Self> {
        Self::with_weight_bound(n, edges, default_weight_bound(n))
    }

    pub fn with_weight_bound(
        n: usize,
        edges: impl IntoIterator<Item = (u32, u32, Weight)>,
        max_weight: Weight,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        if n > u32::MAX as usize / 8 {
            return Err(Error::InvalidGraph(format!("too many nodes: {n}")));
        }
        let mut list = Vec::new();
        for (a, b, w) in edges {
            if a == 0 || b == 0 || a as usize > n || b as usize > n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a},{b}) has an endpoint outside 1..={n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            if w < 1 {
                return Err(Error::InvalidGraph(format!("edge ({a},{b}) has weight {w} < 1")));
            }
            if w > max_weight {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a},{b}) has weight {w} above the cap {max_weight}"
                )));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            list.push(Edge { u: NodeId(u), v: NodeId(v), w });
        }
        list.sort();
        for pair in list.windows(2) {
            if pair[0].u == pair[1].u && pair[0].v == pair[1].v {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({},{})",
                    pair[0].u, pair[0].v
                )));
            }
        }
        let mut adj: Vec<Vec<Neighbor>> = vec![Vec::new(); n];
        for e in &list {
            adj[e.u.index()].push(Neighbor { node: e.v, weight: e.w, back_port: 0 });
            adj[e.v.index()].push(Neighbor { node: e.u, weight: e.w, back_port: 0 });
        }
        for a in adj.iter_mut() {
            a.sort_by_key(|nb| nb.node);
        }
        for i in 0..n {
            for p in 0..adj[i].len() {
                let other = adj[i][p].node.index();
                let me = NodeId::from_index(i);
                let back = adj[other]
                    .binary_search_by_key(&me, |nb| nb.node)
                    .expect("adjacency is symmetric");
                adj[i][p].back_port = back;
            }
        }
        let g = WeightedGraph { n, edges: list, adj };
        if !g.is_connected() {
            return Err(Error::InvalidGraph("graph is disconnected".into()));
        }
        Ok(g)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for nb in &self.adj[x] {
                let y = nb.node.index();
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == self.n
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + Clone {
        (1..=self.n as u32).map(NodeId)
    }

    pub fn neighbors(&self, v: NodeId) -> &[Neighbor] {
        &self.adj[v.index()]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v.index()].len()
    }

    /// Port (adjacency index) of `u` at `v`.
    pub fn port_of(&self, v: NodeId, u: NodeId) -> Option<usize> {
        self.adj[v.index()].binary_search_by_key(&u, |nb| nb.node).ok()
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<Weight> {
        self.port_of(u, v).map(|p| self.adj[u.index()][p].weight)
    }

    pub fn max_weight(&self) -> Weight {
        self.edges.iter().map(|e| e.w).max().unwrap_or(1)
    }

    /// Upper bound on any shortest-path distance: (n-1) * max weight.
    pub fn distance_bound(&self) -> Weight {
        (self.n as Weight - 1).max(1).saturating_mul(self.max_weight())
    }

    /// Canonical edge-list text.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", e.u, e.v, e.w));
        }
        out
    }
}

/// Non-comment, non-blank lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn parse_fields<const N: usize>(line_no: usize, line: &str) -> Result<[u64; N]> {
    let mut out = [0u64; N];
    let mut parts = line.split_whitespace();
    for slot in out.iter_mut() {
        let tok = parts.next().ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("expected {N} integers"),
        })?;
        *slot = tok.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("not a non-negative integer: {tok:?}"),
        })?;
    }
    if parts.next().is_some() {
        return Err(Error::Parse { line: line_no, msg: format!("expected {N} integers") });
    }
    Ok(out)
}

pub(crate) fn parse_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<(usize, usize)> {
    let (no, line) = lines
        .next()
        .ok_or(Error::Parse { line: 1, msg: "missing \"n m\" header".into() })?;
    let [n, m] = parse_fields::<2>(no, line)?;
    Ok((n as usize, m as usize))
}

pub(crate) fn parse_edge(no: usize, line: &str) -> Result<(u32, u32, Weight)> {
    let [u, v, w] = parse_fields::<3>(no, line)?;
    if u > u32::MAX as u64 || v > u32::MAX as u64 {
        return Err(Error::Parse { line: no, msg: "node id out of range".into() });
    }
    Ok((u as u32, v as u32, w))
}

/// Parses the edge-list format: header `n m`, then `m` lines `u v w`.
pub fn parse_graph(text: &str) -> Result<WeightedGraph> {
    let mut lines = content_lines(text);
    let (n, m) = parse_header(&mut lines)?;
    let mut edges = Vec::with_capacity(m);
    let mut last = 1;
    for (no, line) in lines {
        last = no;
        edges.push(parse_edge(no, line)?);
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: last,
            msg: format!("header announces {m} edges, found {}", edges.len()),
        });
    }
    WeightedGraph::new(n, edges)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<WeightedGraph> {
    parse_graph(&std::fs::read_to_string(path)?)
}

pub fn save_graph(g: &WeightedGraph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, g.to_edge_list())?;
    Ok(())
}
