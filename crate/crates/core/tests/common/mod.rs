//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use congest_routing::bsp::{Entry, SourceAssignment};
use congest_routing::generate::{generate, Family};
use congest_routing::oracle::hop_layers;
use congest_routing::{NodeId, Weight, WeightedGraph, INF};

pub fn random_skeleton(n: usize, size: usize, seed: u64) -> Vec<NodeId> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, n, size).into_iter().map(NodeId::from_index).collect()
}

pub fn random_graph(n: usize, seed: u64) -> WeightedGraph {
    generate(&Family::RandomWeighted { n, p: None, max_weight: None }, seed).unwrap()
}

pub fn small_weight_graph(n: usize, seed: u64, max_weight: Weight) -> WeightedGraph {
    generate(&Family::RandomWeighted { n, p: None, max_weight: Some(max_weight) }, seed).unwrap()
}

/// Untruncated multi-source Bellman-Ford, then the `delta` smallest entries
/// per node and iteration: `result[t][v]`.
///
/// Distances come from hop-layered relaxation per source; the next hop is
/// the smallest-id neighbor realizing the distance one layer earlier, and
/// the endpoint is inherited from that neighbor.
pub fn reference_bsp(
    g: &WeightedGraph,
    src: &SourceAssignment,
    h: usize,
    delta: usize,
) -> Vec<Vec<Vec<Entry>>> {
    let n = g.n();
    let mut tokens: Vec<u64> = src.tokens().iter().flatten().copied().collect();
    tokens.sort();
    tokens.dedup();
    let mut out = vec![vec![Vec::new(); n]; h + 1];
    for &s in &tokens {
        let members: Vec<NodeId> = src.members(s).collect();
        let layers = hop_layers(g, &members, h);
        let mut next = vec![vec![None; n]; h + 1];
        let mut endpoint = vec![vec![None; n]; h + 1];
        for t in 0..=h {
            for v in g.nodes() {
                let i = v.index();
                if layers[t][i] == INF {
                    continue;
                }
                if src.token(v) == Some(s) {
                    next[t][i] = Some(v);
                    endpoint[t][i] = Some(v);
                    continue;
                }
                let u = g
                    .neighbors(v)
                    .iter()
                    .find(|nb| {
                        let du = layers[t - 1][nb.node.index()];
                        du != INF && du + nb.weight == layers[t][i]
                    })
                    .expect("a finite layer value has a realizing neighbor")
                    .node;
                next[t][i] = Some(u);
                endpoint[t][i] = endpoint[t - 1][u.index()];
            }
        }
        for t in 0..=h {
            for v in g.nodes() {
                let i = v.index();
                if let (Some(nx), Some(ep)) = (next[t][i], endpoint[t][i]) {
                    out[t][i].push(Entry { d: layers[t][i], s, next: nx, endpoint: ep });
                }
            }
        }
    }
    for level in out.iter_mut() {
        for list in level.iter_mut() {
            list.sort();
            list.truncate(delta);
        }
    }
    out
}

/// Plain Bellman-Ford limited to `h` hops from `s`, one row per source.
pub fn hop_bounded_rows(g: &WeightedGraph, skeleton: &[NodeId], h: usize) -> Vec<Vec<Weight>> {
    skeleton
        .iter()
        .map(|&s| {
            let mut dist = vec![INF; g.n()];
            dist[s.index()] = 0;
            for _ in 0..h.min(g.n()) {
                let prev = dist.clone();
                for e in g.edges() {
                    let (a, b) = (e.u.index(), e.v.index());
                    if prev[a] != INF {
                        dist[b] = dist[b].min(prev[a] + e.w);
                    }
                    if prev[b] != INF {
                        dist[a] = dist[a].min(prev[b] + e.w);
                    }
                }
            }
            dist
        })
        .collect()
}

/// Centralized cluster-based spanner on the skeleton graph given by `rows`
/// (`rows[x]` = hop-bounded distances from `skeleton[x]`), using the given
/// marked leaders per phase (empty for the last). Each node considers only
/// its `delta` closest clusters, its own included, ordered by
/// `(distance, 2 * leader + marked)`. Returns the edge set and the cluster
/// maps at the start of every phase.
pub fn reference_spanner(
    n: usize,
    skeleton: &[NodeId],
    rows: &[Vec<Weight>],
    marks: &[Vec<NodeId>],
    delta: usize,
) -> (std::collections::BTreeSet<(NodeId, NodeId)>, Vec<Vec<Option<NodeId>>>) {
    let mut cluster: Vec<Option<NodeId>> = vec![None; n];
    for &v in skeleton {
        cluster[v.index()] = Some(v);
    }
    let mut edges = std::collections::BTreeSet::new();
    let mut history = Vec::new();
    for marked in marks {
        history.push(cluster.clone());
        let is_marked = |c: NodeId| marked.contains(&c);
        let mut next = cluster.clone();
        for (x, &v) in skeleton.iter().enumerate() {
            let Some(own) = cluster[v.index()] else { continue };
            if is_marked(own) {
                continue;
            }
            // lightest edge to every cluster: (d, token, endpoint)
            let mut best: std::collections::BTreeMap<NodeId, (Weight, NodeId)> = Default::default();
            for &u in skeleton {
                let (Some(c), d) = (cluster[u.index()], rows[x][u.index()]) else { continue };
                if d == INF {
                    continue;
                }
                let slot = best.entry(c).or_insert((d, u));
                if (d, u) < *slot {
                    *slot = (d, u);
                }
            }
            let mut order: Vec<(Weight, u64, NodeId, NodeId)> = best
                .into_iter()
                .map(|(c, (d, u))| (d, 2 * c.0 as u64 + is_marked(c) as u64, c, u))
                .collect();
            order.sort();
            order.truncate(delta);
            next[v.index()] = None;
            for (_, _, c, u) in order.into_iter().filter(|o| o.2 != own) {
                edges.insert((v.min(u), v.max(u)));
                if is_marked(c) {
                    next[v.index()] = Some(c);
                    break;
                }
            }
        }
        cluster = next;
    }
    (edges, history)
}

/// Minimum feasible edge subset by exhaustive search.
pub fn brute_force_opt(g: &WeightedGraph, inst: &congest_routing::ext::gsf::GsfInstance) -> Weight {
    let edges: Vec<(NodeId, NodeId, Weight)> = g.edges().iter().map(|e| (e.u, e.v, e.w)).collect();
    assert!(edges.len() <= 18);
    let mut best = Weight::MAX;
    for mask in 0u32..1 << edges.len() {
        let chosen: Vec<(NodeId, NodeId)> =
            (0..edges.len()).filter(|i| mask >> i & 1 == 1).map(|i| (edges[i].0, edges[i].1)).collect();
        let w: Weight = (0..edges.len()).filter(|i| mask >> i & 1 == 1).map(|i| edges[i].2).sum();
        if w < best && congest_routing::ext::gsf::is_feasible(g, inst, &chosen) {
            best = w;
        }
    }
    best
}
