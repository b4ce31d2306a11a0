//! Labels `1..n` built from the landmark hierarchy.
//!
//! Every node `s` of stage `i` owns a block of `count_s(i)` consecutive
//! labels: the nodes whose chain of landmarks passes through `s` at stage
//! `i`. Inside the block, the stage-`(i-1)` blocks of the cell members follow
//! the pre-order of the landmark tree, so every subtree covers a contiguous
//! range. Routing climbs the landmark chain of the source until the
//! destination's landmark at that stage is in its `H` set (or the top is
//! reached and the skeleton takes over), then descends the destination's
//! landmark trees by label ranges.

use std::collections::{BTreeMap, VecDeque};

use rand_chacha::ChaCha8Rng;

use super::{RouteResult, Routing};
use crate::bfs::broadcast_all;
use crate::error::{Error, Result};
use crate::forest::{assign_blocks, assign_blocks_from};
use crate::graph::{NodeId, Weight, WeightedGraph, INF};
use crate::sim::{run, NodeCtx, Outbox, Protocol, RoundTrace, SimConfig};

/// Inclusive label range.
pub type Range = (u64, u64);

#[derive(Clone, Debug)]
pub struct TightLabeling {
    pub labels: Vec<u64>,
    /// `counts[i][v] = count_v(i)`, zero outside stage `i`.
    pub counts: Vec<Vec<u64>>,
    /// `children[i][v]`: label range below each child of `v` in its stage-`i`
    /// tree (`i >= 1`), children with an empty range omitted.
    pub children: Vec<Vec<Vec<(NodeId, Range)>>>,
    /// `known[i][v]`: stage-`(i-1)` block of every node in `H_v(i)`.
    pub known: Vec<Vec<BTreeMap<NodeId, Range>>>,
    /// Stage-`L` blocks of the skeleton nodes, known to all.
    pub top_blocks: Vec<(NodeId, Range)>,
    pub trace: RoundTrace,
}

impl TightLabeling {
    pub fn label(&self, v: NodeId) -> u64 {
        self.labels[v.index()]
    }

    /// Stage-`i` block of `v`, if `v` is in stage `i`.
    pub fn block(&self, v: NodeId, i: usize) -> Option<Range> {
        let c = self.counts[i][v.index()];
        (c > 0).then(|| (self.labels[v.index()], self.labels[v.index()] + c - 1))
    }

    pub fn is_permutation(&self) -> bool {
        let mut sorted = self.labels.clone();
        sorted.sort_unstable();
        sorted.iter().enumerate().all(|(x, &l)| l == x as u64 + 1)
    }
}

/// Counts bottom-up per stage, announces the skeleton counts, then assigns
/// blocks top-down and spreads the blocks of `H` members.
pub fn assign_tight_labels(g: &WeightedGraph, routing: &Routing, cfg: &SimConfig) -> Result<TightLabeling> {
    let n = g.n();
    let l = routing.params.stages;
    let short = &routing.short;
    let mut trace = RoundTrace::default();
    let parents: Vec<Vec<Option<NodeId>>> = (0..=l)
        .map(|i| {
            if i == 0 {
                vec![None; n]
            } else {
                short.nodes.iter().map(|t| t.stages[i].tree.parent).collect()
            }
        })
        .collect();

    let mut counts = vec![vec![1u64; n]];
    for i in 1..=l {
        let (blocks, t) = assign_blocks(g, &parents[i], &counts[i - 1], cfg)?;
        trace.then(&t);
        let c = (0..n).map(|x| if parents[i][x].is_none() { blocks[x].subtree } else { 0 }).collect();
        counts.push(c);
    }

    let skeleton: Vec<NodeId> = (0..n).filter(|&x| counts[l][x] > 0).map(NodeId::from_index).collect();
    let announce = (0..n)
        .map(|x| if counts[l][x] > 0 { vec![vec![x as u64 + 1, counts[l][x]]] } else { Vec::new() })
        .collect();
    let (_, t) = broadcast_all(g, announce, cfg)?;
    trace.then(&t);

    // 0-based first label of every node's block at the current stage
    let mut start = vec![0u64; n];
    let mut top_blocks = Vec::with_capacity(skeleton.len());
    let mut acc = 0;
    for &s in &skeleton {
        start[s.index()] = acc;
        top_blocks.push((s, (acc + 1, acc + counts[l][s.index()])));
        acc += counts[l][s.index()];
    }
    let mut children = vec![vec![Vec::new(); n]; l + 1];
    for i in (1..=l).rev() {
        let (blocks, t) = assign_blocks_from(g, &parents[i], &counts[i - 1], &start, cfg)?;
        trace.then(&t);
        for (x, b) in blocks.into_iter().enumerate() {
            start[x] = b.start;
            children[i][x] = b
                .children
                .into_iter()
                .filter(|c| c.2 > 0)
                .map(|(c, s, size)| (c, (s + 1, s + size)))
                .collect();
        }
    }
    let labels: Vec<u64> = start.iter().map(|s| s + 1).collect();

    let mut known = vec![Vec::new(); l + 1];
    for i in 1..=l {
        let own: Vec<Option<Range>> = (0..n)
            .map(|x| (counts[i - 1][x] > 0).then(|| (labels[x], labels[x] + counts[i - 1][x] - 1)))
            .collect();
        let wanted: Vec<Vec<NodeId>> = short.nodes.iter().map(|t| t.stages[i].h_set.iter().map(|e| e.node).collect()).collect();
        let (got, t) = run(g, &SpreadRanges { own: &own, wanted: &wanted }, cfg, 0)?;
        trace.then(&t);
        for (x, m) in got.iter().enumerate() {
            if m.len() != wanted[x].len() {
                return Err(Error::MissingEntry { node: NodeId::from_index(x), source_id: i as u64 });
            }
        }
        known[i] = got;
    }
    Ok(TightLabeling { labels, counts, children, known, top_blocks, trace })
}

/// Every node with a block announces it; nodes forward blocks of their `H`
/// members, one per round.
struct SpreadRanges<'a> {
    own: &'a [Option<Range>],
    /// Sorted by id.
    wanted: &'a [Vec<NodeId>],
}

#[derive(Default)]
struct SpreadState {
    known: BTreeMap<NodeId, Range>,
    queue: VecDeque<[u64; 3]>,
    next_wake: Option<u64>,
}

impl Protocol for SpreadRanges<'_> {
    type State = SpreadState;
    type Msg = Vec<u64>;
    type Output = BTreeMap<NodeId, Range>;

    fn init(&self, ctx: &NodeCtx, _rng: &mut ChaCha8Rng) -> SpreadState {
        let mut st = SpreadState::default();
        let x = ctx.id.index();
        if let Some(r) = self.own[x] {
            if self.wanted[x].binary_search(&ctx.id).is_ok() {
                st.known.insert(ctx.id, r);
            }
            st.queue.push_back([ctx.id.0 as u64, r.0, r.1]);
            st.next_wake = Some(0);
        }
        st
    }

    fn step(
        &self,
        ctx: &NodeCtx,
        st: &mut SpreadState,
        round: u64,
        inbox: &[(usize, Vec<u64>)],
        out: &mut Outbox<Vec<u64>>,
        _rng: &mut ChaCha8Rng,
    ) {
        let wanted = &self.wanted[ctx.id.index()];
        for (_, m) in inbox {
            let u = NodeId(m[0] as u32);
            if wanted.binary_search(&u).is_ok() && !st.known.contains_key(&u) {
                st.known.insert(u, (m[1], m[2]));
                st.queue.push_back([m[0], m[1], m[2]]);
            }
        }
        if let Some(m) = st.queue.pop_front() {
            out.send_all(ctx.degree(), &m.to_vec());
        }
        st.next_wake = (!st.queue.is_empty()).then_some(round + 1);
    }

    fn wake(&self, st: &SpreadState) -> Option<u64> {
        st.next_wake
    }

    fn output(&self, _ctx: &NodeCtx, st: SpreadState) -> BTreeMap<NodeId, Range> {
        st.known
    }
}

fn find_range(ranges: impl IntoIterator<Item = (NodeId, Range)>, label: u64) -> Option<NodeId> {
    ranges.into_iter().find(|(_, (lo, hi))| *lo <= label && label <= *hi).map(|x| x.0)
}

struct Walker<'a> {
    g: &'a WeightedGraph,
    path: Vec<NodeId>,
    weight: Weight,
    cap: usize,
}

impl Walker<'_> {
    fn cur(&self) -> NodeId {
        *self.path.last().expect("path starts at the origin")
    }

    fn step(&mut self, next: NodeId) -> Result<()> {
        let cur = self.cur();
        let w = self.g.weight(cur, next).ok_or(Error::NotInCell { node: cur })?;
        self.weight += w;
        self.path.push(next);
        if self.path.len() > self.cap {
            return Err(Error::RoutingCycle { from: self.path[0], to: next, at: next });
        }
        Ok(())
    }
}

/// Routes from `v` to the node labelled `target`. The header carries the
/// current stage; each hop uses only the tables of the node it is at.
pub fn tight_route(
    g: &WeightedGraph,
    routing: &Routing,
    tl: &TightLabeling,
    v: NodeId,
    target: u64,
) -> Result<RouteResult> {
    let l = routing.params.stages;
    let short = &routing.short;
    let mut walk = Walker { g, path: vec![v], weight: 0, cap: 4 * g.n() * (l + 2) };
    let to_landmark = |walk: &mut Walker, u: NodeId, i: usize| -> Result<()> {
        while walk.cur() != u {
            let cur = walk.cur();
            let e = short.table(cur, i).lookup(u).ok_or(Error::MissingEntry { node: cur, source_id: u.0 as u64 })?;
            walk.step(e.next)?;
        }
        Ok(())
    };

    let mut i = 0;
    loop {
        let cur = walk.cur();
        if i == l {
            let goal = find_range(tl.top_blocks.iter().copied(), target).ok_or(Error::NotInCell { node: cur })?;
            while walk.cur() != goal {
                let x = walk.cur();
                let table = routing.table(x);
                let next = table
                    .skeleton
                    .iter()
                    .filter(|(_, h)| h.next != x)
                    .map(|(&s, h)| (h.rem.saturating_add(table.spanner.get(s, goal)), s, h.next))
                    .filter(|c| c.0 < INF)
                    .min()
                    .ok_or(Error::MissingEntry { node: x, source_id: goal.0 as u64 })?
                    .2;
                walk.step(next)?;
            }
            break;
        }
        if let Some(u) = find_range(tl.known[i + 1][cur.index()].iter().map(|(&u, &r)| (u, r)), target) {
            to_landmark(&mut walk, u, i + 1)?;
            break;
        }
        let y = short.table(cur, i + 1).y;
        to_landmark(&mut walk, y, i + 1)?;
        i += 1;
    }

    while i > 0 {
        loop {
            let x = walk.cur();
            if tl.block(x, i - 1).is_some_and(|(lo, hi)| lo <= target && target <= hi) {
                break;
            }
            let child = find_range(tl.children[i][x.index()].iter().copied(), target).ok_or(Error::NotInCell { node: x })?;
            walk.step(child)?;
        }
        i -= 1;
    }
    let end = walk.cur();
    if tl.label(end) != target {
        return Err(Error::NotInCell { node: end });
    }
    Ok(RouteResult { weight: walk.weight, estimate: walk.weight, path: walk.path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::path;
    use crate::oracle::DistanceMatrix;
    use crate::routing::{build_from_hierarchy, RoutingOptions, RoutingParams};
    use crate::short_range::{Hierarchy, DEFAULT_C, DEFAULT_C_PRIME};
    use num_rational::Ratio;

    fn params_bound() -> u64 {
        RoutingParams { alpha: Ratio::from_integer(1), k: 1, stages: 1 }.tight_stretch()
    }

    #[test]
    fn path_of_four_is_numbered_in_dfs_order() {
        let g = path(4);
        let cfg = SimConfig::for_graph(&g);
        let params = RoutingParams { alpha: Ratio::from_integer(1), k: 1, stages: 1 };
        let hier = Hierarchy::with_levels(4, 1, vec![1, 0, 0, 0], DEFAULT_C, DEFAULT_C_PRIME).unwrap();
        let oracle = DistanceMatrix::new(&g);
        let rt = build_from_hierarchy(&g, params, hier, &cfg, &oracle, RoutingOptions::default()).unwrap();
        let tl = assign_tight_labels(&g, &rt, &cfg).unwrap();
        assert_eq!(tl.counts[1][0], 4);
        assert_eq!(tl.labels, vec![1, 2, 3, 4]);
        assert_eq!(tl.children[1][1], vec![(NodeId(3), (3, 4))]);
        for v in g.nodes() {
            for w in g.nodes() {
                let res = tight_route(&g, &rt, &tl, v, tl.label(w)).unwrap();
                assert_eq!(*res.path.last().unwrap(), w);
                assert!(res.weight <= params_bound() * oracle.get(v, w));
            }
        }
    }

    #[test]
    fn single_node_gets_label_one() {
        let g = WeightedGraph::new(1, []).unwrap();
        let cfg = SimConfig::for_graph(&g);
        let params = RoutingParams { alpha: Ratio::from_integer(1), k: 1, stages: 1 };
        let hier = Hierarchy::with_levels(1, 1, vec![1], DEFAULT_C, DEFAULT_C_PRIME).unwrap();
        let oracle = DistanceMatrix::new(&g);
        let rt = build_from_hierarchy(&g, params, hier, &cfg, &oracle, RoutingOptions::default()).unwrap();
        let tl = assign_tight_labels(&g, &rt, &cfg).unwrap();
        assert_eq!(tl.labels, vec![1]);
        assert!(tl.is_permutation());
    }
}
