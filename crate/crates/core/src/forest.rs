//! Subtree sums and pre-order block assignment on a rooted forest given by
//! per-node parent pointers.
//!
//! Every node `v` carries a weight `w_v`. The protocol computes subtree
//! weights bottom-up and then assigns each node a block of `w_v` consecutive
//! numbers in DFS pre-order (children by increasing id), top-down, with each
//! root starting at 0. With unit weights the block of `v` is its DFS number
//! and `[start, start + subtree - 1]` is the interval of its subtree.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{NodeId, WeightedGraph};
use crate::sim::{run, NodeCtx, Outbox, Protocol, RoundTrace, SimConfig, Wire};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ForestMsg {
    Child,
    Size(u64),
    Start(u64),
}

impl Wire for ForestMsg {
    fn encode(&self, out: &mut Vec<u64>) {
        match *self {
            ForestMsg::Child => out.push(0),
            ForestMsg::Size(x) => out.extend_from_slice(&[1, x]),
            ForestMsg::Start(x) => out.extend_from_slice(&[2, x]),
        }
    }

    fn decode(words: &[u64]) -> Option<Self> {
        match *words {
            [0] => Some(ForestMsg::Child),
            [1, x] => Some(ForestMsg::Size(x)),
            [2, x] => Some(ForestMsg::Start(x)),
            _ => None,
        }
    }
}

/// Result at one node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    /// First number of this node's own block.
    pub start: u64,
    /// Total weight of the subtree rooted here.
    pub subtree: u64,
    /// Children in id order with their first number and subtree weight.
    pub children: Vec<(NodeId, u64, u64)>,
}

struct Forest<'a> {
    parent_port: &'a [Option<usize>],
    weight: &'a [u64],
    root_start: &'a [u64],
}

#[derive(Default)]
struct ForestState {
    children: Vec<usize>,
    sizes: Vec<(usize, u64)>,
    reported: bool,
    total: u64,
    start: Option<u64>,
    distributed: bool,
    next_wake: Option<u64>,
}

impl Protocol for Forest<'_> {
    type State = ForestState;
    type Msg = ForestMsg;
    type Output = Block;

    fn init(&self, _ctx: &NodeCtx, _rng: &mut ChaCha8Rng) -> ForestState {
        ForestState { next_wake: Some(0), ..Default::default() }
    }

    fn step(
        &self,
        ctx: &NodeCtx,
        st: &mut ForestState,
        round: u64,
        inbox: &[(usize, ForestMsg)],
        out: &mut Outbox<ForestMsg>,
        _rng: &mut ChaCha8Rng,
    ) {
        let i = ctx.id.index();
        let parent = self.parent_port[i];
        if round == 0 {
            if let Some(p) = parent {
                out.send(p, ForestMsg::Child);
            }
            st.next_wake = Some(1);
            return;
        }
        for &(port, msg) in inbox {
            match msg {
                ForestMsg::Child => st.children.push(port),
                ForestMsg::Size(x) => st.sizes.push((port, x)),
                ForestMsg::Start(x) => st.start = Some(x),
            }
        }
        if !st.reported && st.sizes.len() == st.children.len() {
            st.reported = true;
            st.total = self.weight[i] + st.sizes.iter().map(|s| s.1).sum::<u64>();
            match parent {
                Some(p) => out.send(p, ForestMsg::Size(st.total)),
                None => st.start = Some(self.root_start[i]),
            }
        }
        if let (Some(start), false) = (st.start, st.distributed) {
            st.distributed = true;
            st.sizes.sort_unstable();
            let mut offset = start + self.weight[i];
            for &(port, size) in &st.sizes {
                out.send(port, ForestMsg::Start(offset));
                offset += size;
            }
        }
        st.next_wake = None;
    }

    fn wake(&self, st: &ForestState) -> Option<u64> {
        st.next_wake
    }

    fn done(&self, st: &ForestState) -> bool {
        st.distributed
    }

    fn output(&self, ctx: &NodeCtx, st: ForestState) -> Block {
        let mut sizes = st.sizes;
        sizes.sort_unstable();
        let mut offset = st.start.unwrap_or(0) + self.weight[ctx.id.index()];
        let children = sizes
            .into_iter()
            .map(|(port, size)| {
                let c = (ctx.neighbor(port), offset, size);
                offset += size;
                c
            })
            .collect();
        Block { start: st.start.unwrap_or(0), subtree: st.total, children }
    }
}

/// Runs the block assignment. `parent[i]` is the parent of node `i+1`
/// (`None` for roots) and must be a neighbor; the pointers must be acyclic.
pub fn assign_blocks(
    g: &WeightedGraph,
    parent: &[Option<NodeId>],
    weight: &[u64],
    cfg: &SimConfig,
) -> Result<(Vec<Block>, RoundTrace)> {
    assign_blocks_from(g, parent, weight, &vec![0; g.n()], cfg)
}

/// As [`assign_blocks`], but the tree rooted at node `i+1` starts numbering
/// at `root_start[i]`.
pub fn assign_blocks_from(
    g: &WeightedGraph,
    parent: &[Option<NodeId>],
    weight: &[u64],
    root_start: &[u64],
    cfg: &SimConfig,
) -> Result<(Vec<Block>, RoundTrace)> {
    if parent.len() != g.n() || weight.len() != g.n() || root_start.len() != g.n() {
        return Err(Error::InvalidParam("one parent and weight per node required".into()));
    }
    let mut parent_port = Vec::with_capacity(g.n());
    for v in g.nodes() {
        parent_port.push(match parent[v.index()] {
            None => None,
            Some(p) => Some(g.port_of(v, p).ok_or_else(|| {
                Error::InvalidParam(format!("parent {p} of {v} is not a neighbor"))
            })?),
        });
    }
    run(g, &Forest { parent_port: &parent_port, weight, root_start }, cfg, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::path;

    #[test]
    fn path_rooted_at_one_gets_dfs_numbers() {
        let g = path(8);
        let parent: Vec<_> = (0..8).map(|i| (i > 0).then(|| NodeId(i as u32))).collect();
        let (blocks, trace) = assign_blocks(&g, &parent, &[1; 8], &SimConfig::for_graph(&g)).unwrap();
        for (i, b) in blocks.iter().enumerate() {
            assert_eq!(b.start, i as u64);
            assert_eq!(b.subtree, 8 - i as u64);
        }
        assert_eq!(blocks[3].children, vec![(NodeId(5), 4, 4)]);
        assert!(trace.rounds <= 2 * 8 + 2);
    }

    #[test]
    fn forest_with_two_roots_and_weights() {
        // 1 - 2 - 3 - 4 - 5 with roots 1 and 5, node 3 attached to 2
        let g = path(5);
        let parent = vec![None, Some(NodeId(1)), Some(NodeId(2)), Some(NodeId(5)), None];
        let weight = [2, 0, 3, 1, 1];
        let (b, _) = assign_blocks(&g, &parent, &weight, &SimConfig::for_graph(&g)).unwrap();
        assert_eq!((b[0].start, b[0].subtree), (0, 5));
        assert_eq!((b[1].start, b[1].subtree), (2, 3));
        assert_eq!((b[2].start, b[2].subtree), (2, 3));
        assert_eq!((b[4].start, b[4].subtree), (0, 2));
        assert_eq!((b[3].start, b[3].subtree), (1, 1));
    }

    #[test]
    fn roots_start_at_given_offsets() {
        let g = path(5);
        let parent = vec![None, Some(NodeId(1)), Some(NodeId(2)), Some(NodeId(5)), None];
        let (b, _) = assign_blocks_from(&g, &parent, &[1; 5], &[10, 0, 0, 0, 3], &SimConfig::for_graph(&g)).unwrap();
        let starts: Vec<u64> = b.iter().map(|x| x.start).collect();
        assert_eq!(starts, vec![10, 11, 12, 4, 3]);
        assert_eq!(b[4].children, vec![(NodeId(4), 4, 1)]);
    }

    #[test]
    fn star_children_in_id_order() {
        let g = crate::graph::fixtures::star(4);
        let mut parent = vec![Some(NodeId(1)); 5];
        parent[0] = None;
        let (b, _) = assign_blocks(&g, &parent, &[1; 5], &SimConfig::for_graph(&g)).unwrap();
        let starts: Vec<u64> = b.iter().map(|x| x.start).collect();
        assert_eq!(starts, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn rejects_non_neighbor_parent() {
        let g = path(4);
        let parent = vec![None, Some(NodeId(1)), Some(NodeId(1)), Some(NodeId(3))];
        assert!(assign_blocks(&g, &parent, &[1; 4], &SimConfig::for_graph(&g)).is_err());
    }
}
