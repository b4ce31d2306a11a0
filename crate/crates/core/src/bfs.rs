//! BFS tree construction rooted at node 1, pipelined all-to-all broadcast
//! over that tree, and a tree max-aggregation.

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{NodeId, WeightedGraph};
use crate::sim::{run, NodeCtx, Outbox, Protocol, RoundTrace, SimConfig, Wire};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeMsg {
    Join,
    Child,
    Up(Vec<u64>),
    UpDone,
    Down(Vec<u64>),
    DownEnd,
}

impl Wire for TreeMsg {
    fn encode(&self, out: &mut Vec<u64>) {
        match self {
            TreeMsg::Join => out.push(0),
            TreeMsg::Child => out.push(1),
            TreeMsg::Up(p) => {
                out.push(2);
                out.extend_from_slice(p);
            }
            TreeMsg::UpDone => out.push(3),
            TreeMsg::Down(p) => {
                out.push(4);
                out.extend_from_slice(p);
            }
            TreeMsg::DownEnd => out.push(5),
        }
    }

    fn decode(words: &[u64]) -> Option<Self> {
        let (&tag, rest) = words.split_first()?;
        Some(match tag {
            0 => TreeMsg::Join,
            1 => TreeMsg::Child,
            2 => TreeMsg::Up(rest.to_vec()),
            3 => TreeMsg::UpDone,
            4 => TreeMsg::Down(rest.to_vec()),
            5 => TreeMsg::DownEnd,
            _ => return None,
        })
    }
}

/// Join-flood bookkeeping shared by the tree protocols.
#[derive(Clone, Debug, Default)]
struct Joining {
    started: bool,
    joined: Option<u64>,
    parent: Option<usize>,
    children: Vec<usize>,
}

impl Joining {
    fn root_init(ctx: &NodeCtx) -> Self {
        Joining { joined: (ctx.id == NodeId(1)).then_some(0), ..Default::default() }
    }

    /// Handles Join/Child messages; returns true if the node joined this round.
    fn absorb(&mut self, ctx: &NodeCtx, round: u64, inbox: &[(usize, TreeMsg)], out: &mut Outbox<TreeMsg>) -> bool {
        for (port, msg) in inbox {
            if *msg == TreeMsg::Child {
                self.children.push(*port);
            }
        }
        let is_root_start = ctx.id == NodeId(1) && !self.started;
        let joins: Vec<usize> =
            inbox.iter().filter(|(_, m)| *m == TreeMsg::Join).map(|(p, _)| *p).collect();
        let newly = if is_root_start {
            true
        } else if self.joined.is_none() && !joins.is_empty() {
            // ports are sorted by neighbor id, so the smallest port is the smallest sender
            self.parent = joins.iter().copied().min();
            self.joined = Some(round);
            true
        } else {
            false
        };
        if newly {
            self.started = true;
            for p in 0..ctx.degree() {
                if Some(p) == self.parent {
                    out.send(p, TreeMsg::Child);
                } else if !joins.contains(&p) {
                    out.send(p, TreeMsg::Join);
                }
            }
        }
        newly
    }

    /// Child set is final two rounds after joining.
    fn children_known(&self, round: u64) -> bool {
        matches!(self.joined, Some(j) if round >= j + 2)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BfsTree {
    pub root: NodeId,
    pub parent: Vec<Option<NodeId>>,
    pub depth: Vec<usize>,
}

impl BfsTree {
    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.index()]
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.depth[v.index()]
    }

    pub fn height(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }
}

struct BuildTree;

impl Protocol for BuildTree {
    type State = Joining;
    type Msg = TreeMsg;
    type Output = (Option<NodeId>, u64);

    fn init(&self, ctx: &NodeCtx, _rng: &mut ChaCha8Rng) -> Joining {
        Joining::root_init(ctx)
    }

    fn step(
        &self,
        ctx: &NodeCtx,
        state: &mut Joining,
        round: u64,
        inbox: &[(usize, TreeMsg)],
        out: &mut Outbox<TreeMsg>,
        _rng: &mut ChaCha8Rng,
    ) {
        state.absorb(ctx, round, inbox, out);
    }

    fn wake(&self, state: &Joining) -> Option<u64> {
        // only the root acts without mail, in round 0
        (state.joined.is_some() && !state.started).then_some(0)
    }

    fn output(&self, ctx: &NodeCtx, state: Joining) -> (Option<NodeId>, u64) {
        (state.parent.map(|p| ctx.neighbor(p)), state.joined.unwrap_or(u64::MAX))
    }
}

/// BFS tree rooted at the smallest id; parent ties go to the smallest id.
pub fn build_bfs_tree(g: &WeightedGraph, cfg: &SimConfig) -> Result<(BfsTree, RoundTrace)> {
    let (out, trace) = run(g, &BuildTree, cfg, 0)?;
    let parent = out.iter().map(|o| o.0).collect();
    let depth = out.iter().map(|o| o.1 as usize).collect();
    Ok((BfsTree { root: NodeId(1), parent, depth }, trace))
}

#[derive(Clone, Debug, Default)]
struct BroadcastState {
    tree: Joining,
    own: Vec<Vec<u64>>,
    up_queue: VecDeque<Vec<u64>>,
    children_done: usize,
    up_done_sent: bool,
    down_queue: VecDeque<Option<Vec<u64>>>,
    end_queued: bool,
    finished: bool,
    held: Vec<Vec<u64>>,
    next_wake: Option<u64>,
}

struct BroadcastAll {
    messages: Vec<Vec<Vec<u64>>>,
}

impl Protocol for BroadcastAll {
    type State = BroadcastState;
    type Msg = TreeMsg;
    type Output = Vec<Vec<u64>>;

    fn init(&self, ctx: &NodeCtx, _rng: &mut ChaCha8Rng) -> BroadcastState {
        let tree = Joining::root_init(ctx);
        let next_wake = tree.joined;
        BroadcastState {
            tree,
            own: self.messages[ctx.id.index()].clone(),
            next_wake,
            ..Default::default()
        }
    }

    fn step(
        &self,
        ctx: &NodeCtx,
        s: &mut BroadcastState,
        round: u64,
        inbox: &[(usize, TreeMsg)],
        out: &mut Outbox<TreeMsg>,
        _rng: &mut ChaCha8Rng,
    ) {
        let is_root = ctx.id == NodeId(1);
        if s.tree.absorb(ctx, round, inbox, out) {
            let own = std::mem::take(&mut s.own);
            if is_root {
                s.down_queue.extend(own.iter().cloned().map(Some));
                s.held.extend(own);
            } else {
                s.up_queue.extend(own);
            }
        }
        for (_, msg) in inbox {
            match msg {
                TreeMsg::Up(p) => {
                    if is_root {
                        s.held.push(p.clone());
                        s.down_queue.push_back(Some(p.clone()));
                    } else {
                        s.up_queue.push_back(p.clone());
                    }
                }
                TreeMsg::UpDone => s.children_done += 1,
                TreeMsg::Down(p) => {
                    s.held.push(p.clone());
                    s.down_queue.push_back(Some(p.clone()));
                }
                TreeMsg::DownEnd => {
                    s.down_queue.push_back(None);
                    s.end_queued = true;
                }
                _ => {}
            }
        }
        let known = s.tree.children_known(round);
        if known {
            let all_children_done = s.children_done == s.tree.children.len();
            if let Some(pp) = s.tree.parent {
                if let Some(p) = s.up_queue.pop_front() {
                    out.send(pp, TreeMsg::Up(p));
                } else if all_children_done && !s.up_done_sent {
                    s.up_done_sent = true;
                    out.send(pp, TreeMsg::UpDone);
                }
            } else if all_children_done && !s.end_queued {
                s.end_queued = true;
                s.down_queue.push_back(None);
            }
            if let Some(item) = s.down_queue.pop_front() {
                let msg = match item {
                    Some(p) => TreeMsg::Down(p),
                    None => {
                        s.finished = true;
                        TreeMsg::DownEnd
                    }
                };
                for &c in &s.tree.children {
                    out.send(c, msg.clone());
                }
            }
        }
        s.next_wake = match s.tree.joined {
            Some(j) if !known => Some(j + 2),
            Some(_) => {
                let pending_up = s.tree.parent.is_some()
                    && (!s.up_queue.is_empty()
                        || (!s.up_done_sent && s.children_done == s.tree.children.len()));
                let pending_root = s.tree.parent.is_none()
                    && !s.end_queued
                    && s.children_done == s.tree.children.len();
                (pending_up || pending_root || !s.down_queue.is_empty()).then_some(round + 1)
            }
            None => None,
        };
    }

    fn wake(&self, s: &BroadcastState) -> Option<u64> {
        s.next_wake
    }

    fn done(&self, s: &BroadcastState) -> bool {
        s.finished
    }

    fn output(&self, _ctx: &NodeCtx, s: BroadcastState) -> Vec<Vec<u64>> {
        s.held
    }
}

/// Makes every node learn every message. `messages[i]` are the payloads
/// initially held by node `i+1`; each payload must fit one message next to
/// a tag word. Returns, per node, all payloads in the root's order.
pub fn broadcast_all(
    g: &WeightedGraph,
    messages: Vec<Vec<Vec<u64>>>,
    cfg: &SimConfig,
) -> Result<(Vec<Vec<Vec<u64>>>, RoundTrace)> {
    if messages.len() != g.n() {
        return Err(Error::InvalidParam("one message list per node required".into()));
    }
    let max_words = cfg.words_per_round().saturating_sub(1);
    if messages.iter().flatten().any(|p| p.len() > max_words) {
        return Err(Error::InvalidParam(format!("payload longer than {max_words} words")));
    }
    run(g, &BroadcastAll { messages }, cfg, 0)
}

#[derive(Clone, Debug, Default)]
struct MaxState {
    tree: Joining,
    value: u64,
    reported: usize,
    up_sent: bool,
    result: Option<u64>,
    forwarded: bool,
    next_wake: Option<u64>,
}

struct TreeMax {
    values: Vec<u64>,
}

impl Protocol for TreeMax {
    type State = MaxState;
    type Msg = TreeMsg;
    type Output = u64;

    fn init(&self, ctx: &NodeCtx, _rng: &mut ChaCha8Rng) -> MaxState {
        let tree = Joining::root_init(ctx);
        MaxState {
            next_wake: tree.joined,
            tree,
            value: self.values[ctx.id.index()],
            ..Default::default()
        }
    }

    fn step(
        &self,
        ctx: &NodeCtx,
        s: &mut MaxState,
        round: u64,
        inbox: &[(usize, TreeMsg)],
        out: &mut Outbox<TreeMsg>,
        _rng: &mut ChaCha8Rng,
    ) {
        s.tree.absorb(ctx, round, inbox, out);
        for (_, msg) in inbox {
            match msg {
                TreeMsg::Up(p) => {
                    s.value = s.value.max(p[0]);
                    s.reported += 1;
                }
                TreeMsg::Down(p) => s.result = Some(p[0]),
                _ => {}
            }
        }
        let known = s.tree.children_known(round);
        if known && !s.up_sent && s.reported == s.tree.children.len() {
            s.up_sent = true;
            match s.tree.parent {
                Some(pp) => out.send(pp, TreeMsg::Up(vec![s.value])),
                None => s.result = Some(s.value),
            }
        }
        if let (Some(r), false) = (s.result, s.forwarded) {
            s.forwarded = true;
            for &c in &s.tree.children {
                out.send(c, TreeMsg::Down(vec![r]));
            }
        }
        s.next_wake = match s.tree.joined {
            Some(j) if !known => Some(j + 2),
            Some(_) if !s.up_sent && s.reported == s.tree.children.len() => Some(round + 1),
            _ => None,
        };
    }

    fn wake(&self, s: &MaxState) -> Option<u64> {
        s.next_wake
    }

    fn done(&self, s: &MaxState) -> bool {
        s.forwarded
    }

    fn output(&self, _ctx: &NodeCtx, s: MaxState) -> u64 {
        s.result.unwrap_or(0)
    }
}

/// Convergecast of the maximum over a BFS tree followed by a broadcast of
/// the result; every node outputs the global maximum.
pub fn tree_max(g: &WeightedGraph, values: Vec<u64>, cfg: &SimConfig) -> Result<(Vec<u64>, RoundTrace)> {
    if values.len() != g.n() {
        return Err(Error::InvalidParam("one value per node required".into()));
    }
    run(g, &TreeMax { values }, cfg, 0)
}
