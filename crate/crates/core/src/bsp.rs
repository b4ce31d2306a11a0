//! Bounded multi-source Bellman-Ford with hop range `h` and overlap `delta`.
//!
//! Iteration `t` occupies rounds `[(t-1)*delta, t*delta)`. During it every
//! node transmits its list `L(t-1)`, one entry per round on all edges, and at
//! the start of the next iteration merges what it heard into `L(t)`: the
//! best entry per source, sorted by `(d, s, next, endpoint)` and truncated to
//! `delta` entries. Each entry also records the endpoint inside the source
//! set that realizes it.
//!
//! A node only retransmits when its list changed since its previous
//! transmission; receivers keep the last list heard per port, so the computed
//! lists are the same as with unconditional retransmission.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, Weight, WeightedGraph};
use crate::sim::{run, NodeCtx, Outbox, Protocol, RoundTrace, SimConfig, Wire};

pub type SourceToken = u64;

/// Per-node source token, `None` for non-sources. Nodes sharing a token act
/// as one source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceAssignment {
    tokens: Vec<Option<SourceToken>>,
}

impl SourceAssignment {
    pub fn new(tokens: Vec<Option<SourceToken>>) -> Self {
        SourceAssignment { tokens }
    }

    /// Each listed node is its own source with token = its id.
    pub fn singletons(n: usize, nodes: impl IntoIterator<Item = NodeId>) -> Self {
        let mut tokens = vec![None; n];
        for v in nodes {
            tokens[v.index()] = Some(v.0 as SourceToken);
        }
        SourceAssignment { tokens }
    }

    pub fn token(&self, v: NodeId) -> Option<SourceToken> {
        self.tokens[v.index()]
    }

    pub fn tokens(&self) -> &[Option<SourceToken>] {
        &self.tokens
    }

    pub fn members(&self, s: SourceToken) -> impl Iterator<Item = NodeId> + '_ {
        self.tokens
            .iter()
            .enumerate()
            .filter(move |(_, t)| **t == Some(s))
            .map(|(i, _)| NodeId::from_index(i))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Entry {
    pub d: Weight,
    pub s: SourceToken,
    pub next: NodeId,
    pub endpoint: NodeId,
}

impl Wire for Entry {
    fn encode(&self, out: &mut Vec<u64>) {
        out.extend_from_slice(&[self.d, self.s, self.next.0 as u64, self.endpoint.0 as u64]);
    }

    fn decode(words: &[u64]) -> Option<Self> {
        match *words {
            [d, s, next, endpoint] => {
                Some(Entry { d, s, next: NodeId(next as u32), endpoint: NodeId(endpoint as u32) })
            }
            _ => None,
        }
    }
}

/// List history of one node: `(t, L(t))` at every iteration where the list
/// changed, starting with `t = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelHistory {
    changes: Vec<(u32, Arc<[Entry]>)>,
}

impl LevelHistory {
    /// `L(t)`.
    pub fn level(&self, t: usize) -> &[Entry] {
        let pos = self.changes.partition_point(|(c, _)| *c as usize <= t);
        &self.changes[pos - 1].1
    }

    pub fn find(&self, t: usize, s: SourceToken) -> Option<&Entry> {
        self.level(t).iter().find(|e| e.s == s)
    }

    /// Entry for `s` with the smallest `(d, next)` over all levels.
    pub fn best(&self, s: SourceToken) -> Option<&Entry> {
        self.changes
            .iter()
            .filter_map(|(_, l)| l.iter().find(|e| e.s == s))
            .min_by_key(|e| (e.d, e.next, e.endpoint))
    }

    /// Distinct lists over all levels (shared storage counted once).
    pub fn distinct_lists(&self) -> impl Iterator<Item = &[Entry]> {
        self.changes.iter().map(|(_, l)| &l[..])
    }
}

/// Output of one bounded shortest-path run.
#[derive(Clone, Debug)]
pub struct LevelLists {
    pub h: usize,
    pub delta: usize,
    pub nodes: Vec<LevelHistory>,
}

impl LevelLists {
    pub fn at(&self, v: NodeId) -> &LevelHistory {
        &self.nodes[v.index()]
    }

    /// Final list `L_v(h)`.
    pub fn last(&self, v: NodeId) -> &[Entry] {
        self.nodes[v.index()].level(self.h)
    }

    /// JSON dump: per node, array of levels `0..=h`, each an array of
    /// `[d, s, next, endpoint]`.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .map(|hist| {
                (0..=self.h)
                    .map(|t| {
                        hist.level(t)
                            .iter()
                            .map(|e| serde_json::json!([e.d, e.s, e.next.0, e.endpoint.0]))
                            .collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>()
                    .into()
            })
            .collect();
        serde_json::Value::Array(nodes)
    }
}

struct Bsp<'a> {
    h: usize,
    delta: usize,
    src: &'a SourceAssignment,
}

struct BspState {
    own: Option<Entry>,
    current: Arc<[Entry]>,
    history: Vec<(u32, Arc<[Entry]>)>,
    /// Last list heard per port, already shifted to this node.
    heard: Vec<Vec<Entry>>,
    fresh: Vec<Vec<Entry>>,
    fresh_any: bool,
    /// Round at which the current list started transmitting.
    sending_from: Option<u64>,
    next_wake: Option<u64>,
}

impl Bsp<'_> {
    fn merge(&self, own: Option<Entry>, heard: &[Vec<Entry>]) -> Vec<Entry> {
        let mut all: Vec<Entry> = own.into_iter().chain(heard.iter().flatten().copied()).collect();
        all.sort_unstable_by_key(|e| (e.s, e.d, e.next, e.endpoint));
        all.dedup_by_key(|e| e.s);
        all.sort_unstable();
        all.truncate(self.delta);
        all
    }
}

impl Protocol for Bsp<'_> {
    type State = BspState;
    type Msg = Entry;
    type Output = LevelHistory;

    fn init(&self, ctx: &NodeCtx, _rng: &mut ChaCha8Rng) -> BspState {
        let own = self.src.token(ctx.id).map(|s| Entry { d: 0, s, next: ctx.id, endpoint: ctx.id });
        let current: Arc<[Entry]> = own.into_iter().collect::<Vec<_>>().into();
        let sending = (!current.is_empty() && self.h > 0).then_some(0);
        BspState {
            own,
            history: vec![(0, current.clone())],
            current,
            heard: vec![Vec::new(); ctx.degree()],
            fresh: vec![Vec::new(); ctx.degree()],
            fresh_any: false,
            sending_from: sending,
            next_wake: sending,
        }
    }

    fn step(
        &self,
        ctx: &NodeCtx,
        st: &mut BspState,
        round: u64,
        inbox: &[(usize, Entry)],
        out: &mut Outbox<Entry>,
        _rng: &mut ChaCha8Rng,
    ) {
        let delta = self.delta as u64;
        for &(port, e) in inbox {
            let shifted = Entry { d: e.d + ctx.edge_weight(port), s: e.s, next: ctx.neighbor(port), endpoint: e.endpoint };
            st.fresh[port].push(shifted);
            st.fresh_any = true;
        }
        if round % delta == 0 && round > 0 && st.fresh_any {
            let t = round / delta;
            for (port, f) in st.fresh.iter_mut().enumerate() {
                if !f.is_empty() {
                    st.heard[port] = std::mem::take(f);
                }
            }
            st.fresh_any = false;
            let merged = self.merge(st.own, &st.heard);
            if merged[..] != st.current[..] {
                st.current = merged.into();
                st.history.push((t as u32, st.current.clone()));
                if (t as usize) < self.h {
                    st.sending_from = Some(round);
                }
            }
        }
        if let Some(start) = st.sending_from {
            let j = (round - start) as usize;
            if j < st.current.len() {
                out.send_all(ctx.degree(), &st.current[j]);
            }
            if j + 1 >= st.current.len() {
                st.sending_from = None;
            }
        }
        let send_wake = st.sending_from.map(|_| round + 1);
        let merge_wake = st.fresh_any.then(|| round.div_ceil(delta).max(1) * delta);
        st.next_wake = match (send_wake, merge_wake) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }

    fn wake(&self, st: &BspState) -> Option<u64> {
        st.next_wake
    }

    fn schedule_rounds(&self) -> u64 {
        (self.h * self.delta) as u64
    }

    fn output(&self, _ctx: &NodeCtx, st: BspState) -> LevelHistory {
        LevelHistory { changes: st.history }
    }
}

/// Runs `h` iterations of bounded Bellman-Ford keeping `delta` entries.
pub fn bsp(
    g: &WeightedGraph,
    h: usize,
    delta: usize,
    src: &SourceAssignment,
    cfg: &SimConfig,
) -> Result<(LevelLists, RoundTrace)> {
    if h < 1 || delta < 1 {
        return Err(Error::InvalidParam(format!("need h >= 1 and delta >= 1, got h={h}, delta={delta}")));
    }
    if src.tokens.len() != g.n() {
        return Err(Error::InvalidParam("source assignment size differs from n".into()));
    }
    let (nodes, trace) = run(g, &Bsp { h, delta, src }, cfg, 0)?;
    Ok((LevelLists { h, delta, nodes }, trace))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub weight: Weight,
}

/// Follows `next` pointers, looking up `L_{v_t}(h - t)` at hop `t`.
pub fn route_stateful(g: &WeightedGraph, lists: &LevelLists, v: NodeId, s: SourceToken) -> Result<Path> {
    let mut cur = v;
    let mut nodes = vec![v];
    let mut weight = 0;
    for t in 0..=lists.h {
        let e = lists.at(cur).find(lists.h - t, s).ok_or(Error::MissingEntry { node: cur, source_id: s })?;
        if e.next == cur {
            return Ok(Path { nodes, weight });
        }
        weight += g.weight(cur, e.next).ok_or(Error::MissingEntry { node: cur, source_id: s })?;
        cur = e.next;
        nodes.push(cur);
    }
    Err(Error::MissingEntry { node: cur, source_id: s })
}

/// Follows, at every node, the entry for `s` with the smallest distance over
/// all levels.
pub fn route_stateless(g: &WeightedGraph, lists: &LevelLists, v: NodeId, s: SourceToken) -> Result<Path> {
    let mut cur = v;
    let mut nodes = vec![v];
    let mut weight = 0;
    let mut last_d = Weight::MAX;
    loop {
        let e = lists.at(cur).best(s).ok_or(Error::MissingEntry { node: cur, source_id: s })?;
        if e.d >= last_d {
            return Err(Error::RoutingCycle { from: v, to: e.endpoint, at: cur });
        }
        last_d = e.d;
        if e.next == cur {
            return Ok(Path { nodes, weight });
        }
        weight += g.weight(cur, e.next).ok_or(Error::MissingEntry { node: cur, source_id: s })?;
        cur = e.next;
        nodes.push(cur);
    }
}
