//! Synchronous round engine with per-edge bit budget enforcement.
//!
//! Every round each node receives the messages sent to it in the previous
//! round, updates its state and emits messages addressed by port (index into
//! its sorted adjacency list). Messages are encoded into fixed-width words
//! before delivery; the receiver only sees what was decoded from the words.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, Weight, WeightedGraph};

/// Number of bits needed to write `x`.
pub fn bits_for(x: u64) -> u32 {
    (64 - x.leading_zeros()).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Bits per word. Every transmitted word must be `< 2^word_bits`.
    pub word_bits: u32,
    /// Bits per edge per round (`B`).
    pub bandwidth: u64,
    /// Words per bounded-shortest-path entry.
    pub entry_words: u32,
    pub max_rounds: u64,
}

pub const DEFAULT_BANDWIDTH_WORDS: u64 = 8;
pub const DEFAULT_MAX_ROUNDS: u64 = 1 << 40;

impl SimConfig {
    /// Words wide enough for node ids, source tokens (`2*id + flag`) and any
    /// distance up to `(n-1) * max_weight`; `B` is eight words.
    pub fn for_graph(g: &WeightedGraph) -> Self {
        let word_bits = word_bits_for(g.n(), g.distance_bound());
        SimConfig {
            word_bits,
            bandwidth: DEFAULT_BANDWIDTH_WORDS * word_bits as u64,
            entry_words: 4,
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }

    pub fn with_bandwidth(mut self, bits: u64) -> Self {
        self.bandwidth = bits;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.word_bits == 0 || self.word_bits > 64 {
            return Err(Error::InvalidParam(format!("word size {} outside 1..=64", self.word_bits)));
        }
        if self.bandwidth < self.entry_words as u64 * self.word_bits as u64 {
            return Err(Error::InvalidParam(format!(
                "B = {} bits cannot hold one {}-word entry of {} bits per word",
                self.bandwidth, self.entry_words, self.word_bits
            )));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidParam("max_rounds must be positive".into()));
        }
        Ok(())
    }

    /// Largest number of words that fit in one edge-round.
    pub fn words_per_round(&self) -> usize {
        (self.bandwidth / self.word_bits as u64) as usize
    }

    pub fn word_limit(&self) -> u64 {
        if self.word_bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.word_bits) - 1
        }
    }
}

pub fn word_bits_for(n: usize, distance_bound: Weight) -> u32 {
    bits_for((2 * n as u64 + 1).max(distance_bound))
}

/// Round and message accounting of one or more sequential executions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub rounds: u64,
    pub messages: u64,
    pub max_bits_edge_round: u64,
    pub retries: u32,
}

impl RoundTrace {
    /// Sequential composition.
    pub fn then(&mut self, other: &RoundTrace) {
        self.rounds += other.rounds;
        self.messages += other.messages;
        self.max_bits_edge_round = self.max_bits_edge_round.max(other.max_bits_edge_round);
        self.retries += other.retries;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }
}

/// Fixed-width word encoding of a message.
pub trait Wire: Sized {
    fn encode(&self, out: &mut Vec<u64>);
    fn decode(words: &[u64]) -> Option<Self>;
}

/// Packs words of `word_bits` bits each, big-endian, into bytes.
pub fn pack_words(words: &[u64], word_bits: u32) -> Vec<u8> {
    let total = words.len() * word_bits as usize;
    let mut out = vec![0u8; total.div_ceil(8)];
    let mut pos = 0usize;
    for &w in words {
        for b in (0..word_bits).rev() {
            if (w >> b) & 1 == 1 {
                out[pos / 8] |= 0x80 >> (pos % 8);
            }
            pos += 1;
        }
    }
    out
}

pub fn unpack_words(bytes: &[u8], word_bits: u32, count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut pos = 0usize;
    for _ in 0..count {
        let mut w = 0u64;
        for _ in 0..word_bits {
            let bit = (bytes[pos / 8] >> (7 - pos % 8)) & 1;
            w = (w << 1) | bit as u64;
            pos += 1;
        }
        out.push(w);
    }
    out
}

/// SplitMix64 finalizer used to derive independent stream seeds.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-node random stream for a given run seed.
pub fn node_stream(seed: u64, node: NodeId) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, node.0 as u64))
}

pub struct NodeCtx<'a> {
    pub id: NodeId,
    pub graph: &'a WeightedGraph,
    pub cfg: &'a SimConfig,
}

impl NodeCtx<'_> {
    pub fn degree(&self) -> usize {
        self.graph.degree(self.id)
    }

    pub fn neighbor(&self, port: usize) -> NodeId {
        self.graph.neighbors(self.id)[port].node
    }

    pub fn edge_weight(&self, port: usize) -> Weight {
        self.graph.neighbors(self.id)[port].weight
    }
}

pub struct Outbox<M> {
    msgs: Vec<(usize, M)>,
}

impl<M: Clone> Outbox<M> {
    pub fn send(&mut self, port: usize, msg: M) {
        self.msgs.push((port, msg));
    }

    pub fn send_all(&mut self, degree: usize, msg: &M) {
        for p in 0..degree {
            self.msgs.push((p, msg.clone()));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.msgs.is_empty()
    }
}

pub trait Protocol {
    type State;
    type Msg: Wire + Clone;
    type Output;

    fn init(&self, ctx: &NodeCtx, rng: &mut ChaCha8Rng) -> Self::State;

    /// One round at one node: `inbox` holds (arrival port, message) pairs.
    fn step(
        &self,
        ctx: &NodeCtx,
        state: &mut Self::State,
        round: u64,
        inbox: &[(usize, Self::Msg)],
        out: &mut Outbox<Self::Msg>,
        rng: &mut ChaCha8Rng,
    );

    /// Next round at which the node must be stepped even with an empty inbox.
    fn wake(&self, state: &Self::State) -> Option<u64>;

    /// Termination predicate, checked once the network is quiescent.
    fn done(&self, _state: &Self::State) -> bool {
        true
    }

    /// Length of a fixed round schedule that nodes wait out regardless of
    /// traffic (0 when termination is detected by quiescence).
    fn schedule_rounds(&self) -> u64 {
        0
    }

    fn output(&self, ctx: &NodeCtx, state: Self::State) -> Self::Output;
}

/// Runs `protocol` to quiescence. Nodes are stepped in id order when they
/// have mail or a due wake-up; rounds where nothing happens are skipped.
pub fn run<P: Protocol>(
    g: &WeightedGraph,
    protocol: &P,
    cfg: &SimConfig,
    seed: u64,
) -> Result<(Vec<P::Output>, RoundTrace)> {
    cfg.validate()?;
    let n = g.n();
    let ctxs: Vec<NodeCtx> = g.nodes().map(|id| NodeCtx { id, graph: g, cfg }).collect();
    let mut rngs: Vec<ChaCha8Rng> = g.nodes().map(|v| node_stream(seed, v)).collect();
    let mut states: Vec<P::State> =
        (0..n).map(|i| protocol.init(&ctxs[i], &mut rngs[i])).collect();
    let mut inbox: Vec<Vec<(usize, P::Msg)>> = (0..n).map(|_| Vec::new()).collect();
    let mut next_inbox: Vec<Vec<(usize, P::Msg)>> = (0..n).map(|_| Vec::new()).collect();
    let mut wakes: Vec<Option<u64>> = states.iter().map(|s| protocol.wake(s)).collect();
    let mut in_flight = 0usize;
    let mut trace = RoundTrace::default();
    let mut last_send: Option<u64> = None;
    let mut round: u64 = 0;
    let mut out = Outbox { msgs: Vec::new() };
    let mut words = Vec::new();
    let mut port_bits: Vec<u64> = Vec::new();
    let limit = cfg.word_limit();

    loop {
        if in_flight == 0 {
            match wakes.iter().flatten().min() {
                None => break,
                Some(&w) => round = round.max(w),
            }
        }
        if round >= cfg.max_rounds {
            return Err(Error::RoundCap(cfg.max_rounds));
        }
        in_flight = 0;
        for i in 0..n {
            let due = matches!(wakes[i], Some(w) if w <= round);
            if inbox[i].is_empty() && !due {
                continue;
            }
            let mail = std::mem::take(&mut inbox[i]);
            protocol.step(&ctxs[i], &mut states[i], round, &mail, &mut out, &mut rngs[i]);
            inbox[i] = mail;
            inbox[i].clear();
            wakes[i] = protocol.wake(&states[i]);
            if out.msgs.is_empty() {
                continue;
            }
            let v = ctxs[i].id;
            let nbrs = g.neighbors(v);
            port_bits.clear();
            port_bits.resize(nbrs.len(), 0);
            for (port, msg) in out.msgs.drain(..) {
                let nb = nbrs.get(port).ok_or_else(|| {
                    Error::InvalidParam(format!("node {v} sent on nonexistent port {port}"))
                })?;
                words.clear();
                msg.encode(&mut words);
                if let Some(&bad) = words.iter().find(|&&w| w > limit) {
                    return Err(Error::WordOverflow { value: bad, word_bits: cfg.word_bits });
                }
                port_bits[port] += words.len() as u64 * cfg.word_bits as u64;
                if port_bits[port] > cfg.bandwidth {
                    return Err(Error::BudgetViolation {
                        round,
                        from: v,
                        to: nb.node,
                        bits: port_bits[port],
                        budget: cfg.bandwidth,
                    });
                }
                let delivered = P::Msg::decode(&words).ok_or_else(|| {
                    Error::InvalidParam(format!("undecodable message from node {v}"))
                })?;
                next_inbox[nb.node.index()].push((nb.back_port, delivered));
                trace.messages += 1;
                in_flight += 1;
            }
            for &b in &port_bits {
                trace.max_bits_edge_round = trace.max_bits_edge_round.max(b);
            }
            last_send = Some(round);
        }
        std::mem::swap(&mut inbox, &mut next_inbox);
        round += 1;
    }

    if let Some(i) = (0..n).find(|&i| !protocol.done(&states[i])) {
        return Err(Error::InvalidParam(format!(
            "protocol stalled: node {} not done after quiescence",
            NodeId::from_index(i)
        )));
    }
    trace.rounds = last_send.map_or(0, |r| r + 1).max(protocol.schedule_rounds());
    if trace.rounds > cfg.max_rounds {
        return Err(Error::RoundCap(cfg.max_rounds));
    }
    let outputs = states
        .into_iter()
        .enumerate()
        .map(|(i, s)| protocol.output(&ctxs[i], s))
        .collect();
    Ok((outputs, trace))
}

/// Validate-and-retry hook: repeats `attempt` until it reports success,
/// at most `budget` retries. Failed attempts still add their cost to
/// `trace`, which also counts the retries.
pub fn with_retries<T>(
    budget: u32,
    trace: &mut RoundTrace,
    mut attempt: impl FnMut(u32, &mut RoundTrace) -> Result<std::result::Result<T, String>>,
) -> Result<T> {
    let mut last_reason = String::new();
    for a in 0..=budget {
        match attempt(a, trace)? {
            Ok(v) => return Ok(v),
            Err(reason) => {
                last_reason = reason;
                if a < budget {
                    trace.retries += 1;
                }
            }
        }
    }
    Err(Error::RetriesExhausted { attempts: budget + 1, reason: last_reason })
}

/// Plain word-vector message, used by protocols with free-form payloads.
impl Wire for Vec<u64> {
    fn encode(&self, out: &mut Vec<u64>) {
        out.extend_from_slice(self);
    }

    fn decode(words: &[u64]) -> Option<Self> {
        Some(words.to_vec())
    }
}
