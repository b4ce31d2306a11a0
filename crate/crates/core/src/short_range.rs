//! Landmark hierarchy for short-range routing.
//!
//! Each node draws a level `l_v` with `Pr[l_v >= i] = p_i`; `S_i` is the set
//! of nodes of level at least `i`. Stage `i` runs bounded shortest paths with
//! sources `S_{i-1}`, from which every node learns its closest landmark
//! `Y_v(i)` in `S_i` and the set `H_v(i)` of nodes of `S_{i-1}` at most as far
//! as `Y_v(i)`, with exact distances and next hops. The next hops towards
//! `Y_v(i)` form shortest-path trees over the Voronoi cells
//! `C_u(i) = {v : Y_v(i) = u}`, which get DFS interval labels for routing
//! from the landmark back into its cell.

use rand::Rng;
use serde::Serialize;

use crate::bsp::{bsp, SourceAssignment};
use crate::error::{Error, Result};
use crate::forest::assign_blocks;
use crate::graph::{NodeId, Weight, WeightedGraph};
use crate::oracle::DistanceMatrix;
use crate::sim::{mix, node_stream, with_retries, RoundTrace, SimConfig};

pub const DEFAULT_C: f64 = 4.0;
pub const DEFAULT_C_PRIME: f64 = 4.0;

pub fn log2n(n: usize) -> f64 {
    (n.max(2) as f64).log2()
}

/// Largest useful stage count, `ceil(log2 log2 n)`, at least 1.
pub fn max_stages(n: usize) -> usize {
    (log2n(n).log2().ceil() as usize).max(1)
}

/// `p_0..=p_L` with `p_i = sqrt(n)^(-(2^L/(2^L-1)) (2^i-1)/2^i)`.
pub fn level_probabilities(n: usize, stages: usize) -> Vec<f64> {
    let sqrt_n = (n as f64).sqrt();
    let two_l = 2f64.powi(stages as i32);
    (0..=stages)
        .map(|i| {
            let two_i = 2f64.powi(i as i32);
            sqrt_n.powf(-(two_l / (two_l - 1.0)) * (two_i - 1.0) / two_i)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hierarchy {
    pub n: usize,
    pub stages: usize,
    pub levels: Vec<usize>,
    /// `p[0..=stages]`.
    pub p: Vec<f64>,
    /// `h[i]` for `i` in `1..=stages`; `h[0]` is unused.
    pub h: Vec<usize>,
    pub delta: Vec<usize>,
    pub c: f64,
    pub c_prime: f64,
    /// Levels were given explicitly and must not be resampled.
    pub forced: bool,
}

impl Hierarchy {
    /// Parameters for explicit probabilities `p[0..=stages]` (`p[0] = 1`).
    pub fn from_probabilities(n: usize, p: Vec<f64>, c: f64, c_prime: f64) -> Self {
        let stages = p.len() - 1;
        let log_n = log2n(n);
        let mut h = vec![0; stages + 1];
        let mut delta = vec![0; stages + 1];
        for i in 1..=stages {
            h[i] = ((c * log_n / p[i]).ceil() as usize).max(1);
            delta[i] = ((c_prime * h[i] as f64 * p[i - 1]).ceil() as usize).max(1);
        }
        Hierarchy { n, stages, levels: vec![0; n], p, h, delta, c, c_prime, forced: false }
    }

    /// Samples levels; the stage count is clamped to `1..=max_stages(n)`.
    pub fn sample(n: usize, stages: usize, c: f64, c_prime: f64, seed: u64) -> Self {
        let stages = stages.clamp(1, max_stages(n));
        let mut hier = Self::from_probabilities(n, level_probabilities(n, stages), c, c_prime);
        hier.resample_from(1, seed);
        hier
    }

    /// Uses the given levels as they are.
    pub fn with_levels(n: usize, stages: usize, levels: Vec<usize>, c: f64, c_prime: f64) -> Result<Self> {
        if levels.len() != n || levels.iter().any(|&l| l > stages) || stages == 0 {
            return Err(Error::InvalidParam(format!(
                "need {n} levels in 0..={stages} and at least one stage"
            )));
        }
        let mut hier = Self::from_probabilities(n, level_probabilities(n, stages), c, c_prime);
        hier.levels = levels;
        hier.forced = true;
        Ok(hier)
    }

    /// Redraws membership in `S_i, S_{i+1}, ...` for the nodes of `S_{i-1}`,
    /// conditioned on their membership in `S_{i-1}`.
    pub fn resample_from(&mut self, i: usize, seed: u64) {
        for idx in 0..self.n {
            if self.levels[idx] + 1 < i {
                continue;
            }
            let mut rng = node_stream(mix(seed, i as u64), NodeId::from_index(idx));
            let x: f64 = rng.gen();
            let mut level = i - 1;
            while level < self.stages && x < self.p[level + 1] / self.p[i - 1] {
                level += 1;
            }
            self.levels[idx] = level;
        }
    }

    pub fn level(&self, v: NodeId) -> usize {
        self.levels[v.index()]
    }

    pub fn in_set(&self, v: NodeId, i: usize) -> bool {
        self.levels[v.index()] >= i
    }

    pub fn members(&self, i: usize) -> Vec<NodeId> {
        (0..self.n).filter(|&x| self.levels[x] >= i).map(NodeId::from_index).collect()
    }
}

/// Token of `u` in a stage-`i` run: `2u + [l_u >= i]`.
fn stage_token(u: NodeId, marked: bool) -> u64 {
    2 * u.0 as u64 + marked as u64
}

fn token_node(s: u64) -> NodeId {
    NodeId((s / 2) as u32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HEntry {
    pub node: NodeId,
    pub d: Weight,
    pub next: NodeId,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TreeTable {
    pub parent: Option<NodeId>,
    pub enter: u32,
    pub exit: u32,
    /// `(child, enter, exit)` in id order.
    pub children: Vec<(NodeId, u32, u32)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageTable {
    pub y: NodeId,
    pub dy: Weight,
    /// `H_v(i)` sorted by node id.
    pub h_set: Vec<HEntry>,
    pub tree: TreeTable,
}

impl StageTable {
    pub fn lookup(&self, u: NodeId) -> Option<&HEntry> {
        self.h_set.binary_search_by_key(&u, |e| e.node).ok().map(|i| &self.h_set[i])
    }

    pub fn label(&self) -> StageLabel {
        StageLabel { y: self.y, dy: self.dy, enter: self.tree.enter, exit: self.tree.exit }
    }
}

/// Per-stage part of a node label: landmark, distance to it and the node's
/// interval in the landmark's tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StageLabel {
    pub y: NodeId,
    pub dy: Weight,
    pub enter: u32,
    pub exit: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NodeTables {
    pub level: usize,
    /// Index 0 is the trivial stage (`Y_v(0) = v`).
    pub stages: Vec<StageTable>,
}

#[derive(Clone, Debug)]
pub struct ShortRange {
    pub hier: Hierarchy,
    pub nodes: Vec<NodeTables>,
    pub trace: RoundTrace,
}

impl ShortRange {
    pub fn table(&self, v: NodeId, i: usize) -> &StageTable {
        &self.nodes[v.index()].stages[i]
    }

    pub fn label(&self, v: NodeId) -> Vec<StageLabel> {
        self.nodes[v.index()].stages.iter().map(StageTable::label).collect()
    }

    /// Table dump, one object per node.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .map(|t| {
                let stages: Vec<serde_json::Value> = t.stages[1..]
                    .iter()
                    .map(|s| {
                        serde_json::json!({
                            "Y": s.y.0,
                            "dY": s.dy,
                            "H": s.h_set.iter().map(|e| [e.node.0 as u64, e.d, e.next.0 as u64]).collect::<Vec<_>>(),
                            "tree_label": [s.tree.enter, s.tree.exit],
                        })
                    })
                    .collect();
                serde_json::json!({ "level": t.level, "stages": stages })
            })
            .collect();
        serde_json::Value::Array(nodes)
    }
}

/// Next hop inside the shared tree of stage `i` and the remaining distance:
/// exact when `w` is a descendant or ancestor of `v`, otherwise the distance
/// through the root.
pub fn tree_next_hop(v: NodeId, table: &StageTable, w: &StageLabel) -> Result<(NodeId, Weight)> {
    if table.y != w.y {
        return Err(Error::NotInCell { node: v });
    }
    let t = &table.tree;
    if w.enter == t.enter {
        return Ok((v, 0));
    }
    if t.enter < w.enter && w.enter <= t.exit {
        let child = t
            .children
            .iter()
            .find(|c| c.1 <= w.enter && w.enter <= c.2)
            .ok_or(Error::NotInCell { node: v })?;
        return Ok((child.0, w.dy - table.dy));
    }
    let parent = t.parent.ok_or(Error::NotInCell { node: v })?;
    if w.enter < t.enter && t.enter <= w.exit {
        Ok((parent, table.dy - w.dy))
    } else {
        Ok((parent, table.dy + w.dy))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub retries: u32,
    pub seed: u64,
}

/// Runs all stages, validating each against exact distances and resampling
/// the failing stage's levels (unless the hierarchy is forced).
pub fn build_short_range(
    g: &WeightedGraph,
    mut hier: Hierarchy,
    cfg: &SimConfig,
    oracle: &DistanceMatrix,
    opts: BuildOptions,
) -> Result<ShortRange> {
    let n = g.n();
    if hier.n != n {
        return Err(Error::InvalidParam("hierarchy size differs from graph".into()));
    }
    let mut trace = RoundTrace::default();
    let mut nodes: Vec<NodeTables> = g
        .nodes()
        .map(|v| NodeTables {
            level: 0,
            stages: vec![StageTable { y: v, dy: 0, h_set: Vec::new(), tree: TreeTable::default() }],
        })
        .collect();
    // rank[v][u] = position of u in v's (distance, id) order
    let mut rank = vec![0u32; n * n];
    for v in g.nodes() {
        let row = oracle.row(v);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&u| (row[u], u));
        for (pos, u) in order.into_iter().enumerate() {
            rank[v.index() * n + u] = pos as u32;
        }
    }
    let budget = if hier.forced { 0 } else { opts.retries };
    for i in 1..=hier.stages {
        let stage = with_retries(budget, &mut trace, |attempt, trace| {
            if attempt > 0 {
                hier.resample_from(i, mix(opts.seed, 1000 * attempt as u64));
            }
            build_stage(g, &hier, i, cfg, oracle, &rank, trace)
        })?;
        for (t, s) in nodes.iter_mut().zip(stage) {
            t.stages.push(s);
        }
    }
    for (t, l) in nodes.iter_mut().zip(&hier.levels) {
        t.level = *l;
    }
    Ok(ShortRange { hier, nodes, trace })
}

fn build_stage(
    g: &WeightedGraph,
    hier: &Hierarchy,
    i: usize,
    cfg: &SimConfig,
    oracle: &DistanceMatrix,
    rank: &[u32],
    trace: &mut RoundTrace,
) -> Result<std::result::Result<Vec<StageTable>, String>> {
    let n = g.n();
    let landmarks = hier.members(i);
    if landmarks.is_empty() {
        return Ok(Err(format!("stage {i}: no node has level >= {i}")));
    }
    let tokens = (0..n)
        .map(|x| {
            let v = NodeId::from_index(x);
            hier.in_set(v, i - 1).then(|| stage_token(v, hier.in_set(v, i)))
        })
        .collect();
    let src = SourceAssignment::new(tokens);
    let (lists, t) = bsp(g, hier.h[i], hier.delta[i], &src, cfg)?;
    trace.then(&t);

    let mut tables = Vec::with_capacity(n);
    for v in g.nodes() {
        let list = lists.last(v);
        let Some(pos) = list.iter().position(|e| e.s % 2 == 1) else {
            return Ok(Err(format!("stage {i}: node {v} saw no landmark")));
        };
        let dy = list[pos].d;
        let y = token_node(list[pos].s);
        let mut h_set: Vec<HEntry> = list
            .iter()
            .take_while(|e| e.d <= dy)
            .map(|e| HEntry { node: token_node(e.s), d: e.d, next: e.next })
            .collect();
        h_set.sort_by_key(|e| e.node);
        tables.push(StageTable { y, dy, h_set, tree: TreeTable::default() });
    }

    if let Err(reason) = validate_stage(g, hier, i, oracle, rank, &tables) {
        return Ok(Err(reason));
    }

    let parent: Vec<Option<NodeId>> = g
        .nodes()
        .map(|v| {
            let t = &tables[v.index()];
            (t.y != v).then(|| t.lookup(t.y).expect("landmark is in H").next)
        })
        .collect();
    let (blocks, t) = assign_blocks(g, &parent, &vec![1; n], cfg)?;
    trace.then(&t);
    for (x, b) in blocks.into_iter().enumerate() {
        tables[x].tree = TreeTable {
            parent: parent[x],
            enter: b.start as u32,
            exit: (b.start + b.subtree - 1) as u32,
            children: b
                .children
                .into_iter()
                .map(|(c, s, size)| (c, s as u32, (s + size - 1) as u32))
                .collect(),
        };
    }
    Ok(Ok(tables))
}

/// Checks landmarks, `H` sets, distances and size bounds against the oracle.
fn validate_stage(
    g: &WeightedGraph,
    hier: &Hierarchy,
    i: usize,
    oracle: &DistanceMatrix,
    rank: &[u32],
    tables: &[StageTable],
) -> std::result::Result<(), String> {
    let n = g.n();
    for v in g.nodes() {
        let t = &tables[v.index()];
        let row = oracle.row(v);
        let (best_d, best_y) = hier
            .members(i)
            .into_iter()
            .map(|u| (row[u.index()], u))
            .min()
            .expect("stage has landmarks");
        if (t.dy, t.y) != (best_d, best_y) {
            return Err(format!("stage {i}: node {v} landmark {} at {} instead of {best_y} at {best_d}", t.y, t.dy));
        }
        let expected = (0..n)
            .filter(|&u| hier.levels[u] + 1 >= i && row[u] <= best_d)
            .count();
        if t.h_set.len() != expected {
            return Err(format!("stage {i}: node {v} has |H| = {} instead of {expected}", t.h_set.len()));
        }
        if t.h_set.len() > hier.delta[i] {
            return Err(format!("stage {i}: node {v} has |H| above delta"));
        }
        for e in &t.h_set {
            if !hier.in_set(e.node, i - 1) || e.d != row[e.node.index()] {
                return Err(format!("stage {i}: node {v} has inexact entry for {}", e.node));
            }
            if rank[v.index() * n + e.node.index()] as usize >= hier.h[i] {
                return Err(format!("stage {i}: {} is outside ball_{v}(h_{i})", e.node));
            }
        }
    }
    Ok(())
}
