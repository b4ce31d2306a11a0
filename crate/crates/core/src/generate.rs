//! Seeded graph families.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{default_weight_bound, Weight, WeightedGraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// G(n, p) conditioned on connectivity, weights uniform in
    /// `[1, max_weight]`. Defaults: p = min(1, 1.5 ln n / n), max_weight = n^3.
    RandomWeighted { n: usize, p: Option<f64>, max_weight: Option<Weight> },
    /// 1 - 2 - ... - n with every edge of weight `weight`.
    Path { n: usize, weight: Weight },
    /// Node 1 joined to 2..=n by unit edges.
    Star { n: usize },
    /// Random recursive tree: node i attaches to a uniform earlier node.
    Tree { n: usize, max_weight: Weight },
    /// rows x cols grid, row-major ids.
    Grid { rows: usize, cols: usize, max_weight: Weight },
    /// m x m row paths with Alice/Bob stars and a binary tree over column
    /// hubs; rows in `a` (resp. `b`) get a heavy edge to Alice (resp. Bob).
    LbDiameter { m: usize, omega_max: Weight, a: Vec<usize>, b: Vec<usize> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::RandomWeighted { .. } => "random_weighted",
            Family::Path { .. } => "path",
            Family::Star { .. } => "star",
            Family::Tree { .. } => "tree",
            Family::Grid { .. } => "grid",
            Family::LbDiameter { .. } => "lb_diameter",
        }
    }
}

const MAX_CONNECT_ATTEMPTS: usize = 10_000;

pub fn generate(family: &Family, seed: u64) -> Result<WeightedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *family {
        Family::RandomWeighted { n, p, max_weight } => {
            if n == 0 {
                return Err(Error::InvalidParam("n must be at least 1".into()));
            }
            let p = p.unwrap_or_else(|| {
                if n < 2 {
                    1.0
                } else {
                    (1.5 * (n as f64).ln() / n as f64).min(1.0)
                }
            });
            if !(p > 0.0 && p <= 1.0) && n > 1 {
                return Err(Error::InvalidParam(format!("edge probability {p} outside (0,1]")));
            }
            let w_max = max_weight.unwrap_or_else(|| default_weight_bound(n));
            if w_max < 1 {
                return Err(Error::InvalidParam("max_weight must be at least 1".into()));
            }
            for _ in 0..MAX_CONNECT_ATTEMPTS {
                let mut edges = Vec::new();
                for u in 1..=n as u32 {
                    for v in u + 1..=n as u32 {
                        if rng.gen_bool(p) {
                            edges.push((u, v, rng.gen_range(1..=w_max)));
                        }
                    }
                }
                match WeightedGraph::with_weight_bound(n, edges, w_max.max(default_weight_bound(n)))
                {
                    Ok(g) => return Ok(g),
                    Err(Error::InvalidGraph(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::InvalidParam(format!(
                "no connected G({n}, {p}) sample in {MAX_CONNECT_ATTEMPTS} attempts"
            )))
        }
        Family::Path { n, weight } => {
            WeightedGraph::with_weight_bound(n, (1..n as u32).map(|i| (i, i + 1, weight)), weight.max(1))
        }
        Family::Star { n } => WeightedGraph::new(n, (2..=n as u32).map(|i| (1, i, 1))),
        Family::Tree { n, max_weight } => {
            check_weight(max_weight)?;
            let edges: Vec<_> = (2..=n as u32)
                .map(|i| (rng.gen_range(1..i), i, rng.gen_range(1..=max_weight)))
                .collect();
            WeightedGraph::with_weight_bound(n, edges, max_weight)
        }
        Family::Grid { rows, cols, max_weight } => {
            check_weight(max_weight)?;
            if rows == 0 || cols == 0 {
                return Err(Error::InvalidParam("grid needs positive dimensions".into()));
            }
            let id = |r: usize, c: usize| (r * cols + c + 1) as u32;
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        edges.push((id(r, c), id(r, c + 1), rng.gen_range(1..=max_weight)));
                    }
                    if r + 1 < rows {
                        edges.push((id(r, c), id(r + 1, c), rng.gen_range(1..=max_weight)));
                    }
                }
            }
            WeightedGraph::with_weight_bound(rows * cols, edges, max_weight)
        }
        Family::LbDiameter { m, omega_max, ref a, ref b } => lb_diameter(m, omega_max, a, b),
    }
}

fn check_weight(w: Weight) -> Result<()> {
    if w < 1 {
        return Err(Error::InvalidParam("max_weight must be at least 1".into()));
    }
    Ok(())
}

/// Node numbering: row node (i, j) is `(i-1)*m + j`, column hub j is
/// `m*m + j`, Alice is `m*m + m + 1`, Bob is `m*m + m + 2`, binary tree
/// internal nodes follow.
pub fn lb_diameter(m: usize, omega_max: Weight, a: &[usize], b: &[usize]) -> Result<WeightedGraph> {
    if m < 2 {
        return Err(Error::InvalidParam("lb_diameter needs m >= 2".into()));
    }
    if a.iter().chain(b).any(|&i| i < 1 || i > m) {
        return Err(Error::InvalidParam(format!("input sets must be subsets of 1..={m}")));
    }
    let row = |i: usize, j: usize| ((i - 1) * m + j) as u32;
    let hub = |j: usize| (m * m + j) as u32;
    let alice = (m * m + m + 1) as u32;
    let bob = alice + 1;
    let mut next_id = bob + 1;
    let mut edges = Vec::new();
    for i in 1..=m {
        for j in 1..m {
            edges.push((row(i, j), row(i, j + 1), 1));
        }
        let wa = if a.contains(&i) { omega_max } else { 1 };
        let wb = if b.contains(&i) { omega_max } else { 1 };
        edges.push((alice, row(i, 1), wa));
        edges.push((bob, row(i, m), wb));
        for j in 1..=m {
            edges.push((hub(j), row(i, j), omega_max));
        }
    }
    edges.push((alice, hub(1), 1));
    edges.push((bob, hub(m), 1));
    let mut layer: Vec<u32> = (1..=m).map(hub).collect();
    while layer.len() > 1 {
        let mut up = Vec::with_capacity(layer.len().div_ceil(2));
        for pair in layer.chunks(2) {
            if let [x, y] = *pair {
                let parent = next_id;
                next_id += 1;
                edges.push((parent, x, 1));
                edges.push((parent, y, 1));
                up.push(parent);
            } else {
                up.push(pair[0]);
            }
        }
        layer = up;
    }
    let n = (next_id - 1) as usize;
    if (omega_max as f64) < (n as f64).sqrt() {
        return Err(Error::InvalidParam(format!(
            "omega_max = {omega_max} is below sqrt(n) for n = {n}"
        )));
    }
    WeightedGraph::with_weight_bound(n, edges, omega_max.max(default_weight_bound(n)))
}
