use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use congest_routing::ext::diameter::{approx_diameter, DiameterOptions};
use congest_routing::ext::gsf::{gsf_solve, gsf_verify, parse_gsf, GsfInstance, GsfOptions, MAX_EXACT_TERMINALS};
use congest_routing::ext::sketch::{build_sketches, SketchOptions};
use congest_routing::oracle::{metrics, DistanceMatrix};
use congest_routing::routing::tight::{assign_tight_labels, tight_route};
use congest_routing::routing::{build_tables, parse_alpha, Routing, RoutingOptions};
use congest_routing::sim::{bits_for, SimConfig};
use congest_routing::{NodeId, Weight, WeightedGraph};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{GraphSource, Settings};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Routing,
    Tight,
    Sketch,
    Diameter,
    Gsf,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "routing" => Scheme::Routing,
            "tight" => Scheme::Tight,
            "sketch" => Scheme::Sketch,
            "diameter" => Scheme::Diameter,
            "gsf" => Scheme::Gsf,
            other => bail!("unknown scheme {other}"),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Routing => "routing",
            Scheme::Tight => "tight",
            Scheme::Sketch => "sketch",
            Scheme::Diameter => "diameter",
            Scheme::Gsf => "gsf",
        }
    }

    /// Routing schemes take `alpha`, the others `k`.
    pub fn uses_alpha(self) -> bool {
        matches!(self, Scheme::Routing | Scheme::Tight)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub scheme: Scheme,
    pub alpha: Option<String>,
    pub k: Option<usize>,
    pub seed: u64,
    pub bits: Option<u64>,
    pub retries: u32,
    pub out: Option<PathBuf>,
    pub oracle: bool,
    /// Random terminals for generated gsf instances.
    pub terminals: usize,
    pub components: u32,
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings, scheme: Scheme) -> Result<Self> {
        let oracle = match s.get("oracle").unwrap_or("on") {
            "on" => true,
            "off" => false,
            other => bail!("--oracle must be on or off, got {other}"),
        };
        let cfg = ExperimentConfig {
            graph: GraphSource::from_settings(s, None)?,
            scheme,
            alpha: s.get("alpha").map(str::to_string),
            k: s.parsed("k")?,
            seed: s.parsed_or("seed", 0)?,
            bits: s.parsed("bits")?,
            retries: s.parsed_or("retries", 5)?,
            out: s.get("out").map(PathBuf::from),
            oracle,
            terminals: s.parsed_or("terminals", 6)?,
            components: s.parsed_or("components", 2)?,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.scheme.uses_alpha() {
            let alpha = self.alpha.as_deref().context("this scheme needs --alpha")?;
            parse_alpha(alpha)?;
        } else if self.k.is_none() {
            bail!("this scheme needs --k");
        }
        if self.components == 0 {
            bail!("--components must be positive");
        }
        Ok(())
    }

    pub fn sim_config(&self, g: &WeightedGraph) -> Result<SimConfig> {
        let mut cfg = SimConfig::for_graph(g);
        if let Some(bits) = self.bits {
            cfg = cfg.with_bandwidth(bits);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One run's summary; the CSV columns follow the field order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub scheme: String,
    pub graph: String,
    pub n: usize,
    pub seed: u64,
    pub hd: usize,
    pub wd: Weight,
    pub alpha: Option<String>,
    pub k: Option<usize>,
    pub stages: Option<usize>,
    pub rounds: u64,
    pub messages: u64,
    pub retries: u32,
    pub max_stretch: Option<f64>,
    pub mean_stretch: Option<f64>,
    pub max_table_bits: Option<u64>,
    pub label_bits: Option<u64>,
    /// Diameter estimate or forest weight.
    pub result: Option<Weight>,
    pub status: String,
}

impl MetricsRecord {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Everything a single run produces.
pub struct RunOutput {
    pub record: MetricsRecord,
    pub dump: serde_json::Value,
}

struct Stretch {
    max: f64,
    sum: f64,
    count: u64,
}

impl Stretch {
    fn new() -> Self {
        Stretch { max: 1.0, sum: 0.0, count: 0 }
    }

    fn add(&mut self, got: Weight, exact: Weight) {
        if exact > 0 {
            let r = got as f64 / exact as f64;
            self.max = self.max.max(r);
            self.sum += r;
            self.count += 1;
        }
    }

    fn fill(&self, rec: &mut MetricsRecord, bound: f64) {
        rec.max_stretch = Some(self.max);
        rec.mean_stretch = Some(if self.count == 0 { 1.0 } else { self.sum / self.count as f64 });
        if self.max > bound {
            rec.status = format!("stretch {:.3} above bound {bound}", self.max);
        }
    }
}

/// Runs one experiment. Build failures become a record with a non-ok
/// status; only I/O and configuration problems are errors.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let (g, instance) = load(cfg)?;
    let m = metrics(&g);
    let mut rec = MetricsRecord {
        scheme: cfg.scheme.name().into(),
        graph: cfg.graph.name(),
        n: g.n(),
        seed: cfg.seed,
        hd: m.hd,
        wd: m.wd,
        alpha: cfg.alpha.clone().filter(|_| cfg.scheme.uses_alpha()),
        k: cfg.k.filter(|_| !cfg.scheme.uses_alpha()),
        status: "ok".into(),
        ..Default::default()
    };
    let sim = cfg.sim_config(&g)?;
    let result = match cfg.scheme {
        Scheme::Routing | Scheme::Tight => run_routing(cfg, &g, &sim, &mut rec),
        Scheme::Sketch => run_sketch(cfg, &g, &sim, &mut rec),
        Scheme::Diameter => run_diameter(cfg, &g, &sim, &mut rec),
        Scheme::Gsf => run_gsf(cfg, &g, instance.as_ref(), &sim, &mut rec),
    };
    let dump = match result {
        Ok(d) => d,
        Err(e) => {
            rec.status = format!("error: {e}");
            serde_json::Value::Null
        }
    };
    Ok(RunOutput { record: rec, dump })
}

fn load(cfg: &ExperimentConfig) -> Result<(WeightedGraph, Option<GsfInstance>)> {
    if let GraphSource::File(p) = &cfg.graph {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let (g, inst) = parse_gsf(&text)?;
        return Ok((g, (!inst.terminals.is_empty()).then_some(inst)));
    }
    Ok((cfg.graph.load(cfg.seed)?, None))
}

pub fn build_routing(cfg: &ExperimentConfig, g: &WeightedGraph, sim: &SimConfig) -> Result<Routing> {
    let alpha = parse_alpha(cfg.alpha.as_deref().context("missing alpha")?)?;
    let oracle = DistanceMatrix::new(g);
    let opts = RoutingOptions { retries: cfg.retries, seed: cfg.seed, ..Default::default() };
    Ok(build_tables(g, alpha, sim, &oracle, opts)?)
}

fn run_routing(cfg: &ExperimentConfig, g: &WeightedGraph, sim: &SimConfig, rec: &mut MetricsRecord) -> Result<serde_json::Value> {
    let rt = build_routing(cfg, g, sim)?;
    let wb = sim.word_bits;
    rec.k = Some(rt.params.k);
    rec.stages = Some(rt.params.stages);
    let mut trace = rt.trace;
    rec.max_table_bits = Some(rt.max_table_bits(wb));
    let tight = if cfg.scheme == Scheme::Tight {
        let tl = assign_tight_labels(g, &rt, sim)?;
        trace.then(&tl.trace);
        rec.label_bits = Some(bits_for(g.n() as u64) as u64);
        Some(tl)
    } else {
        rec.label_bits = Some(rt.labels.iter().map(|l| l.bits(wb)).max().unwrap_or(0));
        None
    };
    rec.rounds = trace.rounds;
    rec.messages = trace.messages;
    rec.retries = trace.retries;
    if cfg.oracle {
        let oracle = DistanceMatrix::new(g);
        let mut st = Stretch::new();
        for v in g.nodes() {
            for w in g.nodes() {
                let res = match &tight {
                    Some(tl) => tight_route(g, &rt, tl, v, tl.label(w))?,
                    None => rt.route(g, v, w)?,
                };
                st.add(res.weight, oracle.get(v, w));
            }
        }
        let bound = match tight {
            Some(_) => rt.params.tight_stretch(),
            None => rt.params.stretch(),
        };
        st.fill(rec, bound as f64);
    }
    let mut dump = serde_json::json!({
        "params": rt.params,
        "tables": rt.short.to_json(),
        "labels": rt.labels_json(),
        "spanner": rt.spanner.to_json(),
        "pointers": rt.pointers.to_json(),
    });
    if let Some(tl) = tight {
        dump["tight_labels"] = serde_json::json!(tl.labels);
    }
    Ok(dump)
}

fn run_sketch(cfg: &ExperimentConfig, g: &WeightedGraph, sim: &SimConfig, rec: &mut MetricsRecord) -> Result<serde_json::Value> {
    let k = cfg.k.context("missing k")?;
    let oracle = DistanceMatrix::new(g);
    let opts = SketchOptions { retries: cfg.retries, seed: cfg.seed, ..Default::default() };
    let sk = build_sketches(g, k, sim, &oracle, opts)?;
    let wb = sim.word_bits as u64;
    rec.stages = Some(2 * k);
    rec.rounds = sk.trace.rounds;
    rec.messages = sk.trace.messages;
    rec.retries = sk.trace.retries;
    rec.max_table_bits = Some(2 * wb * sk.max_entries() as u64);
    rec.label_bits = Some(2 * wb * 2 * k as u64);
    if cfg.oracle {
        let mut st = Stretch::new();
        for v in g.nodes() {
            for w in g.nodes() {
                st.add(sk.estimate(v, w), oracle.get(v, w));
            }
        }
        st.fill(rec, sk.stretch_bound() as f64);
    }
    Ok(sk.to_json())
}

fn run_diameter(cfg: &ExperimentConfig, g: &WeightedGraph, sim: &SimConfig, rec: &mut MetricsRecord) -> Result<serde_json::Value> {
    let k = cfg.k.context("missing k")?;
    let oracle = cfg.oracle.then(|| DistanceMatrix::new(g));
    let opts = DiameterOptions { retries: cfg.retries, seed: cfg.seed, ..Default::default() };
    let d = approx_diameter(g, k, sim, oracle.as_ref(), &opts)?;
    rec.rounds = d.trace.rounds;
    rec.messages = d.trace.messages;
    rec.retries = d.trace.retries;
    rec.result = Some(d.estimate);
    if cfg.oracle {
        let mut st = Stretch::new();
        st.add(d.estimate, rec.wd);
        st.fill(rec, (2 * k + 1) as f64);
        if d.estimate < rec.wd {
            rec.status = format!("estimate {} below the diameter {}", d.estimate, rec.wd);
        }
    }
    Ok(serde_json::to_value(&d)?)
}

/// Random terminals with random component ids, seeded.
pub fn random_instance(n: usize, terminals: usize, components: u32, seed: u64) -> Result<GsfInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = sample(&mut rng, n, terminals.min(n));
    let list = picked.into_iter().map(|x| (NodeId::from_index(x), rng.gen_range(0..components))).collect();
    Ok(GsfInstance::new(n, list)?)
}

fn run_gsf(
    cfg: &ExperimentConfig,
    g: &WeightedGraph,
    instance: Option<&GsfInstance>,
    sim: &SimConfig,
    rec: &mut MetricsRecord,
) -> Result<serde_json::Value> {
    let k = cfg.k.context("missing k")?;
    let inst = match instance {
        Some(i) => i.clone(),
        None => random_instance(g.n(), cfg.terminals, cfg.components, cfg.seed)?,
    };
    let opts = GsfOptions { retries: cfg.retries, seed: cfg.seed, ..Default::default() };
    let sol = gsf_solve(g, &inst, k, sim, opts)?;
    rec.rounds = sol.trace.rounds;
    rec.messages = sol.trace.messages;
    rec.retries = sol.trace.retries;
    rec.result = Some(sol.weight);
    let exact = cfg.oracle && inst.terminals.len() <= MAX_EXACT_TERMINALS;
    let oracle = exact.then(|| DistanceMatrix::new(g));
    let report = gsf_verify(g, &inst, &sol.edges, k, 2, oracle.as_ref())?;
    if let Some(opt) = report.opt {
        let mut st = Stretch::new();
        st.add(sol.weight, opt);
        st.fill(rec, report.factor as f64);
    }
    if !report.ok {
        rec.status = if report.feasible { "weight above bound".into() } else { "infeasible".into() };
    }
    Ok(serde_json::json!({ "instance": inst, "solution": sol, "report": report }))
}
