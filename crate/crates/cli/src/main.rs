mod config;
mod experiment;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use congest_routing::generate::generate;
use congest_routing::graph::save_graph;
use congest_routing::oracle::DistanceMatrix;
use congest_routing::routing::tight::{assign_tight_labels, tight_route};
use congest_routing::NodeId;

use config::{GraphSource, Settings};
use experiment::{build_routing, ExperimentConfig, Scheme};

#[derive(Parser)]
#[command(name = "congest-route", version, about = "Build and measure CONGEST routing schemes on generated or given graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write it as an edge list.
    Gen(Common),
    /// Build a scheme and report its metrics as JSON.
    Build {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: Option<String>,
        /// Write tables and labels as JSON.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Route one packet with the routing scheme.
    Route {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        from: u32,
        #[arg(long)]
        to: u32,
        /// Use the relabeled scheme; `--to` is then an original id.
        #[arg(long)]
        tight: bool,
    },
    /// Estimate one distance with the routing tables or the sketches.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        from: u32,
        #[arg(long)]
        to: u32,
        /// routing or sketch.
        #[arg(long, default_value = "routing")]
        scheme: String,
    },
    /// Build distance sketches (same as `build --scheme sketch`).
    Sketch(Common),
    /// Approximate the weighted diameter.
    Diameter(Common),
    /// Solve a generalized Steiner forest instance.
    Gsf(Common),
    /// Run a parameter matrix and write one CSV row per run.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: Option<String>,
        /// Sizes, e.g. `32,64`.
        #[arg(long)]
        ns: Option<String>,
        /// Values of alpha for routing schemes, e.g. `0.75,1`.
        #[arg(long)]
        alphas: Option<String>,
        /// Values of k for the other schemes.
        #[arg(long)]
        ks: Option<String>,
        /// Seeds, e.g. `0..4` (inclusive) or `1,5`.
        #[arg(long)]
        seeds: Option<String>,
    },
}

/// Flags shared by all commands; each overrides the config file value of
/// the same name.
#[derive(Args, Default)]
struct Common {
    /// key=value file with defaults for any flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge-list file; for gsf it may carry `T node component` lines.
    #[arg(long)]
    graph: Option<String>,
    /// random, path, star, tree, grid or lb_diameter.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    max_weight: Option<u64>,
    #[arg(long)]
    weight: Option<u64>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    omega_max: Option<u64>,
    /// Alice's rows for lb_diameter, comma-separated.
    #[arg(long)]
    a: Option<String>,
    /// Bob's rows for lb_diameter.
    #[arg(long)]
    b: Option<String>,
    /// Trade-off in [1/2, 1], as `3/4` or `0.75`.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bandwidth B in bits per edge per round.
    #[arg(long)]
    bits: Option<u64>,
    #[arg(long)]
    retries: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// on or off: compare against exact distances.
    #[arg(long)]
    oracle: Option<String>,
    /// Random terminals for gsf on a generated graph.
    #[arg(long)]
    terminals: Option<usize>,
    #[arg(long)]
    components: Option<u32>,
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        macro_rules! put {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    s.set(stringify!($field), v);
                })*
            };
        }
        put!(graph, family, n, p, max_weight, weight, rows, cols, m, omega_max, a, b, alpha, k, seed, bits, retries, oracle, terminals, components);
        if let Some(out) = &self.out {
            s.set("out", out.display());
        }
        Ok(s)
    }
}

fn write_output(out: Option<&str>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {path}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn node(g: &congest_routing::WeightedGraph, id: u32) -> Result<NodeId> {
    if id == 0 || id as usize > g.n() {
        bail!("node {id} outside 1..={}", g.n());
    }
    Ok(NodeId(id))
}

/// Runs a single experiment; returns whether it validated.
fn single(s: &Settings, scheme: Scheme, dump: Option<PathBuf>) -> Result<bool> {
    let cfg = ExperimentConfig::from_settings(s, scheme)?;
    let out = experiment::run(&cfg)?;
    if let Some(path) = dump {
        std::fs::write(&path, serde_json::to_string_pretty(&out.dump)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let json = serde_json::to_string_pretty(&out.record)? + "\n";
    write_output(cfg.out.as_deref().and_then(|p| p.to_str()), &json)?;
    if !out.record.ok() {
        eprintln!("run did not validate: {}", out.record.status);
    }
    Ok(out.record.ok())
}

fn scheme_of(s: &Settings, flag: Option<String>, default: &str) -> Result<Scheme> {
    Scheme::parse(flag.as_deref().or(s.get("scheme")).unwrap_or(default))
}

fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Gen(common) => {
            let s = common.settings()?;
            let GraphSource::Generated(family) = GraphSource::from_settings(&s, None)? else {
                bail!("gen needs --family");
            };
            let g = generate(&family, s.parsed_or("seed", 0)?)?;
            match s.get("out") {
                Some(path) => save_graph(&g, path)?,
                None => print!("{}", g.to_edge_list()),
            }
            Ok(true)
        }
        Command::Build { common, scheme, dump } => {
            let s = common.settings()?;
            let scheme = scheme_of(&s, scheme, "routing")?;
            single(&s, scheme, dump)
        }
        Command::Sketch(common) => single(&common.settings()?, Scheme::Sketch, None),
        Command::Diameter(common) => single(&common.settings()?, Scheme::Diameter, None),
        Command::Gsf(common) => single(&common.settings()?, Scheme::Gsf, None),
        Command::Route { common, from, to, tight } => {
            let s = common.settings()?;
            let cfg = ExperimentConfig::from_settings(&s, Scheme::Routing)?;
            let g = cfg.graph.load(cfg.seed)?;
            let sim = cfg.sim_config(&g)?;
            let (v, w) = (node(&g, from)?, node(&g, to)?);
            let rt = build_routing(&cfg, &g, &sim)?;
            let res = if tight {
                let tl = assign_tight_labels(&g, &rt, &sim)?;
                tight_route(&g, &rt, &tl, v, tl.label(w))?
            } else {
                rt.route(&g, v, w)?
            };
            let mut json = serde_json::json!({
                "from": from,
                "to": to,
                "path": res.path.iter().map(|x| x.0).collect::<Vec<_>>(),
                "weight": res.weight,
                "estimate": res.estimate,
            });
            if cfg.oracle {
                json["distance"] = DistanceMatrix::new(&g).get(v, w).into();
            }
            write_output(s.get("out"), &(serde_json::to_string_pretty(&json)? + "\n"))?;
            Ok(true)
        }
        Command::Estimate { common, from, to, scheme } => {
            let s = common.settings()?;
            let scheme = Scheme::parse(&scheme)?;
            let cfg = ExperimentConfig::from_settings(&s, scheme)?;
            let g = cfg.graph.load(cfg.seed)?;
            let sim = cfg.sim_config(&g)?;
            let (v, w) = (node(&g, from)?, node(&g, to)?);
            let estimate = match scheme {
                Scheme::Routing => build_routing(&cfg, &g, &sim)?.estimate(v, w)?,
                Scheme::Sketch => {
                    let oracle = DistanceMatrix::new(&g);
                    let opts = congest_routing::ext::sketch::SketchOptions {
                        retries: cfg.retries,
                        seed: cfg.seed,
                        ..Default::default()
                    };
                    let k = cfg.k.context("missing k")?;
                    congest_routing::ext::sketch::build_sketches(&g, k, &sim, &oracle, opts)?.estimate(v, w)
                }
                _ => bail!("estimate supports routing and sketch"),
            };
            let mut json = serde_json::json!({ "from": from, "to": to, "estimate": estimate });
            if cfg.oracle {
                json["distance"] = DistanceMatrix::new(&g).get(v, w).into();
            }
            write_output(s.get("out"), &(serde_json::to_string_pretty(&json)? + "\n"))?;
            Ok(true)
        }
        Command::Sweep { common, scheme, ns, alphas, ks, seeds } => {
            let mut s = common.settings()?;
            for (key, value) in [("ns", ns), ("alphas", alphas), ("ks", ks), ("seeds", seeds)] {
                if let Some(v) = value {
                    s.set(key, v);
                }
            }
            let scheme = scheme_of(&s, scheme, "routing")?;
            let records = sweep::run_sweep(&s, scheme)?;
            let csv = sweep::to_csv(&records)?;
            write_output(s.get("out"), &csv)?;
            Ok(records.iter().all(|r| r.ok()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
