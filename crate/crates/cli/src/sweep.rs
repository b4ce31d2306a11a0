use anyhow::{bail, Result};

use crate::config::Settings;
use crate::experiment::{self, ExperimentConfig, MetricsRecord, Scheme};

/// Runs every `(n, alpha or k, seed)` combination in that nesting order.
/// A failing run becomes a row with its status; the sweep continues.
pub fn run_sweep(s: &Settings, scheme: Scheme) -> Result<Vec<MetricsRecord>> {
    if s.get("graph").is_some() {
        bail!("sweep generates its graphs; use --family instead of --graph");
    }
    let ns: Vec<usize> = s.list("ns")?;
    let params: Vec<String> = if scheme.uses_alpha() { s.list("alphas")? } else { s.list("ks")? };
    let seeds: Vec<u64> = s.list("seeds")?;
    let mut base = s.clone();
    if base.get("family").is_none() {
        base.set("family", "random");
    }
    let mut rows = Vec::with_capacity(ns.len() * params.len() * seeds.len());
    for &n in &ns {
        for param in &params {
            for &seed in &seeds {
                let mut row = base.clone();
                row.set("n", n);
                row.set(if scheme.uses_alpha() { "alpha" } else { "k" }, param);
                row.set("seed", seed);
                let record = ExperimentConfig::from_settings(&row, scheme)
                    .and_then(|cfg| experiment::run(&cfg))
                    .map(|out| out.record)
                    .unwrap_or_else(|e| MetricsRecord {
                        scheme: scheme.name().into(),
                        n,
                        seed,
                        status: format!("error: {e:#}"),
                        ..Default::default()
                    });
                rows.push(record);
            }
        }
    }
    Ok(rows)
}

pub fn to_csv(records: &[MetricsRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Column names in `MetricsRecord` field order.
pub const HEADER: [&str; 18] = [
    "scheme",
    "graph",
    "n",
    "seed",
    "hd",
    "wd",
    "alpha",
    "k",
    "stages",
    "rounds",
    "messages",
    "retries",
    "max_stretch",
    "mean_stretch",
    "max_table_bits",
    "label_bits",
    "result",
    "status",
];
