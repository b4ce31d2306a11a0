//! Flat `key=value` settings. The config file is read first and command-line
//! flags override it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use congest_routing::generate::Family;
use congest_routing::WeightedGraph;

#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {}: expected key=value", no + 1);
            };
            values.insert(normalize(key), value.trim().to_string());
        }
        Ok(Settings { values })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(normalize(key), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| anyhow::anyhow!("{key}={v}: {e}")),
        }
    }

    pub fn parsed_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(Vec::new()),
            Some(v) => parse_list(v).with_context(|| format!("{key}={v}")),
        }
    }
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Comma-separated values; `a..b` expands to the inclusive integer range.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let (lo, hi): (u64, u64) = (lo.trim().parse()?, hi.trim().parse()?);
            for x in lo..=hi {
                out.push(x.to_string().parse().map_err(|e| anyhow::anyhow!("{e}"))?);
            }
        } else {
            out.push(part.parse().map_err(|e| anyhow::anyhow!("{part}: {e}"))?);
        }
    }
    Ok(out)
}

/// Where the graph comes from: a file or a generator.
#[derive(Clone, Debug)]
pub enum GraphSource {
    File(PathBuf),
    Generated(Family),
}

impl GraphSource {
    /// Exactly one of `graph` and `family` must be set. `n` overrides the
    /// size of sized families.
    pub fn from_settings(s: &Settings, n: Option<usize>) -> Result<Self> {
        match (s.get("graph"), s.get("family")) {
            (Some(_), Some(_)) => bail!("give either a graph file or a family, not both"),
            (Some(path), None) => Ok(GraphSource::File(PathBuf::from(path))),
            (None, Some(name)) => Ok(GraphSource::Generated(family(s, name, n)?)),
            (None, None) => bail!("no graph: pass --graph FILE or --family NAME"),
        }
    }

    pub fn name(&self) -> String {
        match self {
            GraphSource::File(p) => p.display().to_string(),
            GraphSource::Generated(f) => f.name().to_string(),
        }
    }

    pub fn load(&self, seed: u64) -> Result<WeightedGraph> {
        Ok(match self {
            GraphSource::File(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                congest_routing::ext::gsf::parse_gsf(&text)?.0
            }
            GraphSource::Generated(f) => congest_routing::generate::generate(f, seed)?,
        })
    }
}

fn family(s: &Settings, name: &str, n: Option<usize>) -> Result<Family> {
    let n = match n {
        Some(n) => Some(n),
        None => s.parsed("n")?,
    };
    let need_n = || n.context("this family needs --n");
    Ok(match name {
        "random" | "random_weighted" => {
            Family::RandomWeighted { n: need_n()?, p: s.parsed("p")?, max_weight: s.parsed("max_weight")? }
        }
        "path" => Family::Path { n: need_n()?, weight: s.parsed_or("weight", 1)? },
        "star" => Family::Star { n: need_n()? },
        "tree" => Family::Tree { n: need_n()?, max_weight: s.parsed_or("max_weight", 100)? },
        "grid" => Family::Grid {
            rows: s.parsed("rows")?.context("grid needs --rows")?,
            cols: s.parsed("cols")?.context("grid needs --cols")?,
            max_weight: s.parsed_or("max_weight", 100)?,
        },
        "lb_diameter" => Family::LbDiameter {
            m: s.parsed("m")?.context("lb_diameter needs --m")?,
            omega_max: s.parsed("omega_max")?.context("lb_diameter needs --omega-max")?,
            a: s.list("a")?,
            b: s.list("b")?,
        },
        other => bail!("unknown family {other}"),
    })
}
