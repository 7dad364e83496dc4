use crate::error::{Error, Result};
use crate::model::ModelParams;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// The four experiment drivers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ExperimentId {
    /// Poisson central-limit diagnostics of the rescaled `G` vector.
    E1,
    /// Vanishing of `E G_s` in repulsive submodels of order `s`.
    E2,
    /// Convergence of full-order correlation functions to their limits.
    E3,
    /// Large-intensity mean and variance of `G_{d-k}` in the full-order model.
    E4,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 4] = [ExperimentId::E1, ExperimentId::E2, ExperimentId::E3, ExperimentId::E4];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::E1 => "e1",
            ExperimentId::E2 => "e2",
            ExperimentId::E3 => "e3",
            ExperimentId::E4 => "e4",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}' (expected e1, e2, e3 or e4)")))
    }
}

/// Fully resolved experiment configuration.
///
/// The text format is one `key = value` per line; `#` starts a comment.
/// Keys:
///
/// | key | meaning |
/// |---|---|
/// | `experiment` | `e1`..`e4` |
/// | `d`, `b` | dimension and window side / facet half extent |
/// | `nu.1` .. `nu.d` | interaction parameters (missing ones are 0) |
/// | `chi.const` | constant center intensity |
/// | `a.grid` | comma-separated increasing scales |
/// | `replicates` | Poisson replicates (e1) or independent chains (e2, e4) |
/// | `chain.steps`, `chain.burnin`, `chain.thin`, `chain.batches` | chain run length per grid point and chain |
/// | `order` | submodel order `s` (e2; inferred from `nu` when absent) |
/// | `k` | codimension `k` of the studied statistic `G_{d-k}` (e4) |
/// | `control.replicates` | Poisson control replicates (e2) |
/// | `moment.samples` | Monte Carlo draws per stratum for Poisson moments |
/// | `covariance.samples`, `quadrature.resolution` | asymptotic covariance / integral accuracy |
/// | `series.tolerance` | relative tail target of correlation series |
/// | `seed` | master seed |
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub d: usize,
    pub b: f64,
    pub nu: Vec<f64>,
    pub chi: f64,
    pub a_grid: Vec<f64>,
    pub replicates: usize,
    pub chain_steps: u64,
    /// `None`: `10 aT` steps.
    pub chain_burnin: Option<u64>,
    /// `None`: `max(1, round(aT / 10))`.
    pub chain_thin: Option<u64>,
    pub chain_batches: usize,
    pub order: Option<usize>,
    pub k: usize,
    pub control_replicates: usize,
    pub moment_samples: usize,
    pub covariance_samples: usize,
    pub quadrature_resolution: usize,
    pub series_tolerance: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment.
    pub fn defaults(id: ExperimentId) -> Self {
        let base = ExperimentConfig {
            experiment: id,
            d: 2,
            b: 1.0,
            nu: vec![0.0; 2],
            chi: 1.0,
            a_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            replicates: 1,
            chain_steps: 1_000_000,
            chain_burnin: None,
            chain_thin: None,
            chain_batches: 32,
            order: None,
            k: 1,
            control_replicates: 400,
            moment_samples: 4000,
            covariance_samples: 2000,
            quadrature_resolution: 256,
            series_tolerance: crate::correlation::DEFAULT_TOLERANCE,
            seed: 1,
        };
        match id {
            ExperimentId::E1 => {
                ExperimentConfig { a_grid: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0], replicates: 5000, ..base }
            }
            // chi = 4 puts the grid past the maximum of E G_2 in a, which for
            // chi = 1 lies near a = 3.
            ExperimentId::E2 => ExperimentConfig { nu: vec![0.0, -2.0], chi: 4.0, chain_thin: Some(1), ..base },
            ExperimentId::E3 => ExperimentConfig {
                d: 3,
                nu: vec![0.0, 0.0, -1.0],
                a_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
                ..base
            },
            ExperimentId::E4 => ExperimentConfig { d: 3, nu: vec![0.0, 0.0, -1.0], chain_thin: Some(1), ..base },
        }
    }

    /// Parses configuration text on top of the defaults of `fallback` (or of
    /// the experiment named in the text).
    pub fn parse(text: &str, fallback: ExperimentId) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value', got '{line}'", lineno + 1)))?;
            pairs.push((key.trim().to_string(), value.trim().to_string(), lineno + 1));
        }
        let id = match pairs.iter().find(|(k, _, _)| k == "experiment") {
            Some((_, v, _)) => v.parse()?,
            None => fallback,
        };
        let mut cfg = ExperimentConfig::defaults(id);
        // `d` first so that interaction keys can be checked against it.
        if let Some((_, v, line)) = pairs.iter().find(|(k, _, _)| k == "d") {
            cfg.d = parse_value(v, "d", *line)?;
            cfg.nu = vec![0.0; cfg.d];
        }
        let mut nu_given = false;
        for (key, value, line) in &pairs {
            let line = *line;
            match key.as_str() {
                "experiment" | "d" => {}
                "b" => cfg.b = parse_value(value, key, line)?,
                "chi.const" => cfg.chi = parse_value(value, key, line)?,
                "a.grid" => {
                    cfg.a_grid =
                        value.split(',').map(|v| parse_value(v.trim(), key, line)).collect::<Result<Vec<f64>>>()?
                }
                "replicates" => cfg.replicates = parse_value(value, key, line)?,
                "chain.steps" => cfg.chain_steps = parse_value(value, key, line)?,
                "chain.burnin" => cfg.chain_burnin = parse_optional(value, key, line)?,
                "chain.thin" => cfg.chain_thin = parse_optional(value, key, line)?,
                "chain.batches" => cfg.chain_batches = parse_value(value, key, line)?,
                "order" => cfg.order = parse_optional(value, key, line)?,
                "k" => cfg.k = parse_value(value, key, line)?,
                "control.replicates" => cfg.control_replicates = parse_value(value, key, line)?,
                "moment.samples" => cfg.moment_samples = parse_value(value, key, line)?,
                "covariance.samples" => cfg.covariance_samples = parse_value(value, key, line)?,
                "quadrature.resolution" => cfg.quadrature_resolution = parse_value(value, key, line)?,
                "series.tolerance" => cfg.series_tolerance = parse_value(value, key, line)?,
                "seed" => cfg.seed = parse_value(value, key, line)?,
                other => match other.strip_prefix("nu.").map(str::parse::<usize>) {
                    Some(Ok(j)) if (1..=cfg.d).contains(&j) => {
                        if !nu_given {
                            cfg.nu = vec![0.0; cfg.d];
                            nu_given = true;
                        }
                        cfg.nu[j - 1] = parse_value(value, key, line)?;
                    }
                    Some(_) => {
                        return Err(Error::Config(format!("line {line}: '{other}' is not nu.1 .. nu.{}", cfg.d)))
                    }
                    None => return Err(Error::Config(format!("line {line}: unknown key '{other}'"))),
                },
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, fallback: ExperimentId) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, fallback)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=crate::geometry::MAX_DIM).contains(&self.d) {
            return Err(Error::Dimension(self.d));
        }
        if self.nu.len() != self.d {
            return Err(Error::Config(format!("{} interaction parameters for d = {}", self.nu.len(), self.d)));
        }
        if self.a_grid.is_empty() {
            return Err(Error::Config("a.grid must not be empty".into()));
        }
        if self.a_grid.windows(2).any(|w| !(w[0] < w[1])) || self.a_grid.iter().any(|a| !(*a >= 1.0)) {
            return Err(Error::Config("a.grid must be strictly increasing with values >= 1".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if !(self.b > 0.0 && self.chi > 0.0) {
            return Err(Error::Config("b and chi.const must be positive".into()));
        }
        if self.chain_thin == Some(0) {
            return Err(Error::Config("chain.thin must be >= 1".into()));
        }
        if !(self.series_tolerance > 0.0) {
            return Err(Error::Config("series.tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Special-model parameters at scale `a`.
    pub fn params(&self, a: f64) -> Result<ModelParams> {
        ModelParams::special(self.d, self.b, self.nu.clone(), a, self.chi)
    }

    /// Every key with its resolved value, in canonical order.
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let opt = |v: Option<u64>| v.map_or_else(|| "auto".to_string(), |v| v.to_string());
        let mut m = BTreeMap::new();
        m.insert("experiment".into(), self.experiment.to_string());
        m.insert("d".into(), self.d.to_string());
        m.insert("b".into(), self.b.to_string());
        for (j, v) in self.nu.iter().enumerate() {
            m.insert(format!("nu.{}", j + 1), v.to_string());
        }
        m.insert("chi.const".into(), self.chi.to_string());
        m.insert("a.grid".into(), self.a_grid.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        m.insert("replicates".into(), self.replicates.to_string());
        m.insert("chain.steps".into(), self.chain_steps.to_string());
        m.insert("chain.burnin".into(), opt(self.chain_burnin));
        m.insert("chain.thin".into(), opt(self.chain_thin));
        m.insert("chain.batches".into(), self.chain_batches.to_string());
        m.insert("order".into(), opt(self.order.map(|o| o as u64)));
        m.insert("k".into(), self.k.to_string());
        m.insert("control.replicates".into(), self.control_replicates.to_string());
        m.insert("moment.samples".into(), self.moment_samples.to_string());
        m.insert("covariance.samples".into(), self.covariance_samples.to_string());
        m.insert("quadrature.resolution".into(), self.quadrature_resolution.to_string());
        m.insert("series.tolerance".into(), self.series_tolerance.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m
    }

    /// Configuration text that parses back to `self`.
    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn parse_value<T: FromStr>(value: &str, key: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("line {line}: cannot parse '{value}' for key '{key}'")))
}

fn parse_optional<T: FromStr>(value: &str, key: &str, line: usize) -> Result<Option<T>> {
    if value == "auto" {
        return Ok(None);
    }
    parse_value(value, key, line).map(Some)
}
