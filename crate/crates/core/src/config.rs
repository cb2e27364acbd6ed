//! Run configuration in a `key = value` text format.
//!
//! Blank lines and lines starting with `#` are ignored. List values are
//! comma separated. Unknown keys are errors.
//!
//! ```text
//! dataset = star
//! k = 5
//! n = 30
//! m_values = 20, 40, 60
//! trials = 20
//! method = qumf
//! backend = sa
//! anneals = 100
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annealer::AnnealConfig;
use crate::datagen::{DEFAULT_EPSILON, DEFAULT_NOISE_SIGMA};
use crate::error::{Error, Result};
use crate::qubo::DEFAULT_LAMBDA;
use crate::solver::{Backend, Decomposition, SolveConfig, DEFAULT_SUBPROBLEM_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Qumf,
    Dequmf,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qumf" => Ok(Method::Qumf),
            "dequmf" => Ok(Method::Dequmf),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Qumf => "qumf",
            Method::Dequmf => "dequmf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    /// Star of `k` lines.
    Star,
    /// One line plus uniform clutter, evaluated in single-model mode.
    Clutter,
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(DatasetKind::Star),
            "clutter" => Ok(DatasetKind::Clutter),
            other => Err(Error::InvalidConfig(format!("unknown dataset {other:?}"))),
        }
    }
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Star => "star",
            DatasetKind::Clutter => "clutter",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetKind,
    pub k: usize,
    pub n: usize,
    /// Off-model points for the clutter dataset.
    pub clutter: usize,
    pub noise_sigma: f64,
    pub epsilon: f64,
    pub m_values: Vec<usize>,
    pub include_ground_truth: bool,
    pub method: Method,
    pub backend: Backend,
    pub lambda: f64,
    pub anneals: usize,
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub subproblem_size: usize,
    /// Top-level seed; trial `t` uses `seed + t`.
    pub seed: u64,
    pub trials: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let anneal = AnnealConfig::default();
        Self {
            dataset: DatasetKind::Star,
            k: 5,
            n: 250,
            clutter: 0,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            epsilon: DEFAULT_EPSILON,
            m_values: vec![100],
            include_ground_truth: true,
            method: Method::Qumf,
            backend: Backend::Sa,
            lambda: DEFAULT_LAMBDA,
            anneals: anneal.num_anneals,
            sweeps: anneal.sweeps_per_anneal,
            beta_start: anneal.beta_start,
            beta_end: anneal.beta_end,
            subproblem_size: DEFAULT_SUBPROBLEM_SIZE,
            seed: 0,
            trials: 1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value {value:?} for {key}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dataset" => self.dataset = value.parse()?,
            "k" => self.k = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "clutter" => self.clutter = parse(key, value)?,
            "noise_sigma" => self.noise_sigma = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "m" | "m_values" => self.m_values = parse_list(key, value)?,
            "include_ground_truth" => self.include_ground_truth = parse(key, value)?,
            "method" => self.method = value.parse()?,
            "backend" => self.backend = value.parse()?,
            "lambda" => self.lambda = parse(key, value)?,
            "anneals" => self.anneals = parse(key, value)?,
            "sweeps" => self.sweeps = parse(key, value)?,
            "beta_start" => self.beta_start = parse(key, value)?,
            "beta_end" => self.beta_end = parse(key, value)?,
            "subproblem_size" => self.subproblem_size = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Canonical text form; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let m: Vec<String> = self.m_values.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "dataset = {}", self.dataset.as_str());
        let _ = writeln!(out, "k = {}", self.k);
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "clutter = {}", self.clutter);
        let _ = writeln!(out, "noise_sigma = {:?}", self.noise_sigma);
        let _ = writeln!(out, "epsilon = {:?}", self.epsilon);
        let _ = writeln!(out, "m_values = {}", m.join(", "));
        let _ = writeln!(out, "include_ground_truth = {}", self.include_ground_truth);
        let _ = writeln!(out, "method = {}", self.method.as_str());
        let _ = writeln!(out, "backend = {}", backend_name(self.backend));
        let _ = writeln!(out, "lambda = {:?}", self.lambda);
        let _ = writeln!(out, "anneals = {}", self.anneals);
        let _ = writeln!(out, "sweeps = {}", self.sweeps);
        let _ = writeln!(out, "beta_start = {:?}", self.beta_start);
        let _ = writeln!(out, "beta_end = {:?}", self.beta_end);
        let _ = writeln!(out, "subproblem_size = {}", self.subproblem_size);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "trials = {}", self.trials);
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_values.is_empty() {
            return Err(Error::InvalidConfig("m grid is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive".into()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        self.solve_config(0).validate()
    }

    /// Solver settings with anneal and partition streams derived from `seed`.
    pub fn solve_config(&self, seed: u64) -> SolveConfig {
        SolveConfig {
            lambda: self.lambda,
            backend: self.backend,
            anneal: AnnealConfig {
                num_anneals: self.anneals,
                sweeps_per_anneal: self.sweeps,
                beta_start: self.beta_start,
                beta_end: self.beta_end,
                seed: crate::seed::derive(seed, "anneal", 0),
            },
            decomposition: match self.method {
                Method::Qumf => None,
                Method::Dequmf => Some(Decomposition {
                    subproblem_size: self.subproblem_size,
                    partition_seed: crate::seed::derive(seed, "partition", 0),
                }),
            },
        }
    }
}

pub fn backend_name(b: Backend) -> &'static str {
    match b {
        Backend::Sa => "sa",
        Backend::Exhaustive => "exhaustive",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let cfg = RunConfig {
            m_values: vec![20, 40],
            method: Method::Dequmf,
            backend: Backend::Exhaustive,
            lambda: 0.1 + 0.2,
            trials: 3,
            ..Default::default()
        };
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn parse_errors() {
        assert!(RunConfig::parse("nonsense").is_err());
        assert!(RunConfig::parse("colour = red").is_err());
        assert!(RunConfig::parse("k = five").is_err());
        let cfg = RunConfig::parse("# comment\n\nm = 5, 6 ,\nmethod=dequmf\n").unwrap();
        assert_eq!(cfg.m_values, vec![5, 6]);
        assert_eq!(cfg.method, Method::Dequmf);
        let empty = RunConfig {
            m_values: vec![],
            ..Default::default()
        };
        assert!(empty.validate().is_err());
    }
}
