//! Scenario files: flat `key = value` lines grouped under `[scenario]` or
//! `[scenario NAME]` headers. Keys that appear before the first header are
//! defaults shared by every scenario.
//!
//! ```text
//! runs = 50
//! iterations = 50
//!
//! [scenario small]
//! field_side = 40
//! comm_range = 10
//! sink = 20, 40
//! source_fraction = 1.0
//! nodes = 15
//! deadline = 2, 3, 4, 5, 6
//! algorithms = Z-Optimal, Approx-1H, FastInitTree
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::schedule::Slots;
use crate::topology::{FieldSpec, Point};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("scenario `{scenario}`: {msg}")]
    Invalid { scenario: String, msg: String },
    #[error("cannot read config: {0}")]
    Io(String),
}

/// The algorithms compared by the runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    ZOptimal,
    Approx1,
    Approx2,
    Approx1H,
    Approx2H,
    FastInitTree,
    /// Optimal scheduling on the Greedy Incremental Tree.
    Baseline,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::ZOptimal,
        Algorithm::Approx1,
        Algorithm::Approx2,
        Algorithm::Approx1H,
        Algorithm::Approx2H,
        Algorithm::FastInitTree,
        Algorithm::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ZOptimal => "Z-Optimal",
            Algorithm::Approx1 => "Approx-1",
            Algorithm::Approx2 => "Approx-2",
            Algorithm::Approx1H => "Approx-1H",
            Algorithm::Approx2H => "Approx-2H",
            Algorithm::FastInitTree => "FastInitTree",
            Algorithm::Baseline => "Baseline",
        }
    }

    pub(crate) fn index(self) -> usize {
        Algorithm::ALL.iter().position(|&a| a == self).unwrap()
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "zoptimal" | "optimal" | "exact" => Algorithm::ZOptimal,
            "approx1" => Algorithm::Approx1,
            "approx2" => Algorithm::Approx2,
            "approx1h" => Algorithm::Approx1H,
            "approx2h" => Algorithm::Approx2H,
            "fastinittree" | "fast" => Algorithm::FastInitTree,
            "baseline" | "git" => Algorithm::Baseline,
            _ => return Err(format!("unknown algorithm `{s}`")),
        })
    }
}

/// Deadlines to evaluate on each deployment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeadlineSpec {
    /// Every listed deadline, on the same deployment.
    List(Vec<Slots>),
    /// One deadline drawn uniformly from `lo..=hi` per deployment.
    Uniform { lo: Slots, hi: Slots },
}

impl FromStr for DeadlineSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some((a, b)) = s.split_once("..") {
            let lo = parse_num(a)?;
            let hi = parse_num(b.trim_start_matches('='))?;
            return Ok(DeadlineSpec::Uniform { lo, hi });
        }
        Ok(DeadlineSpec::List(parse_list(s)?))
    }
}

impl fmt::Display for DeadlineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeadlineSpec::List(ds) => {
                let parts: Vec<String> = ds.iter().map(Slots::to_string).collect();
                f.write_str(&parts.join(", "))
            }
            DeadlineSpec::Uniform { lo, hi } => write!(f, "{lo}..{hi}"),
        }
    }
}

/// Which quantity labels the points of `summary.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XAxis {
    Nodes,
    Deadline,
    Beta,
    Iterations,
}

impl FromStr for XAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "v" | "nodes" => Ok(XAxis::Nodes),
            "d" | "deadline" => Ok(XAxis::Deadline),
            "beta" => Ok(XAxis::Beta),
            "iterations" => Ok(XAxis::Iterations),
            other => Err(format!("unknown x axis `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    /// Square side; the field is `field_side x field_side` meters.
    pub field_side: f64,
    pub comm_range: f64,
    pub sink: Point,
    pub source_fraction: f64,
    pub node_counts: Vec<usize>,
    pub deadline: DeadlineSpec,
    pub alpha: f64,
    pub beta: f64,
    pub runs: usize,
    pub iterations: usize,
    pub algorithms: Vec<Algorithm>,
    pub base_seed: u64,
    /// Z-Optimal is skipped above this many sensors.
    pub exact_cap: usize,
    /// Deployment draws before a point is recorded as failed.
    pub max_attempts: usize,
    /// `None` picks the deadline when several are listed, else the node count.
    pub x_axis: Option<XAxis>,
}

impl ScenarioConfig {
    /// 300 m field, 75 m range, sink at the middle of the top edge, 80%
    /// sources, deadline drawn from `10..=20`, `alpha = 0.2`, `beta = 2`,
    /// 50 runs of 50 iterations.
    pub fn standard(name: &str) -> Self {
        let f = FieldSpec::standard();
        ScenarioConfig {
            name: name.to_string(),
            field_side: f.width,
            comm_range: f.comm_range,
            sink: f.sink,
            source_fraction: f.source_fraction,
            node_counts: vec![100],
            deadline: DeadlineSpec::Uniform { lo: 10, hi: 20 },
            alpha: 0.2,
            beta: 2.0,
            runs: 50,
            iterations: 50,
            algorithms: vec![
                Algorithm::Approx1,
                Algorithm::Approx2,
                Algorithm::Approx1H,
                Algorithm::Approx2H,
                Algorithm::FastInitTree,
                Algorithm::Baseline,
            ],
            base_seed: 0,
            exact_cap: 15,
            max_attempts: 10_000,
            x_axis: None,
        }
    }

    /// 40 m field, 10 m range, sink at (20, 40), every sensor a source,
    /// 15 sensors, against the exhaustive optimum.
    pub fn small(name: &str) -> Self {
        let f = FieldSpec::small();
        ScenarioConfig {
            field_side: f.width,
            comm_range: f.comm_range,
            sink: f.sink,
            source_fraction: f.source_fraction,
            node_counts: vec![15],
            algorithms: vec![
                Algorithm::ZOptimal,
                Algorithm::Approx1H,
                Algorithm::FastInitTree,
            ],
            ..ScenarioConfig::standard(name)
        }
    }

    pub fn field(&self) -> FieldSpec {
        FieldSpec {
            width: self.field_side,
            height: self.field_side,
            comm_range: self.comm_range,
            sink: self.sink,
            source_fraction: self.source_fraction,
        }
    }

    pub fn x_axis(&self) -> XAxis {
        self.x_axis.unwrap_or(match &self.deadline {
            DeadlineSpec::List(ds) if ds.len() > 1 => XAxis::Deadline,
            _ => XAxis::Nodes,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| {
            Err(ConfigError::Invalid {
                scenario: self.name.clone(),
                msg,
            })
        };
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.node_counts.is_empty() || self.node_counts.contains(&0) {
            return bad("node counts must be positive".into());
        }
        match &self.deadline {
            DeadlineSpec::List(ds) if ds.is_empty() || ds.contains(&0) => {
                return bad("deadlines must be at least 1".into())
            }
            DeadlineSpec::Uniform { lo, hi } if *lo == 0 || lo > hi => {
                return bad(format!("deadline interval {lo}..{hi} must lie in [1, inf)"))
            }
            _ => {}
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms selected".into());
        }
        if !(self.beta > 0.0) || !(self.alpha >= 0.0) {
            return bad("need alpha >= 0 and beta > 0".into());
        }
        if !(0.0..=1.0).contains(&self.source_fraction) {
            return bad("source_fraction must lie in [0, 1]".into());
        }
        if !(self.field_side > 0.0) || !(self.comm_range > 0.0) {
            return bad("field_side and comm_range must be positive".into());
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be at least 1".into());
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "field_side" | "field" => self.field_side = parse_num(value)?,
            "comm_range" | "range" => self.comm_range = parse_num(value)?,
            "sink" => {
                let xy: Vec<f64> = parse_list(value)?;
                if xy.len() != 2 {
                    return Err("sink needs `x, y`".into());
                }
                self.sink = Point::new(xy[0], xy[1]);
            }
            "source_fraction" | "sources" => self.source_fraction = parse_num(value)?,
            "nodes" | "node_counts" => self.node_counts = parse_list(value)?,
            "deadline" => self.deadline = value.parse()?,
            "alpha" => self.alpha = parse_num(value)?,
            "beta" => self.beta = parse_num(value)?,
            "runs" => self.runs = parse_num(value)?,
            "iterations" => self.iterations = parse_num(value)?,
            "algorithms" => {
                self.algorithms = value
                    .split(',')
                    .map(|a| a.trim().parse())
                    .collect::<Result<_, _>>()?
            }
            "seed" | "base_seed" => self.base_seed = parse_num(value)?,
            "exact_cap" => self.exact_cap = parse_num(value)?,
            "max_attempts" => self.max_attempts = parse_num(value)?,
            "x" | "x_axis" => self.x_axis = Some(value.parse()?),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }
}

/// A parsed scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenarios: Vec<ScenarioConfig>,
    pub out_dir: PathBuf,
    /// Fill the `ms` column. Off by default so reruns are byte-identical.
    pub timing: bool,
    /// Write one trajectory CSV per Markov run.
    pub trajectories: bool,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
        text.parse()
    }

    pub fn set_base_seed(&mut self, seed: u64) {
        for s in &mut self.scenarios {
            s.base_seed = seed;
        }
    }

    pub fn set_iterations(&mut self, iterations: usize) {
        for s in &mut self.scenarios {
            s.iterations = iterations;
        }
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut defaults: Vec<(usize, String, String)> = Vec::new();
        let mut sections: Vec<(String, Vec<(usize, String, String)>)> = Vec::new();
        let mut out_dir = PathBuf::from("results");
        let mut timing = false;
        let mut trajectories = false;

        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |msg: String| ConfigError::Syntax { line: line_no, msg };
            if let Some(header) = line.strip_prefix('[') {
                let header = header
                    .strip_suffix(']')
                    .ok_or_else(|| syntax("unclosed section".into()))?
                    .trim();
                let mut parts = header.splitn(2, char::is_whitespace);
                if parts.next() != Some("scenario") {
                    return Err(syntax(format!("unknown section `[{header}]`")));
                }
                let name = match parts.next().map(str::trim) {
                    Some(name) if !name.is_empty() => name.to_string(),
                    _ => format!("scenario{}", sections.len() + 1),
                };
                if sections.iter().any(|(s, _)| *s == name) {
                    return Err(syntax(format!("duplicate scenario `{name}`")));
                }
                sections.push((name, Vec::new()));
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax("expected `key = value`".into()))?;
            let (key, value) = (key.trim().to_ascii_lowercase(), value.trim().to_string());
            match key.as_str() {
                "out" | "out_dir" => out_dir = PathBuf::from(&value),
                "timing" => timing = parse_bool(&value).map_err(syntax)?,
                "trajectories" => trajectories = parse_bool(&value).map_err(syntax)?,
                _ => match sections.last_mut() {
                    Some((_, entries)) => entries.push((line_no, key, value)),
                    None => defaults.push((line_no, key, value)),
                },
            }
        }
        if sections.is_empty() {
            sections.push(("default".to_string(), Vec::new()));
        }

        let mut scenarios = Vec::with_capacity(sections.len());
        for (name, entries) in sections {
            let mut s = ScenarioConfig::standard(&name);
            for (line, key, value) in defaults.iter().chain(&entries) {
                s.set(key, value)
                    .map_err(|msg| ConfigError::Syntax { line: *line, msg })?;
            }
            s.validate()?;
            scenarios.push(s);
        }
        Ok(ExperimentConfig {
            scenarios,
            out_dir,
            timing,
            trajectories,
        })
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("bad number `{}`", s.trim()))
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',').map(parse_num).collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("bad boolean `{other}`")),
    }
}
