//! Runs a scenario grid and writes `results.csv` / `summary.csv`.
//!
//! Every (node count, run) pair is one unit of work with seed
//! `base_seed + run`. The seed alone fixes the deployment, the deadline draw
//! and every Markov chain's RNG, so units run in parallel and the output is
//! assembled in unit order.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::exact::{z_optimal, EnumerationBudget};
use crate::experiment::config::{Algorithm, DeadlineSpec, ExperimentConfig, ScenarioConfig, XAxis};
use crate::experiment::stats::mean_ci95;
use crate::init::{fast_init_tree, git_tree};
use crate::markov::{run, write_trajectory_csv, Estimator, StepEvent};
use crate::schedule::{optimal_schedule, Slots};
use crate::topology::{generate_connected_rgg, Topology};
use crate::tree::AggregationTree;
use crate::MarkovConfigF64;

/// One algorithm on one deployment and deadline.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub scenario: String,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub v: usize,
    pub d: Slots,
    /// `None` when the record failed; see `error`.
    pub phi: Option<u32>,
    /// Wall time in milliseconds, when timing is enabled.
    pub ms: Option<f64>,
    pub error: Option<String>,
    /// Summary x coordinate.
    pub x: f64,
    /// The tree `phi` was measured on.
    pub tree: Option<AggregationTree>,
    pub trajectory: Option<Vec<StepEvent<f64>>>,
}

impl ExperimentRecord {
    /// Stable file stem for this record's trajectory log.
    pub fn trajectory_name(&self) -> String {
        format!(
            "{}_V{}_s{}_D{}_{}.csv",
            self.scenario, self.v, self.seed, self.d, self.algorithm
        )
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] crate::experiment::config::ConfigError),
    #[error("summary group {scenario}/{algorithm}/x={x} has no successful records")]
    EmptyGroup {
        scenario: String,
        algorithm: Algorithm,
        x: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub timing: bool,
    pub keep_trajectories: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            timing: false,
            keep_trajectories: false,
        }
    }
}

/// Stream of `u64`s independent from the deployment streams of `seed`.
fn aux_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    rng
}

pub fn run_scenario(
    cfg: &ScenarioConfig,
    opts: RunOptions,
) -> Result<Vec<ExperimentRecord>, RunError> {
    cfg.validate()?;
    let units: Vec<(usize, usize)> = cfg
        .node_counts
        .iter()
        .flat_map(|&v| (0..cfg.runs).map(move |r| (v, r)))
        .collect();
    let per_unit: Vec<Vec<ExperimentRecord>> = units
        .par_iter()
        .map(|&(v, r)| run_unit(cfg, opts, v, cfg.base_seed.wrapping_add(r as u64)))
        .collect();
    Ok(per_unit.into_iter().flatten().collect())
}

fn run_unit(cfg: &ScenarioConfig, opts: RunOptions, v: usize, seed: u64) -> Vec<ExperimentRecord> {
    let mut rng = aux_rng(seed);
    let deadlines: Vec<Slots> = match &cfg.deadline {
        DeadlineSpec::List(ds) => ds.clone(),
        DeadlineSpec::Uniform { lo, hi } => vec![rng.gen_range(*lo..=*hi)],
    };
    let topology = generate_connected_rgg(v, &cfg.field(), seed, cfg.max_attempts).map(|(t, _)| t);
    let git = topology.as_ref().map(git_tree);

    let mut out = Vec::new();
    for &d in &deadlines {
        // one chain seed per roster slot, drawn whether or not it is used
        let chain_seeds: Vec<u64> = Algorithm::ALL.iter().map(|_| rng.gen()).collect();
        let x = match cfg.x_axis() {
            XAxis::Nodes => v as f64,
            XAxis::Deadline => d as f64,
            XAxis::Beta => cfg.beta,
            XAxis::Iterations => cfg.iterations as f64,
        };
        for &alg in &cfg.algorithms {
            if alg == Algorithm::ZOptimal && v > cfg.exact_cap {
                continue;
            }
            let mut rec = ExperimentRecord {
                scenario: cfg.name.clone(),
                seed,
                algorithm: alg,
                v,
                d,
                phi: None,
                ms: None,
                error: None,
                x,
                tree: None,
                trajectory: None,
            };
            let Some(t) = topology.as_ref() else {
                rec.error = Some(format!(
                    "no connected deployment in {} attempts",
                    cfg.max_attempts
                ));
                out.push(rec);
                continue;
            };
            let start = Instant::now();
            let outcome = run_algorithm(
                cfg,
                t,
                d,
                alg,
                git.as_ref().unwrap(),
                chain_seeds[alg.index()],
            );
            if opts.timing {
                rec.ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            match outcome {
                Ok((phi, tree, traj)) => {
                    rec.phi = Some(phi);
                    rec.tree = Some(tree);
                    if opts.keep_trajectories {
                        rec.trajectory = traj;
                    }
                }
                Err(e) => rec.error = Some(e),
            }
            out.push(rec);
        }
    }
    out
}

type Outcome = Result<(u32, AggregationTree, Option<Vec<StepEvent<f64>>>), String>;

fn run_algorithm(
    cfg: &ScenarioConfig,
    t: &Topology,
    d: Slots,
    alg: Algorithm,
    git: &Result<AggregationTree, crate::init::InitError>,
    chain_seed: u64,
) -> Outcome {
    let git = || git.clone().map_err(|e| e.to_string());
    let fast = || fast_init_tree(t, d).map_err(|e| e.to_string());
    let scheduled = |tree: AggregationTree| -> Outcome {
        let s = optimal_schedule(&tree, d, t).map_err(|e| e.to_string())?;
        Ok((s.phi, tree, None))
    };
    let chain = |estimator: Estimator, initial: AggregationTree| -> Outcome {
        let mc = MarkovConfigF64 {
            alpha: cfg.alpha,
            beta: cfg.beta,
            iterations: cfg.iterations,
            estimator,
            seed: chain_seed,
        };
        let tr = run(&mc, t, d, initial).map_err(|e| e.to_string())?;
        Ok((tr.best_phi, tr.best_tree, Some(tr.events)))
    };
    match alg {
        Algorithm::ZOptimal => {
            let z = z_optimal(t, d, EnumerationBudget::default()).map_err(|e| e.to_string())?;
            Ok((z.phi, z.tree, None))
        }
        Algorithm::Approx1 => chain(Estimator::Approx1, git()?),
        Algorithm::Approx2 => chain(Estimator::Approx2, git()?),
        Algorithm::Approx1H => chain(Estimator::Approx1, fast()?),
        Algorithm::Approx2H => chain(Estimator::Approx2, fast()?),
        Algorithm::FastInitTree => scheduled(fast()?),
        Algorithm::Baseline => scheduled(git()?),
    }
}

/// Mean QoA and 95% half-width for one (scenario, algorithm, x) point.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub x: f64,
    pub n: usize,
    pub mean_phi: f64,
    pub ci95: f64,
}

/// Groups successful records by (scenario, algorithm, x). Rows come out
/// sorted by that key, so the result is independent of record order.
pub fn summarize(records: &[ExperimentRecord]) -> Result<Vec<SummaryRow>, RunError> {
    let mut groups: BTreeMap<(String, Algorithm, u64), Vec<f64>> = BTreeMap::new();
    for r in records {
        let key = (r.scenario.clone(), r.algorithm, order_key(r.x));
        let entry = groups.entry(key).or_default();
        if let Some(phi) = r.phi {
            entry.push(phi as f64);
        }
    }
    groups
        .into_iter()
        .map(|((scenario, algorithm, xk), phis)| {
            let x = from_order_key(xk);
            let (mean_phi, ci95) = mean_ci95(&phis).ok_or(RunError::EmptyGroup {
                scenario: scenario.clone(),
                algorithm,
                x,
            })?;
            Ok(SummaryRow {
                scenario,
                algorithm,
                x,
                n: phis.len(),
                mean_phi,
                ci95,
            })
        })
        .collect()
}

/// Order-preserving map from finite `f64` to `u64`.
fn order_key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn from_order_key(k: u64) -> f64 {
    f64::from_bits(if k >> 63 == 1 { k & !(1 << 63) } else { !k })
}

pub fn write_results(records: &[ExperimentRecord], out: impl Write) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "seed", "algorithm", "V", "D", "phi", "ms"])?;
    for r in records {
        w.write_record([
            r.scenario.clone(),
            r.seed.to_string(),
            r.algorithm.to_string(),
            r.v.to_string(),
            r.d.to_string(),
            r.phi.map(|p| p.to_string()).unwrap_or_default(),
            r.ms.map(|ms| format!("{ms:.3}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `ci95` is the half-width of a two-sided Student-t interval with `n - 1`
/// degrees of freedom (0 when `n = 1`).
pub fn write_summary(rows: &[SummaryRow], out: impl Write) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "algorithm", "x", "mean_phi", "ci95"])?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.algorithm.to_string(),
            r.x.to_string(),
            r.mean_phi.to_string(),
            r.ci95.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every scenario of `cfg` and writes `results.csv`, `summary.csv` and,
/// if requested, `trajectories/*.csv` under `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, RunError> {
    let opts = RunOptions {
        timing: cfg.timing,
        keep_trajectories: cfg.trajectories,
    };
    let mut records = Vec::new();
    for s in &cfg.scenarios {
        records.extend(run_scenario(s, opts)?);
    }
    write_outputs(&records, &cfg.out_dir)?;
    Ok(records)
}

pub fn write_outputs(records: &[ExperimentRecord], dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir)?;
    write_results(records, fs::File::create(dir.join("results.csv"))?)?;
    let ok: Vec<ExperimentRecord> = records
        .iter()
        .filter(|r| r.phi.is_some())
        .cloned()
        .collect();
    write_summary(&summarize(&ok)?, fs::File::create(dir.join("summary.csv"))?)?;
    let with_traj: Vec<&ExperimentRecord> =
        records.iter().filter(|r| r.trajectory.is_some()).collect();
    if !with_traj.is_empty() {
        let tdir: PathBuf = dir.join("trajectories");
        fs::create_dir_all(&tdir)?;
        for r in with_traj {
            let f = fs::File::create(tdir.join(r.trajectory_name()))?;
            write_trajectory_csv(r.trajectory.as_ref().unwrap(), r.v, f)?;
        }
    }
    Ok(())
}
