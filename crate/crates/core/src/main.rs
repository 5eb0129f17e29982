use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use aggtree::exact::{z_optimal, EnumerationBudget};
use aggtree::experiment::{run_experiment, ExperimentConfig};
use aggtree::init::{build_initial, InitAlgo};
use aggtree::markov::{run, write_trajectory_csv, Estimator};
use aggtree::schedule::validate_schedule;
use aggtree::topology::{generate_connected_rgg, FieldSpec, Point};
use aggtree::{optimal_schedule, AggregationTree, MarkovConfigF64, Slots, Topology};

#[derive(Debug, Parser)]
#[command(
    name = "aggtree",
    version,
    about = "Deadline-constrained aggregation trees for sensor networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every scenario of a config file and write results.csv / summary.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Base seed for every scenario.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Timer expirations per Markov run.
        #[arg(long)]
        iterations: Option<usize>,
        /// Fill the ms column (makes reruns differ).
        #[arg(long)]
        timing: bool,
        /// Also write one trajectory CSV per Markov run.
        #[arg(long)]
        trajectories: bool,
    },
    /// Optimal schedule of a given tree.
    Schedule {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        deadline: Slots,
    },
    /// Build an initial tree.
    Init {
        #[arg(long, value_parser = parse_init)]
        algo: InitAlgo,
        #[arg(long)]
        topology: PathBuf,
        /// Needed by `fast`; ignored otherwise.
        #[arg(long, default_value_t = 1)]
        deadline: Slots,
    },
    /// Exhaustive optimum over all spanning trees (small graphs only).
    Exact {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        deadline: Slots,
        #[arg(long, default_value_t = EnumerationBudget::default().max_trees)]
        max_trees: u64,
    },
    /// Draw a connected random deployment.
    Generate {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 300.0)]
        field_side: f64,
        #[arg(long, default_value_t = 75.0)]
        comm_range: f64,
        /// Sink position as `x,y`; defaults to the middle of the top edge.
        #[arg(long, value_parser = parse_point)]
        sink: Option<Point>,
        #[arg(long, default_value_t = 0.8)]
        source_fraction: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one Parent-Changing chain and log its trajectory.
    Chain {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        deadline: Slots,
        #[arg(long, value_parser = parse_init, default_value = "fast")]
        init: InitAlgo,
        #[arg(long, value_parser = parse_estimator, default_value = "approx1")]
        estimator: Estimator,
        #[arg(long, default_value_t = 50)]
        iterations: usize,
        #[arg(long, default_value_t = 0.2)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trajectory CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_init(s: &str) -> Result<InitAlgo, String> {
    s.parse()
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    s.parse()
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or("expected `x,y`")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok(Point::new(num(x)?, num(y)?))
}

fn load_topology(path: &PathBuf) -> Result<Topology> {
    Topology::load(path).with_context(|| format!("loading topology {}", path.display()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Run {
            config,
            seed,
            out: dir,
            iterations,
            timing,
            trajectories,
        } => {
            let mut cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            if let Some(seed) = seed {
                cfg.set_base_seed(seed);
            }
            if let Some(it) = iterations {
                cfg.set_iterations(it);
            }
            if let Some(dir) = dir {
                cfg.out_dir = dir;
            }
            cfg.timing |= timing;
            cfg.trajectories |= trajectories;
            let records = run_experiment(&cfg)?;
            let failed = records.iter().filter(|r| r.error.is_some()).count();
            writeln!(
                out,
                "{} records written to {}",
                records.len(),
                cfg.out_dir.display()
            )?;
            if failed > 0 {
                eprintln!("{failed} records failed");
            }
        }
        Command::Schedule {
            tree,
            topology,
            deadline,
        } => {
            let t = load_topology(&topology)?;
            let tree = AggregationTree::load(&tree, &t)?;
            let s = optimal_schedule(&tree, deadline, &t)?;
            let problems = validate_schedule(&tree, &t, deadline, &s);
            if !problems.is_empty() {
                bail!("internal error, schedule failed validation: {problems:?}");
            }
            write!(out, "{}", s.to_text())?;
        }
        Command::Init {
            algo,
            topology,
            deadline,
        } => {
            let t = load_topology(&topology)?;
            let tree = build_initial(&t, algo, deadline)?;
            write!(out, "{}", tree.to_text())?;
        }
        Command::Exact {
            topology,
            deadline,
            max_trees,
        } => {
            let t = load_topology(&topology)?;
            let budget = EnumerationBudget {
                max_trees,
                ..Default::default()
            };
            let z = z_optimal(&t, deadline, budget)?;
            writeln!(out, "# phi {} over {} trees", z.phi, z.trees_visited)?;
            write!(out, "{}", z.tree.to_text())?;
        }
        Command::Generate {
            nodes,
            seed,
            field_side,
            comm_range,
            sink,
            source_fraction,
            out: path,
        } => {
            let field = FieldSpec {
                width: field_side,
                height: field_side,
                comm_range,
                sink: sink.unwrap_or(Point::new(field_side / 2.0, field_side)),
                source_fraction,
            };
            let Some((t, _)) = generate_connected_rgg(nodes, &field, seed, 10_000) else {
                bail!("no connected deployment found; try a larger range or fewer nodes");
            };
            match path {
                Some(p) => t.save(&p)?,
                None => write!(out, "{}", t.to_text())?,
            }
        }
        Command::Chain {
            topology,
            deadline,
            init,
            estimator,
            iterations,
            alpha,
            beta,
            seed,
            out: path,
        } => {
            let t = load_topology(&topology)?;
            let initial = build_initial(&t, init, deadline)?;
            let cfg = MarkovConfigF64 {
                alpha,
                beta,
                iterations,
                estimator,
                seed,
            };
            let tr = run(&cfg, &t, deadline, initial)?;
            match path {
                Some(p) => write_trajectory_csv(&tr.events, t.sink().0, fs::File::create(&p)?)?,
                None => write_trajectory_csv(&tr.events, t.sink().0, &mut out)?,
            }
            eprintln!("initial phi {}, best phi {}", tr.initial_phi, tr.best_phi);
        }
    }
    Ok(())
}
