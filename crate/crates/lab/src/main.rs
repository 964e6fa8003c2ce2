use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relcap::smallball::{Inequality, DEFAULT_TOL};
use relcap::{McConfig, SupCorrection};
use relcap_lab::commands::{self, Report};
use relcap_lab::config::*;
use relcap_lab::error::LabResult;
use relcap_lab::runner::RayonRunner;
use relcap_lab::shorthand::{parse_geometric, parse_lower, parse_number, parse_numbers, parse_range, parse_set};

#[derive(Parser)]
#[command(name = "relcap", version, about = "Relative capacity experiments on Wiener space")]
struct Cli {
    /// Root directory for run outputs.
    #[arg(long, global = true, env = "RELCAP_OUT", default_value = "runs")]
    out: PathBuf,
    /// Worker threads (0 uses all cores). Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kolmogorov entropy profile and dimension estimate of a set.
    Entropy {
        #[arg(long)]
        set: String,
        /// Comma-separated ε values.
        #[arg(long, num_args = 1.., conflicts_with = "eps_geom")]
        eps: Vec<String>,
        /// Geometric sweep `start:end:ratio`.
        #[arg(long)]
        eps_geom: Option<String>,
    },
    /// Sup-norm small-ball probabilities.
    Smallball {
        #[arg(long, num_args = 1.., required = true)]
        r: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Cross-check against simulated Wiener paths.
        #[arg(long)]
        compare_mc: bool,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Hitting probabilities and relative capacities of a set.
    Capacity {
        #[arg(long)]
        set: String,
        #[arg(long, num_args = 1.., required = true)]
        r: Vec<String>,
        /// Also estimate at grid resolution k + 2 and at half the s-mesh.
        #[arg(long)]
        audit_discretization: bool,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Integral-test classification of a lower function.
    Liltest {
        /// Lower function: `hnu:ν`, `chung:c`, `table:path` or JSON.
        #[arg(long = "H")]
        h: String,
        #[arg(long, value_enum)]
        mode: Option<LilMode>,
        #[arg(long)]
        set: Option<String>,
        /// Horizons as `ln ln T`, comma-separated.
        #[arg(long, num_args = 1..)]
        horizons: Vec<String>,
        /// Compare against the Erdős-block sum over this many blocks.
        #[arg(long)]
        sum: Option<u64>,
    },
    /// Numerical audit of the Erdős-sequence inequalities.
    Audit {
        #[arg(long = "ineq", value_enum)]
        inequality: InequalityArg,
        /// Index range `lo:hi`.
        #[arg(long, default_value = "10:100000")]
        n: String,
        #[arg(long = "H", default_value = "hnu:0")]
        h: String,
        #[arg(long, default_value_t = 0.9)]
        floor: f64,
    },
    /// Monte Carlo experiments on the OU process.
    Simulate {
        #[command(subcommand)]
        experiment: SimCommand,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Re-run the configuration recorded in a manifest.
    Replay { manifest: PathBuf },
}

#[derive(Subcommand)]
enum SimCommand {
    /// Joint confinement of two slices across gaps.
    Joint {
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long, num_args = 1.., required = true)]
        gaps: Vec<String>,
        #[arg(long)]
        r: String,
    },
    /// Moments of the number of confined slices.
    Counting {
        #[arg(long)]
        set: String,
        #[arg(long, num_args = 1.., required = true)]
        r: Vec<String>,
    },
    /// Hitting probability over the window `[0, r⁶]`.
    ShortWindow {
        #[arg(long, num_args = 1.., required = true)]
        r: Vec<String>,
        #[arg(long, default_value_t = 64)]
        slices: usize,
    },
    /// Capacity relative to `[0, horizon]` against `[0, 1]`.
    Window {
        #[arg(long, default_value_t = 5.0)]
        horizon: f64,
        #[arg(long, num_args = 1.., required = true)]
        r: Vec<String>,
    },
    /// Planar Brownian confinement.
    Planar {
        #[arg(long, num_args = 1.., required = true)]
        lambdas: Vec<String>,
        #[arg(long)]
        r: String,
    },
    /// Dump OU slices for plotting.
    Paths {
        #[arg(long, num_args = 1.., required = true)]
        s: Vec<String>,
        #[arg(long, default_value_t = 4)]
        replicates: u64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum InequalityArg {
    KeyEe,
    Ees,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CorrectionArg {
    None,
    BarrierShift,
}

#[derive(Args)]
struct McArgs {
    /// Monte Carlo replicates.
    #[arg(long, global = true, default_value_t = 10_000)]
    reps: u64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Time grid resolution: 2^k steps per unit time.
    #[arg(long, global = true, default_value_t = relcap::paths::DEFAULT_RESOLUTION)]
    k: u32,
    /// Slice spacing override.
    #[arg(long, global = true)]
    mesh: Option<f64>,
    #[arg(long, global = true, default_value_t = 4096)]
    max_slices: usize,
    #[arg(long, global = true, value_enum, default_value = "barrier-shift")]
    correction: CorrectionArg,
}

impl McArgs {
    fn config(&self) -> LabResult<McConfig> {
        let cfg = McConfig {
            replicates: self.reps,
            resolution: self.k,
            s_mesh: self.mesh,
            master_seed: self.seed,
            max_slices: self.max_slices,
            correction: match self.correction {
                CorrectionArg::None => SupCorrection::None,
                CorrectionArg::BarrierShift => SupCorrection::BarrierShift,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn build(command: Command) -> LabResult<ExperimentConfig> {
    Ok(match command {
        Command::Entropy { set, eps, eps_geom } => ExperimentConfig::Entropy(EntropyConfig {
            set: parse_set(&set)?,
            epsilons: match eps_geom {
                Some(g) => parse_geometric(&g)?,
                None if eps.is_empty() => relcap::sets::default_sweep(),
                None => parse_numbers(&eps)?,
            },
        }),
        Command::Smallball { r, tol, compare_mc, mc } => ExperimentConfig::Smallball(SmallballConfig {
            radii: parse_numbers(&r)?,
            tol,
            compare_mc: if compare_mc { Some(mc.config()?) } else { None },
        }),
        Command::Capacity { set, r, audit_discretization, mc } => ExperimentConfig::Capacity(CapacityConfig {
            set: parse_set(&set)?,
            radii: parse_numbers(&r)?,
            mc: mc.config()?,
            audit_discretization,
        }),
        Command::Liltest { h, mode, set, horizons, sum } => {
            let set = set.as_deref().map(parse_set).transpose()?;
            let mode = mode.unwrap_or(if set.is_some() { LilMode::Set } else { LilMode::Qs });
            ExperimentConfig::Liltest(LiltestConfig {
                h: parse_lower(&h)?,
                mode,
                set,
                horizons: parse_numbers(&horizons)?,
                sum_blocks: sum,
            })
        }
        Command::Audit { inequality, n, h, floor } => {
            let (lo, hi) = parse_range(&n)?;
            ExperimentConfig::Audit(AuditConfig {
                inequality: match inequality {
                    InequalityArg::KeyEe => Inequality::KeyEe,
                    InequalityArg::Ees => Inequality::Ees,
                },
                lo,
                hi,
                h: parse_lower(&h)?,
                floor,
            })
        }
        Command::Simulate { experiment, mc } => ExperimentConfig::Simulate(SimulateConfig {
            mc: mc.config()?,
            experiment: match experiment {
                SimCommand::Joint { s, gaps, r } => Experiment::Joint { s, gaps: parse_numbers(&gaps)?, r: parse_number(&r)? },
                SimCommand::Counting { set, r } => Experiment::Counting { set: parse_set(&set)?, radii: parse_numbers(&r)? },
                SimCommand::ShortWindow { r, slices } => Experiment::ShortWindow { radii: parse_numbers(&r)?, slices },
                SimCommand::Window { horizon, r } => Experiment::Window { horizon, radii: parse_numbers(&r)? },
                SimCommand::Planar { lambdas, r } => {
                    Experiment::Planar { lambdas: parse_numbers(&lambdas)?, r: parse_number(&r)? }
                }
                SimCommand::Paths { s, replicates } => Experiment::Paths { s_values: parse_numbers(&s)?, replicates },
            },
        }),
        Command::Replay { .. } => unreachable!("handled before building a config"),
    })
}

fn run(cli: Cli) -> LabResult<Report> {
    let runner = RayonRunner::new(cli.threads)?;
    match cli.command {
        Command::Replay { manifest } => commands::replay(&manifest, &cli.out, &runner),
        command => commands::execute(&build(command)?, &cli.out, &runner),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            println!("results in {}", report.dir.display());
            ExitCode::from(report.exit_code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
