//! `scmac`: thresholds, density evolution, EXIT curves, constellation
//! analysis, and finite-length sweeps from the command line.
//!
//! Parameters resolve in three layers: flag, then config-file key of the
//! same name, then the documented default. Outputs are deterministic and
//! byte-identical across reruns with the same resolved config and seed.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "scmac",
    version,
    about = "Two-user spatially coupled LDPC analysis on the adder erasure channel"
)]
pub struct Cli {
    /// Config file, one `key = value` per line, `#` comments; flags override
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for output files [default: $SCMAC_OUT_DIR, else .]
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Data file format [default: csv]
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    pub format: Option<String>,

    /// Worker threads for multi-chain curves and simulate [default: 1]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Args)]
pub struct EnsembleArgs {
    /// User-1 variable degree
    #[arg(long)]
    pub l1: Option<u32>,
    /// User-1 check degree
    #[arg(long)]
    pub r1: Option<u32>,
    /// User-2 variable degree [default: l1]
    #[arg(long)]
    pub l2: Option<u32>,
    /// User-2 check degree [default: r1]
    #[arg(long)]
    pub r2: Option<u32>,
    /// Chain half length L; repeatable for `exit-curve --coupled`
    #[arg(short = 'L', long = "half-len", value_name = "L")]
    pub half_len: Vec<u32>,
    /// Coupling window w
    #[arg(short = 'w', long)]
    pub window: Option<u32>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("mode").required(true).args(["uncoupled", "coupled"]))]
pub struct ModeArgs {
    /// Analyze the uncoupled ensemble
    #[arg(long)]
    pub uncoupled: bool,
    /// Analyze the coupled chain
    #[arg(long)]
    pub coupled: bool,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Design rates of both users' coupled ensembles
    Rate {
        #[command(flatten)]
        ens: EnsembleArgs,
    },
    /// Shannon threshold of a rate pair on the adder erasure channel
    Shannon {
        /// User-1 rate in [0, 1]
        #[arg(long = "R1", value_name = "R1")]
        rate1: Option<f64>,
        /// User-2 rate in [0, 1]
        #[arg(long = "R2", value_name = "R2")]
        rate2: Option<f64>,
    },
    /// BP threshold by bisection over the erasure rate
    Threshold {
        #[command(flatten)]
        mode: ModeArgs,
        #[command(flatten)]
        ens: EnsembleArgs,
        /// Bisection width on eps [default: 1e-6]
        #[arg(long)]
        tol_eps: Option<f64>,
    },
    /// Forward DE to a fixed point; dumps the constellation
    ForwardDe {
        #[command(flatten)]
        ens: EnsembleArgs,
        /// Channel erasure rate
        #[arg(long)]
        eps: Option<f64>,
        /// Update schedule: parallel | random [default: parallel]
        #[arg(long)]
        schedule: Option<String>,
        /// Section-order seed for the random schedule [default: 0]
        #[arg(long)]
        schedule_seed: Option<u64>,
        /// Sup-norm convergence tolerance [default: 1e-11]
        #[arg(long)]
        tol: Option<f64>,
        /// Sweep budget [default: max(2e5, 200 * (2L+1))]
        #[arg(long)]
        max_sweeps: Option<u64>,
    },
    /// EBP EXIT curve over a grid
    ExitCurve {
        #[command(flatten)]
        mode: ModeArgs,
        #[command(flatten)]
        ens: EnsembleArgs,
        /// Grid start [default: 0.05 coupled (chi), 0.001 uncoupled (x)]
        #[arg(long)]
        grid_start: Option<f64>,
        /// Grid end [default: 0.95 coupled (chi), 1.0 uncoupled (x)]
        #[arg(long)]
        grid_end: Option<f64>,
        /// Grid points [default: 19 coupled, 500 uncoupled]
        #[arg(long)]
        grid_points: Option<usize>,
        /// Reverse-DE fixed-point tolerance, coupled only [default: 1e-9]
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Reverse DE at a target entropy; dumps constellation and shape report
    Constellation {
        #[command(flatten)]
        ens: EnsembleArgs,
        /// Target section-averaged entropy in (0, 1)
        #[arg(long)]
        chi: Option<f64>,
        /// Reverse-DE fixed-point tolerance [default: 1e-9]
        #[arg(long)]
        tol: Option<f64>,
        /// Shape-report comparison tolerance [default: 1e-6]
        #[arg(long)]
        shape_tol: Option<f64>,
    },
    /// Finite-length peeling sweep over erasure rates
    Simulate {
        #[command(flatten)]
        ens: EnsembleArgs,
        /// Variables per section per user
        #[arg(short = 'M', long = "per-section", value_name = "M")]
        m: Option<u32>,
        /// Erasure rate; repeatable
        #[arg(long)]
        eps: Vec<f64>,
        /// Trials per erasure rate [default: 100]
        #[arg(long)]
        trials: Option<u32>,
        /// Base seed; graphs and channels derive from it [default: 0]
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = commands::run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
