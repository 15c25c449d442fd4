//! Argument parsing.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use gkdv_core::concentration::WindowLaw;

use crate::commands::{
    concentrate, decompose, norms, simulate, soliton_cmd, ConcentrateArgs, DecomposeArgs,
    NormsArgs, SolitonArgs, EXIT_INVALID,
};

#[derive(Debug, Parser)]
#[command(name = "gkdv-lab", version, about = "Numerical laboratory for the supercritical gKdV equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawKind {
    Power,
    Fixed,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the experiment (or sweep) described by a TOML/JSON spec.
    Simulate {
        spec: PathBuf,
        /// Concurrent sweep runs (capped by GKDV_LAB_THREADS).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Functionals of a snapshot; pairs are `p,q[,s]`, evaluated on the linear flow over [0, horizon].
    Norms {
        snapshot: PathBuf,
        #[arg(long = "pair")]
        pairs: Vec<String>,
        /// Evaluate pairs that fail 2/p+1/q=2/k.
        #[arg(long)]
        force: bool,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 65)]
        samples: usize,
    },
    /// Write the speed-c soliton as a snapshot.
    Soliton {
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, default_value_t = 60.0)]
        length: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy profile decomposition of a snapshot.
    Decompose {
        snapshot: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_profiles: usize,
        #[arg(long, default_value_t = 1e-3)]
        strichartz_stop: f64,
        /// Subtract the mean first (extraction needs mean-zero data).
        #[arg(long)]
        remove_mean: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Concentration trace over a directory of snapshots.
    Concentrate {
        snapshots: PathBuf,
        #[arg(long, value_enum, default_value_t = LawKind::Power)]
        law: LawKind,
        /// Power law constant, or the fixed half-width.
        #[arg(long, default_value_t = 10.0)]
        c: f64,
        #[arg(long, default_value_t = 0.2)]
        exponent: f64,
        /// Operational blow-up time; defaults to t_last of ../verdict.json.
        #[arg(long)]
        t_star: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the series for T*·0.9 and T*·1.1.
        #[arg(long)]
        sensitivity: bool,
    },
}

/// Run a parsed command line.
pub fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Simulate { spec, jobs } => simulate(&spec, jobs, out, err),
        Command::Norms {
            snapshot,
            pairs,
            force,
            horizon,
            samples,
        } => norms(
            &NormsArgs {
                snapshot,
                pairs,
                force,
                horizon,
                samples,
            },
            out,
            err,
        ),
        Command::Soliton { k, c, n, length, out: path } => soliton_cmd(
            &SolitonArgs {
                k,
                c,
                n_points: n,
                length,
                out: path,
            },
            out,
            err,
        ),
        Command::Decompose {
            snapshot,
            max_profiles,
            strichartz_stop,
            remove_mean,
            out: path,
        } => decompose(
            &DecomposeArgs {
                snapshot,
                max_profiles,
                strichartz_stop,
                remove_mean,
                out: path,
            },
            out,
            err,
        ),
        Command::Concentrate {
            snapshots,
            law,
            c,
            exponent,
            t_star,
            out: path,
            sensitivity,
        } => {
            let law = match law {
                LawKind::Power => WindowLaw::Power { c, exponent },
                LawKind::Fixed => WindowLaw::Fixed { value: c },
            };
            concentrate(
                &ConcentrateArgs {
                    snapshots,
                    law,
                    t_star,
                    out: path,
                    sensitivity,
                },
                out,
                err,
            )
        }
    }
}

/// Parse `args` (program name first) and run; usage errors exit with 1.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(cli, out, err),
        Err(e) => {
            let _ = write!(err, "{e}");
            if e.use_stderr() {
                EXIT_INVALID
            } else {
                0
            }
        }
    }
}
