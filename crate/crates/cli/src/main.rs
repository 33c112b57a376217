//! `ptmsa` — batch front-end for the PTM sense-amplifier simulator.
//!
//! Exit status: 0 on success, 1 for usage or input errors, 2 when the
//! simulation itself fails.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod overrides;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ptmsa::analysis::StudyKind;
use ptmsa::netlist::{CellState, TopologyKind};

#[derive(Parser, Debug)]
#[command(name = "ptmsa", version, about = "Simulate and analyse PTM-augmented sense amplifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// DC operating point → dc.json
    Dc(InputArgs),
    /// Transient waveforms → tran.csv
    Tran {
        #[command(flatten)]
        input: InputArgs,
        /// Stop time in seconds (default: one sensing cycle).
        #[arg(long, value_parser = number)]
        t_end: Option<f64>,
        #[arg(long, default_value = "lrs")]
        cell: CellState,
    },
    /// Hysteretic DC sweep → sweep.csv, or a parameter study → study.csv
    Sweep {
        #[command(flatten)]
        input: SweepInput,
        /// Swept source (fixtures default to their stimulus source).
        #[arg(long)]
        source: Option<String>,
        #[arg(long, value_parser = number, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, value_parser = number, allow_hyphen_values = true)]
        to: Option<f64>,
        #[arg(long, default_value_t = 161)]
        points: usize,
    },
    /// One sensing cycle → sense.csv and sense.json
    Sense {
        #[arg(long)]
        topology: TopologyKind,
        #[arg(long, default_value = "lrs")]
        cell: CellState,
        #[command(flatten)]
        common: Common,
    },
    /// Hyper-FET switching voltages → transitions.json
    Transitions {
        #[command(flatten)]
        device: DeviceArgs,
    },
    /// Diode-mirror sensing window → window.json
    Window {
        #[command(flatten)]
        device: DeviceArgs,
    },
    /// Monte Carlo batch → mc.csv and mc_summary.json
    Mc {
        #[arg(long)]
        topology: TopologyKind,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (results do not depend on it).
        #[arg(long)]
        workers: Option<usize>,
        /// Parameter family to vary; the others stay nominal.
        #[arg(long, value_enum, default_value = "all")]
        vary: Vary,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Parameter override `key=value`, dotted for nested fields (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Output directory.
    #[arg(long, env = "PTMSA_OUT", default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct Source {
    #[arg(long)]
    pub topology: Option<TopologyKind>,
    /// Netlist file.
    #[arg(long)]
    pub netlist: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct SweepSource {
    #[arg(long)]
    pub topology: Option<TopologyKind>,
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    /// Parameter study instead of a circuit sweep.
    #[arg(long)]
    pub study: Option<StudyKind>,
}

#[derive(Args, Debug, Clone)]
pub struct SweepInput {
    #[command(flatten)]
    pub source: SweepSource,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct DeviceArgs {
    /// Use the Hyper-FET host (transitions) or mirror (window) of a
    /// proposed topology.
    #[arg(long, conflicts_with_all = ["polarity", "fins"])]
    pub topology: Option<TopologyKind>,
    #[arg(long, value_enum, default_value = "n")]
    pub polarity: PolarityArg,
    #[arg(long, default_value_t = 1)]
    pub fins: u32,
    /// Bisection tolerance in volts.
    #[arg(long, value_parser = number, default_value = "1e-6")]
    pub tol: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum Method {
    Be,
    Trap,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarityArg {
    N,
    P,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum Vary {
    All,
    VcImt,
    LPtm,
    Vth,
}

fn number(s: &str) -> Result<f64, String> {
    ptmsa::netlist::parse_number(s).ok_or_else(|| format!("'{s}' is not a number"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::execute(cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("ptmsa: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
