mod commands;
mod oracle;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Context;

#[derive(Parser, Debug)]
#[command(version, about = "Threshold stopping rules under constrained observation orders")]
struct Cli {
    /// Write a JSON run record (input digests, seed, outputs, wall time) here
    #[arg(long, global = true, value_name = "FILE")]
    record: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Inputs {
    /// Instance file
    #[arg(long)]
    instance: PathBuf,
    /// Permutation family file
    #[arg(long)]
    family: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one threshold over a family
    Eval {
        #[command(flatten)]
        inputs: Inputs,
        /// golden | e | max-survival:P | product-survival:Q | THETA[,TIE]
        #[arg(long, default_value = "golden")]
        threshold: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ratio curve over a threshold grid, as CSV
    Sweep {
        #[command(flatten)]
        inputs: Inputs,
        /// Evenly spaced points over the support (and over each smooth piece)
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        /// Tie fractions tried at every atom
        #[arg(long, default_value_t = 16)]
        ties: usize,
        /// Skip the per-segment refinement
        #[arg(long)]
        no_refine: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a permutation family
    Construct {
        #[arg(value_enum)]
        kind: FamilyKind,
        /// Number of indices (target size for `padded`)
        #[arg(long)]
        n: usize,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seeds tried (seed, seed+1, ...) before giving up
        #[arg(long, default_value_t = 5)]
        max_attempts: u32,
        /// Parent family for `padded`
        #[arg(long)]
        parent: Option<PathBuf>,
        /// Drop repeated members after restriction
        #[arg(long)]
        dedup: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check pairwise independence, or almost pairwise independence when
    /// epsilon and delta are given
    Verify {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, requires = "delta")]
        epsilon: Option<f64>,
        #[arg(long, requires = "epsilon")]
        delta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Centeredness certificates
    Center {
        #[arg(long)]
        family: PathBuf,
        /// Only this index
        #[arg(long)]
        index: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write an adversarial instance
    HardInstance {
        #[arg(value_enum)]
        kind: HardKind,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "H", alias = "h")]
        h: Option<f64>,
        /// Family for `center`
        #[arg(long)]
        family: Option<PathBuf>,
        /// Certificate for `center`; the most centered index is used if absent
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the guaranteed ratio for the family's prescribed threshold
    Certify {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check exact values by Monte Carlo and, for atomic instances,
    /// outcome enumeration
    Oracle {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value = "golden")]
        threshold: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum FamilyKind {
    Affine,
    Sampled,
    #[value(alias = "forward-reverse")]
    ForwardReverse,
    Padded,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum HardKind {
    Golden,
    Iid,
    Center,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Mode {
    Golden,
    E,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut ctx = Context::new(std::env::args().collect());
    let result = commands::run(cli.command, &mut ctx);
    if let Some(path) = &cli.record {
        if let Err(e) = ctx.write_record(path) {
            eprintln!("{e}");
        }
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
