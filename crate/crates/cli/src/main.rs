//! `kgfrw`: run Klein-Gordon simulations on FRW backgrounds, classify
//! global-existence regimes, sweep parameters and plot diagnostics.
//!
//! Exit codes: 0 ok, 1 error, 2 blow-up, 3 inadmissible.

mod commands;
mod config;
mod error;
mod output;
mod plot;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ClassifyArgs, Context};
use error::exit;
use plot::PlotSpec;

#[derive(Parser)]
#[command(name = "kgfrw", version, about = "Klein-Gordon fields on FRW backgrounds")]
struct Cli {
    /// Run or sweep configuration (TOML, or JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory. Overrides the config's `output.directory`.
    #[arg(long, global = true, value_name = "DIR", env = "KGFRW_OUT_DIR")]
    out: Option<PathBuf>,

    /// Seed for randomized initial data. Overrides the config's `seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step the configured run and write series.csv and manifest.json.
    Evolve,
    /// As `evolve`, solved by Picard iteration; also writes gaps.csv.
    Picard,
    /// Classify one background and coupling; prints the verdict as JSON.
    Classify {
        /// Spacetime dimension D.
        #[arg(long)]
        dim: u32,
        /// Equation of state, e.g. `0`, `-1`, `1/3`.
        #[arg(long, allow_hyphen_values = true)]
        w: Option<String>,
        /// Power-law exponent.
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        /// Exponential-family rate.
        #[arg(long)]
        rate: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 1.0)]
        tau0: f64,
    },
    /// Classify every point of a parameter lattice into verdicts.csv.
    Sweep,
    /// Recompute diagnostics from a stored trajectory.json.
    Energy {
        trajectory: PathBuf,
        /// Highest energy order; defaults to the stored config's k_max.
        #[arg(long)]
        k_max: Option<u32>,
    },
    /// Render CSV columns as an SVG line plot.
    Plot {
        csv: PathBuf,
        /// Comma-separated columns, drawn in this order.
        #[arg(long, value_delimiter = ',', required = true)]
        columns: Vec<String>,
        #[arg(long, default_value = "tau")]
        x: String,
        #[arg(long)]
        log_x: bool,
        #[arg(long)]
        log_y: bool,
        /// Defaults to the CSV path with an .svg extension.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // clap would use 2, which here means blow-up.
            return ExitCode::from(if e.use_stderr() { exit::ERROR } else { exit::OK });
        }
    };
    let ctx = Context { out: cli.out, seed: cli.seed, quiet: cli.quiet };
    let config = cli.config.as_deref();
    let code = match cli.command {
        Command::Evolve => commands::cmd_run(&ctx, config, false),
        Command::Picard => commands::cmd_run(&ctx, config, true),
        Command::Classify { dim, w, alpha, rate, xi, p, tau0 } => {
            commands::cmd_classify(&ctx, &ClassifyArgs { dim, w, alpha, rate, xi, p, tau0 })
        }
        Command::Sweep => commands::cmd_sweep(&ctx, config),
        Command::Energy { trajectory, k_max } => commands::cmd_energy(&ctx, &trajectory, k_max),
        Command::Plot { csv, columns, x, log_x, log_y, output } => {
            let spec = PlotSpec { x, columns, log_x, log_y };
            commands::cmd_plot(&ctx, &csv, &spec, output.as_deref())
        }
    };
    ExitCode::from(code)
}
