use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use ilc_core::bench::{self, BenchmarkSpec};
use ilc_core::plot::{self, PlotOptions};
use ilc_core::{sysgen, SystemFile};

/// Stochastic conjugate-gradient ILC benchmark harness.
#[derive(Parser)]
#[command(name = "ilc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random stable state-space system file.
    GenSystem {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        inputs: usize,
        #[arg(long)]
        outputs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trial length N.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark spec and write traces plus summary.csv.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Plot trace CSVs as an SVG.
    Plot {
        #[arg(long)]
        out: PathBuf,
        /// Divide each curve by its first cost.
        #[arg(long)]
        normalize: bool,
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
}

const EXIT_USAGE: u8 = 2;

fn gen_system(states: usize, inputs: usize, outputs: usize, seed: u64, samples: usize, out: PathBuf) -> anyhow::Result<()> {
    let ss = sysgen::generate_system(states, inputs, outputs, seed)?;
    let file = SystemFile::new(&ss, samples);
    file.lifted().context("system does not lift at this trial length")?;
    std::fs::write(&out, file.to_json_string()? + "\n")
        .with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn run(spec_path: PathBuf, out_dir: PathBuf) -> ExitCode {
    let spec = match BenchmarkSpec::load(&spec_path).and_then(BenchmarkSpec::with_env_override) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot use spec {}: {e}", spec_path.display());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let outcome = match bench::run_benchmark(&spec) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = outcome.write(&out_dir) {
        eprintln!("error: writing to {}: {e}", out_dir.display());
        return ExitCode::FAILURE;
    }
    print!("{}", outcome.summary_table());
    for run in &outcome.runs {
        if let Err(e) = &run.result {
            eprintln!("warning: {} seed {} failed: {e}", run.label, run.seed);
        }
    }
    if outcome.failures() == outcome.runs.len() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn plot(out: PathBuf, normalize: bool, traces: Vec<PathBuf>) -> ExitCode {
    let opts = PlotOptions {
        normalize,
        ..PlotOptions::default()
    };
    let report = match plot::plot_files(&traces, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Err(e) = std::fs::write(&out, report.svg) {
        eprintln!("error: writing {}: {e}", out.display());
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::GenSystem {
            states,
            inputs,
            outputs,
            seed,
            samples,
            out,
        } => match gen_system(states, inputs, outputs, seed, samples, out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
        Command::Run { spec, out_dir } => run(spec, out_dir),
        Command::Plot {
            out,
            normalize,
            traces,
        } => plot(out, normalize, traces),
    }
}
