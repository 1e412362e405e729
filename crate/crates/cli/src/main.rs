//! `szbench` — an EEG schizophrenia-vs-control classification benchmark.
//!
//! Subcommands: `ingest` (segment recordings into a frame cache), `run`
//! (cross-validate one configured method), `grid` (a sweep of runs), and
//! `report` (combine finished results documents).
//!
//! Exit codes: 0 success, 1 runtime failure (I/O, data, numerics), 2 bad
//! configuration or command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use szbench_cli::config::ExperimentConfig;
use szbench_cli::grid::{cmd_grid, GridFlags};
use szbench_cli::ingest::cmd_ingest;
use szbench_cli::report::cmd_report;
use szbench_cli::runner::{run_experiment, RunFlags};
use szbench_cli::exit_code_for;

#[derive(Parser)]
#[command(
    name = "szbench",
    about = "EEG schizophrenia-vs-control classification benchmark",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment EDF/CSV recordings from a dataset manifest into a frame cache.
    Ingest {
        /// Dataset manifest (JSON listing one file + label per subject).
        #[arg(long)]
        manifest: PathBuf,
        /// Root directory for the manifest's relative file paths
        /// (default: $SZBENCH_DATA_DIR, else the manifest's directory).
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Where to write the frame cache.
        #[arg(long)]
        out: PathBuf,
        /// Samples per frame.
        #[arg(long, default_value_t = szbench_core::data::FRAME_SAMPLES)]
        frame_samples: usize,
        /// Sample rate assumed for CSV files (EDF files carry their own).
        #[arg(long, default_value_t = szbench_core::data::SAMPLE_RATE_HZ)]
        csv_sample_rate_hz: f64,
    },
    /// Cross-validate one configured method and write all artifacts.
    Run {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override (or supply) the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Permit deep models on raw (unnormalized) frames.
        #[arg(long)]
        allow_raw: bool,
        /// Stratify folds by subject instead of by frame.
        #[arg(long)]
        subject_split: bool,
        /// Keep only every fifth frame (a quick smoke-scale pass).
        #[arg(long)]
        reduced: bool,
    },
    /// Execute every run in a grid config, continuing past failures.
    Grid {
        /// Grid config (JSON with a `runs` array of experiment configs).
        #[arg(long)]
        config: PathBuf,
        /// Shared output root; runs land in <out>/run_NN_<method>/.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: one per CPU).
        #[arg(long)]
        jobs: Option<usize>,
        /// Permit deep models on raw (unnormalized) frames.
        #[arg(long)]
        allow_raw: bool,
        /// Stratify folds by subject instead of by frame.
        #[arg(long)]
        subject_split: bool,
        /// Keep only every fifth frame in every run.
        #[arg(long)]
        reduced: bool,
    },
    /// Combine finished results.json documents into one comparison table.
    Report {
        /// One or more results.json files.
        #[arg(required = true)]
        results: Vec<PathBuf>,
        /// Also write combined_report.{json,svg} into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(err)) => {
            eprintln!("szbench: {err}");
            ExitCode::from(exit_code_for(&err) as u8)
        }
        Err(Failure::GridRuns) => ExitCode::from(1),
    }
}

enum Failure {
    Core(szbench_core::Error),
    /// The grid completed but at least one run failed (already reported).
    GridRuns,
}

impl From<szbench_core::Error> for Failure {
    fn from(err: szbench_core::Error) -> Self {
        Failure::Core(err)
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest {
            manifest,
            data_dir,
            out,
            frame_samples,
            csv_sample_rate_hz,
        } => {
            let summary = cmd_ingest(
                &manifest,
                data_dir.as_deref(),
                &out,
                frame_samples,
                csv_sample_rate_hz,
            )?;
            println!("{summary}");
            Ok(())
        }
        Command::Run {
            config,
            seed,
            out,
            allow_raw,
            subject_split,
            reduced,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let flags = RunFlags { seed, out, allow_raw, subject_split, reduced };
            let output = run_experiment(&cfg, &flags)?;
            for line in &output.summary_lines {
                println!("{line}");
            }
            println!();
            print!("{}", output.table);
            Ok(())
        }
        Command::Grid {
            config,
            out,
            jobs,
            allow_raw,
            subject_split,
            reduced,
        } => {
            let flags = GridFlags { out, jobs, allow_raw, subject_split, reduced };
            let output = cmd_grid(&config, &flags)?;
            print!("{}", output.text);
            if output.any_failed {
                return Err(Failure::GridRuns);
            }
            Ok(())
        }
        Command::Report { results, out } => {
            let text = cmd_report(&results, out.as_deref())?;
            print!("{text}");
            Ok(())
        }
    }
}
