use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use accountability::detection::TraceRecord;
use accountability::harness::{self, Episode, ExperimentConfig, GridSpec};

#[derive(Parser)]
#[command(name = "accountability", version, about = "Run and verify accountability simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and print its record as a JSON line.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Write the final ledger snapshot here.
        #[arg(long)]
        dump_ledger: Option<PathBuf>,
        /// Write the per-step detector trace here as CSV.
        #[arg(long)]
        trace_detectors: Option<PathBuf>,
    },
    /// Run the experiment grid and append records as JSONL.
    Grid {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep existing records and run only the missing ones.
        #[arg(long)]
        resume: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Summarise a JSONL record file into tables.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a property suite, or `all`.
    Verify { suite: String },
}

enum Failure {
    Property,
    Config(accountability::Error),
}

impl From<accountability::Error> for Failure {
    fn from(e: accountability::Error) -> Self {
        Failure::Config(e)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            seed,
            dump_ledger,
            trace_detectors,
        } => {
            let config = ExperimentConfig::load(&config)?;
            let mut episode = Episode::new(config, seed)?;
            if trace_detectors.is_some() {
                episode = episode.with_trace();
            }
            while !episode.is_done() {
                episode.step()?;
            }
            if let Some(path) = trace_detectors {
                let mut text = format!("{}\n", TraceRecord::HEADER);
                for r in episode.trace() {
                    text.push_str(&format!("{r}\n"));
                }
                std::fs::write(path, text).map_err(accountability::Error::from)?;
            }
            if let (Some(path), Some(ledger)) = (dump_ledger, episode.ledger()) {
                std::fs::write(path, ledger.export_snapshot(None)).map_err(accountability::Error::from)?;
            }
            print!("{}", episode.finish().to_json_line());
        }
        Command::Grid {
            spec,
            out,
            resume,
            jobs,
        } => {
            let spec = GridSpec::load(&spec)?;
            let written = harness::run_grid(&spec, &out, resume, jobs)?;
            eprintln!("{written} records written to {}", out.display());
        }
        Command::Report { input, out } => {
            let records = harness::read_records(&input)?;
            let summary = harness::compute_summary(&records);
            summary.write(&out)?;
            print!("{}", summary.table());
        }
        Command::Verify { suite } => {
            let report = harness::verify(&suite)?;
            println!("{report}");
            if !report.passed() {
                return Err(Failure::Property);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Property) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
