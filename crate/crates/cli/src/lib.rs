//! `hqmm` command-line interface.
//!
//! Exit status: 0 on success, 1 when a machine fails validation (or a
//! computation detects inconsistent input), 2 on I/O, configuration or usage
//! errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use hqmm_core::experiment::{envelope, read_scatter_csv, run_scatter, ExperimentConfig};
use hqmm_core::stationary::{stationary, SolverSettings};
use hqmm_core::trajectory::{empirical_word_prob, simulate, RngSeed};
use hqmm_core::wordprob::word_prob;
use hqmm_core::{Error, Machine, Word};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hqmm",
    version,
    about = "Markov, hidden Markov and hidden quantum Markov generators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct Solver {
    /// Fixed-point tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Iteration cap for the fixed-point solver.
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
}

impl From<&Solver> for SolverSettings {
    fn from(s: &Solver) -> Self {
        SolverSettings {
            tol: s.tol,
            max_iter: s.max_iter,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a machine definition.
    Validate { machine: PathBuf },
    /// Print the stationary-state report of a machine as JSON.
    Stationary {
        machine: PathBuf,
        #[command(flatten)]
        solver: Solver,
    },
    /// Print the stationary probability of a word such as BAAAB.
    Wordprob {
        machine: PathBuf,
        word: String,
        #[command(flatten)]
        solver: Solver,
    },
    /// Simulate a trajectory; optionally estimate a word's frequency.
    Simulate {
        machine: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Word whose sliding-window frequency is reported.
        #[arg(long)]
        word: Option<String>,
        /// Skip printing the symbol sequence.
        #[arg(long)]
        no_trajectory: bool,
    },
    /// Run the ensemble sweep described by a JSON config.
    Scatter {
        config: PathBuf,
        /// Override the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Per-bin maxima of P(word) from scatter CSVs.
    Envelope {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Emit JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() || matches!(e, Error::Consistency { .. }) {
        EXIT_INVALID
    } else {
        EXIT_USAGE
    }
}

fn parse_word(s: &str) -> Result<Word, Error> {
    s.parse()
}

/// Runs the CLI on `args` (including the program name), writing to the given
/// streams, and returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), Error> {
    match command {
        Command::Validate { machine } => {
            let m = Machine::from_path(&machine)?;
            writeln!(out, "ok: {} ({})", machine.display(), m.class_tag()).map_err(io_err)?;
        }
        Command::Stationary { machine, solver } => {
            let m = Machine::from_path(&machine)?;
            let report = stationary(&m, &(&solver).into());
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?).map_err(io_err)?;
        }
        Command::Wordprob { machine, word, solver } => {
            let word = parse_word(&word)?;
            let m = Machine::from_path(&machine)?;
            let report = stationary(&m, &(&solver).into());
            if !report.converged {
                return Err(Error::Contract(format!(
                    "stationary solve did not converge (residual {:e} after {} iterations)",
                    report.residual, report.iterations
                )));
            }
            writeln!(out, "{}", word_prob(&m, &report.state, &word)?).map_err(io_err)?;
        }
        Command::Simulate {
            machine,
            steps,
            burn_in,
            seed,
            stream,
            word,
            no_trajectory,
        } => {
            let word = word.as_deref().map(parse_word).transpose()?;
            let m = Machine::from_path(&machine)?;
            let record = simulate(&m, steps, burn_in, RngSeed::new(seed, stream))?;
            if !no_trajectory {
                writeln!(out, "{}", record.to_text()).map_err(io_err)?;
            }
            if let Some(word) = word {
                let est = empirical_word_prob(&record, &word)?;
                let doc = serde_json::json!({ "word": word, "estimate": est });
                writeln!(out, "{doc}").map_err(io_err)?;
            }
        }
        Command::Scatter { config, workers } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if workers.is_some() {
                cfg.workers = workers;
            }
            let result = run_scatter(&cfg)?;
            for e in &result.ensembles {
                let kept = e.converged().count();
                writeln!(
                    out,
                    "{}: {} machines, {} excluded -> {}",
                    e.class_tag,
                    e.records.len(),
                    e.records.len() - kept,
                    e.csv_path.display()
                )
                .map_err(io_err)?;
            }
            writeln!(out, "manifest: {}", result.manifest_path.display()).map_err(io_err)?;
        }
        Command::Envelope { csv, bins, json } => {
            let mut records = Vec::new();
            for path in &csv {
                records.extend(read_scatter_csv(path)?);
            }
            let report = envelope(&records, bins)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report)?).map_err(io_err)?;
            } else {
                writeln!(out, "{report}").map_err(io_err)?;
            }
        }
    }
    Ok(())
}
