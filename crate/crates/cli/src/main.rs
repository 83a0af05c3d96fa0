use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ewm_cli::pipeline::{self, exit, RunOutcome};
use ewm_cli::verify::{DEFAULT_MAX_LENGTH, DEFAULT_TRIALS};
use ewm_cli::JobConfig;
use ewm_core::convert::{add, DigitString, Mode};
use ewm_core::phase1::Phase1Method;
use ewm_core::phase2::Phase2Method;
use ewm_core::table::export_csv;
use ewm_core::{EwmError, Result};

/// Synthesizes and checks parallel addition algorithms.
#[derive(Parser)]
#[command(name = "ewm", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Job {
    #[arg(long)]
    config: PathBuf,
    /// Phase 1 method: abs (1b) or beta_norm (1d).
    #[arg(long)]
    method1: Option<Phase1Method>,
    /// Phase 2 method: gravity (2b) or beta_norm (2d).
    #[arg(long)]
    method2: Option<Phase2Method>,
    /// Block length k.
    #[arg(long)]
    block: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Eligibility report for the configured system.
    Check(Job),
    /// Runs phase 1 and prints the weight coefficient set.
    Phase1(Job),
    /// Full synthesis; writes weights.csv, manifest.json and log.txt.
    Run {
        #[command(flatten)]
        job: Job,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Same as run with the given block length.
    Block {
        #[command(flatten)]
        job: Job,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks a table file: window validity and random additions.
    Verify {
        #[command(flatten)]
        job: Job,
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_LENGTH)]
        max_length: usize,
    },
    /// Writes the synthesized table, or a normalized copy of --table, as CSV.
    Export {
        #[command(flatten)]
        job: Job,
        #[arg(long)]
        table: Option<PathBuf>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Adds two digit strings such as "[(1,0)][(0,1)].[(1,0)]" with a table.
    Add {
        #[command(flatten)]
        job: Job,
        #[arg(long)]
        table: PathBuf,
        x: String,
        y: String,
    },
}

fn load(job: &Job) -> Result<JobConfig> {
    let mut config = JobConfig::load(&job.config)?;
    if let Some(m) = job.method1 {
        config.method_phase1 = m;
    }
    if let Some(m) = job.method2 {
        config.method_phase2 = m;
    }
    if let Some(k) = job.block {
        config.block_length = k;
    }
    Ok(config)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn run(config: &JobConfig, out: Option<&Path>) -> Result<i32> {
    let dir = pipeline::output_dir(config, out);
    match pipeline::cmd_run(config, &dir)? {
        RunOutcome::Converged(m) => {
            println!(
                "#Q = {}, r = {}, p = {}, {} table rows, written to {}",
                m.weight_coefficients.count,
                m.memory,
                m.locality,
                m.table_rows,
                dir.display()
            );
            print!("{}", pipeline::describe(&m.verification));
            Ok(if m.verification.passed() { exit::OK } else { exit::VERIFICATION })
        }
        RunOutcome::NonConvergent(w) => {
            println!("no parallel addition found: {}", w.witness);
            println!("witness written to {}", dir.join(pipeline::WITNESS_FILE).display());
            Ok(exit::NON_CONVERGENT)
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Check(job) => {
            print_json(&pipeline::cmd_check(&load(&job)?)?);
            Ok(exit::OK)
        }
        Command::Phase1(job) => {
            let (_, summary) = pipeline::cmd_phase1(&load(&job)?)?;
            print_json(&summary);
            Ok(exit::OK)
        }
        Command::Run { job, out } => run(&load(&job)?, out.as_deref()),
        Command::Block { job, out } => {
            if job.block.is_none() {
                return Err(EwmError::Config("block needs --block K".into()));
            }
            run(&load(&job)?, out.as_deref())
        }
        Command::Verify { job, table, trials, max_length } => {
            let report = pipeline::cmd_verify(&load(&job)?, &table, trials, max_length)?;
            print!("{}", pipeline::describe(&report));
            Ok(if report.passed() { exit::OK } else { exit::VERIFICATION })
        }
        Command::Export { job, table, out } => {
            let config = load(&job)?;
            let text = match table {
                Some(t) => export_csv(&pipeline::load_table(&config, &t)?),
                None => pipeline::cmd_export(&config)?,
            };
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(exit::OK)
        }
        Command::Add { job, table, x, y } => {
            let config = load(&job)?;
            let wf = pipeline::load_table(&config, &table)?;
            let ctx = wf.system().context();
            let x = DigitString::parse(&x, ctx)?;
            let y = DigitString::parse(&y, ctx)?;
            println!("{}", add(&x, &y, &wf, Mode::Parallel)?.without_leading_zeros());
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EWM_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(exit::OTHER as u8);
        }
    }
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit::code(&e)
        }
    };
    ExitCode::from(code as u8)
}
