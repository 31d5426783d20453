//! Command-line experiment runner.
//!
//! ```text
//! homog run <config.toml> [--out DIR] [--threads N] [--seed S] [--dry-run]
//! homog preset <name>     [--out DIR] [--threads N] [--seed S] [--dry-run]
//! homog presets
//! ```
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure,
//! 4 infeasible schedule.

pub mod config;
pub mod presets;
pub mod runner;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::HomogError;

pub use config::{Case, ExperimentConfig};
pub use presets::{preset, Preset, PRESETS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "homog", version, about = "Periodic homogenisation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a built-in experiment.
    Preset {
        name: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// List the built-in experiments.
    Presets,
}

#[derive(Debug, Args)]
pub struct RunOpts {
    /// Print sizes and memory estimates without solving.
    #[arg(long)]
    pub dry_run: bool,
    /// Output directory (overrides the config's `output`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Seed for synthetic inputs and Lanczos start vectors.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Exit code for an error raised while running.
pub fn exit_code(e: &HomogError) -> i32 {
    match e {
        HomogError::Config(_) => EXIT_CONFIG,
        HomogError::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_SOLVER,
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Presets => {
            for p in PRESETS {
                println!("{:<16} {}", p.name, p.summary);
            }
            return EXIT_OK;
        }
        Command::Run { config, opts } => match ExperimentConfig::load(&config) {
            Ok((cfg, text)) => run(&cfg, &text, &opts),
            Err(e) => Err(e),
        },
        Command::Preset { name, opts } => match preset(&name) {
            Some(p) => ExperimentConfig::parse(p.config).and_then(|cfg| run(&cfg, p.config, &opts)),
            None => Err(HomogError::Config(format!(
                "unknown preset `{name}`; available: {}",
                PRESETS.iter().map(|p| p.name).collect::<Vec<_>>().join(", ")
            ))),
        },
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed configuration with command-line overrides.
pub fn run(cfg: &ExperimentConfig, text: &str, opts: &RunOpts) -> crate::Result<()> {
    let seed = opts.seed.unwrap_or(cfg.seed);
    let threads = opts.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(HomogError::Config("--threads must be positive".into()));
    }
    let cases = cfg.cases(seed)?;
    let pre = runner::preflight(cfg, &cases, threads)?;
    let bad = pre.infeasible();
    if !bad.is_empty() {
        let list: Vec<String> = bad
            .iter()
            .map(|(t, e)| {
                let c = &cases[t.case];
                format!("{} ({}, d={}) N={} ~{:.0} MiB", t.kind.label(), c.geometry_name(), c.d, t.n, e.bytes as f64 / 1048576.0)
            })
            .collect();
        return Err(HomogError::Infeasible(format!(
            "pre-flight memory estimate exceeds the limit for: {}",
            list.join(", ")
        )));
    }
    if opts.dry_run {
        print!("{}", pre.table(&cases));
        return Ok(());
    }
    let out = opts
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HomogError::InvalidArgument(e.to_string()))?;
    let outcome = pool.install(|| runner::execute(cfg, text, &cases, seed, &out))?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for f in &outcome.files {
        println!("{}", f.display());
    }
    if let Some(peak) = runner::peak_resident_bytes() {
        eprintln!(
            "peak resident {:.1} MiB, pre-flight estimate {:.1} MiB",
            peak as f64 / 1048576.0,
            pre.peak_bytes as f64 / 1048576.0
        );
    }
    Ok(())
}
