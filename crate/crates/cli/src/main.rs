//! `ldp`: runs the laboratory's experiments from a JSON config.

mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ldp_core::{Error, ErrorKind};

use commands::{envelope, Output};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "ldp", version, about = "Large-deviation laboratory for locally insoluble fibres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; all defaults if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; each subcommand writes into `<out>/<subcommand>/`.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for the parallel kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Primes in the `sieve` section's range `(lo, hi]`.
    #[command(after_help = "primes.csv: index,p\nsummary.json: count, largest, reciprocal_sum")]
    Sieve,
    /// A sigma table (enumerated for `model` or synthetic) and its Mertens fit.
    #[command(after_help = "sigma.csv: p,sigma_numerator,sigma_denominator,provenance\n\
                            fit.json: delta_hat, beta_hat, grid, loglog, sums, residuals")]
    Sigma,
    /// Exact pmf, moments and MGF of the Poisson-binomial model.
    #[command(after_help = "pmf.csv: k,prob (last row `>cap` holds the overflow mass)\n\
                            moments.csv: r,moment_pmf,moment_recursion\n\
                            mgf.csv: t,log_mgf,mgf_product,mgf_pmf,normalized_log_mgf,mc_mean,mc_se\n\
                            histogram.csv: k,count,frequency (only with samples > 0)")]
    Model,
    /// The rate function on an x grid and the bracket for [0, epsilon).
    #[command(after_help = "rate.csv: x,I,closed_form,closed_form_residual,printed_form,printed_form_residual")]
    Rate,
    /// Tail counts over points of bounded height.
    #[command(after_help = "tail.csv: B,epsilon,mode,total,tail,fraction,normalized_log_fraction,threshold,\
                            window_lo,window_hi,window_empty,low_height,clamped\n\
                            truncation_gap.csv: B,threshold,count,max_gap\n\
                            regression.json, set_algebra.json, synthetic_exponent.json")]
    Experiment,
    /// The inequality suites.
    #[command(after_help = "norton.csv, hardy_ramanujan.csv, radical_sum.csv: name,params,lhs,rhs,margin\n\
                            nair_tenenbaum.csv: B,lhs,rhs_product,rhs,ratio\n\
                            *.txt: the same reports as aligned tables")]
    Bounds,
    /// Merges the summaries found under the output directory.
    #[command(after_help = "report.json: one object keyed by subcommand")]
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Sieve => "sieve",
            Command::Sigma => "sigma",
            Command::Model => "model",
            Command::Rate => "rate",
            Command::Experiment => "experiment",
            Command::Bounds => "bounds",
            Command::Report => "report",
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Budget => 3,
        ErrorKind::Internal => 4,
    }
}

/// Writes into `<dir>.partial` and renames on success, so an interrupted
/// write is never mistaken for a finished one.
fn write_outputs(cfg: &RunConfig, out: &Output, dir: &Path) -> std::io::Result<()> {
    let mut staging = dir.as_os_str().to_owned();
    staging.push(".partial");
    let staging = PathBuf::from(staging);
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;
    for a in &out.artifacts {
        fs::write(staging.join(&a.name), &a.contents)?;
    }
    fs::write(staging.join("summary.json"), envelope(cfg, out.summary.clone()))?;
    if dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    fs::rename(&staging, dir)
}

fn run(cli: &Cli) -> Result<PathBuf, Error> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidInput("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let output = match cli.command {
        Command::Sieve => commands::sieve(&cfg)?,
        Command::Sigma => commands::sigma(&cfg)?,
        Command::Model => commands::model(&cfg)?,
        Command::Rate => commands::rate(&cfg)?,
        Command::Experiment => commands::experiment(&cfg)?,
        Command::Bounds => commands::bounds(&cfg)?,
        Command::Report => commands::report(&cfg, &cli.out)?,
    };
    let dir = cli.out.join(cli.command.name());
    write_outputs(&cfg, &output, &dir)?;
    Ok(dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(dir) => {
            if !cli.quiet {
                println!("{}: wrote {}", cli.command.name(), dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ldp {}: {e}", cli.command.name());
            ExitCode::from(exit_code(&e))
        }
    }
}
