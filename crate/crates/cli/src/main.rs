use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use scarlab::{load, run, CliError, Command, RunOptions};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sub {
    Validate,
    Scar,
    Variance,
    Average,
    Egorov,
    Product,
    Spectrum,
    ClassicalCheck,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Validate => Command::Validate,
            Sub::Scar => Command::Scar,
            Sub::Variance => Command::Variance,
            Sub::Average => Command::Average,
            Sub::Egorov => Command::Egorov,
            Sub::Product => Command::Product,
            Sub::Spectrum => Command::Spectrum,
            Sub::ClassicalCheck => Command::ClassicalCheck,
        }
    }
}

/// Numerical experiments on quantized perturbed cat maps.
#[derive(Debug, Parser)]
#[command(name = "scarlab", version)]
struct Cli {
    #[arg(value_enum)]
    subcommand: Sub,
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run a single N instead of the configured list.
    #[arg(long)]
    only_n: Option<usize>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("SCARLAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Validation(format!("SCARLAB_THREADS: expected a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let exp = load(&cli.config)?;
    let opts = RunOptions {
        out: cli.out.clone(),
        only_n: cli.only_n,
        threads: threads_from_env()?,
    };
    for w in &exp.warnings {
        eprintln!("warning: {w}");
    }
    let manifest = run(cli.subcommand.into(), &exp, &opts)?;
    if !cli.quiet {
        println!("{} config_sha256={}", manifest.subcommand, manifest.config_digest);
        for (name, value) in &manifest.summary {
            println!("  {name} = {value:e}");
        }
        for f in &manifest.files {
            println!("  wrote {} ({} rows)", f.name, f.rows);
        }
    }
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    for f in &manifest.tolerance_failures {
        eprintln!("tolerance failure: {f}");
    }
    Ok(manifest.tolerance_failures.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
