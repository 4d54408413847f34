//! Experiment CLI: loads a JSON config, applies flag overrides and runs
//! the corresponding experiment from the library.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use vgchaos::experiment::{run, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "vgchaos", version, about = "Variance-Gamma chaos approximation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config (JSON document).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the Monte Carlo size.
    #[arg(long)]
    mc: Option<usize>,
    /// Suppress the timestamp header so replays are byte-identical.
    #[arg(long)]
    reproducible: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Cumulants of a kernel, tensor, or target law.
    Cumulants(CommonArgs),
    /// Distance-bound reports (kernel, tensor, or mixed two-chaos forms).
    Bound(CommonArgs),
    /// Stein characterization residuals, constants and equation solves.
    SteinCheck(CommonArgs),
    /// Export draws from a kernel, tensor, or target law.
    Sample(CommonArgs),
    /// Sequence experiments: six-moment and central-limit kinds.
    Converge(CommonArgs),
    /// Homogeneous-sum universality across base laws.
    Universality(CommonArgs),
    /// Multivariate bound assembly for kernel vectors.
    Multivariate(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Cumulants(a)
            | Command::Bound(a)
            | Command::SteinCheck(a)
            | Command::Sample(a)
            | Command::Converge(a)
            | Command::Universality(a)
            | Command::Multivariate(a) => a,
        }
    }

    fn accepts(&self, kind: &str) -> bool {
        match self {
            Command::Cumulants(_) => kind == "cumulants",
            Command::Bound(_) => kind == "bound",
            Command::SteinCheck(_) => kind == "stein_check",
            Command::Sample(_) => kind == "sample",
            Command::Converge(_) => kind == "six_moment" || kind == "clt",
            Command::Universality(_) => kind == "universality",
            Command::Multivariate(_) => kind == "multivariate",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = cli.command.args();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::FAILURE;
        }
    };
    let config = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::FAILURE;
        }
    };
    if !cli.command.accepts(config.kind_name()) {
        eprintln!(
            "error: config kind `{}` does not match this subcommand",
            config.kind_name()
        );
        return ExitCode::FAILURE;
    }
    let opts = RunOptions {
        out_dir: args.out.clone(),
        seed: args.seed,
        mc: args.mc,
        reproducible: args.reproducible,
    };
    match run(&config, &opts) {
        Ok(output) => {
            for f in output.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
