use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fgl_lab::config::parse_override;
use fgl_lab::{execute, Experiment, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "fgl", version, about = "Fractional Ginzburg-Landau experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat key = value config file layered over the experiment preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for report.json, series.csv and timing.json.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Extra `key=value` override, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Energy of minimizers on growing balls
    EnergyGrowth,
    /// Measure of a phase inside growing balls
    Density,
    /// Level-set convergence along an eps sweep
    Levelset,
    /// Interaction lower bounds over a random pair corpus
    Gmt,
    /// Sobolev-type bound for sets
    Sobolev,
    /// Barrier calibration and verification
    Barrier,
    /// Doubling iteration on synthetic data
    Iterate,
    /// Build and verify the near-weight cache
    KernelCache,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::EnergyGrowth => Experiment::EnergyGrowth,
            Command::Density => Experiment::Density,
            Command::Levelset => Experiment::Levelset,
            Command::Gmt => Experiment::Gmt,
            Command::Sobolev => Experiment::Sobolev,
            Command::Barrier => Experiment::Barrier,
            Command::Iterate => Experiment::Iterate,
            Command::KernelCache => Experiment::KernelCache,
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let exp = Experiment::from(cli.command);
    let mut extra = cli.set.iter().map(|a| parse_override(a)).collect::<Result<Vec<_>>>()?;
    if let Some(seed) = cli.seed {
        extra.push(("seed".into(), seed.to_string()));
    }
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(exp, path, &extra)?,
        None => ExperimentConfig::build(exp, &extra)?,
    };
    let rep = execute(&cfg, &cli.out, cli.threads)?;
    for c in &rep.criteria {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("{exp}: {:?}, passed = {} ({})", rep.status, rep.passed, cli.out.display());
    Ok(rep.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
