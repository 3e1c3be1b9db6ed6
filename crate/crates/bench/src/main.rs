use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zomd_bench::report::{report_dir, write_outputs};
use zomd_bench::{run_experiment, BenchError, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(
    name = "zomd",
    version,
    about = "Run zeroth-order mirror descent experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every point of the config's T or t_grid.
    Run(RunArgs),
    /// Run the grid given in the config's [sweep] table.
    Sweep(RunArgs),
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Print the summaries found in a results directory.
    Report { dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; the ZO_THREADS environment variable takes precedence.
    #[arg(long)]
    threads: Option<usize>,
    /// Ratio between consecutive checkpoint iterations.
    #[arg(long)]
    checkpoints: Option<f64>,
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, BenchError> {
    match std::env::var("ZO_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| BenchError::config("ZO_THREADS", format!("not a thread count: {v:?}"))),
        Err(_) => Ok(flag),
    }
}

fn run(args: RunArgs, sweep: bool) -> Result<(), BenchError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    Overrides {
        seed: args.seed,
        trials: args.trials,
        out: args.out,
        checkpoint_ratio: args.checkpoints,
    }
    .apply(&mut config);
    let threads = threads(args.threads)?;
    let outcome = run_experiment(&config, sweep, threads)?;
    let summary = write_outputs(&outcome, &config.output.dir)?;
    for r in &outcome.rows {
        println!(
            "{:<14} T={:<9} trials={:<5} median={:.4e} mean={:.4e}",
            r.label, r.iterations, r.trials, r.median, r.mean
        );
    }
    if let Some(f) = outcome.rate {
        println!("rate slope {:.4} ± {:.4}", f.slope, f.half_width);
    }
    if let Some(f) = outcome.floor {
        println!("floor slope {:.4} ± {:.4}", f.slope, f.half_width);
    }
    println!("summary written to {}", summary.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a, false),
        Command::Sweep(a) => run(a, true),
        Command::Validate { config } => ExperimentConfig::load(&config).and_then(|c| {
            let points = c.validate(c.sweep.is_some())?;
            println!(
                "{}: ok ({} points, hash {})",
                config.display(),
                points.len(),
                c.hash()
            );
            Ok(())
        }),
        Command::Report { dir } => report_dir(&dir).map(|t| print!("{t}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
