use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rashomon_core::config::validate_config_with;
use rashomon_core::pipeline::{self, RunOptions, RunSummary, Stage};

#[derive(Parser)]
#[command(name = "rashomon", version, about = "Rashomon sets and variable-importance order discrepancy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, split and describe every dataset.
    Ingest(RunArgs),
    /// Build (or reuse) the model space of every setup.
    Space(RunArgs),
    /// Extract the Rashomon sets.
    Rashomon(RunArgs),
    /// Permutation importance over every Rashomon set.
    Pvi(RunArgs),
    /// Rankings, Kendall's tau and VIOD.
    Viod(RunArgs),
    /// The full pipeline.
    Run(RunArgs),
    /// Re-emit summaries from an existing run directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides `master_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    quiet: bool,
}

fn print_summary(s: &RunSummary) {
    println!("setup,course,n_rows,space_size,space_mean,set_mean,set_size,viod_min,viod_max");
    let opt = |x: Option<f64>| x.map_or("NA".to_string(), |v| format!("{v:.4}"));
    for o in &s.setups {
        let r = o.summary_row();
        println!(
            "{},{},{},{},{},{},{},{},{}",
            r.setup,
            r.course,
            r.n_rows,
            r.space_size.map_or("NA".into(), |v| v.to_string()),
            opt(r.space_mean),
            opt(r.set_mean),
            r.set_size.map_or("NA".into(), |v| v.to_string()),
            opt(r.viod_min),
            opt(r.viod_max),
        );
    }
    println!("artifacts: {}", s.out_dir.display());
}

fn run(args: RunArgs, until: Stage) -> Result<RunSummary, rashomon_core::Error> {
    let mut config = validate_config_with(&args.config, args.seed)?;
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    let mut opts = RunOptions {
        until,
        progress: !args.quiet,
        ..RunOptions::default()
    };
    if let Some(w) = args.workers {
        opts.workers = w;
    }
    pipeline::run_pipeline(&config, &opts)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => run(a, Stage::Ingest),
        Command::Space(a) => run(a, Stage::Space),
        Command::Rashomon(a) => run(a, Stage::Rashomon),
        Command::Pvi(a) => run(a, Stage::Pvi),
        Command::Viod(a) | Command::Run(a) => run(a, Stage::Viod),
        Command::Report { out } => pipeline::report(&out),
    };
    match result {
        Ok(summary) => {
            print_summary(&summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
