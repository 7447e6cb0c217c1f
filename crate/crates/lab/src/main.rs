use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use etl_lab::runner::ReportData;
use etl_lab::{render, run_experiment, summarize_file, LabError, Settings};

#[derive(Parser)]
#[command(name = "etl-lab", version, about = "Trust-learning experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; falls back to $ETL_LAB_OUT, then "results".
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the number of seeds.
        #[arg(long)]
        seeds: Option<u64>,
        /// Override the master seed.
        #[arg(long)]
        master_seed: Option<u64>,
    },
    /// Aggregate a tower or grid results CSV across seeds.
    Summarize {
        csv: PathBuf,
        /// Trailing episode window to average separately.
        #[arg(long, default_value_t = 500)]
        window: usize,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), LabError> {
    match cli.command {
        Command::Run { config, out, seeds, master_seed } => {
            let mut settings = Settings::load(&config)?;
            if let Some(n) = seeds {
                settings.n_seeds = Some(n);
            }
            if let Some(s) = master_seed {
                settings.master_seed = Some(s);
            }
            let out_dir = out
                .or_else(|| std::env::var_os("ETL_LAB_OUT").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("results"));
            let report = run_experiment(&settings, &out_dir)?;
            println!("{} [{}]", report.kind, report.fingerprint);
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            print_outcome(&report.data);
        }
        Command::Summarize { csv, window } => {
            let summary = summarize_file(&csv, window)?;
            print!("{}", render(&summary));
        }
    }
    Ok(())
}

fn print_outcome(data: &ReportData) {
    match data {
        ReportData::Tower(rows) => {
            let n = rows.len() as f64;
            let success = rows.iter().filter(|r| r.success).count() as f64 / n;
            let deaths = rows.iter().map(|r| r.deaths as f64).sum::<f64>() / n;
            println!("episodes: {}  success rate: {success:.3}  mean deaths: {deaths:.3}", rows.len());
        }
        ReportData::Grid(rows) => {
            let n = rows.len() as f64;
            let conflicts = rows.iter().map(|r| r.conflicts_per_step).sum::<f64>() / n;
            let remaining = rows.iter().map(|r| r.remaining_resources).sum::<f64>() / n;
            println!(
                "episodes: {}  mean conflicts/step: {conflicts:.4}  mean remaining resources: {remaining:.2}",
                rows.len()
            );
        }
        ReportData::Ipd(ipd) => {
            println!("matches: {}", ipd.rows.len());
            for row in &ipd.table {
                println!(
                    "{}: {}/{} successes ({:.3})",
                    row.strategy, row.successes, row.games, row.success_rate
                );
            }
        }
    }
}
