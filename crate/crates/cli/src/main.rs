use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use vinerisk_cli::commands::{
    cmd_assess, cmd_benchmark_lqr, cmd_fit, cmd_rank, cmd_simulate, AssessArgs, BenchmarkArgs, FitArgs, RankArgs,
    SimulateArgs,
};
use vinerisk_cli::config::parse_levels;
use vinerisk_cli::{init_threads, CliResult};

/// D-vine quantile regression and exceedance risk for landing data.
#[derive(Parser)]
#[command(name = "vinerisk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit margins and a D-vine regression; write the model and summary tables.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "fit")]
        out: PathBuf,
    },
    /// Estimate P(response > c | covariates) for every record.
    Assess {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Repeat for several thresholds; defaults to the configured list.
        #[arg(long = "threshold")]
        thresholds: Vec<f64>,
        #[arg(long)]
        p_threshold: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "assess")]
        out: PathBuf,
    },
    /// Rank contributing factors of the risky records in an assess report.
    Rank {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        full_sample: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "ranking.txt")]
        out: PathBuf,
    },
    /// Compare linear quantile regression with Gaussian and full-catalog D-vines.
    BenchmarkLqr {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated quantile levels.
        #[arg(long)]
        levels: Option<String>,
        #[arg(long = "threshold")]
        thresholds: Vec<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "benchmark")]
        out: PathBuf,
    },
    /// Draw synthetic records from a ground-truth model.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2021)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "simulated.csv")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match cli.command {
        Command::Fit { data, config, out } => cmd_fit(&FitArgs { data, config, out }).map(drop),
        Command::Assess { model, data, thresholds, p_threshold, config, out } => {
            cmd_assess(&AssessArgs { model, data, config, thresholds, p_threshold, out }).map(drop)
        }
        Command::Rank { report, data, top, full_sample, config, out } => {
            cmd_rank(&RankArgs { report, data, config, top, full_sample, out }).map(drop)
        }
        Command::BenchmarkLqr { data, levels, thresholds, config, out } => {
            let levels = levels.as_deref().map(parse_levels).transpose()?;
            cmd_benchmark_lqr(&BenchmarkArgs { data, config, levels, thresholds, out }).map(drop)
        }
        Command::Simulate { n, seed, config, out } => cmd_simulate(&SimulateArgs { n, seed, config, out }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
