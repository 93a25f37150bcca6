use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geoflow_cli::{analyze_to_files, read_track, rescale, run, CliError, CliResult, ExperimentConfig};

#[derive(Parser)]
#[command(name = "geoflow", version, about = "Mean curvature flow experiments", allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow described by a config file.
    Run { config: PathBuf },
    /// Run the diagnostics of a config file over a stored track.
    Analyze {
        track: PathBuf,
        config: PathBuf,
        /// CSV output, overriding `output.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// JSON output, overriding `output.report`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Parabolically dilate a track about `(y0, t0)`.
    Rescale {
        track: PathBuf,
        /// Comma-separated center; defaults to the origin.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        y0: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t0: f64,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        /// Output path; defaults to `<track>.rescaled.mcft`.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> CliResult<i32> {
    geoflow_cli::configure_threads()?;
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let summary = run(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&summary.report)?);
            if summary.stop.is_failure() {
                eprintln!("geoflow: {}", summary.stop);
                return Ok(2);
            }
        }
        Command::Analyze { track, config, csv, report } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let data = read_track(&track)?;
            let csv = csv.or(cfg.output.csv.clone());
            let report = report.or(cfg.output.report.clone());
            let analysis = analyze_to_files(&data, &cfg.diagnostics, cfg.seed, csv.as_deref(), report.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&analysis.report)?);
        }
        Command::Rescale { track, y0, t0, lambda, out } => {
            let out = out.unwrap_or_else(|| track.with_extension("rescaled.mcft"));
            let dilated = rescale(&track, &out, &y0, t0, lambda)?;
            println!("wrote {} snapshots to {}", dilated.len(), out.display());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("geoflow: {e}");
            ExitCode::from(CliError::exit_code(&e) as u8)
        }
    }
}
