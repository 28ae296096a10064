use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use pairsource::{load_config, Command, Context, ToolkitError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    Spectrum,
    PumpRate,
    TemperatureScan,
    PhaseMap,
    Optimize,
    Curves,
    Visibility,
    Counting,
    Simulate,
    ReproduceAll,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Spectrum => Command::Spectrum,
            CommandArg::PumpRate => Command::PumpRate,
            CommandArg::TemperatureScan => Command::TemperatureScan,
            CommandArg::PhaseMap => Command::PhaseMap,
            CommandArg::Optimize => Command::Optimize,
            CommandArg::Curves => Command::Curves,
            CommandArg::Visibility => Command::Visibility,
            CommandArg::Counting => Command::Counting,
            CommandArg::Simulate => Command::Simulate,
            CommandArg::ReproduceAll => Command::ReproduceAll,
        }
    }
}

/// Design and simulation toolkit for broadband-pumped entangled photon-pair
/// sources.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[arg(value_enum)]
    command: CommandArg,
    /// Source configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV and report files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of points per joint-spectrum axis.
    #[arg(long)]
    grid: Option<usize>,
}

fn run(cli: &Cli) -> Result<(), ToolkitError> {
    let mut config = load_config(&cli.config)?;
    if let Some(seed) = cli.seed {
        config = config.with_seed(seed);
    }
    if let Some(points) = cli.grid {
        config = config.with_grid_points(points)?;
    }
    for w in &config.warnings {
        eprintln!("warning: {w}");
    }
    let command = Command::from(cli.command);
    let ctx = Context::new(&config, &cli.out)?;
    let report = pairsource::commands::run(&ctx, command)?;

    let path = cli.out.join(format!("{}.json", command.name()));
    let text = serde_json::to_string_pretty(&report).map_err(|e| ToolkitError::output(&path, e))?;
    std::fs::write(&path, format!("{text}\n")).map_err(|e| ToolkitError::output(&path, e))?;

    if command == Command::ReproduceAll {
        let criteria = report["criteria"].as_array().cloned().unwrap_or_default();
        let mut failed = Vec::new();
        for c in &criteria {
            let pass = c["pass"].as_bool().unwrap_or(false);
            let id = c["id"].as_str().unwrap_or("?");
            println!(
                "{:<4} {}  {}: computed {} (expected {}, tolerance {})",
                id,
                if pass { "PASS" } else { "FAIL" },
                c["description"].as_str().unwrap_or(""),
                c["computed"].as_str().unwrap_or(""),
                c["expected"].as_str().unwrap_or(""),
                c["tolerance"].as_str().unwrap_or(""),
            );
            if !pass {
                failed.push(id.to_string());
            }
        }
        if !failed.is_empty() {
            return Err(ToolkitError::AcceptanceFailed { failed });
        }
    } else {
        println!("{text}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
