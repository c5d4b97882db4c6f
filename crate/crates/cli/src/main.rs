use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thermoecon::emit::{emit, Format};
use thermoecon::integrator::RunStatus;
use thermoecon::metrics::invariant_checks;
use thermoecon::scenario::{list_presets, resolve, ScenarioSpec};
use thermoecon::sweep;

/// Resource-sheet / Goodwin economy simulator.
#[derive(Parser)]
#[command(name = "thermoecon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Integration step.
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated time span.
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or scenario file and write its time series.
    Run {
        scenario: String,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory (default: $THERMOECON_OUT_DIR or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Run every point of a parameter grid and write a summary CSV.
    Sweep {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the names of the built-in scenarios.
    ListPresets,
    /// Run a scenario and report the invariant checks.
    Check {
        scenario: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("THERMOECON_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load(scenario: &str, overrides: &Overrides) -> thermoecon::Result<ScenarioSpec> {
    let mut spec = resolve(scenario)?;
    if let Some(dt) = overrides.dt {
        // keep the sampling grid aligned with the new step
        spec.stride = (spec.stride / dt).round().max(1.0) * dt;
        spec.dt = dt;
    }
    if let Some(h) = overrides.horizon {
        spec.horizon = h;
    }
    spec.validate()?;
    Ok(spec)
}

fn report_status(status: &RunStatus) {
    match status {
        RunStatus::Completed => eprintln!("completed"),
        RunStatus::Collapsed { t, reason } => eprintln!("collapsed at t = {t}: {reason}"),
    }
}

fn execute(command: Command) -> thermoecon::Result<bool> {
    match command {
        Command::Run {
            scenario,
            overrides,
            out,
            format,
        } => {
            let record = load(&scenario, &overrides)?.run()?;
            report_status(&record.status);
            for path in emit(&record, format, &out_dir(out))? {
                println!("{}", path.display());
            }
            Ok(true)
        }
        Command::Sweep { file, out } => {
            let (grid, base) = sweep::load(&file)?;
            let points = grid.expand(&base)?;
            log::info!("sweeping {} points", points.len());
            let results = sweep::run(points);
            let dir = out_dir(out);
            std::fs::create_dir_all(&dir)?;
            for r in &results {
                if let Ok(rec) = &r.outcome {
                    emit(rec, Format::Csv, &dir)?;
                }
            }
            let path = dir.join(format!("{}-sweep.csv", base.name));
            sweep::write_summary(&grid, &results, std::fs::File::create(&path)?)?;
            println!("{}", path.display());
            Ok(results.iter().all(|r| r.outcome.is_ok()))
        }
        Command::ListPresets => {
            for name in list_presets() {
                println!("{name}");
            }
            Ok(true)
        }
        Command::Check { scenario, overrides } => {
            let record = load(&scenario, &overrides)?.run()?;
            report_status(&record.status);
            let checks = invariant_checks(&record);
            for c in &checks {
                println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

