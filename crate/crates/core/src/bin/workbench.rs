//! Command-line front end over `gh_workbench::workbench`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use gh_workbench::workbench::{emit_report, run, run_cached, Format, RunConfig, RunError, COMMANDS, VERSION};

#[derive(Parser, Debug)]
#[command(name = "workbench", version, about = "Exact Hochschild, singular Hochschild and string-topology computations")]
struct Cli {
    /// One of: validate, casimir, euler, hh, hhcoh, hhsg, gh-table, cup-table, retract-check,
    /// les-check, anomaly-check, transport, invariance-check, report.
    command: String,
    /// Algebra description, morphism file, or a zig-zag of morphism files.
    #[arg(required = true)]
    inputs: Vec<String>,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    min: i64,
    #[arg(long, default_value_t = 8, allow_hyphen_values = true)]
    max: i64,
    /// Highest coefficient level Ω^p (hhcoh) or highest stabilization level (retract-check, report).
    #[arg(long = "p-cap")]
    p_cap: Option<usize>,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reuse and store reports keyed by the hash of the settings and input contents.
    #[arg(long = "cache-dir")]
    cache_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    if !COMMANDS.contains(&cli.command.as_str()) {
        eprintln!("error: unknown command \"{}\"; expected one of {}", cli.command, COMMANDS.join(", "));
        return ExitCode::from(2);
    }
    let config = RunConfig {
        command: cli.command.clone(),
        inputs: cli.inputs.clone(),
        min: cli.min,
        max: cli.max,
        p_cap: cli.p_cap,
        samples: cli.samples,
        seed: cli.seed,
        version: VERSION.to_string(),
    };
    let started = Instant::now();
    let result = match &cli.cache_dir {
        Some(dir) => run_cached(&config, dir),
        None => run(&config),
    };
    let report = match result {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(RunError::exit_code(&e) as u8);
        }
    };
    let text = emit_report(&report, cli.format);
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    eprintln!("{} finished in {:.2?}", config.command, started.elapsed());
    ExitCode::from(report.exit_code() as u8)
}
