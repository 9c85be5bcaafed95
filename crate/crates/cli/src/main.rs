use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::warn;

use emhd_cli::{diff_runs, run, Exit, Mode, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "emhd-cascade", version, about = "Bubble-cascade blow-up laboratory for the 1D electron-MHD model")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// TOML or JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// cascade | direct | crosscheck | diagnose | root | hilbert-selftest
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted `key=value`, e.g. `params.A=1.5`; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Seed bump width, `r=VALUE`.
    #[arg(long, value_name = "r=VALUE")]
    seed_profile: Option<String>,
    #[arg(long, value_parser = ["on", "off"])]
    plots: Option<String>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Numeric diff of two runs' CSV and JSON artifacts.
    Diff {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
    },
}

fn init_threads() {
    let Ok(raw) = std::env::var("EMHD_CASCADE_THREADS") else { return };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                warn!("could not size the thread pool: {e}");
            }
        }
        _ => warn!("ignoring EMHD_CASCADE_THREADS={raw}"),
    }
}

fn resolve(cli: &Cli) -> emhd_cascade::Result<RunConfig> {
    let base = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut overrides = cli.overrides.clone();
    if let Some(m) = cli.mode {
        overrides.push(format!("mode=\"{m}\""));
    }
    if let Some(out) = &cli.out {
        overrides.push(format!("output.dir={}", serde_json::to_string(out).expect("path serializes")));
    }
    if let Some(s) = &cli.seed_profile {
        let v = s
            .strip_prefix("r=")
            .ok_or_else(|| emhd_cascade::CascadeError::Config(format!("--seed-profile expects r=VALUE, got '{s}'")))?;
        overrides.push(format!("params.r={v}"));
    }
    if let Some(p) = &cli.plots {
        overrides.push(format!("output.plots={}", p == "on"));
    }
    base.with_overrides(&overrides)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(Exit::ConfigError as u8) } else { ExitCode::SUCCESS };
        }
    };
    init_threads();

    if let Some(Command::Diff { a, b, tolerance }) = &cli.command {
        return match diff_runs(a, b, *tolerance) {
            Ok(report) => {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                ExitCode::from(if report.pass { 0 } else { Exit::MonitorFailure as u8 })
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(Exit::of_error(&e) as u8)
            }
        };
    }

    let config = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Exit::ConfigError as u8);
        }
    };
    if cli.print_config {
        print!("{}", toml::to_string(&config).expect("config serializes"));
        return ExitCode::SUCCESS;
    }

    let outcome = run(&config);
    for line in &outcome.summary {
        println!("{line}");
    }
    if let Some(report) = &outcome.report {
        for m in &report.monitors {
            println!("{} {}: {}", if m.pass { "PASS" } else { "FAIL" }, m.name, m.detail);
        }
    }
    if let Some(err) = &outcome.manifest.error {
        eprintln!("error: {err}");
    }
    if outcome.exit == Exit::MonitorFailure {
        eprintln!("{}", serde_json::to_string(&outcome.manifest.failures).expect("failures serialize"));
    }
    println!(
        "run {} ({}) -> {} [{}]",
        outcome.manifest.run_id,
        config.mode,
        config.output.dir.display(),
        outcome.manifest.status
    );
    ExitCode::from(outcome.exit as u8)
}
