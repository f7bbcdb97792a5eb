use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rlsched_bench::config::{ConfigError, ExperimentConfig};
use rlsched_bench::harness::{run_compare, sweep_latency, sweep_load, sweep_resource, HarnessError, SweepResult};
use rlsched_bench::model::save_model;
use rlsched_bench::report::{emit_reports, Formats};
use rlsched_core::sim::{mm1_mean_response, run_mm1_validation};

/// Microservice scheduling experiments on a discrete-event cluster simulator.
#[derive(Parser)]
#[command(name = "rlsched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Comparison plus all three sweeps.
    Run(Common),
    /// Every configured scheduler on the reference scenario.
    Compare(Common),
    /// Efficiency across load levels.
    SweepLoad(Common),
    /// Efficiency across per-hop network latencies.
    SweepLatency(Common),
    /// Efficiency across resource profiles.
    SweepResource(Common),
    /// Runs the simulator as an M/M/1 queue against the closed form.
    ValidateMm1(Mm1Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn formats(f: Option<Format>) -> Formats {
    match f {
        None => Formats::ALL,
        Some(Format::Csv) => Formats { csv: true, json: false },
        Some(Format::Json) => Formats { csv: false, json: true },
    }
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replace the config's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write only this format; both when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also write every trained model under `<out>/models`.
    #[arg(long)]
    save_models: bool,
}

#[derive(Args)]
struct Mm1Args {
    /// Arrival rate per ms.
    #[arg(long)]
    lambda: f64,
    /// Service rate per ms.
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 100_000)]
    requests: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(e) => Failure::Config(e.to_string()),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load_config(c: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::from_json(r#"{"version": 1}"#)?,
    };
    if let Some(seed) = c.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(out) = &c.out {
        cfg.output_dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(r: &SweepResult) {
    println!("{:<14} {:<13} {:>16} {:>12} {:>12}", r.axis, "scheduler", "efficiency %", "mean ms", "rps");
    for v in &r.values {
        for &k in &r.schedulers {
            let (eff, sd) = r.stat(v, k, |m| m.scheduling_efficiency_pct);
            let (resp, _) = r.stat(v, k, |m| m.mean_response_ms);
            let (tput, _) = r.stat(v, k, |m| m.throughput_rps);
            println!("{v:<14} {:<13} {eff:>9.2} ± {sd:<4.2} {resp:>12.2} {tput:>12.2}", k.name());
        }
    }
}

fn save_models(results: &[SweepResult], dir: &Path) -> Result<(), Failure> {
    let dir = dir.join("models");
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    for r in results {
        for c in &r.cells {
            if let Some(m) = &c.model {
                let name = format!("{}_{}_{}_seed{}.txt", r.axis, c.axis_value, c.scheduler.name(), c.seed);
                save_model(m, &dir.join(name)).map_err(|e| Failure::Runtime(e.to_string()))?;
            }
        }
    }
    Ok(())
}

fn experiments(command: &Command, c: &Common) -> Result<(), Failure> {
    let cfg = load_config(c)?;
    let runners: &[fn(&ExperimentConfig) -> Result<SweepResult, HarnessError>] = match command {
        Command::Run(_) => &[run_compare, sweep_load, sweep_latency, sweep_resource],
        Command::Compare(_) => &[run_compare],
        Command::SweepLoad(_) => &[sweep_load],
        Command::SweepLatency(_) => &[sweep_latency],
        Command::SweepResource(_) => &[sweep_resource],
        Command::ValidateMm1(_) => unreachable!("handled separately"),
    };
    let mut results = Vec::with_capacity(runners.len());
    for run in runners {
        let r = run(&cfg)?;
        print_summary(&r);
        results.push(r);
    }
    let out = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    let written = emit_reports(&results, &out, formats(c.format)).map_err(|e| Failure::Runtime(e.to_string()))?;
    if c.save_models {
        save_models(&results, &out)?;
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn validate_mm1(a: &Mm1Args) -> Result<(), Failure> {
    let measured = run_mm1_validation(a.lambda, a.mu, a.requests, a.seed).map_err(|e| Failure::Config(e.to_string()))?;
    let expected = mm1_mean_response(a.lambda, a.mu);
    let rel = (measured - expected).abs() / expected;
    let fmt = a.format.unwrap_or(Format::Csv);
    let text = match fmt {
        Format::Csv => format!(
            "lambda,mu,requests,seed,mean_response_ms,expected_ms,relative_error\n{},{},{},{},{measured},{expected},{rel}\n",
            a.lambda, a.mu, a.requests, a.seed
        ),
        Format::Json => {
            let v = serde_json::json!({
                "lambda": a.lambda, "mu": a.mu, "requests": a.requests, "seed": a.seed,
                "mean_response_ms": measured, "expected_ms": expected, "relative_error": rel,
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("serializable"))
        }
    };
    print!("{text}");
    if let Some(dir) = &a.out {
        let name = match fmt {
            Format::Csv => "mm1.csv",
            Format::Json => "mm1.json",
        };
        std::fs::create_dir_all(dir)
            .and_then(|_| std::fs::write(dir.join(name), &text))
            .map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    }
    Ok(())
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
    let outcome = match &cli.command {
        Command::ValidateMm1(a) => validate_mm1(a),
        Command::Run(c)
        | Command::Compare(c)
        | Command::SweepLoad(c)
        | Command::SweepLatency(c)
        | Command::SweepResource(c) => experiments(&cli.command, c),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
