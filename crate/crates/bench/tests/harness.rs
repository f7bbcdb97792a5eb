use std::fs;
use std::path::Path;
use std::process::Command;

use rlsched_bench::config::{ConfigError, ExperimentConfig, SchedulerKind};
use rlsched_bench::harness::{run_compare, sweep_latency, sweep_load, sweep_resource, train, HarnessError, Scenario};
use rlsched_bench::model::{load_model, save_model};
use rlsched_bench::report::{comparison_csv, emit_reports, plotdata_csv, sweep_csv, Formats, METRIC_COLUMNS};
use rlsched_bench::trace::{load_trace, write_trace};
use rlsched_core::workload::TraceRecord;
use rlsched_core::Resource;

fn merge(base: &mut serde_json::Value, extra: serde_json::Value) {
    match (base, extra) {
        (serde_json::Value::Object(b), serde_json::Value::Object(e)) => {
            for (k, v) in e {
                merge(b.entry(k).or_insert(serde_json::Value::Null), v);
            }
        }
        (b, e) => *b = e,
    }
}

/// Small enough that a full compare trains in well under a second.
fn tiny(extra: &str) -> ExperimentConfig {
    let mut cfg = serde_json::json!({
        "version": 1,
        "workload": {"horizon_ms": 800, "train_horizon_ms": 300},
        "agent": {"dqn": {"hidden": [8], "episodes": 2}, "q_learning": {"episodes": 2}},
        "sweeps": {"latencies_ms": [10, 30]},
        "seeds": [1, 2]
    });
    merge(&mut cfg, serde_json::from_str(&format!("{{{extra}}}")).unwrap());
    ExperimentConfig::from_json(&cfg.to_string()).unwrap()
}

fn config_error(text: &str) -> ConfigError {
    ExperimentConfig::from_json(text).unwrap_err()
}

#[test]
fn config_errors_carry_the_field_path() {
    let e = config_error(r#"{"version": 1, "workload": {"horzon_ms": 5}}"#);
    assert!(e.field().unwrap().starts_with("workload"), "{e}");
    assert!(e.to_string().contains("horzon_ms"), "{e}");

    let e = config_error(r#"{"version": 1, "agent": {"dqn": {"gamma": "high"}}}"#);
    assert_eq!(e.field(), Some("agent.dqn.gamma"), "{e}");

    let e = config_error(r#"{"version": 1, "schedulers": []}"#);
    assert_eq!(e.field(), Some("schedulers"));

    let e = config_error(r#"{"version": 1, "schedulers": ["sjf"]}"#);
    assert!(e.field().unwrap().starts_with("schedulers"), "{e}");

    assert_eq!(config_error(r#"{"version": 2}"#).field(), Some("version"));
    assert_eq!(config_error(r#"{"version": 1, "seeds": []}"#).field(), Some("seeds"));
    assert_eq!(
        config_error(r#"{"version": 1, "workload": {"horizon_ms": 0}}"#).field(),
        Some("workload.horizon_ms")
    );
}

#[test]
fn config_round_trips_through_json() {
    let cfg = tiny(r#""schedulers": ["dqn", "static"]"#);
    assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
}

#[test]
fn baseline_compare_has_a_row_per_scheduler_and_seed() {
    let cfg = tiny(r#""schedulers": ["static", "round_robin", "least_loaded", "random"]"#);
    let r = run_compare(&cfg).unwrap();
    assert_eq!(r.cells.len(), 8);
    let csv = comparison_csv(&r);
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..3], ["axis_value", "scheduler", "seed"]);
    assert_eq!(&header[3..], METRIC_COLUMNS);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8 + 4);
    assert_eq!(rows.iter().filter(|l| l.split(',').nth(2) == Some("mean")).count(), 4);
    for c in &r.cells {
        c.report.check_conservation().unwrap();
        assert!(c.model.is_none() && c.learning_curve.is_empty());
    }
    // cost efficiency is relative within each seed
    for seed in [1, 2] {
        let best = r.cells.iter().filter(|c| c.seed == seed).map(|c| c.report.cost_efficiency_pct);
        assert_eq!(best.fold(0.0, f64::max), 100.0);
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let cfg = tiny(r#""schedulers": ["dqn", "q_learning", "static", "random"]"#);
    let emit = || {
        let dir = tempfile::tempdir().unwrap();
        let results = [run_compare(&cfg).unwrap(), sweep_latency(&cfg).unwrap()];
        let written = emit_reports(&results, dir.path(), Formats::ALL).unwrap();
        let names: Vec<String> = written
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["comparison.csv", "sweep_latency.csv", "plotdata_latency.csv", "report.json"]);
        written.iter().map(|p| fs::read(p).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(emit(), emit());
}

#[test]
fn sweeps_have_one_cell_per_value_scheduler_and_seed() {
    let cfg = tiny(r#""schedulers": ["least_loaded", "static"], "sweeps": {"levels": ["low", "high"]}"#);
    let r = sweep_load(&cfg).unwrap();
    assert_eq!(r.values, ["low", "high"]);
    assert_eq!(r.cells.len(), 2 * 2 * 2);
    let long = sweep_csv(&r);
    assert_eq!(long.lines().count(), 1 + r.cells.len() * METRIC_COLUMNS.len());
    assert!(long.starts_with("axis_value,scheduler,seed,metric,value\n"));
    let plot = plotdata_csv(&r);
    assert_eq!(plot.lines().next(), Some("load,least_loaded_mean,least_loaded_std,static_mean,static_std"));
    assert_eq!(plot.lines().count(), 3);

    let single = tiny(r#""schedulers": ["static"], "sweeps": {"levels": ["medium"]}"#);
    assert_eq!(sweep_load(&single).unwrap().cells.len(), 2);
}

#[test]
fn removing_network_delay_does_not_hurt() {
    let cfg = tiny(r#""schedulers": ["least_loaded"], "sweeps": {"latencies_ms": [0, 10]}"#);
    let r = sweep_latency(&cfg).unwrap();
    let eff = |v: &str| r.stat(v, SchedulerKind::LeastLoaded, |m| m.scheduling_efficiency_pct).0;
    assert!(eff("0") >= eff("10"), "{} < {}", eff("0"), eff("10"));
}

#[test]
fn profile_has_no_effect_without_skew() {
    let cfg = tiny(r#""schedulers": ["least_loaded", "random"], "topology": {"skew": 1.0}"#);
    let r = sweep_resource(&cfg).unwrap();
    assert_eq!(r.values.len(), 4);
    for k in [SchedulerKind::LeastLoaded, SchedulerKind::Random] {
        for seed in [1, 2] {
            let reports: Vec<_> = r.cells.iter().filter(|c| c.scheduler == k && c.seed == seed).map(|c| &c.report).collect();
            assert!(reports.windows(2).all(|w| w[0] == w[1]), "{k:?} seed {seed}");
        }
    }
}

#[test]
fn training_ignores_evaluation_settings() {
    let a = tiny(r#""schedulers": ["dqn"]"#);
    let mut b = a.clone();
    b.workload.horizon_ms = 2_000.0;
    b.seeds = vec![7, 1];
    let scenario = Scenario::reference(&a).unwrap();
    let (ma, ca) = train(&a, &scenario, SchedulerKind::Dqn, 1).unwrap().unwrap();
    let (mb, cb) = train(&b, &scenario, SchedulerKind::Dqn, 1).unwrap().unwrap();
    assert_eq!(ma.to_text(), mb.to_text());
    assert_eq!(ca, cb);
}

#[test]
fn trained_models_survive_a_file_round_trip() {
    let cfg = tiny(r#""schedulers": ["dqn", "q_learning"], "seeds": [3]"#);
    let dir = tempfile::tempdir().unwrap();
    for cell in run_compare(&cfg).unwrap().cells {
        let model = cell.model.unwrap();
        let path = dir.path().join(cell.scheduler.name());
        save_model(&model, &path).unwrap();
        assert_eq!(load_model(&path).unwrap().to_text(), model.to_text());
    }
    assert!(load_model(&dir.path().join("missing")).is_err());
}

#[test]
fn unwritable_output_directory_is_an_io_error() {
    let file = tempfile::NamedTempFile::new().unwrap();
    let cfg = tiny(r#""schedulers": ["static"], "seeds": [1]"#);
    let r = run_compare(&cfg).unwrap();
    let err = emit_reports(&[r], &file.path().join("sub"), Formats::ALL).unwrap_err();
    assert!(err.path.starts_with(file.path()));
}

fn sample_trace() -> Vec<TraceRecord> {
    (0..40)
        .map(|i| TraceRecord {
            timestamp_ms: 25.0 * i as f64,
            resource_type: [Resource::Cpu, Resource::Memory][i % 2],
            utilization: 0.25 + 0.5 * (i % 3) as f64 / 2.0,
            requested_capacity: 1.5,
            current_load: (i % 4) as u64,
            response_time_ms: 12.5,
        })
        .collect()
}

#[test]
fn trace_files_round_trip_and_drive_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    write_trace(&sample_trace(), &path).unwrap();
    assert_eq!(load_trace(&path).unwrap(), sample_trace());
    let bytes = fs::read(&path).unwrap();
    write_trace(&load_trace(&path).unwrap(), &path).unwrap();
    assert_eq!(fs::read(&path).unwrap(), bytes);

    let cfg_path = dir.path().join("config.json");
    fs::write(
        &cfg_path,
        r#"{"version": 1, "workload": {"trace": "trace.csv"}, "schedulers": ["static", "q_learning"],
            "agent": {"q_learning": {"episodes": 2}}, "seeds": [1]}"#,
    )
    .unwrap();
    let cfg = ExperimentConfig::load(&cfg_path).unwrap();
    let r = run_compare(&cfg).unwrap();
    let offered: u64 = sample_trace().iter().map(|t| t.current_load).sum();
    for c in &r.cells {
        assert_eq!(c.report.offered, offered);
        c.report.check_conservation().unwrap();
    }
}

#[test]
fn missing_trace_is_reported() {
    let cfg = tiny(r#""workload": {"trace": "/nonexistent/trace.csv"}"#);
    assert!(matches!(run_compare(&cfg), Err(HarnessError::Trace(_))));
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rlsched")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.json");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy().into_owned();

    let (code, stdout) = cli(&["validate-mm1", "--lambda", "0.5", "--mu", "1.0", "--requests", "2000"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("lambda,mu,requests"));
    assert_eq!(cli(&["validate-mm1", "--lambda", "2", "--mu", "1"]).0, 1);
    assert_eq!(cli(&["compare", "--bogus"]).0, 1);

    let bad = write_config(dir.path(), r#"{"version": 1, "slo_ms": -1}"#);
    assert_eq!(cli(&["compare", "--config", &bad]).0, 1);

    let good = write_config(
        dir.path(),
        r#"{"version": 1, "schedulers": ["static", "least_loaded"], "workload": {"horizon_ms": 500}}"#,
    );
    let (code, _) = cli(&["compare", "--config", &good, "--seed", "4", "--out", &out_s, "--format", "csv"]);
    assert_eq!(code, 0);
    assert!(out.join("comparison.csv").exists());
    assert!(!out.join("report.json").exists());

    let blocked = dir.path().join("cfg.json").join("sub");
    assert_eq!(cli(&["compare", "--config", &good, "--out", &blocked.to_string_lossy()]).0, 2);
}
