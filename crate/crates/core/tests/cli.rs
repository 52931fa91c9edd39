use std::fs;
use std::process::{Command, Output};

use asghf::adaptive::CompiledGrid;
use asghf::experiment::{ExperimentConfig, ExperimentReport};
use serde_json::Value;

fn asghf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asghf"))
        .args(args)
        .env_remove("ASGHF_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn table1_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = asghf(&["table1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    assert!(csv.starts_with("rule,points,value,percent_error"));
    assert!(csv.contains("SGH_4,533,"));
    let json: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table1.json")).unwrap()).unwrap();
    assert_eq!(json["exact"], 11464.0);
    assert_eq!(json["rows"].as_array().unwrap().len(), 9);
}

#[test]
fn tracking_outputs_are_reproducible_and_report_config() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = asghf(&[
            "tracking",
            "--scenario",
            "2",
            "--omega-deg",
            "4.5",
            "--runs",
            "4",
            "--steps",
            "30",
            "--seed",
            "11",
            "--threads",
            threads,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let pos = fs::read(dir.path().join("rmse_pos.csv")).unwrap();
        let vel = fs::read(dir.path().join("rmse_vel.csv")).unwrap();
        let report: ExperimentReport =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        (pos, vel, report)
    };
    let (pos_a, vel_a, report) = run("1");
    let (pos_b, vel_b, _) = run("2");
    assert_eq!(pos_a, pos_b);
    assert_eq!(vel_a, vel_b);

    let header = String::from_utf8(pos_a).unwrap();
    assert!(header.starts_with("step,ghf,sghf,asghf\n1,"));
    assert_eq!(header.lines().count(), 31);
    assert_eq!(report.config.turn_rate_deg, Some(4.5));
    assert_eq!(report.config.seed, 11);
    assert!(report.config.model.is_some());
    assert_eq!(report.timing.reference, "ghf");
}

#[test]
fn sinusoids_filter_selection_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = asghf(&[
        "sinusoids",
        "--scenario",
        "2",
        "--filter",
        "sghf,asghf",
        "--psi",
        "0.7,0.6",
        "--tol",
        "0.4",
        "--runs",
        "2",
        "--steps",
        "20",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("err_freq.csv")).unwrap();
    assert!(csv.starts_with("step,sghf,asghf\n"));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let grid = &report["config"]["filters"][1]["grid"];
    assert_eq!(grid["process"]["psi"], 0.7);
    assert_eq!(grid["measurement"]["psi"], 0.6);
    assert_eq!(grid["measurement"]["tol"], 0.4);
}

#[test]
fn invalid_configuration_exits_with_two() {
    for args in [
        &["sinusoids", "--runs", "0"][..],
        &["sinusoids", "--psi", "1.5"],
        &["tracking", "--scenario", "3"],
        &["sinusoids", "--tol", "1,2,3"],
        &["quad", "--dim", "0"],
        &["sinusoids", "--filter", "ekf"],
    ] {
        let out = asghf(args);
        assert_eq!(
            code(&out),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn numerical_failures_exit_with_three() {
    // Unscaled process noise drives the amplitudes far from their prior and
    // the Smolyak filter loses positive definiteness on every run.
    let mut config = ExperimentConfig::sinusoids(1).unwrap();
    if let Some(asghf::experiment::monte_carlo::ModelParams::Sinusoids(p)) = &mut config.model {
        p.freq_variance = 151.0;
        p.amp_variance = 80.0;
    }
    config.filters.retain(|f| f.name == "sghf");
    config.runs = 3;
    config.steps = 200;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = asghf(&[
        "sinusoids",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed on 3 of 3"));
}

#[test]
fn config_for_another_problem_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    let config = ExperimentConfig::tracking(1, 3.0).unwrap();
    fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = asghf(&["sinusoids", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn quad_dumps_adaptive_grid_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = asghf(&[
        "quad",
        "--dim",
        "6",
        "--psi",
        "0.4",
        "--tol",
        "1.6",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["exact"], 11464.0);
    assert!(summary["percent_error"].as_f64().unwrap() < 0.05);

    let grid = CompiledGrid::load(dir.path(), "grid").unwrap();
    assert_eq!(grid.sidecar.dimension, 6);
    assert_eq!(
        grid.sidecar.point_count,
        summary["points"].as_u64().unwrap() as usize
    );
    let value = grid
        .grid
        .apply(|x| vec![asghf::models::problem1_integrand(x)])
        .unwrap()[0];
    assert!((value - summary["value"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn quad_with_fixed_rules() {
    for (filter, points) in [("ghf", 64u64), ("sghf", 29)] {
        let out = asghf(&[
            "quad",
            "--dim",
            "3",
            "--integrand",
            "sum-squares",
            "--filter",
            filter,
            "--points",
            "4",
        ]);
        assert_eq!(code(&out), 0);
        let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(summary["percent_error"].as_f64().unwrap() < 1e-10);
        if filter == "ghf" {
            assert_eq!(summary["points"], points);
        }
    }
}
