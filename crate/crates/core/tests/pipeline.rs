use std::process::Command;

use dimwise::harness::{emit_csv, experiment_preset, read_csv, run_sweep, ExperimentConfig};
use dimwise::pde::GridResolution;
use dimwise::Execution;

fn small_fig2() -> ExperimentConfig {
    let mut cfg = experiment_preset("fig2-desk").unwrap();
    cfg.gamma_list = vec![0.5, 0.8];
    cfg.pde = GridResolution::new(60, 6);
    cfg.mc.n_samples = 20_000;
    cfg.mc.batch = 4096;
    cfg
}

#[test]
fn sweep_csv_is_byte_identical_across_runs_and_modes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, exec) in [Execution::Parallel, Execution::Parallel, Execution::Sequential].into_iter().enumerate() {
        let cfg = ExperimentConfig { execution: exec, ..small_fig2() };
        let path = dir.path().join(format!("run{i}.csv"));
        emit_csv(&run_sweep(&cfg).unwrap(), &path).unwrap();
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let records = read_csv(&dir.path().join("run0.csv")).unwrap();
    assert_eq!(records.len(), 2);
    assert!(records[0].gamma > records[1].gamma);
}

#[test]
fn config_file_round_trip_drives_the_same_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let cfg = small_fig2();
    std::fs::write(&path, cfg.to_json()).unwrap();
    let loaded = ExperimentConfig::load(&path).unwrap();
    assert_eq!(loaded, cfg);
    assert_eq!(run_sweep(&loaded).unwrap(), run_sweep(&cfg).unwrap());
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dimwise")).args(args).output().unwrap()
}

#[test]
fn cli_plan_and_errors() {
    let out = cli(&["plan", "-n", "4", "-r", "1", "-m", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("terms=4"), "{text}");

    let out = cli(&["plan", "-n", "3", "-r", "2", "-m", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = cli(&["solve", "--preset", "fig9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig9"));

    // the kink preset with closed forms needs no grid or sampling
    let out = cli(&["converge", "--preset", "fig4-desk", "--gamma", "0.5,0.7,0.9"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().last().unwrap().starts_with("exponent="), "{text}");

    let out = cli(&["converge", "--preset", "fig4-desk", "--gamma", "0.5,0.9"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: no power-law fit"));
}

#[test]
fn cli_config_file_and_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let csv_path = dir.path().join("out.csv");
    let mut cfg = experiment_preset("fig4-desk").unwrap();
    cfg.gamma_list = vec![0.6, 0.7, 0.8];
    std::fs::write(&cfg_path, cfg.to_json()).unwrap();
    let out = cli(&[
        "converge",
        "--config",
        cfg_path.to_str().unwrap(),
        "--strike",
        "0.5",
        "-o",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = read_csv(&csv_path).unwrap();
    assert_eq!(records.iter().map(|r| r.gamma).collect::<Vec<_>>(), vec![0.8, 0.7, 0.6]);
    assert!(records.windows(2).all(|w| w[0].abs_error < w[1].abs_error));
}
