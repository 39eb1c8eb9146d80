use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn coten(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coten"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn envelope(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json output")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("coten-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn ising_exact_classical_chain() {
    let o = coten(&["ising-exact", "--n", "8", "--lambda", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "N,lambda,energy,energy_density\n8,0,-8,-1\n");
}

#[test]
fn ising_exact_json_echoes_config() {
    let v = envelope(&coten(&[
        "ising-exact",
        "--n",
        "8",
        "--lambda",
        "1",
        "--format",
        "json",
        "--seed",
        "5",
    ]));
    assert_eq!(v["config"]["common"]["seed"], 5);
    assert_eq!(v["config"]["command"]["ising-exact"]["n"], 8);
    let e = v["payload"]["energy_density"].as_f64().unwrap();
    assert!((e + 1.2814577238707532).abs() < 1e-12);
}

#[test]
fn map_check_urbm_passes() {
    let v = envelope(&coten(&[
        "map-check",
        "--ansatz",
        "urbm",
        "--n",
        "8",
        "--layers",
        "1",
        "--seed",
        "7",
    ]));
    assert!(v["payload"]["max_rel_dev"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["payload"]["pass"], true);
    assert_eq!(v["config"]["common"]["seed"], 7);
}

#[test]
fn map_check_rbm_and_urbm2d() {
    let v = envelope(&coten(&[
        "map-check",
        "--ansatz",
        "rbm",
        "--n",
        "6",
        "--hidden",
        "4",
        "--draws",
        "3",
    ]));
    assert!(v["payload"]["max_rel_dev"].as_f64().unwrap() <= 1e-12);
    let v = envelope(&coten(&[
        "map-check",
        "--ansatz",
        "urbm2d",
        "--n",
        "2",
        "--draws",
        "3",
    ]));
    assert!(v["payload"]["max_rel_dev"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn copeps_check_reports_symmetries() {
    let v = envelope(&coten(&["copeps-check", "--side", "2", "--draws", "2"]));
    let p = &v["payload"];
    assert_eq!(p["pass"], true);
    assert!(p["max_shift_dev"].as_f64().unwrap() < 1e-10);
    assert!(p["max_flip_dev"].as_f64().unwrap() < 1e-10);
}

#[test]
fn optimize_urbm_payload_is_reproducible() {
    let args = [
        "optimize-urbm",
        "--layers",
        "1",
        "--lambda",
        "1",
        "--n",
        "20",
        "--seeds",
        "2",
    ];
    let a = envelope(&coten(&args));
    let b = envelope(&coten(&args));
    assert_eq!(a["payload"], b["payload"]);
    let p = &a["payload"];
    assert_eq!(p["best_params"].as_array().unwrap().len(), 3);
    assert_eq!(p["seeds"].as_array().unwrap().len(), 2);
    assert!(p["delta_E"].as_f64().unwrap() < 1e-2);
}

#[test]
fn optimize_mps_small_chain() {
    let v = envelope(&coten(&[
        "optimize-mps",
        "--chi",
        "2",
        "--lambda",
        "1",
        "--n",
        "10",
        "--seeds",
        "1",
    ]));
    assert_eq!(v["payload"]["best_params"].as_array().unwrap().len(), 8);
    assert!(v["payload"]["energy_density"].as_f64().unwrap() >= -1.2815);
}

#[test]
fn scan_lambda_csv() {
    let o = coten(&[
        "scan-lambda",
        "--n",
        "12",
        "--lambda-min",
        "0.5",
        "--lambda-max",
        "1.5",
        "--steps",
        "3",
        "--seeds",
        "1",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,energy_density,exact_density,delta_E");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("1,"));
}

#[test]
fn corr_uses_ed_reference_for_small_chains() {
    let params = scratch("params.txt");
    std::fs::write(&params, "-0.16, -1.07, 0.36\n").unwrap();
    let v = envelope(&coten(&[
        "corr",
        "--ansatz",
        "urbm",
        "--params",
        params.to_str().unwrap(),
        "--n",
        "10",
        "--rmax",
        "4",
        "--format",
        "json",
    ]));
    assert_eq!(v["payload"]["reference_source"], "exact diagonalization");
    assert_eq!(v["payload"]["rows"].as_array().unwrap().len(), 4);
    let o = coten(&[
        "corr",
        "--ansatz",
        "urbm",
        "--params",
        params.to_str().unwrap(),
        "--n",
        "30",
        "--rmax",
        "3",
    ]);
    assert!(stdout(&o).starts_with("r,correlator,reference,rel_error\n"));
}

#[test]
fn fss_writes_three_files() {
    let prefix = scratch("fss");
    let o = coten(&[
        "fss",
        "--ansatz",
        "urbm",
        "--chis",
        "4",
        "--n-grid",
        "8,12,16,20,24",
        "--seeds",
        "1",
        "--goal",
        "1e-4",
        "-o",
        prefix.to_str().unwrap(),
    ]);
    let v = envelope(&o);
    assert_eq!(v["payload"]["fit_weighting"], "uniform in ln(delta_E)");
    assert_eq!(v["payload"]["detail"].as_array().unwrap().len(), 5);
    let detail = std::fs::read_to_string(scratch("fss_detail.csv")).unwrap();
    assert!(detail.lines().any(|l| l == "chi,n,delta_E"));
    assert!(detail.lines().next().unwrap().starts_with("# tool: coten"));
    let nstar = std::fs::read_to_string(scratch("fss_nstar.csv")).unwrap();
    assert!(nstar.contains("chi,nstar,nstar_error,extrapolated,status"));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(scratch("fss_summary.json")).unwrap())
            .unwrap();
    assert!(summary["payload"]["exponent"].is_object());
}

#[test]
fn config_file_with_flag_override() {
    let cfg = scratch("run.conf");
    std::fs::write(&cfg, "# chain\nn = 10\nlambda = 0.5\n").unwrap();
    let o = coten(&["ising-exact", "--config", cfg.to_str().unwrap()]);
    assert!(stdout(&o).starts_with("N,lambda,energy,energy_density\n10,0.5,"));
    let o = coten(&[
        "--config",
        cfg.to_str().unwrap(),
        "ising-exact",
        "--n",
        "12",
    ]);
    assert!(stdout(&o).contains("\n12,0.5,"));
}

#[test]
fn distinct_exit_codes() {
    let code = |args: &[&str]| coten(args).status.code().unwrap();
    assert_eq!(
        code(&["ising-exact", "--n", "8", "--lambda", "1", "--bogus"]),
        2
    );
    assert_eq!(code(&["no-such-command"]), 2);
    assert_eq!(code(&["ising-exact", "--n", "2", "--lambda", "1"]), 3);
    assert_eq!(code(&["ising-exact", "--n", "8", "--lambda", "-1"]), 3);
    assert_eq!(
        code(&[
            "ising-exact",
            "--n",
            "8",
            "--lambda",
            "1",
            "-o",
            "/nonexistent/dir/x.csv"
        ]),
        4
    );
    assert_eq!(
        code(&["ising-exact", "--config", "/nonexistent/run.conf"]),
        5
    );
    let o = coten(&["ising-exact", "--n", "2", "--lambda", "1"]);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "invalid_argument");
}

#[test]
fn csv_file_output_is_self_describing() {
    let path = scratch("exact.csv");
    let o = coten(&[
        "ising-exact",
        "--n",
        "6",
        "--lambda",
        "1",
        "--seed",
        "9",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"seed\":9"));
    assert!(text.contains("N,lambda,energy,energy_density\n6,1,"));
}
