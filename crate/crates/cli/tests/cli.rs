use std::path::Path;
use std::process::{Command, Output};

use histsim::freefermion::{hopping_lambda_for_spin, SingleParticleState};
use histsim::hamiltonians::{build_aubry_andre_spin, AubryAndreParams, Boundary};
use histsim::histstate::{build_history_state, linear_entropy};
use tempfile::TempDir;

fn histsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_histsim")).args(args).output().expect("binary runs")
}

fn run_with(cmd: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = out.join(format!("{cmd}.toml"));
    std::fs::write(&cfg, config).unwrap();
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    histsim(&args)
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const HISTORY: &str = r#"
schema_version = 1
kind = "history"
seed = 4

[params]
model = { type = "random", n = 2, terms = 6 }
state = { type = "random" }
m = [1, 2]
epsilon = { lo = 0.2, hi = 0.6, step = 0.2 }
"#;

#[test]
fn history_is_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        let o = run_with("history", HISTORY, d.path(), &[]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let x = std::fs::read(a.path().join("history.csv")).unwrap();
    let y = std::fs::read(b.path().join("history.csv")).unwrap();
    assert_eq!(x, y);
    let rows = read_csv(&a.path().join("history.csv"));
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let e2: f64 = r[3].parse().unwrap();
        let lbar: f64 = r[5].parse().unwrap();
        assert!(e2 <= 1.0 - lbar + 1e-12);
        assert!(r[4].contains('e'), "17-digit scientific format");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    run_with("history", HISTORY, a.path(), &[]);
    run_with("history", HISTORY, b.path(), &["--seed", "5"]);
    let x = std::fs::read(a.path().join("history.csv")).unwrap();
    let y = std::fs::read(b.path().join("history.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn config_errors_exit_with_2() {
    let d = TempDir::new().unwrap();
    let unknown = HISTORY.replace("seed = 4", "seed = 4\ncolour = 1");
    let o = run_with("history", &unknown, d.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let nested = HISTORY.replace("m = [1, 2]", "m = [1, 2]\nfoo = 1");
    let o = run_with("history", &nested, d.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("params"));
    assert_eq!(code(&run_with("history", &HISTORY.replace("schema_version = 1", "schema_version = 9"), d.path(), &[])), 2);
    assert_eq!(code(&run_with("loschmidt", HISTORY, d.path(), &[])), 2);
    assert_eq!(code(&run_with("history", "schema_version = 1\n", d.path(), &[])), 2);
    let big = HISTORY.replace("n = 2, terms", "n = 15, terms");
    assert_eq!(code(&run_with("history", &big, d.path(), &[])), 2);
}

#[test]
fn estimators_agree_with_direct_values() {
    let d = TempDir::new().unwrap();
    let f = r#"
schema_version = 1
[params]
model = { type = "xy", n = 2, ax = [0.6], ay = [0.2], az = [0.3, -0.5] }
state = { type = "random" }
o1 = [[1.0, "XZ"], [0.5, "IY"]]
o2 = [[0.7, "ZZ"]]
omega = 0.4
m = [1, 2]
epsilon = [0.3]
"#;
    assert_eq!(code(&run_with("estimate-f", f, d.path(), &[])), 0);
    let l = r#"
schema_version = 1
[params]
model = { type = "aubry-andre", n = 3, lambda = 1.5 }
state = { type = "sites", sites = [2] }
m = [2, 3]
epsilon = [0.45, 1.25]
"#;
    assert_eq!(code(&run_with("loschmidt", l, d.path(), &[])), 0);
    for file in ["estimate_f.csv", "loschmidt.csv"] {
        let rows = read_csv(&d.path().join(file));
        for group in rows.chunks(3) {
            let direct: (f64, f64) = (group[2][4].parse().unwrap(), group[2][5].parse().unwrap());
            for r in &group[..2] {
                let got: (f64, f64) = (r[4].parse().unwrap(), r[5].parse().unwrap());
                assert!((got.0 - direct.0).abs() < 1e-10 && (got.1 - direct.1).abs() < 1e-10, "{file}: {r:?}");
            }
        }
    }
}

#[test]
fn entanglement_reports_bounds() {
    let d = TempDir::new().unwrap();
    let cfg = r#"
schema_version = 1
[params]
model = { type = "random", n = 2, terms = 5 }
state = { type = "random" }
m = [1, 2, 3]
epsilon = [0.7]
observable = [[1.0, "XI"], [0.3, "ZY"]]
"#;
    assert_eq!(code(&run_with("entanglement", cfg, d.path(), &[])), 0);
    for r in read_csv(&d.path().join("entanglement.csv")) {
        let v: Vec<f64> = r[3..].iter().map(|x| x.parse().unwrap()).collect();
        assert!(v[2] >= -1e-12);
        assert!(v[3] <= v[5] + 1e-12 && v[5] <= v[6] + 1e-12);
    }
}

const FF: &str = r#"
schema_version = 1
[params]
n = 8
lambda = { lo = 0.5, hi = 3.0, step = 0.5 }
log_n = [1, 2, 3]
epsilon = [0.45, 1.25]
sites = [4]
bond = [4, 5]
chunk = 2
"#;

#[test]
fn ff_sweep_matches_dense_and_resumes() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&run_with("ff-sweep", FF, d.path(), &[])), 0);
    let path = d.path().join("ff_sweep.csv");
    let full = std::fs::read_to_string(&path).unwrap();
    let rows = read_csv(&path);
    assert_eq!(rows.len(), 6 * 3 * 2);

    // Dense cross-check of the clock purity on the spin chain.
    let psi = SingleParticleState::localized(8, &[4]).unwrap();
    for r in rows.iter().step_by(7) {
        let (lambda, log_n, eps): (f64, usize, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap());
        let spin = AubryAndreParams::new(8, 2.0, 2.0 * lambda, Boundary::Periodic);
        assert_eq!(hopping_lambda_for_spin(spin.lambda), lambda);
        let hs = build_history_state(&build_aubry_andre_spin(&spin).unwrap(), &psi.to_spin_state().unwrap(), log_n, eps).unwrap();
        let purity: f64 = r[5].parse().unwrap();
        assert!((1.0 - linear_entropy(&hs).unwrap() - purity).abs() < 1e-10);
    }

    // Cut the file inside the third lambda block and rerun.
    let lines: Vec<&str> = full.lines().collect();
    std::fs::write(&path, lines[..1 + 2 * 6 + 3].join("\n") + "\n").unwrap();
    assert_eq!(code(&run_with("ff-sweep", FF, d.path(), &[])), 0);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), full);
    // A complete file is left unchanged.
    assert_eq!(code(&run_with("ff-sweep", FF, d.path(), &[])), 0);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), full);

    // Rows from a different grid are refused.
    let other = FF.replace("epsilon = [0.45, 1.25]", "epsilon = [0.5, 1.25]");
    assert_eq!(code(&run_with("ff-sweep", &other, d.path(), &[])), 2);
}

#[test]
fn vhd_smoke_run() {
    let d = TempDir::new().unwrap();
    let cfg = r#"
schema_version = 1
seed = 3
[params]
n = 2
lambdas = [1.0, 3.0]
layers = 1
layer_sweep = [1, 2]
train = { max_iters = 2000, restarts = 2, record_every = 100 }
"#;
    let start = std::time::Instant::now();
    let o = run_with("vhd-train", cfg, d.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(start.elapsed().as_secs_f64() < 5.0);
    let loss = read_csv(&d.path().join("vhd_loss.csv"));
    assert!(loss.iter().all(|r| r.len() == 4));
    let audit = read_csv(&d.path().join("vhd_offdiag.csv"));
    assert_eq!(audit.len(), 2);
    for r in &audit {
        let best: f64 = r[2].parse().unwrap();
        assert!(best < 1e-12, "two-site chain diagonalizes: {best}");
    }
    assert_eq!(read_csv(&d.path().join("vhd_layer_sweep.csv")).len(), 4);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("vhd_params_lambda_1.json")).unwrap()).unwrap();
    assert_eq!(json["params"]["alpha"].as_array().unwrap().len(), 2);
    let bad = cfg.replace("record_every = 100", "record_every = 100, momentum = 1");
    assert_eq!(code(&run_with("vhd-train", &bad, d.path(), &[])), 2);
}

#[test]
fn depth_report_defaults() {
    let d = TempDir::new().unwrap();
    let o = histsim(&["depth-report", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let diag = read_csv(&d.path().join("depth_diagonalized.csv"));
    assert_eq!(diag[0][7], "88");
    assert_eq!(diag[0][8], "88");
    let table = read_csv(&d.path().join("depth.csv"));
    assert_eq!(table.len(), 3 * 12);
    assert!(std::fs::read_to_string(d.path().join("depth.md")).unwrap().starts_with("| n | N |"));
}

#[test]
fn protocol_bench_shot_scaling() {
    let d = TempDir::new().unwrap();
    let o = histsim(&["protocol-bench", "--out", d.path().to_str().unwrap(), "--seed", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("protocol_bench.json")).unwrap()).unwrap();
    assert!(v["loschmidt_exact_gap"].as_f64().unwrap() < 1e-10);
    for p in v["protocols"].as_array().unwrap() {
        let name = p["protocol"].as_str().unwrap();
        let slope = p["slope_empirical"].as_f64().unwrap();
        assert!((slope + 0.5).abs() <= 0.15, "{name}: slope {slope}");
        if name == "f-parallel" {
            assert!((p["slope_reported"].as_f64().unwrap() + 0.5).abs() <= 0.1);
        }
    }
}
