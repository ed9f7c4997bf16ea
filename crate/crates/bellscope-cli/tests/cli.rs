use serde_json::Value;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bellscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellscope"))
        .args(args)
        .env_remove("BELLSCOPE_CONFIG")
        .output()
        .expect("binary runs")
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_bellscope"))
        .args(args)
        .env_remove("BELLSCOPE_CONFIG")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    // The binary may exit before reading stdin, e.g. on a bad flag.
    let _ = child.stdin.take().unwrap().write_all(input.as_bytes());
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn table_json(p: [[f64; 4]; 4]) -> String {
    serde_json::json!({ "p": p }).to_string()
}

#[test]
fn classify_hardy_from_named_dump() {
    let dump = json(&bellscope(&["named", "--point", "hardy", "--emit", "correlation"]));
    let input = serde_json::json!({ "p": dump["correlation"]["p"] }).to_string();
    let out = with_stdin(&["classify"], &input);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["class"], "3a");
    assert_eq!(v["zeros"], serde_json::json!(["0000", "1110", "1101"]));
}

#[test]
fn classify_uniform_is_none() {
    let out = with_stdin(&["classify", "-"], &table_json([[0.25; 4]; 4]));
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["class"], "none");
}

#[test]
fn classify_signaling_table_is_rejected() {
    // Rows sum to one per setting pair but Alice's marginal depends on y.
    let p = [
        [1.0, 0.0, 0.5, 0.0],
        [0.0, 0.0, 0.0, 0.5],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.5, 0.5],
    ];
    let out = with_stdin(&["classify"], &table_json(p));
    assert_eq!(code(&out), 3);
    let v = json(&out);
    assert_eq!(v["validity"]["no_signaling"], false);
    assert_eq!(v["validity"]["normalized"], true);
}

#[test]
fn classify_bad_json_is_usage_error() {
    assert_eq!(code(&with_stdin(&["classify"], "{\"p\": [1, 2")), 2);
    assert_eq!(code(&with_stdin(&["classify"], "{\"p\": [[1,2,3]]}")), 2);
}

#[test]
fn named_q_carries_constants() {
    let v = json(&bellscope(&["named", "--point", "q"]));
    let k = &v["constants"];
    let (k1, k2, k3) = (
        k["kappa1"].as_f64().unwrap(),
        k["kappa2"].as_f64().unwrap(),
        k["kappa3"].as_f64().unwrap(),
    );
    assert!((2.0 * k1 + 2.0 * k2 + 2.0 * k3 - 1.0).abs() < 1e-12);
    assert_eq!(v["class"], "3b");
    assert!(v["strategy"].is_object());
}

#[test]
fn named_pr_is_the_pr_table() {
    let v = json(&bellscope(&["named", "--point", "pr", "--emit", "correlation"]));
    let p: [[f64; 4]; 4] = serde_json::from_value(v["correlation"]["p"].clone()).unwrap();
    let flat: Vec<f64> = p.iter().flatten().copied().collect();
    assert!(flat.iter().all(|&x| x == 0.0 || x == 0.5));
    assert!((v["chsh"].as_f64().unwrap().abs() - 4.0).abs() < 1e-12);
    // No quantum strategy behind a PR box.
    assert_eq!(code(&bellscope(&["named", "--point", "pr", "--emit", "strategy"])), 3);
}

#[test]
fn named_cabello_matches_four_decimal_table() {
    let expected = [
        [0.0, 0.2770, 0.1444, 0.1326],
        [0.6410, 0.0820, 0.5786, 0.1444],
        [0.3068, 0.3342, 0.6410, 0.0],
        [0.3342, 0.0247, 0.0820, 0.2770],
    ];
    let v = json(&bellscope(&["named", "--point", "cabello", "--emit", "correlation"]));
    let p: [[f64; 4]; 4] = serde_json::from_value(v["correlation"]["p"].clone()).unwrap();
    for r in 0..4 {
        for c in 0..4 {
            assert!((p[r][c] - expected[r][c]).abs() < 5e-5, "({r},{c}): {}", p[r][c]);
        }
    }
}

#[test]
fn unknown_name_exits_2() {
    assert_eq!(code(&bellscope(&["named", "--point", "nowhere"])), 2);
    assert_eq!(code(&bellscope(&["certify-nonexposed", "--point", "nowhere"])), 2);
}

#[test]
fn maximize_2b_is_five_halves() {
    let out = bellscope(&["maximize", "--class", "2b"]);
    assert_eq!(code(&out), 0);
    assert!((json(&out)["value"].as_f64().unwrap() - 2.5).abs() < 1e-9);
    assert_eq!(code(&bellscope(&["maximize", "--class", "4a"])), 3);
    assert_eq!(code(&bellscope(&["maximize", "--class", "9z"])), 2);
}

#[test]
fn maximize_with_scan_stays_below_closed_form() {
    let v = json(&bellscope(&["maximize", "--class", "3a", "--verify-scan", "60"]));
    let scan = &v["scan"];
    assert!(scan["gap"].as_f64().unwrap() >= -1e-9);
}

#[test]
fn mes_seven() {
    let v = json(&bellscope(&["mes", "--d", "7"]));
    let expected = 2.0 * 2f64.sqrt() * 6.0 / 7.0 + 2.0 / 7.0;
    assert!((v["value"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert!((v["achieved"].as_f64().unwrap() - expected).abs() < 1e-9);
    assert_eq!(code(&bellscope(&["mes", "--d", "1"])), 3);
}

#[test]
fn certify_q3_has_unit_dual() {
    let out = bellscope(&["certify-nonexposed", "--point", "q3"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["dual_value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["primal_value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(code(&bellscope(&["certify-nonexposed", "--point", "uniform"])), 3);
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn robust_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("robust.csv");
    let args = [
        "robust",
        "--point",
        "q2",
        "--chsh-grid",
        "2.45:2.5:2",
        "--level",
        "2",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(code(&bellscope(&args)), 0);
    let csv = read(&out);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("S,eps,bound,merit_party"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    let bounds: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(bounds[1] >= bounds[0] - 1e-6);
    assert!(bounds[1] >= 0.99);
    // 17 significant digits.
    assert_eq!(rows[1][0], "2.5000000000000000e0");

    let manifest: Value = serde_json::from_str(&read(&dir.path().join("robust.csv.manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "robust");
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["parameters"]["level"], 2);
    assert!(manifest["timing"]["wall_time_s"].as_f64().unwrap() >= 0.0);

    // Replaying the recorded argv reproduces the output byte for byte.
    let argv: Vec<String> = serde_json::from_value(manifest["argv"].clone()).unwrap();
    let first = std::fs::read(&out).unwrap();
    let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
    assert_eq!(code(&bellscope(&argv)), 0);
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn robust_above_relaxed_max_is_domain_error() {
    let out = bellscope(&["robust", "--point", "q2", "--chsh-grid", "2.9:2.9:1", "--level", "2"]);
    assert_eq!(code(&out), 3);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains("NaN"));
}

#[test]
fn robust_measurement_merit_clears_trivial_score() {
    let out = bellscope(&[
        "robust",
        "--point",
        "q2",
        "--chsh-grid",
        "2.5:2.5:1",
        "--level",
        "2",
        "--merit",
        "measA",
    ]);
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert!(row[2].parse::<f64>().unwrap() > 0.0);
    assert_eq!(row[3], "measA");
}

#[test]
fn curve_columns_and_hardy_endpoint() {
    let out = bellscope(&[
        "curve",
        "--cells",
        "0000,1110,1101",
        "--grid",
        "0:0.25:2",
        "--level",
        "1",
    ]);
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("h,S_min,S_max,status_min,status_max,level"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(first[2].parse::<f64>().unwrap() >= 2.36068 - 1e-6);
    assert_eq!(first[4], "converged");
    assert_eq!(code(&bellscope(&["curve", "--grid", "0:1:2"])), 2);
    assert_eq!(code(&bellscope(&["curve", "--cells", "0020", "--grid", "0:1:2"])), 2);
}

#[test]
fn scan_is_identical_across_thread_counts() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_bellscope"))
            .args(["scan", "--class", "2a", "--grid", "8"])
            .env("BELLSCOPE_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let many = run("4");
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, many.stdout);
    let text = String::from_utf8(one.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("theta,alpha,beta,S,class_ok"));
}

#[test]
fn tolerance_from_config_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bellscope.toml");
    std::fs::write(&cfg, "tol = 0.2\nseed = 7\n").unwrap();
    // Cells of 0.125 count as zeros only under the loose tolerance.
    let mut p = [[0.25; 4]; 4];
    p[0] = [0.125, 0.375, 0.25, 0.25];
    p[1] = [0.375, 0.125, 0.25, 0.25];
    let input = table_json(p);
    let strict = json(&with_stdin(&["classify"], &input));
    assert_eq!(strict["zeros"], serde_json::json!([]));
    let manifest = dir.path().join("m.json");
    let loose = with_stdin(
        &[
            "--config",
            cfg.to_str().unwrap(),
            "classify",
            "--manifest",
            manifest.to_str().unwrap(),
        ],
        &input,
    );
    assert_eq!(code(&loose), 0);
    assert_eq!(json(&loose)["zeros"], serde_json::json!(["0000", "1100"]));
    let m: Value = serde_json::from_str(&read(&manifest)).unwrap();
    assert_eq!(m["tolerances"]["seed"], 7);
    // The flag wins over the file.
    let flagged = json(&with_stdin(
        &["--config", cfg.to_str().unwrap(), "--tol", "1e-9", "classify"],
        &input,
    ));
    assert_eq!(flagged["zeros"], serde_json::json!([]));
    assert_eq!(code(&with_stdin(&["--tol", "-1", "classify"], &input)), 2);
    std::fs::write(&cfg, "tolerance = 1\n").unwrap();
    assert_eq!(
        code(&with_stdin(&["--config", cfg.to_str().unwrap(), "classify"], &input)),
        2
    );
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let a = bellscope(&["named", "--point", "q4"]);
    let b = bellscope(&["named", "--point", "q4"]);
    assert_eq!(a.stdout, b.stdout);
}
