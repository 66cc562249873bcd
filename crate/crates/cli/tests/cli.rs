use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn pufkey(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pufkey")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn binary_model(decoders: usize) -> Value {
    json!({
        "p_x": [0.5, 0.5],
        "enrollment": [[0.95, 0.05], [0.05, 0.95]],
        "decoder_states": vec![json!([[0.9, 0.1], [0.1, 0.9]]); decoders],
        "eve_states": [[[0.7, 0.3], [0.3, 0.7]]]
    })
}

fn sim_inputs(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let model = write(
        dir,
        "model.json",
        &json!({
            "p_x": [0.5, 0.5],
            "enrollment": [[1.0, 0.0], [0.0, 1.0]],
            "decoder_states": [[[1.0, 0.0], [0.0, 1.0]]],
            "eve_states": [[[0.7, 0.3], [0.3, 0.7]]]
        }),
    );
    let channels = write(
        dir,
        "channels.json",
        &json!({"u_given_xt": [[1.0, 0.0], [0.0, 1.0]], "v_given_u": [[1.0], [1.0]]}),
    );
    let config = write(
        dir,
        "config.json",
        &json!({
            "n": 6, "delta": 0.5, "seed": 3, "trials": 200, "mode": "exact",
            "rates": {"r_v": 0.1, "r_jv1": 0.2, "r_ju1": 0.3, "r_s": 0.78, "r_u3": 0.02}
        }),
    );
    (model, channels, config)
}

#[test]
fn gaussian_region_case1_starts_at_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", &json!({"sigma_x2": 5.0, "decoder_gains": [[0.95]], "eve_gains": [[0.8]]}));
    let out = dir.path().join("c.csv");
    let o = pufkey(&["gaussian-region", "--model", s(&model), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("k* = 0, l* = 0"), "{stdout}");
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("alpha,r_s,r_j,r_l\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 200);
    assert_eq!(rows.last().unwrap(), &vec![1.0, 0.0, 0.0, 0.0]);
    assert!(dir.path().join("c.csv.manifest.json").exists());
}

#[test]
fn gaussian_region_case3_reaches_the_asymptote() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(
        dir.path(),
        "m.json",
        &json!({"sigma_x2": 5.0, "decoder_gains": [[0.95, 0.95, 0.95]], "eve_gains": [[0.8, 0.8, 0.5, 0.5]]}),
    );
    let out = dir.path().join("c.csv");
    assert!(pufkey(&["gaussian-region", "--model", s(&model), "--kind", "cs", "--out", s(&out)]).status.success());
    let rows = csv_rows(&fs::read_to_string(&out).unwrap());
    let max = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    assert!((max - 0.2771).abs() < 5e-4, "{max}");
}

#[test]
fn non_degraded_model_warns_and_writes_an_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", &json!({"sigma_x2": 1.0, "decoder_gains": [[0.5]], "eve_gains": [[0.9]]}));
    let out = dir.path().join("c.csv");
    let o = pufkey(&["gaussian-region", "--model", s(&model), "--out", s(&out)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("not degraded"));
    assert_eq!(fs::read_to_string(&out).unwrap(), "alpha,r_s,r_j,r_l\n");
    let manifest = fs::read_to_string(dir.path().join("c.csv.manifest.json")).unwrap();
    assert!(manifest.contains("not degraded"));
}

#[test]
fn malformed_input_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    fs::write(&model, "{\"sigma_x2\": 5.0, \"decoder_gains\": [[0.95]").unwrap();
    let out = dir.path().join("c.csv");
    let o = pufkey(&["gaussian-region", "--model", s(&model), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let missing = pufkey(&["gaussian-region", "--model", s(&dir.path().join("nope.json")), "--out", s(&out)]);
    assert_eq!(missing.status.code(), Some(2));

    let bad = write(dir.path(), "bad.json", &json!({"sigma_x2": -1.0, "decoder_gains": [[1.0]], "eve_gains": [[0.5]]}));
    assert_eq!(pufkey(&["gaussian-region", "--model", s(&bad), "--out", s(&out)]).status.code(), Some(2));
}

#[test]
fn fig3_writes_four_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("figs");
    assert!(pufkey(&["fig3", "--out", s(&out)]).status.success());
    for (name, header) in [
        ("fig3a", "r_j,r_s_case1,r_s_case2,r_s_case3"),
        ("fig3b", "alpha,r_s,r_j"),
        ("fig3c", "r_j,r_s_gs,r_s_cs"),
        ("fig3d", "r_j,r_l_gs,r_l_cs"),
    ] {
        let text = fs::read_to_string(out.join(format!("{name}.csv"))).unwrap();
        assert_eq!(text.lines().next().unwrap(), header);
        assert_eq!(text.lines().count(), 201);
    }
    assert!(out.join("manifest.json").exists());
}

#[test]
fn discrete_bounds_is_deterministic_and_ignores_duplicate_states() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.json", &binary_model(1));
    let two = write(dir.path(), "two.json", &binary_model(2));
    let run = |model: &Path, out: &str| {
        let out = dir.path().join(out);
        let o = pufkey(&[
            "discrete-bounds", "--model", s(model), "--budget", "600", "--caps", "3x2", "--seed", "4", "--out", s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run(&one, "a.csv");
    let b = run(&one, "b.csv");
    let c = run(&two, "c.csv");
    for tag in ["", ".outer", ".gap"] {
        let f = |p: &Path| {
            let stem = p.file_stem().unwrap().to_str().unwrap();
            fs::read(dir.path().join(format!("{stem}{tag}.csv"))).unwrap()
        };
        assert_eq!(f(&a), f(&b), "rerun differs in {tag}");
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    assert!(!dir.path().join("c.gap.csv").exists());
    let outer = fs::read_to_string(dir.path().join("c.outer.csv")).unwrap();
    assert!(outer.lines().next().unwrap().contains("k1_l0"));
}

#[test]
fn simulate_exact_is_byte_identical_and_reports_events() {
    let dir = tempfile::tempdir().unwrap();
    let (model, channels, config) = sim_inputs(dir.path());
    let run = |out: &str| {
        let out = dir.path().join(out);
        let o = pufkey(&[
            "simulate", "--model", s(&model), "--test-channels", s(&channels), "--config", s(&config), "--out", s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out).unwrap()
    };
    let a = run("a.json");
    assert_eq!(a, run("b.json"));
    let report: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["mode"], "exact");
    assert!(report["event_probs_per_k"][0]["e1"].is_number());
    let p = report["max_error_prob"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn simulate_monte_carlo_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (model, channels, config) = sim_inputs(dir.path());
    let out = dir.path().join("r.json");
    let trace = dir.path().join("t.csv");
    let o = pufkey(&[
        "simulate", "--model", s(&model), "--test-channels", s(&channels), "--config", s(&config),
        "--trials", "50", "--seed", "8", "--trace", s(&trace), "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().next().unwrap(), "trial,key,j_v1,j_u1,hits,key_0,ok_0");
    assert_eq!(text.lines().count(), 51);
    let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["trials"], 50);
    assert_eq!(report["seed"], 8);
    assert!(report["error_ci_per_k"][0][1].as_f64().unwrap() <= 1.0);
}

#[test]
fn simulate_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (model, channels, _) = sim_inputs(dir.path());
    let out = dir.path().join("r.json");
    let missing = write(dir.path(), "missing.json", &json!({"n": 6, "delta": 0.5, "seed": 3, "trials": 0, "mode": "exact"}));
    let o = pufkey(&[
        "simulate", "--model", s(&model), "--test-channels", s(&channels), "--config", s(&missing), "--out", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rates"));
    assert!(!out.exists());

    let capped = write(
        dir.path(),
        "capped.json",
        &json!({
            "n": 6, "delta": 0.5, "seed": 3, "trials": 0, "mode": "exact", "max_codebook_symbols": 100,
            "rates": {"r_v": 0.1, "r_jv1": 0.2, "r_ju1": 0.3, "r_s": 0.78, "r_u3": 0.02}
        }),
    );
    let o = pufkey(&[
        "simulate", "--model", s(&model), "--test-channels", s(&channels), "--config", s(&capped), "--out", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cap"));
    assert!(!out.exists());
}

#[test]
fn selfcheck_passes_and_mutations_fail() {
    let o = pufkey(&["selfcheck"]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 7, "{stdout}");

    let o = pufkey(&["selfcheck", "--mutate", "alpha-inversion"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}
