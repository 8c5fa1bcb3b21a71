use std::path::Path;
use std::process::{Command, Output};

use robust_cem_cli::{sha256_hex, RunManifest, MANIFEST_FILE};

const BIN: &str = env!("CARGO_BIN_EXE_robust-cem");
const SHIM: &str = env!("CARGO_BIN_EXE_highs-lp-solve");

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn manifest(dir: &Path) -> RunManifest {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn random_config(root: &Path, seed: u64) -> std::path::PathBuf {
    let out = cli(&[
        "casegen",
        "--random",
        "--seed",
        &seed.to_string(),
        "--out",
        s(root),
        "--file",
        "case.toml",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    root.join("case.toml")
}

#[test]
fn deterministic_and_gamma_zero_report_the_same_objective() {
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("det");
    let aro = dir.path().join("aro");
    assert_eq!(
        cli(&["solve", "--formulation", "det", "--out", s(&det)]).status.code(),
        Some(0)
    );
    let out = cli(&["solve", "--formulation", "aro", "--gamma", "0", "--out", s(&aro)]);
    assert_eq!(out.status.code(), Some(0));
    let (a, b) = (manifest(&det), manifest(&aro));
    assert_eq!(a.results["objective"], b.results["objective"]);
    assert_eq!(a.results["certified"], serde_json::Value::Bool(true));
    assert_eq!(a.config.as_ref().unwrap().sha256, b.config.as_ref().unwrap().sha256);
}

#[test]
fn malformed_config_exits_one_with_the_violations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = random_config(dir.path(), 3);
    let text = std::fs::read_to_string(&cfg).unwrap();
    let broken: String = text
        .lines()
        .map(|l| if l.starts_with("voll") { "voll = -1.0" } else { l })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&cfg, broken).unwrap();
    let out_dir = dir.path().join("run");
    let out = cli(&["build", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("voll must be > 0"), "{stderr}");
    let m = manifest(&out_dir);
    assert_eq!(m.exit_code, 1);
    assert!(m.error.unwrap().contains("voll"));

    std::fs::write(&cfg, "not = [valid").unwrap();
    assert_eq!(
        cli(&["build", "--config", s(&cfg), "--out", s(&out_dir)]).status.code(),
        Some(1)
    );
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let out = cli(&["solve", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn iteration_limit_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = random_config(dir.path(), 5);
    let run = dir.path().join("run");
    let out = cli(&[
        "solve",
        "--config",
        s(&cfg),
        "--out",
        s(&run),
        "--backend",
        "embedded",
        "--max-iters",
        "1",
        "--formulation",
        "aro",
        "--gamma",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(manifest(&run).results["status"], "iteration-limit");
}

#[test]
fn manifest_lists_every_output_with_its_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = random_config(dir.path(), 8);
    let run = dir.path().join("run");
    let out = cli(&[
        "solve",
        "--config",
        s(&cfg),
        "--out",
        s(&run),
        "--formulation",
        "aro",
        "--gamma",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&run);
    assert_eq!(m.config.unwrap().sha256, sha256_hex(&std::fs::read(&cfg).unwrap()));
    let mut listed: Vec<&str> = m.outputs.iter().map(|o| o.path.as_str()).collect();
    listed.sort();
    assert_eq!(listed, ["build.csv", "portfolio.json", "solve.csv", "solve_timing.csv"]);
    for o in &m.outputs {
        assert_eq!(
            o.sha256,
            sha256_hex(&std::fs::read(run.join(&o.path)).unwrap()),
            "{}",
            o.path
        );
    }
}

#[test]
fn rerunning_reproduces_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = random_config(dir.path(), 21);
    let run = |name: &str| {
        let d = dir.path().join(name);
        let out = cli(&[
            "sweep",
            "--config",
            s(&cfg),
            "--out",
            s(&d),
            "--gammas",
            "1",
            "--support",
            "upto",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        d
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["sweep.csv", "sweep_plot.json", "portfolios/det.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let text = std::fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert!(text.starts_with("#schema:sweep/1\n"));
}

#[test]
fn stress_reads_a_solved_portfolio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = random_config(dir.path(), 13);
    let solved = dir.path().join("solved");
    assert_eq!(
        cli(&["solve", "--config", s(&cfg), "--out", s(&solved)]).status.code(),
        Some(0)
    );
    let st = dir.path().join("stress");
    let out = cli(&[
        "stress",
        "--config",
        s(&cfg),
        "--out",
        s(&st),
        "--portfolio",
        s(&solved.join("portfolio.json")),
        "--k",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(st.join("stress.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("#schema:stress/1"));
    assert_eq!(
        lines.next(),
        Some("portfolio,label,params,cost,cost_without_voll,unserved_mwh")
    );
    assert!(lines.next().unwrap().starts_with("det,nominal,"));

    let other = random_config(&dir.path().join("other"), 14);
    let out = cli(&[
        "stress",
        "--config",
        s(&other),
        "--out",
        s(&st),
        "--portfolio",
        s(&solved.join("portfolio.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn external_backend_matches_in_process_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = random_config(dir.path(), 30);
    let internal = dir.path().join("int");
    let external = dir.path().join("ext");
    let base = ["solve", "--config", s(&cfg), "--formulation", "aro", "--gamma", "1"];
    assert_eq!(
        cli(&[&base[..], &["--out", s(&internal)]].concat()).status.code(),
        Some(0)
    );
    let out = cli(&[
        &base[..],
        &["--out", s(&external), "--backend", "external", "--external-cmd", SHIM],
    ]
    .concat());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let obj = |d: &Path| -> f64 { manifest(d).results["objective"].as_str().unwrap().parse().unwrap() };
    let (a, b) = (obj(&internal), obj(&external));
    assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn export_lp_writes_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = random_config(dir.path(), 2);
    let run = dir.path().join("run");
    assert_eq!(
        cli(&["export-lp", "--config", s(&cfg), "--out", s(&run)]).status.code(),
        Some(0)
    );
    let text = std::fs::read_to_string(run.join("model.lp")).unwrap();
    assert!(text.starts_with("Minimize"));
    assert!(text.trim_end().ends_with("End"));
}

#[test]
fn verify_on_the_desk_case_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["verify", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert_eq!(m.results["gating_failures"], serde_json::json!([]));
    let text = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    for line in text.lines().skip(2) {
        let fields: Vec<&str> = line.rsplitn(3, ',').collect();
        if fields[1] == "true" {
            assert_eq!(fields[0], "true", "{line}");
        }
    }
}
