use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gatebench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn recorded() -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(fixture("recorded.json")).unwrap()).unwrap()
}

#[test]
fn simulate_without_source_errors_is_perfect() {
    let dir = TempDir::new().unwrap();
    for toggles in ["none", "loss"] {
        let out = dir.path().join(format!("{toggles}.json"));
        let o = run(&["simulate", "--toggles", toggles, "-o", s(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("F_p = 100.0%"), "{}", stdout(&o));
        assert!(out.exists());
    }
}

#[test]
fn missing_input_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nowhere.csv");
    let o = run(&["reconstruct", "--counts", s(&missing), "-o", s(&dir.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere.csv"), "{}", stderr(&o));

    let o = run(&["simulate", "-o", s(&dir.path().join("no/such/dir/x.json"))]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["budget", "--params", s(&dir.path().join("p.json")), "-o", s(&dir.path().join("b.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("p.json"));
}

#[test]
fn bad_global_flags() {
    assert_eq!(run(&["--tol", "2", "fidelity", "a", "b"]).status.code(), Some(2));
    assert_eq!(run(&["--threads", "0", "fidelity", "a", "b"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn reconstruct_roundtrip_and_count_file_errors() {
    let dir = TempDir::new().unwrap();
    let counts = dir.path().join("c.csv");
    let chi = dir.path().join("sim.json");
    let o = run(&["simulate", "--toggles", "none", "--peak", "100000", "--counts-out", s(&counts), "-o", s(&chi)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let out = dir.path().join("r.json");
    let o = run(&["reconstruct", "--counts", s(&counts), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o);
    let fp: f64 = line
        .split("F_p = ")
        .nth(1)
        .and_then(|r| r.split('%').next())
        .and_then(|x| x.parse().ok())
        .expect("fidelity line");
    assert!(fp >= 99.0, "{line}");

    let text = std::fs::read_to_string(&counts).unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["reconstruct", "--counts", s(&empty), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    let mut lines: Vec<&str> = text.lines().collect();
    lines[3] = "HH,HH,-4";
    std::fs::write(&bad, lines.join("\n")).unwrap();
    let o = run(&["reconstruct", "--counts", s(&bad), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 4"), "{}", stderr(&o));

    let dup = dir.path().join("dup.csv");
    std::fs::write(&dup, format!("{text}{}\n", text.lines().nth(1).unwrap())).unwrap();
    let o = run(&["reconstruct", "--counts", s(&dup), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("duplicate"), "{}", stderr(&o));
}

#[test]
fn exhausted_iterations_exit_three_with_output() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&[
        "reconstruct",
        "--counts",
        s(&fixture("experiment_like_counts.csv")),
        "--max-iterations",
        "5",
        "-o",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(out.exists());
}

#[test]
fn epg_on_fixtures() {
    let dir = TempDir::new().unwrap();
    let rec = recorded();

    let out = dir.path().join("gate.json");
    let o = run(&["epg", "--chi", s(&fixture("gate_only_chi.json")), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("2.8% <= eps*"), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let want = rec["gate_only_chi.json"]["upper_depolarizing"].as_f64().unwrap();
    assert!((v["upper"].as_f64().unwrap() - want).abs() < 1e-9);
    assert!(out.with_extension("csv").exists());

    let out = dir.path().join("dep.json");
    let o = run(&["epg", "--chi", s(&fixture("depolarized_0.2_chi.json")), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    // F_p = 1 − 15p/16 with p = 0.2
    assert!((v["lower"].as_f64().unwrap() - 0.1875).abs() < 1e-6);

    let o = run(&["epg", "--chi", s(&fixture("ideal_chi.json")), "-o", s(&dir.path().join("i.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Knill (eps0 = 0.03-0.06): below"), "{}", stdout(&o));
}

#[test]
fn non_physical_chi_is_rejected() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(fixture("ideal_chi.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let re = v.pointer_mut("/entries/0/0/0").expect("χ entries layout");
    *re = serde_json::json!(-0.5);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let o = run(&["epg", "--chi", s(&bad), "-o", s(&dir.path().join("e.json"))]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn budget_without_pairs_is_perfect_everywhere() {
    let dir = TempDir::new().unwrap();
    let mut p: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("ideal_params.json")).unwrap()).unwrap();
    p["lambda_A"] = 0.0.into();
    p["lambda_B"] = 0.0.into();
    let params = dir.path().join("p.json");
    std::fs::write(&params, p.to_string()).unwrap();
    let o = run(&["budget", "--params", s(&params), "-o", s(&dir.path().join("b.csv"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = stdout(&o);
    let rows: Vec<&str> = table.lines().skip(1).filter(|l| !l.starts_with('(')).collect();
    assert_eq!(rows.len(), 8);
    for r in rows {
        assert_eq!(r.matches("100.0%").count(), 4, "{r}");
    }
}

#[test]
fn coherence_of_incoherent_processes_is_zero() {
    let dir = TempDir::new().unwrap();
    for name in ["ideal_chi.json", "depolarized_0.2_chi.json"] {
        let out = dir.path().join(format!("{name}.csv"));
        let o = run(&["coherence", "--chi", s(&fixture(name)), "-o", s(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let csv = std::fs::read_to_string(&out).unwrap();
        for line in csv.lines().skip(1) {
            for x in line.split(',').skip(1) {
                assert!(x.parse::<f64>().unwrap() < 1e-12, "{name}: {line}");
            }
        }
    }
}

#[test]
fn fidelity_prints_both_measures() {
    let o = run(&["fidelity", s(&fixture("ideal_chi.json")), s(&fixture("depolarized_0.2_chi.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("F_p = 81.3%  F_avg = 85.0%"), "{}", stdout(&o));

    let o = run(&["fidelity", s(&fixture("gate_only_chi.json")), s(&fixture("experiment_like_chi.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("overlap Tr(ab)"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let mut files = Vec::new();
    for i in 0..2 {
        let counts = dir.path().join(format!("c{i}.csv"));
        let chi = dir.path().join(format!("s{i}.json"));
        let r = dir.path().join(format!("r{i}.json"));
        let o = run(&["--seed", "11", "simulate", "--counts-out", s(&counts), "-o", s(&chi)]);
        assert_eq!(o.status.code(), Some(0));
        let o = run(&["reconstruct", "--counts", s(&counts), "-o", s(&r)]);
        assert_eq!(o.status.code(), Some(0));
        files.push([counts, chi, r].map(|p| std::fs::read(p).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}
