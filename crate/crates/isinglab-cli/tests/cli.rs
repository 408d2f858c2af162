use std::path::Path;
use std::process::{Command, Output};

use serde::Deserialize;

fn isinglab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isinglab"))
        .args(args)
        .env_remove("ISINGLAB_CONFIG")
        .env_remove("ISINGLAB_OUT")
        .env_remove("ISINGLAB_SEED")
        .env_remove("ISINGLAB_THREADS")
        .env_remove("ISINGLAB_MAX_EXACT_SITES")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct AuditRow {
    name: String,
    min_slack: f64,
    witness: String,
    n_instances: usize,
    n_checks: u64,
    skipped: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AuditReport {
    version: String,
    config_hash: String,
    config: serde_json::Value,
    results: Vec<AuditRow>,
}

#[test]
fn dvi_audit_passes_with_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = isinglab(&["audit", "--suite", "dvi", "--box", "2x2", "--draws", "200", "--seed", "7", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines.iter().all(|l| l.contains("PASS")));
    let text = String::from_utf8(read(dir.path(), "audit.json")).unwrap();
    let rep: AuditReport = serde_json::from_str(&text).unwrap();
    assert!(rep.version.starts_with("isinglab "));
    assert_eq!(rep.config_hash.len(), 64);
    assert_eq!(rep.config["seed"], 7);
    assert_eq!(rep.results.len(), 6);
    assert!(rep.results.iter().all(|r| r.min_slack >= -1e-10 && r.n_instances == 200));
    let csv = String::from_utf8(read(dir.path(), "audit.csv")).unwrap();
    assert!(csv.starts_with("inequality,min_slack,passed,instances,checks,witness\n"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn json_values_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = isinglab(&["exact", "--box", "2x2", "--beta", "0.7", "--h", "0.1", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(read(dir.path(), "exact.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let log_z = v["results"]["log_z"].as_f64().unwrap();
    let raw = text.split("\"log_z\":").nth(1).unwrap();
    let raw = &raw[..raw.find([',', '}']).unwrap()];
    assert_eq!(raw, format!("{log_z:.16e}"));
    assert_eq!(raw.parse::<f64>().unwrap(), log_z);
    assert_eq!(v["config"]["params"]["model"]["beta"].as_f64(), Some(0.7));
}

#[test]
fn malformed_toml_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[audit]\nsuite = \"dvi\"\ndraws = \"many\"\n").unwrap();
    let o = isinglab(&["--config", cfg.to_str().unwrap(), "audit"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("audit.draws"), "{}", stderr(&o));

    std::fs::write(&cfg, "[audit]\nsuit = \"dvi\"\n").unwrap();
    let o = isinglab(&["--config", cfg.to_str().unwrap(), "audit"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("suit"), "{}", stderr(&o));

    std::fs::write(&cfg, "[model]\nbox = \"2x2\"\nbc = { kind = \"plus\", sign = 1 }\n").unwrap();
    let o = isinglab(&["--config", cfg.to_str().unwrap(), "exact"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sign"), "{}", stderr(&o));

    std::fs::write(&cfg, "[audit\n").unwrap();
    let o = isinglab(&["--config", cfg.to_str().unwrap(), "audit"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn geo1_confirms_c4() {
    let o = isinglab(&["coarse", "--lemma", "geo1", "--rect", "3x3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("PASS c=4 "), "{s}");
    assert!(s.contains("exhaustive"), "{s}");
}

#[test]
fn repeat_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = d.path().to_str().unwrap();
        let o = isinglab(&["audit", "--suite", "gks", "--box", "2x2", "--draws", "20", "--seed", "3", "--out", out]);
        assert_eq!(o.status.code(), Some(0));
        let o = isinglab(&["sample", "--box", "2x2", "--beta", "0.5", "--sweeps", "3000", "--seed", "5", "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    for f in ["audit.json", "audit.csv", "sample.json", "sample.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
}

#[test]
fn empty_results_give_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = isinglab(&["rfield", "--task", "animal", "--seeds", "0", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read(dir.path(), "rfield_animal.csv"), b"stream,h0,best_ratio,best_size,animals\n");
    let o = isinglab(&["coarse", "--lemma", "covering", "--box", "3x3", "--sizes", "5", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        read(dir.path(), "coarse_covering.csv"),
        b"n,level,radius,cover,greedy,distinct_b,max_group_d2\n"
    );
}

#[test]
fn audit_failure_exits_2() {
    // a negative tolerance demands slack ≥ 1, which no inequality attains on every draw
    let o = isinglab(&["audit", "--suite", "gks", "--box", "2x2", "--draws", "5", "--tolerance", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn errors_exit_1() {
    let o = isinglab(&["exact", "--box", "5x5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("capacity"), "{}", stderr(&o));
    let o = isinglab(&["exact", "--box", "3x3", "--max-exact-sites", "8"]);
    assert_eq!(o.status.code(), Some(1));
    let o = isinglab(&["audit", "--suite", "nonsense"]);
    assert_eq!(o.status.code(), Some(1));
    let o = isinglab(&["audit", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    let o = isinglab(&["coarse"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flag_beats_env_beats_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 1\n[audit]\nsuite = \"gks\"\nbox = \"2x2\"\ndraws = 4\n").unwrap();
    let seed_of = |env: Option<&str>, flag: Option<&str>| -> u64 {
        let out = dir.path().join("o");
        let mut c = Command::new(env!("CARGO_BIN_EXE_isinglab"));
        c.args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "audit"]);
        c.env_remove("ISINGLAB_SEED");
        if let Some(e) = env {
            c.env("ISINGLAB_SEED", e);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        let o = c.output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let v: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out.join("audit.json")).unwrap()).unwrap();
        assert_eq!(v["config"]["params"]["draws"], 4);
        v["config"]["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(None, None), 1);
    assert_eq!(seed_of(Some("2"), None), 2);
    assert_eq!(seed_of(Some("2"), Some("3")), 3);
}

#[test]
fn sample_agrees_with_exact() {
    let o = isinglab(&["sample", "--box", "3x3", "--beta", "0.4", "--bc", "plus", "--sweeps", "20000", "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("sample mc-vs-exact: PASS"));
}

#[test]
fn tail_task_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.toml");
    std::fs::write(
        &cfg,
        "seed = 4\n[model]\nbox = \"3x3\"\nbeta = 1.0\n\
         [rfield]\ntask = \"tail\"\neps = 0.5\nsamples = 2000\n\
         set = [[0, 0], [0, 1], [1, 0], [1, 1]]\nset_prime = [[0, 0], [-1, 0]]\n",
    )
    .unwrap();
    let o = isinglab(&["--config", cfg.to_str().unwrap(), "rfield"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).starts_with("rfield tail: PASS |A|=4"));
}
