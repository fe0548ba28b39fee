//! Config parsing, run outputs, run-log round trips, report aggregation and
//! the `plab` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use plab_cli::{aggregate, execute, read_records, rerun, run_job, CliError, JobConfig, Registry};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(json: &str, out: &Path) -> JobConfig {
    let mut cfg = JobConfig::from_json(json).unwrap();
    cfg.out = Some(out.to_path_buf());
    cfg
}

const NORM: &str = r#"{
  "command": "norm",
  "domain": "small_1d",
  "space": { "kind": "lebesgue", "p": 2.0 },
  "weight": { "preset": "constant", "s": 1.0 },
  "spec": { "scale": "B", "q": 2.0, "j_max": 4 },
  "battery": ["gauss_mid", "hat"]
}"#;

fn thm_9_12(levels: &str) -> String {
    format!(
        r#"{{
  "command": "witness",
  "domain": "witness_1d",
  "space": {{ "kind": "lebesgue", "p": 2.0 }},
  "weight": {{ "preset": "constant", "s": 1.0 }},
  "witness": {{ "target": "thm_9_12", "levels": {levels}, "q": [2.0], "tau": 0.5, "a": 6.0 }}
}}"#
    )
}

#[test]
fn shipped_configs_parse_and_name_known_domains() {
    let reg = Registry::load().unwrap();
    let mut seen = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = JobConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            if let Some(name) = &cfg.domain {
                reg.domain(name).unwrap();
            }
            seen += 1;
        }
    }
    assert!(seen >= 9, "only {seen} configs");
}

#[test]
fn unknown_fields_are_rejected_at_every_level() {
    let top = NORM.replace("\"command\"", "\"colour\": 1, \"command\"");
    let nested = NORM.replace("\"j_max\": 4", "\"j_max\": 4, \"jmax\": 5");
    let space = NORM.replace("\"p\": 2.0", "\"p\": 2.0, \"r\": 1.0");
    let weight = NORM.replace("\"s\": 1.0", "\"s\": 1.0, \"eps\": 0.5");
    for bad in [top, nested, space, weight] {
        assert!(matches!(JobConfig::from_json(&bad), Err(CliError::Config(_))), "{bad}");
    }
    let unknown_domain = NORM.replace("small_1d", "huge_9d");
    let err = execute(&JobConfig::from_json(&unknown_domain).unwrap()).unwrap_err();
    assert!(err.to_string().contains("unknown domain preset"), "{err}");
}

#[test]
fn run_writes_every_output_and_appends_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(NORM, dir.path());
    let rec = run_job(&cfg).unwrap();
    assert!(rec.passed, "{:?}", rec.failures);
    let tsv = fs::read_to_string(dir.path().join("results.tsv")).unwrap();
    let mut lines = tsv.lines();
    assert_eq!(lines.next(), Some("function_id\tscale\tq\tvalue\terror"));
    assert_eq!(lines.count(), 2);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config_hash"], rec.config_hash.as_str());
    assert_eq!(summary["passed"], true);
    run_job(&cfg).unwrap();
    let records = read_records(dir.path()).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].tables, records[1].tables);
}

#[test]
fn plot_tables_land_in_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{
  "command": "equiv",
  "domain": "small_1d",
  "space": { "kind": "lebesgue", "p": 2.0 },
  "weight": { "preset": "constant", "s": 1.0 },
  "spec": { "scale": "B", "q": 2.0, "j_max": 4 },
  "battery": ["gauss_mid"],
  "characterizations": ["default", "no_peetre"]
}"#;
    run_job(&config(json, dir.path())).unwrap();
    let csv = fs::read_to_string(dir.path().join("plotdata/ratios.csv")).unwrap();
    assert!(csv.starts_with("function_id,characterization,ratio\n"), "{csv}");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn records_rerun_to_identical_results() {
    let dir = tempfile::tempdir().unwrap();
    let rec = run_job(&config(NORM, dir.path())).unwrap();
    let stored = read_records(&dir.path().join("runs.jsonl")).unwrap().remove(0);
    assert_eq!(stored.config_hash, rec.config_hash);
    let again = rerun(&stored).unwrap();
    assert_eq!(again.tables, stored.tables);
    assert_eq!(again.config_hash, stored.config_hash);
}

#[test]
fn report_merges_runs_sorted_by_level() {
    let (a, b, out) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_job(&config(&thm_9_12("[5, 7]"), a.path())).unwrap();
    run_job(&config(&thm_9_12("[2, 6]"), b.path())).unwrap();
    let report = format!(
        r#"{{ "command": "report", "report": {{ "inputs": [{:?}, {:?}], "format": "tsv" }} }}"#,
        a.path().join("runs.jsonl"),
        b.path()
    );
    let rec = run_job(&config(&report, out.path())).unwrap();
    let t = rec.results();
    let c = t.column("J").unwrap();
    let js: Vec<f64> = t.rows.iter().map(|r| r[c].as_f64().unwrap()).collect();
    assert_eq!(js, vec![2.0, 5.0, 6.0, 7.0]);
    assert_eq!(rec.summary["records"], 2);
    let tsv = fs::read_to_string(out.path().join("results.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 5);
}

#[test]
fn report_refuses_to_mix_commands() {
    let dir = tempfile::tempdir().unwrap();
    let norm = run_job(&config(NORM, dir.path())).unwrap();
    let thm = execute(&JobConfig::from_json(&thm_9_12("[2]")).unwrap()).unwrap();
    let err = aggregate(&[norm, thm]).unwrap_err();
    assert!(matches!(err, CliError::Aggregation(_)));
    assert!(err.to_string().contains("cannot mix norm and witness"), "{err}");
    assert!(matches!(aggregate(&[]), Err(CliError::Aggregation(_))));
}

#[test]
fn small_peetre_decay_is_rejected_unless_relaxed() {
    let strict = NORM.replace("\"j_max\": 4", "\"a\": 0.25, \"j_max\": 4");
    let err = execute(&JobConfig::from_json(&strict).unwrap()).unwrap_err();
    assert!(err.to_string().contains("(3.27)"), "{err}");
    let relaxed = strict.replace("\"j_max\": 4", "\"j_max\": 4, \"paper_admissible\": false");
    assert!(execute(&JobConfig::from_json(&relaxed).unwrap()).unwrap().passed);
}

#[test]
fn low_moment_order_is_reported_per_characterization() {
    let json = r#"{
  "command": "equiv",
  "domain": "small_1d",
  "space": { "kind": "lebesgue", "p": 2.0 },
  "weight": { "preset": "constant", "s": 1.0 },
  "spec": { "scale": "B", "q": 2.0, "j_max": 4 },
  "battery": ["gauss_mid"],
  "characterizations": ["default", "alt_system"],
  "equiv": { "alt_moment_order": 0 }
}"#;
    let rec = execute(&JobConfig::from_json(json).unwrap()).unwrap();
    let t = rec.results();
    let (ch, err) = (t.column("characterization").unwrap(), t.column("error").unwrap());
    let row = t.rows.iter().find(|r| r[ch].to_string() == "alt_system").unwrap();
    assert!(row[err].to_string().contains("(3.5) violated: L+1 ≤ α1 ∨ (a+nτ+α2)"), "{}", row[err]);
}

#[test]
fn binary_runs_configs_and_honours_the_data_dir() {
    let exe = env!("CARGO_BIN_EXE_plab");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("norm.json");
    fs::write(&cfg_path, NORM.replace("small_1d", "tiny")).unwrap();
    let reg = serde_json::json!({
        "version": 99,
        "battery_seed": 7,
        "domains": { "tiny": { "dim": 1, "half_width": 8.0, "samples": 512 } }
    });
    fs::write(dir.path().join("registry.json"), reg.to_string()).unwrap();
    let out = dir.path().join("out");
    let run = |data_dir: Option<&Path>| {
        let mut p = Process::new(exe);
        p.args(["norm", "--config"]).arg(&cfg_path).arg("--out").arg(&out);
        match data_dir {
            Some(d) => p.env("PLAB_DATA_DIR", d),
            None => p.env_remove("PLAB_DATA_DIR"),
        };
        p.output().unwrap()
    };
    let ok = run(Some(dir.path()));
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("norm "));
    assert!(out.join("results.tsv").exists());
    let missing = run(None);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("unknown domain preset \"tiny\""));
    let mismatch = Process::new(exe).args(["equiv", "--config"]).arg(&cfg_path).output().unwrap();
    assert_eq!(mismatch.status.code(), Some(2));
}
