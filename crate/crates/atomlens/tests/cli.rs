use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn atomlens(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atomlens"))
        .current_dir(dir)
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

/// `key,value` or `key = value` lookup in a record file.
fn record_value(text: &str, key: &str) -> f64 {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .find_map(|l| {
            let (k, v) = l.split_once(',').or_else(|| l.split_once(" = "))?;
            (k.trim() == key).then(|| v.trim().trim_matches('"').parse().unwrap())
        })
        .unwrap_or_else(|| panic!("{key} missing from\n{text}"))
}

#[test]
fn losses_prints_the_total() {
    let dir = tempfile::tempdir().unwrap();
    let o = atomlens(dir.path(), &["losses"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0.5316");
    let table = fs::read_to_string(dir.path().join("atomlens-out/losses.csv")).unwrap();
    assert!(table.lines().any(|l| l.starts_with("fiber coupling,0.716")));
    assert!(dir.path().join("atomlens-out/losses_manifest.kv").exists());
}

#[test]
fn missing_configuration_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = atomlens(dir.path(), &["--config", "nowhere.toml", "losses"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere.toml"));
}

#[test]
fn invalid_parameters_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[drive]\nduration_s = 0.0\n").unwrap();
    let o = atomlens(dir.path(), &["--config", "bad.toml", "g2"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(!dir.path().join("atomlens-out").exists());

    fs::write(dir.path().join("typo.toml"), "[drive]\nrabbi_mhz = 3.0\n").unwrap();
    let o = atomlens(dir.path(), &["--config", "typo.toml", "g2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("rabbi_mhz"));
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| fs::read(dir.path().join(name)).unwrap();
    assert!(atomlens(dir.path(), &["--seed", "4", "--out", "a", "sequence"]).status.success());
    assert!(atomlens(dir.path(), &["--seed", "4", "--out", "b", "sequence"]).status.success());
    for f in ["events.csv", "sequence_summary.csv", "sequence_manifest.kv"] {
        assert_eq!(read(&format!("a/{f}")), read(&format!("b/{f}")), "{f}");
    }
    assert!(atomlens(dir.path(), &["--seed", "5", "--out", "c", "sequence"]).status.success());
    assert_ne!(read("a/events.csv"), read("c/events.csv"));
}

#[test]
fn single_point_range() {
    let dir = tempfile::tempdir().unwrap();
    let o = atomlens(dir.path(), &["field", "--model", "full", "--range", "0.4:0.9:1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("atomlens-out/field_scan.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    let na: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((na - 0.4).abs() < 1e-12, "{na}");
}

#[test]
fn anchor_reports_both_models() {
    let dir = tempfile::tempdir().unwrap();
    let o = atomlens(dir.path(), &["field", "--anchor", "--range", "0.3:0.3:1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.contains("paraxial P_sc = 2.20"));
    assert!(text.contains("full P_sc = 20.6"));
    let anchor = fs::read_to_string(dir.path().join("atomlens-out/field_anchor.csv")).unwrap();
    assert!((record_value(&anchor, "p_sc_full") - 0.2063).abs() < 1e-3);
}

#[test]
fn kv_format() {
    let dir = tempfile::tempdir().unwrap();
    let o = atomlens(dir.path(), &["--format", "kv", "stark"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("atomlens-out/stark_summary.kv")).unwrap();
    assert!((record_value(&text, "trap_depth_mhz") - 27.0).abs() < 1e-6);
    let spread = record_value(&text, "ground_spread_mhz");
    assert!((0.5..=2.0).contains(&spread), "{spread}");
    let plus = record_value(&text, "probe_offset_sigma_plus_mhz");
    let minus = record_value(&text, "probe_offset_sigma_minus_mhz");
    assert!(plus > minus && minus > 0.0);
}

#[test]
fn excited_state_shifts_are_positive_with_the_full_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = atomlens(dir.path(), &["stark"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("atomlens-out/stark_shifts.csv")).unwrap();
    let excited: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("5P3/2"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(excited.len(), 7);
    assert!(excited.iter().all(|&s| s > 0.0), "{excited:?}");
}

#[test]
fn config_paths_are_relative_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("cfg");
    fs::create_dir(&sub).unwrap();
    fs::write(sub.join("chain.csv"), "element,transmission\nlens,0.5\nfiber,0.5\n").unwrap();
    fs::write(sub.join("run.toml"), "out = \"results\"\n[losses]\nchain = \"chain.csv\"\n").unwrap();
    let o = atomlens(dir.path(), &["--config", "cfg/run.toml", "losses"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0.2500");
    assert!(sub.join("results/losses.csv").exists());
}

#[test]
fn spectrum_round_trips_through_its_own_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = atomlens(dir.path(), &["spectrum"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o2 = atomlens(dir.path(), &["--out", "refit", "spectrum", "--input", "atomlens-out/spectrum.csv"]);
    assert!(o2.status.success(), "{}", stderr(&o2));
    assert_eq!(stdout(&o), stdout(&o2));
}
