use std::path::PathBuf;
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn lacuna(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lacuna"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_config(name: &str, extra: &[&str]) -> Output {
    let path = configs().join(format!("{name}.json"));
    let mut args = vec![name, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    lacuna(&args)
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// CSV rows after the `#` header block and the column line.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn error_record(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("stderr holds one JSON record")
}

fn write_config(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn header_records_provenance() {
    let text = stdout(&run_config("density", &[]));
    let header: Vec<&str> = text.lines().take(6).collect();
    assert!(header[0].starts_with("# lacuna "));
    assert_eq!(header[1], "# command: density");
    assert!(header[2].starts_with("# config_sha256: ") && header[2].len() == "# config_sha256: ".len() + 64);
    assert_eq!(header[3], "# seed: 0");
    assert!(header[4].starts_with("# rng: ChaCha8Rng"));
    assert!(header[5].starts_with("# config: {"));
}

#[test]
fn density_of_single_hole() {
    let text = stdout(&run_config("density", &[]));
    let row = rows(&text)
        .into_iter()
        .find(|r| r[0] == "0" && r[1].parse::<f64>().unwrap() == 1.0)
        .unwrap();
    assert!((row[2].parse::<f64>().unwrap() - 0.9).abs() < 1e-12);
    assert!((row[3].parse::<f64>().unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn sharp_constant_for_two_frequencies() {
    let text = stdout(&run_config("sharp-constant", &[]));
    let row = &rows(&text)[0];
    let lambda: f64 = row[2].parse().unwrap();
    assert!((lambda - (0.5 - 1.0 / std::f64::consts::PI)).abs() < 1e-12);
}

#[test]
fn lemma1_holds_on_every_sample() {
    let text = stdout(&run_config("lemma1", &[]));
    let all = rows(&text);
    assert_eq!(all.len(), 1000);
    assert!(all.iter().all(|r| r[6] == "true"));
}

#[test]
fn seed_override_changes_samples() {
    let base = stdout(&run_config("lemma1", &[]));
    let again = stdout(&run_config("lemma1", &[]));
    let other = stdout(&run_config("lemma1", &["--seed", "5"]));
    assert_eq!(base, again);
    assert!(other.contains("# seed: 5"));
    assert_ne!(rows(&base), rows(&other));
}

#[test]
fn thread_count_does_not_change_output() {
    let path = configs().join("sweep.json");
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_lacuna"))
            .args(["sweep", "--config", path.to_str().unwrap()])
            .env("LACUNA_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("density.csv");
    let out = run_config("density", &["--out", target.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let text = std::fs::read_to_string(target).unwrap();
    assert_eq!(text, stdout(&run_config("density", &[])));
}

#[test]
fn hypothesis_violation_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        &dir,
        "t1.json",
        r#"{"inputs": {"f": {"random": {"centers": "mian-chowla:3", "b": 1.0, "K": 16, "shape": "box"}},
            "sets": ["holes:0.2,16"], "samples": 1, "eps": 0.01, "T": 8.0}}"#,
    );
    let refused = lacuna(&["theorem1", "--config", path.to_str().unwrap()]);
    assert_eq!(refused.status.code(), Some(3));
    assert_eq!(error_record(&refused)["error"], "hypothesis-violation");
    let allowed = lacuna(&[
        "theorem1",
        "--config",
        path.to_str().unwrap(),
        "--allow-hypothesis-violation",
    ]);
    let text = stdout(&allowed);
    assert!(rows(&text).iter().all(|r| r.last().unwrap() == "false"));
}

#[test]
fn config_and_io_exit_codes() {
    let missing = lacuna(&["lemma2"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(error_record(&missing)["error"], "config");

    let dir = tempfile::tempdir().unwrap();
    let path = write_config(&dir, "bad.json", r#"{"inputs": {}, "surprise": 1}"#);
    let unknown = lacuna(&["density", "--config", path.to_str().unwrap()]);
    assert_eq!(unknown.status.code(), Some(2));

    let path = write_config(
        &dir,
        "neg.json",
        r#"{"inputs": {"sets": ["holes:0.1,1"], "a": [-1.0]}}"#,
    );
    let invalid = lacuna(&["density", "--config", path.to_str().unwrap()]);
    assert_eq!(invalid.status.code(), Some(2));
    assert!(error_record(&invalid)["message"].as_str().unwrap().contains("positive"));

    let absent = lacuna(&["density", "--config", "/nonexistent/config.json"]);
    assert_eq!(absent.status.code(), Some(1));
    assert_eq!(error_record(&absent)["error"], "io");
}

#[test]
fn utility_modes() {
    let text = stdout(&lacuna(&["--dump-phi", "0,1,3"]));
    let first = &rows(&text)[0];
    assert_eq!(first[1].parse::<f64>().unwrap(), 1.0);
    assert!((first[2].parse::<f64>().unwrap() - 0.75).abs() < 1e-12);

    let text = stdout(&lacuna(&["--random-poly", "3,mian-chowla:4,9"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    for line in lines {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let freqs: Vec<i64> = v["coeffs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c[0].as_i64().unwrap())
            .collect();
        assert_eq!(freqs, vec![1, 2, 4, 8]);
    }
    assert_eq!(text, stdout(&lacuna(&["--random-poly", "3,mian-chowla:4,9"])));
}
