use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn subseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subseq"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

/// Learns both example vocabularies and returns the two model paths.
fn example_models(dir: &Path) -> (String, String) {
    let v1 = write(dir, "theta1.txt", "0101\n1100\n");
    let v2 = write(dir, "theta2.txt", "1010\n0011\n");
    let mut paths = Vec::new();
    for (vocab, name) in [(v1, "t1.json"), (v2, "t2.json")] {
        let model = dir.join(name);
        let out = subseq(&["learn", vocab.to_str().unwrap(), "-o", model.to_str().unwrap(), "--alphabet", "01"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        paths.push(model.to_str().unwrap().to_string());
    }
    (paths[0].clone(), paths[1].clone())
}

#[test]
fn learn_shows_subsequence_histograms() {
    let dir = TempDir::new().unwrap();
    let vocab = write(dir.path(), "theta1.txt", "0101\n1100\n");
    let model = dir.path().join("m.json");
    let out = subseq(&["learn", vocab.to_str().unwrap(), "-o", model.to_str().unwrap(), "--show-psi"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("psi[4,2]\n  0: 5 7\n  1: 7 5\n"), "{text}");
}

#[test]
fn learning_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let vocab = write(dir.path(), "v.txt", "acgt\ncga\nttag\n");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        assert!(subseq(&["learn", vocab.to_str().unwrap(), "-o", path.to_str().unwrap()]).status.success());
    }
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn empty_vocabulary_is_rejected() {
    let dir = TempDir::new().unwrap();
    let vocab = write(dir.path(), "empty.txt", "");
    let out = subseq(&["learn", vocab.to_str().unwrap(), "-o", dir.path().join("m.json").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn recognize_example_sequences() {
    let dir = TempDir::new().unwrap();
    let (m1, m2) = example_models(dir.path());
    let first_line = |seq: &str| {
        let out = subseq(&["recognize", seq, "-m", &m1, "-m", &m2, "-p", "0.3"]);
        assert!(out.status.success());
        stdout(&out).lines().next().unwrap().to_string()
    };
    assert_eq!(first_line("01"), "theta2");
    assert_eq!(first_line("10"), "theta1");
    assert_eq!(first_line("0"), "draw");
}

#[test]
fn recognize_exact_map_and_csv() {
    let dir = TempDir::new().unwrap();
    example_models(dir.path());
    let v1 = dir.path().join("theta1.txt");
    let v2 = dir.path().join("theta2.txt");
    let vocabs = format!("{},{}", v1.display(), v2.display());
    let out = subseq(&["recognize", "001", "--method", "exact-map", "--vocab", &vocabs, "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("sequence,method,p,label,score,log_score,decision\n"));
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",theta2") && l.contains("exact-map")));
}

#[test]
fn foreign_symbol_fails() {
    let dir = TempDir::new().unwrap();
    let (m1, m2) = example_models(dir.path());
    let out = subseq(&["recognize", "012", "-m", &m1, "-m", &m2]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not in the alphabet"));
}

#[test]
fn flags_are_mirrored_by_environment() {
    let dir = TempDir::new().unwrap();
    let (m1, m2) = example_models(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_subseq"))
        .args(["recognize", "01"])
        .env_clear()
        .env("SUBSEQ_MODEL", format!("{m1},{m2}"))
        .env("SUBSEQ_FORMAT", "csv")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains(",theta2\n"));
}

#[test]
fn channel_is_seeded() {
    let run = |seed: &str| stdout(&subseq(&["channel", "0110100111010", "-p", "0.5", "--seed", seed]));
    assert_eq!(run("4"), run("4"));
    assert_eq!(stdout(&subseq(&["channel", "acgt", "-p", "0"])).trim(), "acgt");
    assert_eq!(stdout(&subseq(&["channel", "acgt", "-p", "1"])).trim(), "");
    assert!(!subseq(&["channel", "acgt", "-p", "1.5"]).status.success());
}

#[test]
fn experiment_from_config_file_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let config = write(
        dir.path(),
        "run.cfg",
        "scenario = iid\nparam = 0, 4\np = 0.2\nwords = 100\nlen_min = 5\nlen_max = 10\ntrials = 50\nseed = 11\n",
    );
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let out = subseq(&["experiment", "-c", config.to_str().unwrap(), "-o", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read_to_string(path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let mut lines = outputs[0].lines();
    assert!(lines.next().unwrap().starts_with("# draw_policy=half"));
    assert!(lines.next().unwrap().starts_with("scenario,classifier,p,"));
    assert_eq!(lines.count(), 2 * 2);
}

#[test]
fn experiment_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let config = write(dir.path(), "run.cfg", "scenario = example1\ntrials = 10\np = 0.3\n");
    let out = subseq(&["experiment", "-c", config.to_str().unwrap(), "--trials", "20"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().skip(2).all(|l| l.split(',').nth(4) == Some("20")), "{text}");
    assert!(!subseq(&["experiment", "--scenario", "nonsense"]).status.success());
}

#[test]
fn oracle_reports_bound_chain() {
    let dir = TempDir::new().unwrap();
    example_models(dir.path());
    let v1 = dir.path().join("theta1.txt");
    let v2 = dir.path().join("theta2.txt");
    let out = subseq(&["oracle", v1.to_str().unwrap(), v2.to_str().unwrap(), "-p", "0.3", "--detail"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("bound chain holds:     true"));
    assert!(text.contains("\n2,10,10,"), "{text}");
}

#[test]
fn selftest_passes_and_detects_faults() {
    let clean = subseq(&["selftest"]);
    assert!(clean.status.success(), "{}", stdout(&clean));
    assert!(stdout(&clean).contains("6 of 6 checks passed"));
    let broken = subseq(&["selftest", "--corrupt-alpha"]);
    assert!(!broken.status.success());
    assert!(stdout(&broken).contains("FAIL alpha identity"));
}
