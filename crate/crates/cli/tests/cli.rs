use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqpredict")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_log(dir: &Path) {
    std::fs::write(dir.join("train.txt"), "a b c\na b c\na c b\na b c d\n").unwrap();
}

#[test]
fn discover_convert_and_align() {
    let dir = tempfile::tempdir().unwrap();
    write_log(dir.path());
    let out = run(&["discover", "--log", "train.txt", "--out", "net.pnml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("seq(a"));
    assert!(dir.path().join("net.pnml").exists());

    let out = run(&["align", "--net", "net.pnml", "--log", "train.txt"], dir.path());
    assert!(out.status.success());
    let csv = stdout(&out);
    assert!(csv.starts_with("sequence,multiplicity,cost,final_marking,moves"));
    // the net was discovered from this log, so every full alignment is free
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').nth(2), Some("0"), "{line}");
    }

    let out = run(&["convert", "--tree", "seq(a, and(b, c))", "--out", "tree.pnml"], dir.path());
    assert!(out.status.success());
    let out = run(&["align", "--net", "tree.pnml", "--log", "train.txt", "--prefix", "--out", "a.csv"], dir.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("a b c d,1,1,")), "{csv}");
    assert!(!run(&["convert", "--tree", "seq(a,", "--out", "x.pnml"], dir.path()).status.success());
}

#[test]
fn fit_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    write_log(dir.path());
    let out = run(&["fit", "--train", "train.txt", "--method", "markov", "--param", "order=1", "--out", "m.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["predict", "--model", "m.json", "--prefix", "a", "--prefix", "a b c"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "a\ta:0.0000 b:0.7500 c:0.2500 d:0.0000");
    assert_eq!(lines.len(), 2);

    let out = run(&["fit", "--train", "train.txt", "--method", "petri-empirical", "--noise-threshold", "0.2", "--out", "p.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["predict", "--model", "p.json", "--log", "train.txt", "--prefix", "a b"], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("mean Brier score: "));

    std::fs::write(dir.path().join("ten.txt"), "a b c\n".repeat(6) + &"a c b\n".repeat(4)).unwrap();
    let out = run(&["fit", "--train", "ten.txt", "--method", "akom", "--param", "k_max=1", "--tune", "--out", "t.json"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("selected akom"));
    assert!(!run(&["fit", "--train", "train.txt", "--method", "markov", "--out", "x.json"], dir.path()).status.success());
}

#[test]
fn bench_writes_reports_and_signals_failures() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
        seeds = [1, 2]
        output_dir = "out"
        [[datasets]]
        name = "syn"
        synthetic = { sequences = 60, seed = 2 }
        [[methods]]
        name = "random"
        method = "random"
        [[methods]]
        name = "markov1"
        method = "markov"
        order = 1
    "#;
    std::fs::write(dir.path().join("bench.toml"), config).unwrap();
    let out = run(&["bench", "--config", "bench.toml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(std::fs::read_to_string(dir.path().join("out/report.md")).unwrap().contains("| markov1 |"));
    assert!(dir.path().join("out/warnings.log").exists());

    let broken = format!("{config}\n[[datasets]]\nname = \"gone\"\npath = \"missing.txt\"\n");
    std::fs::write(dir.path().join("broken.toml"), broken).unwrap();
    let out = run(&["bench", "--config", "broken.toml", "--output-dir", "b1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("b1/results.csv").exists());
    let warnings = std::fs::read_to_string(dir.path().join("b1/warnings.log")).unwrap();
    assert!(warnings.contains("gone"));
    let out = run(&["bench", "--config", "broken.toml", "--output-dir", "b2", "--keep-going"], dir.path());
    assert!(out.status.success());
}
