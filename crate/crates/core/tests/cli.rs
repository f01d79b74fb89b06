use std::path::Path;
use std::process::{Command, Output};

fn extrapolate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extrapolate")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["run", "--models", "linear,knn", "--mode", "defaults", "--out", out];
    args.extend_from_slice(extra);
    extrapolate(&args)
}

#[test]
fn run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["results.json", "table.txt", "table.csv", "curves.csv", "figure_trees.svg", "figure_linear.svg"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let table = std::fs::read_to_string(dir.path().join("table.txt")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("Linear Regression") && lines[2].starts_with("KNN Regression"));
    let header = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert!(header.starts_with("x,y_true,linear,knn\n"));
}

#[test]
fn identical_flags_give_identical_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_into(a.path(), &["--seed", "5"]).status.success());
    assert!(run_into(b.path(), &["--seed", "5"]).status.success());
    let ra = std::fs::read(a.path().join("results.json")).unwrap();
    assert_eq!(ra, std::fs::read(b.path().join("results.json")).unwrap());
    assert!(String::from_utf8(ra).unwrap().contains("\"seed\": 5"));
}

#[test]
fn usage_errors_exit_2() {
    let unknown_model = extrapolate(&["run", "--models", "bogus"]);
    assert_eq!(unknown_model.status.code(), Some(2));
    assert!(stderr(&unknown_model).contains("bogus"));
    assert_eq!(extrapolate(&["run", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(extrapolate(&["run", "--mode", "fast"]).status.code(), Some(2));
    assert_eq!(extrapolate(&["run", "--seed", "minus-one"]).status.code(), Some(2));
    assert_eq!(extrapolate(&["dance"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "models = [\"linear\", \"svm\"]\n").unwrap();
    let o = extrapolate(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("svm"));
    let missing = dir.path().join("nope.toml");
    assert_eq!(extrapolate(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = extrapolate(&["table", "--out", dir.path().join("absent").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
    // A split leaving one training point: every model fails, artifacts are still written.
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, "n_points = 3\nboundary = 0.4\nmodels = [\"linear\"]\n").unwrap();
    let out = dir.path().join("tiny");
    let o = extrapolate(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("linear"));
    assert!(out.join("results.json").is_file());
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    let out = dir.path().join("from-file");
    std::fs::write(&cfg, format!("models = [\"ridge\"]\nseed = 3\nout_dir = {:?}\n", out.to_str().unwrap())).unwrap();
    let o = extrapolate(&["run", "--config", cfg.to_str().unwrap(), "--seed", "8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json = std::fs::read_to_string(out.join("results.json")).unwrap();
    assert!(json.contains("\"seed\": 8"));
    assert!(json.contains("Ridge Regression"));
    assert!(!json.contains("out_dir"));
}

#[test]
fn table_and_plot_rerender_identically() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into(dir.path(), &[]).status.success());
    let files = ["table.txt", "table.csv", "figure_trees.svg", "figure_linear.svg"];
    let before: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(dir.path().join(f)).unwrap()).collect();
    for f in files {
        std::fs::remove_file(dir.path().join(f)).unwrap();
    }
    let out = dir.path().to_str().unwrap();
    assert!(extrapolate(&["table", "--out", out]).status.success());
    assert!(extrapolate(&["plot", "--out", out]).status.success());
    for (f, old) in files.iter().zip(before) {
        assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), old, "{f}");
    }
}
