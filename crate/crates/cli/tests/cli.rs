use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use binsel_cli::dataset_file::read_dataset;
use binsel_cli::report::read_csv;
use binsel_cli::snapshot::Snapshot;
use binsel_core::packing::falkenauer_fitness;
use binsel_core::{pack, HeuristicKind};

fn binsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_binsel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = binsel(args);
    assert!(
        out.status.success(),
        "binsel {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn bytes(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

fn random_dataset(dir: &Path, name: &str, count: &str, seed: &str) -> String {
    let out = p(dir, name);
    ok(&["generate", "random", "--preset", "ds1", "--count", count, "--seed", seed, "--out", &out]);
    out
}

#[test]
fn random_generation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = random_dataset(dir.path(), "a.jsonl", "10", "1");
    let b = random_dataset(dir.path(), "b.jsonl", "10", "1");
    assert_eq!(bytes(&a), bytes(&b));
    let c = random_dataset(dir.path(), "c.jsonl", "10", "2");
    assert_ne!(bytes(&a), bytes(&c));
    assert_eq!(read_dataset(Path::new(&a)).unwrap().len(), 10);
}

#[test]
fn stdout_matches_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let file = random_dataset(dir.path(), "a.jsonl", "4", "9");
    let piped = ok(&["generate", "random", "--preset", "ds1", "--count", "4", "--seed", "9"]);
    assert_eq!(piped.stdout, bytes(file));
}

#[test]
fn structured_gaps_reverify_on_load() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "s.jsonl");
    ok(&[
        "generate", "structured", "--preset", "ds2", "--tau", "0.05", "--count-bf", "6", "--count-ff", "3",
        "--seed", "7", "--out", &out,
    ]);
    let d = read_dataset(Path::new(&out)).unwrap();
    assert_eq!(d.class_counts(), [6, 3, 0, 0]);
    for r in d.records() {
        let bf = falkenauer_fitness(&pack(&r.instance, HeuristicKind::BF), 150, 2.0).unwrap();
        let ff = falkenauer_fitness(&pack(&r.instance, HeuristicKind::FF), 150, 2.0).unwrap();
        assert!((bf - ff).abs() >= 0.05, "{} has gap {}", r.instance.id(), bf - ff);
    }
}

#[test]
fn infeasible_tau_exits_with_floor_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = binsel(&[
        "generate", "structured", "--preset", "ds2", "--tau", "0.9", "--count-bf", "5", "--count-ff", "5",
        "--seed", "1", "--out", &p(dir.path(), "x.jsonl"),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("acceptance rate"));
    assert!(!dir.path().join("x.jsonl").exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(binsel(&["train", "rnn", "--bogus"]).status.code(), Some(2));
    assert_eq!(binsel(&["generate", "random", "--count", "3", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(binsel(&["stats", "bonferroni", "--p", "1.5"]).status.code(), Some(2));
}

#[test]
fn missing_input_is_io_error() {
    let out = binsel(&["features", "--dataset", "/nonexistent/d.jsonl"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn rnn_training_writes_history_per_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let data = random_dataset(dir.path(), "d.jsonl", "12", "5");
    let model = p(dir.path(), "model.json");
    let out = ok(&[
        "train", "rnn", "--cell", "gru", "--dataset", &data, "--epochs", "50", "--seed", "3", "--hidden", "4",
        "--folds", "2", "--out", &model,
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fold accuracy: ") && stdout.contains("(+/- "), "{stdout}");
    let history = read_csv(&dir.path().join("model.history.csv")).unwrap();
    assert_eq!(history.len(), 50);
    assert_eq!(&history[49][0], "50");
    assert_eq!(read_csv(&dir.path().join("model.folds.csv")).unwrap().len(), 2);
    let snapshot = Snapshot::read(Path::new(&model)).unwrap();
    assert_eq!(snapshot.capacity, 150);

    let again = p(dir.path(), "again.json");
    ok(&[
        "train", "rnn", "--cell", "gru", "--dataset", &data, "--epochs", "50", "--seed", "3", "--hidden", "4",
        "--folds", "2", "--out", &again,
    ]);
    assert_eq!(bytes(&model), bytes(&again));
    assert_eq!(bytes(dir.path().join("model.history.csv")), bytes(dir.path().join("again.history.csv")));
}

#[test]
fn tabular_snapshot_reload_predicts_identically() {
    let dir = tempfile::tempdir().unwrap();
    let data = random_dataset(dir.path(), "d.jsonl", "40", "11");
    for kind in ["knn", "gnb", "tree", "forest"] {
        let model = p(dir.path(), &format!("{kind}.json"));
        ok(&["train", "tabular", "--kind", kind, "--dataset", &data, "--seed", "2", "--folds", "3", "--out", &model]);
        let text = std::fs::read_to_string(&model).unwrap();
        let snapshot = Snapshot::from_json(&text, kind).unwrap();
        assert_eq!(snapshot.to_json(), text, "{kind} snapshot re-serializes differently");

        let dataset = read_dataset(Path::new(&data)).unwrap();
        let reloaded = Snapshot::from_json(&snapshot.to_json(), kind).unwrap();
        for r in dataset.records() {
            let a = snapshot.scores(&r.instance).unwrap();
            let b = reloaded.scores(&r.instance).unwrap();
            assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
        }

        let r1 = p(dir.path(), &format!("{kind}-r1"));
        let r2 = p(dir.path(), &format!("{kind}-r2"));
        ok(&["evaluate", "--dataset", &data, "--model", &model, "--out", &r1]);
        ok(&["evaluate", "--dataset", &data, "--model", &model, "--out", &r2]);
        for f in ["summary.txt", "confusion.csv", "dp_curve.csv", "db_curve.csv", "predictions.csv", "significance.csv"] {
            assert_eq!(bytes(Path::new(&r1).join(f)), bytes(Path::new(&r2).join(f)), "{kind} {f}");
        }
    }
}

#[test]
fn oracle_predictions_score_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let data = random_dataset(dir.path(), "d.jsonl", "30", "4");
    let dataset = read_dataset(Path::new(&data)).unwrap();
    let mut csv = String::from("id,prediction\n");
    for r in dataset.records() {
        csv.push_str(&format!("{},{}\n", r.instance.id(), r.label.winner()));
    }
    let preds = dir.path().join("oracle.csv");
    std::fs::write(&preds, csv).unwrap();
    let report = dir.path().join("report");
    let out = ok(&[
        "evaluate", "--dataset", &data, "--predictions", preds.to_str().unwrap(), "--out", report.to_str().unwrap(),
    ]);
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("accuracy: 1.0000"), "{summary}");
    assert!(summary.contains("sbs") && summary.contains("vbs"));
    assert_eq!(std::fs::read_to_string(report.join("summary.txt")).unwrap(), summary);

    for curve in ["dp_curve.csv", "db_curve.csv"] {
        let rows = read_csv(&report.join(curve)).unwrap();
        let points: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
            .collect();
        assert!(points.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1), "{curve}");
        assert_eq!(points.last().unwrap().1, 1.0);
    }
    let confusion = read_csv(&report.join("confusion.csv")).unwrap();
    let total: usize = confusion
        .iter()
        .flat_map(|r| (1..5).map(move |i| r[i].parse::<usize>().unwrap()))
        .sum();
    assert_eq!(total, 30);
}

#[test]
fn missing_prediction_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = random_dataset(dir.path(), "d.jsonl", "3", "4");
    let preds = dir.path().join("p.csv");
    std::fs::write(&preds, "id,prediction\nr000000,BF\n").unwrap();
    let out = binsel(&[
        "evaluate", "--dataset", &data, "--predictions", preds.to_str().unwrap(), "--out", &p(dir.path(), "r"),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn capacity_mismatch_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = random_dataset(dir.path(), "d.jsonl", "20", "8");
    let model = p(dir.path(), "knn.json");
    ok(&["train", "tabular", "--kind", "knn", "--dataset", &data, "--seed", "1", "--folds", "0", "--out", &model]);
    let other = p(dir.path(), "wide.jsonl");
    ok(&[
        "generate", "random", "--items", "20", "--lower", "10", "--upper", "90", "--capacity", "200", "--count", "5",
        "--seed", "1", "--out", &other,
    ]);
    let out = binsel(&["evaluate", "--dataset", &other, "--model", &model, "--out", &p(dir.path(), "r")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));
}

#[test]
fn label_imports_plain_instances() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("plain.txt");
    std::fs::write(&raw, "# hand fixtures\nfour: 6 5 4 5\n\n6 9 5\n").unwrap();
    let out = p(dir.path(), "labelled.jsonl");
    ok(&["label", "--input", raw.to_str().unwrap(), "--capacity", "10", "--out", &out]);
    let d = read_dataset(Path::new(&out)).unwrap();
    assert_eq!(d.len(), 2);
    assert_eq!(d.records()[0].instance.id(), "four");
    assert_eq!(d.records()[0].label.winners(), &[HeuristicKind::BF, HeuristicKind::FF]);
    assert_eq!(d.records()[1].instance.id(), "i000004");

    let relabelled = p(dir.path(), "nf-wf.jsonl");
    ok(&["label", "--input", &out, "--candidates", "NF,WF", "--out", &relabelled]);
    let d = read_dataset(Path::new(&relabelled)).unwrap();
    assert_eq!(d.meta.candidates, vec![HeuristicKind::NF, HeuristicKind::WF]);
    assert!(d.records().iter().all(|r| r.label.winners().iter().all(|h| d.meta.candidates.contains(h))));
}

#[test]
fn features_table_has_one_row_per_instance() {
    let dir = tempfile::tempdir().unwrap();
    let data = random_dataset(dir.path(), "d.jsonl", "7", "3");
    let csv = dir.path().join("f.csv");
    ok(&["features", "--dataset", &data, "--out", csv.to_str().unwrap()]);
    let rows = read_csv(&csv).unwrap();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r.len() == 12));
    let piped = ok(&["features", "--dataset", &data]);
    assert_eq!(piped.stdout, bytes(&csv));
}

#[test]
fn merge_draws_per_class() {
    let dir = tempfile::tempdir().unwrap();
    let a = p(dir.path(), "a.jsonl");
    let b = p(dir.path(), "b.jsonl");
    for (out, seed) in [(&a, "1"), (&b, "2")] {
        ok(&[
            "generate", "structured", "--preset", "ds1", "--tau", "0", "--count-bf", "4", "--count-ff", "4",
            "--seed", seed, "--out", out,
        ]);
    }
    let merged = p(dir.path(), "m.jsonl");
    ok(&["generate", "merge", "--inputs", &a, &b, "--per-class", "2", "--seed", "5", "--out", &merged]);
    assert_eq!(read_dataset(Path::new(&merged)).unwrap().class_counts(), [4, 4, 0, 0]);
}

#[test]
fn sweep_gives_one_row_per_tau_and_selector() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = p(dir.path(), name);
        ok(&[
            "sweep", "--preset", "ds2", "--taus", "0,0.02,0.05", "--count-bf", "12", "--count-ff", "8",
            "--train-bf", "6", "--train-ff", "6", "--selectors", "gru,knn", "--epochs", "2", "--seed", "4", "--out",
            &out,
        ]);
        PathBuf::from(out).join("sweep.csv")
    };
    let first = run("s1");
    let rows = read_csv(&first).unwrap();
    assert_eq!(rows.len(), 6);
    for selector in ["gru", "knn"] {
        assert_eq!(rows.iter().filter(|r| &r[1] == selector).count(), 3);
    }
    assert!(rows.iter().all(|r| &r[3] == "8"));
    assert_eq!(bytes(&first), bytes(run("s2")));
}

#[test]
fn stats_commands_print_results() {
    let out = ok(&["stats", "wilcoxon", "--x", "1,2,3,4,5", "--y", "0,0,0,0,0"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("p_value: 0.0625"), "{text}");
    let out = ok(&["stats", "bonferroni", "--p", "0.01,0.4"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "0.01 0.02\n0.4 0.8\n");
}
