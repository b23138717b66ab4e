use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn embmap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_embmap"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn files(dir: &Path) -> BTreeSet<String> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect()
}

fn synth(dir: &Path) {
    let out = embmap(dir, &["--seed", "5", "synth", "--pairs", "300", "--dim", "6", "--out-prefix", "toy"]);
    assert!(out.status.success(), "{}", stderr(&out));
}

fn train(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "train",
        "--pairs-initial",
        "toy.initial.vec",
        "--pairs-trained",
        "toy.trained.vec",
        "--counts",
        "toy.counts",
        "--hidden",
        "12",
        "--out",
        "mapper.ckpt",
    ];
    args.extend_from_slice(extra);
    embmap(dir, &args)
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = embmap(dir.path(), &["train", "--unknown-flag"]);
    assert_eq!(out.status.code(), Some(1));

    let out = embmap(dir.path(), &["eval", "--gold", "g.conll"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--pred"));

    let out = train(dir.path(), &["--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("alpha must be in [0,1]"));

    let out = embmap(dir.path(), &["map", "--model", "m", "--initial", "i", "--trained", "t", "--counts", "c",
        "--out", "o", "--thresholds", "t7"]);
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(embmap(dir.path(), &["--help"]).status.code(), Some(0));
    assert!(files(dir.path()).is_empty());
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("toy.initial.vec"));
}

#[test]
fn full_pipeline_runs_and_writes_only_named_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    let generated = files(d);
    assert_eq!(generated.len(), 6);

    let out = train(d, &["--alpha", "0.2", "--l2", "1e-4", "--report", "train.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("seed: 0\n"));
    assert!(text.contains("termination: "));

    let out = embmap(d, &["map", "--model", "mapper.ckpt", "--initial", "toy.initial.vec", "--trained",
        "toy.trained.vec", "--counts", "toy.counts", "--thresholds", "tinf", "--eval-conll", "toy.gold.conll",
        "--out", "merged.vec", "--report", "map.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("mapped: 300\n"), "{}", text);
    assert!(text.contains("ootv_after: 0.00\n"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("map.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["residual"], 0);
    assert_eq!(report["command"]["map"]["thresholds"]["thresholds"]["map"], "inf");

    let out = embmap(d, &["knn", "--initial", "toy.initial.vec", "--trained", "toy.trained.vec", "--counts",
        "toy.counts", "--k", "3", "--out", "knn.vec"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("mapped: 30\n"));

    let out = embmap(d, &["eval", "--gold", "toy.gold.conll", "--pred", "toy.pred.conll", "--train-counts",
        "toy.counts", "--initial", "toy.initial.vec", "--baseline", "toy.pred.conll", "--samples", "200"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for key in ["UAS: ", "LAS: ", "OOTV %: 10.00 -> 0.00", "OOTV UAS: ", "#Sents: ", "p_value: 1"] {
        assert!(text.contains(key), "missing {} in {}", key, text);
    }

    let out = embmap(d, &["stats", "--train-counts", "toy.counts", "--eval-conll", "toy.gold.conll"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("unseen_types: 30\n"));

    let out = embmap(d, &["filter", "--trained", "toy.trained.vec", "--counts", "toy.counts", "--tau-p", "5",
        "--out", "filtered.vec"]);
    assert!(out.status.success(), "{}", stderr(&out));

    let out = embmap(d, &["tune", "--pairs-initial", "toy.initial.vec", "--pairs-trained", "toy.trained.vec",
        "--counts", "toy.counts", "--hidden", "8", "--alphas", "0,1", "--l1s", "0", "--l2s", "0,1e-2",
        "--max-iterations", "50", "--out", "grid.tsv", "--best-out", "best.ckpt"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(d.join("grid.tsv")).unwrap().lines().count(), 5);
    assert!(stdout(&out).contains("points: 4\n"));

    let out = embmap(d, &["neighbors", "--table", "merged.vec", "--word", "w000001", "--k", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 2);
    assert!(!stdout(&out).contains("w000001\t"));

    let mut expected = generated;
    for f in ["train.json", "mapper.ckpt", "merged.vec", "map.json", "knn.vec", "filtered.vec", "grid.tsv", "best.ckpt"] {
        expected.insert(f.to_string());
    }
    assert_eq!(files(d), expected);
}

#[test]
fn mismatched_corpora_name_the_sentence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    let pred = fs::read_to_string(d.join("toy.pred.conll")).unwrap();
    // Rename the first token of the second sentence.
    let mut blocks: Vec<String> = pred.split("\n\n").map(str::to_string).collect();
    let mut fields: Vec<String> = blocks[1].lines().next().unwrap().split('\t').map(str::to_string).collect();
    fields[1] = "renamed".into();
    let first = fields.join("\t");
    let rest: Vec<&str> = blocks[1].lines().skip(1).collect();
    blocks[1] = std::iter::once(first.as_str()).chain(rest).collect::<Vec<_>>().join("\n");
    fs::write(d.join("bad.conll"), blocks.join("\n\n")).unwrap();

    let out = embmap(d, &["eval", "--gold", "toy.gold.conll", "--pred", "bad.conll"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sentence 2"), "{}", stderr(&out));
}

#[test]
fn checkpoint_dimension_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    assert!(train(d, &[]).status.success());
    fs::write(d.join("small.vec"), "a 0.1 0.2\nb 0.3 0.4\n").unwrap();
    let out = embmap(d, &["map", "--model", "mapper.ckpt", "--initial", "small.vec", "--trained", "toy.trained.vec",
        "--counts", "toy.counts", "--out", "merged.vec"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("dimension"), "{}", stderr(&out));
    assert!(!d.join("merged.vec").exists());
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("i.vec"), "a 0.5\nb -0.5\n").unwrap();
    fs::write(d.join("t.vec"), "a 1e300\nb -1e300\n").unwrap();
    fs::write(d.join("c.txt"), "a 3\nb 3\n").unwrap();
    let out = embmap(d, &["train", "--pairs-initial", "i.vec", "--pairs-trained", "t.vec", "--counts", "c.txt",
        "--hidden", "2", "--alpha", "0", "--out", "m.ckpt"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn seed_is_echoed_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    let first = train(d, &["--seed", "9"]);
    let bytes = fs::read(d.join("mapper.ckpt")).unwrap();
    let second = train(d, &["--seed", "9"]);
    assert!(stdout(&first).contains("seed: 9\n"));
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(bytes, fs::read(d.join("mapper.ckpt")).unwrap());
}
