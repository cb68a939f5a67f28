use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cmxtag::{load_model, parse_corpus, TagsetMode};
use tempfile::TempDir;

fn cmxtag(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmxtag"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = cmxtag(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path, name: &str, n: usize) {
    ok(
        dir,
        &[
            "synth",
            "--num-utterances",
            &n.to_string(),
            "--seed",
            "42",
            "--output",
            name,
        ],
    );
}

#[test]
fn cmi_json_succeeds() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), "c.tsv", 40);
    let stdout = ok(dir.path(), &["cmi", "--input", "c.tsv", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["num_utt"], 40);
    let (all, mixed, pct) = (
        v["cmi_all"].as_f64().unwrap(),
        v["cmi_mixed"].as_f64().unwrap(),
        v["mixed_pct"].as_f64().unwrap(),
    );
    assert!((all - mixed * pct / 100.0).abs() <= 1e-9 * all.max(1.0));
}

#[test]
fn cmi_tsv_uses_two_decimals() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("u.tsv"),
        "main\thi\nghar\thi\nja\thi\nraha\ten\n.\tuniv\n\n",
    )
    .unwrap();
    let stdout = ok(dir.path(), &["cmi", "--input", "u.tsv"]);
    assert_eq!(
        stdout,
        "metric\tvalue\ncmi_all\t25.00\ncmi_mixed\t25.00\nmixed_pct\t100.00\nnum_utt\t1\n"
    );
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = cmxtag(dir.path(), &["train"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--input"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(cmxtag(dir.path(), &["cmi", "--bogus"]).status.code(), Some(1));
    assert_eq!(cmxtag(dir.path(), &[]).status.code(), Some(1));
}

#[test]
fn bad_data_exits_with_two() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.tsv"), "a\tzz\tNOUN\n\n").unwrap();
    let out = cmxtag(dir.path(), &["cmi", "--input", "bad.tsv", "--strict"]);
    assert_eq!(out.status.code(), Some(2));
    fs::write(dir.path().join("junk.bin"), b"not a model").unwrap();
    synth(dir.path(), "c.tsv", 5);
    let out = cmxtag(dir.path(), &["tag", "--input", "c.tsv", "--model", "junk.bin"]);
    assert_eq!(out.status.code(), Some(2));
    let out = cmxtag(dir.path(), &["cmi", "--input", "does-not-exist.tsv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn full_pipeline_fits_its_training_split() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, "corpus.tsv", 150);
    ok(
        d,
        &[
            "split",
            "--input",
            "corpus.tsv",
            "--folds",
            "5",
            "--seed",
            "42",
            "--output",
            "folds",
        ],
    );
    for k in 0..5 {
        assert!(d.join(format!("folds/fold{k}.train.tsv")).exists());
        assert!(d.join(format!("folds/fold{k}.test.tsv")).exists());
    }
    ok(
        d,
        &[
            "train",
            "--input",
            "folds/fold0.train.tsv",
            "--model",
            "m.bin",
            "--c1",
            "0",
            "--c2",
            "0.01",
        ],
    );
    ok(
        d,
        &[
            "tag",
            "--input",
            "folds/fold0.train.tsv",
            "--model",
            "m.bin",
            "--output",
            "pred.tsv",
        ],
    );
    let report = ok(
        d,
        &[
            "eval",
            "--gold",
            "folds/fold0.train.tsv",
            "--pred",
            "pred.tsv",
            "--format",
            "json",
        ],
    );
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!(v["weighted_f1"].as_f64().unwrap() >= 0.99, "{report}");

    ok(
        d,
        &[
            "tag",
            "--input",
            "folds/fold0.test.tsv",
            "--model",
            "m.bin",
            "--output",
            "held.tsv",
        ],
    );
    let tsv = ok(d, &["eval", "--gold", "folds/fold0.test.tsv", "--pred", "held.tsv"]);
    assert!(tsv.contains("weighted_f1\t"));

    let model = load_model(&fs::read(d.join("m.bin")).unwrap()).unwrap();
    let pred = parse_corpus(
        &fs::read_to_string(d.join("pred.tsv")).unwrap(),
        TagsetMode::Coarse,
        true,
    )
    .unwrap();
    assert!(pred
        .utterances
        .iter()
        .flat_map(|u| &u.tokens)
        .all(|t| { model.labels().contains(t.pos.as_ref().unwrap()) }));
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, "a.tsv", 60);
    synth(d, "b.tsv", 60);
    assert_eq!(fs::read(d.join("a.tsv")).unwrap(), fs::read(d.join("b.tsv")).unwrap());
    ok(d, &["train", "--input", "a.tsv", "--model", "m1.bin"]);
    ok(d, &["train", "--input", "a.tsv", "--model", "m2.bin"]);
    assert_eq!(fs::read(d.join("m1.bin")).unwrap(), fs::read(d.join("m2.bin")).unwrap());
    let grid = [
        "grid",
        "--input",
        "a.tsv",
        "--c1-grid",
        "0,0.5",
        "--c2-grid",
        "0.1",
        "--folds",
        "3",
    ];
    let g1 = ok(d, &grid);
    let g2 = ok(d, &grid);
    assert_eq!(g1, g2);
    let last = g1.lines().last().unwrap();
    assert!(last.starts_with("best c1="), "{g1}");
}

#[test]
fn grid_json_reports_every_pair() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), "a.tsv", 40);
    let out = cmxtag(
        dir.path(),
        &[
            "grid",
            "--input",
            "a.tsv",
            "--c1-grid",
            "0,1",
            "--c2-grid",
            "0.01,0.1",
            "--folds",
            "2",
            "--format",
            "json",
        ],
    );
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert_eq!(row["fold_scores"].as_array().unwrap().len(), 2);
    }
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("best c1="));
}

#[test]
fn manifest_runs_every_row() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for (pair, seed) in [("hi", "1"), ("te", "2")] {
        ok(
            d,
            &[
                "synth",
                "--num-utterances",
                "80",
                "--langpair",
                pair,
                "--seed",
                seed,
                "--output",
                &format!("{pair}.all.tsv"),
            ],
        );
        ok(
            d,
            &[
                "split",
                "--input",
                &format!("{pair}.all.tsv"),
                "--folds",
                "5",
                "--output",
                pair,
            ],
        );
    }
    let manifest = "train\ttest\tmodel\ttag-column\tlangpair\tplatform\n\
                    hi/fold0.train.tsv\thi/fold0.test.tsv\thi.bin\tcoarse\thi\ttwitter\n\
                    te/fold0.train.tsv\tte/fold0.test.tsv\tte.bin\tcoarse\tte\twhatsapp\n";
    fs::write(d.join("manifest.tsv"), manifest).unwrap();
    let out = ok(d, &["train", "--manifest", "manifest.tsv", "--no-search"]);
    assert!(d.join("hi.bin").exists() && d.join("te.bin").exists());
    assert!(out.contains("overall"), "{out}");
    let json = ok(
        d,
        &["train", "--manifest", "manifest.tsv", "--no-search", "--format", "json"],
    );
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["jobs"].as_array().unwrap().len(), 2);
    assert_eq!(v["matrix"]["rows"], serde_json::json!(["te", "hi"]));
}

#[test]
fn help_and_version_exit_zero() {
    let dir = TempDir::new().unwrap();
    assert!(ok(dir.path(), &["--help"]).contains("Usage"));
    assert!(!ok(dir.path(), &["--version"]).is_empty());
}
