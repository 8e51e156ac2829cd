use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sagenet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sagenet"))
        .current_dir(dir)
        .env_remove("SAGENET_SEED")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = sagenet(dir, args);
    assert!(
        out.status.success(),
        "sagenet {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = sagenet(dir, args);
    assert!(
        !out.status.success(),
        "sagenet {} unexpectedly succeeded",
        args.join(" ")
    );
    String::from_utf8(out.stderr).unwrap()
}

/// synth -> build-graph -> train, returning the temp dir.
fn trained() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["--seed", "2", "synth", "--out-dir", "data", "--nodes", "160"]);
    ok(
        d,
        &[
            "--seed",
            "2",
            "build-graph",
            "--manifest",
            "data/manifest.jsonl",
            "--out",
            "data/g.sgg",
        ],
    );
    fs::write(
        d.join("c.json"),
        r#"{"kind": "adam", "lr": 0.01, "hidden_dim": 16, "proj_dim": 16, "max_epochs": 8}"#,
    )
    .unwrap();
    ok(
        d,
        &[
            "--seed",
            "2",
            "train",
            "--manifest",
            "data/manifest.jsonl",
            "--graph",
            "data/g.sgg",
            "--features",
            "data/visual.sgf",
            "--tasks",
            "style,date,tags,timeframe",
            "--config",
            "c.json",
            "--out",
            "m.sgm",
            "--log",
            "log.csv",
        ],
    );
    tmp
}

fn first_test_id(dir: &Path) -> String {
    let text = fs::read_to_string(dir.join("data/manifest.jsonl")).unwrap();
    text.lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|v| v["split"] == "test")
        .map(|v| v["id"].as_str().unwrap().to_string())
        .unwrap()
}

#[test]
fn help_lists_every_command() {
    let tmp = tempfile::tempdir().unwrap();
    let help = ok(tmp.path(), &["--help"]);
    for cmd in [
        "build-graph",
        "split",
        "bow-vocab",
        "train",
        "eval",
        "retrieve",
        "cs-curve",
        "synth",
    ] {
        assert!(help.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn full_pipeline() {
    let tmp = trained();
    let d = tmp.path();
    assert!(d.join("m.json").exists());
    let log = fs::read_to_string(d.join("log.csv")).unwrap();
    assert!(log.starts_with("epoch,train_loss,val_loss,lr,date_mae,style_acc,tags_map,timeframe_acc\n"));

    ok(
        d,
        &["eval", "--model", "m.sgm", "--split", "test", "--report", "r.json"],
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["split"], "test");
    for key in ["style", "date", "tags", "timeframe"] {
        assert!(report["tasks"][key]["count"].as_u64().unwrap() > 0, "{key}");
    }
    assert!(report["tasks"]["date"]["cs_at_5"].is_number());
    assert!(report["tasks"]["tags"]["map"].is_number());

    let query = first_test_id(d);
    let table = ok(
        d,
        &[
            "retrieve", "--model", "m.sgm", "--query", &query, "--k", "3", "--store", "s.sge",
        ],
    );
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2 + 3, "{table}");
    assert!(lines[0].contains("distance") && lines[0].contains("style"));
    assert!(!lines[2..].iter().any(|l| l.contains(&query)));
    assert!(d.join("s.sge").exists() && d.join("s.ids.json").exists());

    let csv = ok(d, &["cs-curve", "--model", "m.sgm", "--thetas", "0:10:5"]);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "theta,cs");
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("0,0"));
}

#[test]
fn eval_is_reproducible_under_a_seed() {
    let tmp = trained();
    let d = tmp.path();
    let a = ok(d, &["--seed", "5", "eval", "--model", "m.sgm"]);
    let b = ok(d, &["--threads", "2", "--seed", "5", "eval", "--model", "m.sgm"]);
    assert_eq!(a, b);
}

#[test]
fn split_and_vocab_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["synth", "--out-dir", "data", "--nodes", "100"]);
    let err = String::from_utf8(
        sagenet(
            d,
            &[
                "split",
                "--manifest",
                "data/manifest.jsonl",
                "--fractions",
                "0.5,0.3,0.1",
                "--out",
                "x.jsonl",
            ],
        )
        .stderr,
    )
    .unwrap();
    assert!(err.contains("sum to 1"), "{err}");
    let out = sagenet(
        d,
        &[
            "split",
            "--manifest",
            "data/manifest.jsonl",
            "--fractions",
            "0.5,0.25,0.25",
            "--out",
            "s.jsonl",
        ],
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("train 50 / val 25 / test 25"));

    ok(
        d,
        &[
            "bow-vocab",
            "--manifest",
            "s.jsonl",
            "--min-count",
            "0",
            "--out",
            "v.json",
            "--features-out",
            "bow.sgf",
        ],
    );
    let vocab: Vec<String> = serde_json::from_str(&fs::read_to_string(d.join("v.json")).unwrap()).unwrap();
    assert_eq!(vocab.last().unwrap(), "Unknown");
    assert!(d.join("bow.sgf").exists());
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let err = fails(d, &["build-graph", "--manifest", "missing.jsonl", "--out", "g.sgg"]);
    assert!(err.starts_with("error:"), "{err}");

    fs::write(d.join("bad.jsonl"), "{\"id\": \"a\"}\nnot json\n").unwrap();
    let err = fails(d, &["build-graph", "--manifest", "bad.jsonl", "--out", "g.sgg"]);
    assert!(err.contains("bad.jsonl:2"), "{err}");

    ok(d, &["synth", "--out-dir", "data", "--nodes", "40"]);
    fs::write(d.join("g.sgg"), b"NOPE").unwrap();
    let err = fails(
        d,
        &[
            "train",
            "--manifest",
            "data/manifest.jsonl",
            "--graph",
            "g.sgg",
            "--features",
            "data/visual.sgf",
            "--out",
            "m.sgm",
        ],
    );
    assert!(err.contains("magic"), "{err}");

    let err = fails(d, &["eval", "--model", "nothing.sgm"]);
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn retrieve_rejects_unknown_query() {
    let tmp = trained();
    let err = fails(tmp.path(), &["retrieve", "--model", "m.sgm", "--query", "no-such-id"]);
    assert!(err.contains("unknown record"), "{err}");
}
