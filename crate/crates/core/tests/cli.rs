use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qdetect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdetect"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn train_evaluate_predict_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.txt");
    fs::write(
        &data,
        "sport 0:2 1:1\nsport 0:1\npolitics 2:1 3:2\npolitics 3:1\n",
    )
    .unwrap();
    let model = dir.path().join("m.json");
    let report = dir.path().join("r.json");
    let preds = dir.path().join("p.tsv");

    for strategy in ["binary", "pgm", "ovr"] {
        let out = qdetect(&[
            "train",
            "--data",
            p(&data),
            "--strategy",
            strategy,
            "--out",
            p(&model),
        ]);
        assert!(out.status.success(), "{strategy}: {}", stderr(&out));
        let text = fs::read_to_string(&model).unwrap();
        assert!(text.contains("\"format_version\": 1"));

        let out = qdetect(&[
            "evaluate",
            "--model",
            p(&model),
            "--data",
            p(&data),
            "--out",
            p(&report),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(json["empirical_cost"], serde_json::json!(0.0));
        assert_eq!(json["accuracy"], serde_json::json!(1.0));
        assert!(fs::read_to_string(&report)
            .unwrap()
            .contains("\"empirical_cost\": 0.0"));

        let out = qdetect(&[
            "predict",
            "--model",
            p(&model),
            "--data",
            p(&data),
            "--out",
            p(&preds),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let lines: Vec<String> = fs::read_to_string(&preds)
            .unwrap()
            .lines()
            .map(String::from)
            .collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("0\tsport\t"));
        assert!(lines[3].starts_with("3\tpolitics\t"));
        let score: f64 = lines[0].split('\t').nth(2).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&score));
    }
}

#[test]
fn custom_cost_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    fs::write(&data, "a 0:1\nb 1:1\n").unwrap();
    let test = dir.path().join("t.txt");
    // both documents look like class a
    fs::write(&test, "a 0:1\nb 0:1\n").unwrap();
    let cost = dir.path().join("k.txt");
    fs::write(&cost, "# rows: chosen class\n0 4\n1 0\n").unwrap();
    let model = dir.path().join("m.json");
    let report = dir.path().join("r.json");
    assert!(qdetect(&[
        "train",
        "--data",
        p(&data),
        "--strategy",
        "pgm",
        "--out",
        p(&model)
    ])
    .status
    .success());
    let out = qdetect(&[
        "evaluate",
        "--model",
        p(&model),
        "--data",
        p(&test),
        "--cost",
        p(&cost),
        "--out",
        p(&report),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["empirical_cost"], serde_json::json!(2.0));
    assert_eq!(json["accuracy"], serde_json::json!(0.5));
}

#[test]
fn errors_are_single_machine_readable_lines() {
    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("one.txt");
    fs::write(&single, "a 0:1\na 1:1\n").unwrap();
    let out = qdetect(&[
        "train",
        "--data",
        p(&single),
        "--strategy",
        "pgm",
        "--out",
        p(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.starts_with("ERROR degenerate-corpus: "), "{err}");
    assert_eq!(err.lines().count(), 1);

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "a 0:1\nb 3:1 1:2\n").unwrap();
    let out = qdetect(&[
        "train",
        "--data",
        p(&bad),
        "--strategy",
        "pgm",
        "--out",
        p(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).starts_with("ERROR parse: line 2"),
        "{}",
        stderr(&out)
    );

    let model = dir.path().join("v99.json");
    fs::write(&model, "{\"format_version\": 99}").unwrap();
    let out = qdetect(&[
        "predict",
        "--model",
        p(&model),
        "--data",
        p(&bad),
        "--out",
        p(&dir.path().join("p")),
    ]);
    assert!(
        stderr(&out).starts_with("ERROR unsupported-version: "),
        "{}",
        stderr(&out)
    );

    let out = qdetect(&["train", "--strategy", "svm"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("ERROR invalid-argument: "));
    assert_eq!(stderr(&out).lines().count(), 1);
}

#[test]
fn unknown_test_labels_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    fs::write(&data, "a 0:1\nb 1:1\n").unwrap();
    let test = dir.path().join("t.txt");
    fs::write(&test, "a 0:1\nzebra 1:1\n").unwrap();
    let model = dir.path().join("m.json");
    assert!(qdetect(&[
        "train",
        "--data",
        p(&data),
        "--strategy",
        "ovr",
        "--out",
        p(&model)
    ])
    .status
    .success());
    let out = qdetect(&[
        "evaluate",
        "--model",
        p(&model),
        "--data",
        p(&test),
        "--out",
        p(&dir.path().join("r")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("ERROR unknown-labels: ") && stderr(&out).contains("zebra"));
}

#[test]
fn bench_suites_pass() {
    for suite in ["helstrom", "trine", "synthetic"] {
        let out = qdetect(&["bench", "--suite", suite, "--seed", "3"]);
        let table = String::from_utf8_lossy(&out.stdout);
        assert!(out.status.success(), "{suite}:\n{table}{}", stderr(&out));
        assert!(!table.contains("FAIL"));
    }
}

#[test]
fn oracle_prints_values() {
    let out = qdetect(&["oracle", "--mode", "helstrom", "--angles", "0,45"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let value: f64 = text.trim().split('\t').nth(1).unwrap().parse().unwrap();
    assert!((value - 0.5 * (1.0 - 0.5f64.sqrt())).abs() < 1e-12);

    let out = qdetect(&[
        "oracle",
        "--mode",
        "grid",
        "--angles",
        "0,120,240",
        "--resolution",
        "1000",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("grid_cost\t0.3333"));

    let out = qdetect(&[
        "oracle",
        "--mode",
        "grid",
        "--angles",
        "0,45",
        "--resolution",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_and_split_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for path in [&a, &b] {
        let out = qdetect(&[
            "synth",
            "--kind",
            "overlap",
            "--angle",
            "60",
            "--noise",
            "0.1",
            "--seed",
            "9",
            "--out",
            p(path),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let names = ["tr1", "te1", "tr2", "te2"].map(|n| dir.path().join(n));
    for pair in names.chunks(2) {
        let out = qdetect(&[
            "split",
            "--data",
            p(&a),
            "--fraction",
            "0.7",
            "--seed",
            "5",
            "--stratified",
            "--train-out",
            p(&pair[0]),
            "--test-out",
            p(&pair[1]),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&names[0]).unwrap(), fs::read(&names[2]).unwrap());
    assert_eq!(fs::read(&names[1]).unwrap(), fs::read(&names[3]).unwrap());
    let total = fs::read_to_string(&names[0]).unwrap().lines().count()
        + fs::read_to_string(&names[1]).unwrap().lines().count();
    assert_eq!(total, 100);
}
