use std::process::{Command, Output};

use serde_json::Value;

fn ksrefine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ksrefine"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows of a CSV report, without the metadata line and header.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn exit_codes() {
    assert_eq!(ksrefine(&["moments", "--g", "2", "--n-max", "4"]).status.code(), Some(0));
    assert_eq!(ksrefine(&["--help"]).status.code(), Some(0));
    assert_eq!(ksrefine(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ksrefine(&["moments", "--g", "2"]).status.code(), Some(2));
    assert_eq!(ksrefine(&["moments", "--g", "2", "--n-max", "4", "--bogus"]).status.code(), Some(2));

    let bad = ksrefine(&["classno", "--delta", "-6"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(!bad.stderr.is_empty());
    assert_eq!(ksrefine(&["census-hyp", "--g", "2", "--q", "9"]).status.code(), Some(1));
    assert_eq!(ksrefine(&["census-hyp", "--g", "3", "--q", "101", "--budget", "1000"]).status.code(), Some(1));
    assert_eq!(ksrefine(&["bounds", "--g", "2", "--eps", "7"]).status.code(), Some(1));
}

#[test]
fn moments_csv() {
    let out = ksrefine(&["moments", "--g", "3", "--n-max", "9", "--lambda", "1,1,1"]);
    let text = stdout(&out);
    assert!(text.starts_with("# ksrefine v"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[8][1], "104");
    assert_eq!(rows[9][2], "882");
    assert_eq!(rows[9][4], "882");
}

#[test]
fn json_matches_csv() {
    let csv = stdout(&ksrefine(&["classno", "--delta", "-76"]));
    let json: Value = serde_json::from_str(&stdout(&ksrefine(&["classno", "--delta", "-76", "--format", "json"]))).unwrap();
    let header: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let row = &csv_rows(&csv)[0];
    let obj = &json["rows"][0];
    for (h, v) in header.iter().zip(row) {
        let j = &obj[*h];
        let j = j.as_str().map(str::to_string).unwrap_or_else(|| j.to_string());
        assert_eq!(&j, v, "column {h}");
    }
}

#[test]
fn out_file_and_ingestion() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ell.csv");
    let p = path.to_str().unwrap();
    let out = ksrefine(&["census-ell", "--q", "13", "--out", p]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let hist = ksrefine::reports::parse_histogram_csv(&text).unwrap();
    assert_eq!(hist.q, 13);
    assert!(hist.is_symmetric());

    let from_file = stdout(&ksrefine(&["compare", "--input", p]));
    let direct = stdout(&ksrefine(&["compare", "--family", "elliptic", "--g", "1", "--q", "13"]));
    assert_eq!(from_file, direct);
    assert!(csv_rows(&direct).len() > 10);

    std::fs::write(&path, text.replace("13,1,elliptic", "15,1,elliptic")).unwrap();
    let bad = ksrefine(&["compare", "--input", p]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn deuring_and_parity() {
    let out = ksrefine(&["deuring", "--q", "11", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let json: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r["equal"] == Value::Bool(true)));

    let out = ksrefine(&["parity", "--g", "2", "--q", "5,7"]);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 2);
}

#[test]
fn anomaly_csv_is_flat() {
    let out = ksrefine(&["anomaly", "--c", "1/10", "--delta0", "-19"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l == "census_verified,true"));
    assert!(text.lines().any(|l| l == "t,4"));
}
