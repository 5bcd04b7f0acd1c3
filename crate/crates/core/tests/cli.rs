use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use maskcl::cli::{read_result, RunResult};

fn maskcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maskcl"))
        .args(args)
        .env_remove("MASKCL_MNIST_DIR")
        .output()
        .expect("binary runs")
}

fn blob_run(dir: &Path, name: &str, extra: &[&str]) -> (Output, std::path::PathBuf) {
    let out = dir.join(name);
    let mut args = vec!["--dataset", "blobs", "--hidden", "16", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (maskcl(&args), out)
}

fn strip_clock(mut r: RunResult) -> RunResult {
    r.wall_clock_secs = 0.0;
    r
}

#[test]
fn smoke_run_two_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let (o, path) = blob_run(dir.path(), "r.json", &["--method", "SGD_MR", "--seeds", "1,2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(start.elapsed().as_secs_f64() < 5.0);
    let r = read_result(&path).unwrap();
    assert_eq!(r.schema, 1);
    assert_eq!(r.runs.len(), 2);
    assert_eq!(r.runs[0].class_il.matrix.tasks(), 2);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("SGD_MR"), "{stdout}");

    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for key in ["schema", "config", "runs", "aggregate"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    let run = &json["runs"][0];
    for key in ["matrix", "avg_acc", "avg_forget"] {
        assert!(run["class_il"].get(key).is_some() && run["task_il"].get(key).is_some());
    }
}

#[test]
fn same_seed_same_json() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--method", "DERPP_MR", "--buffer", "30", "--seeds", "7"];
    let (a, pa) = blob_run(dir.path(), "a.json", &args);
    let (b, pb) = blob_run(dir.path(), "b.json", &args);
    assert!(a.status.success() && b.status.success());
    assert_eq!(strip_clock(read_result(&pa).unwrap()), strip_clock(read_result(&pb).unwrap()));
}

#[test]
fn config_errors_exit_nonzero_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let (o, path) = blob_run(dir.path(), "er.json", &["--method", "ER", "--buffer", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("buffer"));
    assert!(!path.exists());

    let (o, _) = blob_run(dir.path(), "x.json", &["--method", "EWC"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_mnist_is_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    let o = maskcl(&["--mnist-dir", "/nonexistent/mnist", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/mnist"));
    assert!(!out.exists());
}

#[test]
fn summarize_text_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (_, er) = blob_run(dir.path(), "er.json", &["--method", "ER", "--buffer", "20", "--seeds", "1,2"]);
    let (_, sgd) = blob_run(dir.path(), "sgd.json", &["--method", "SGD"]);
    let csv = dir.path().join("t.csv");
    let o = maskcl(&[
        "--summarize",
        er.to_str().unwrap(),
        sgd.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4, "{text}");
    assert!(lines[2].contains("SGD") && lines[3].contains("ER"));

    // Every CSV value appears, identically formatted, in the printed table.
    let body = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<&str>> = body.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for (row, line) in rows.iter().zip(&lines[2..]) {
        for pair in row[3..].chunks(2) {
            let cell = format!("{}±{}", pair[0], pair[1]);
            assert!(line.contains(&cell), "{cell} not in {line}");
        }
    }
}

#[test]
fn summarize_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let (_, good) = blob_run(dir.path(), "g.json", &["--method", "SGD"]);
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&good).unwrap()).unwrap();

    v["schema"] = 2.into();
    let future = dir.path().join("future.json");
    std::fs::write(&future, v.to_string()).unwrap();
    let o = maskcl(&["--summarize", future.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));

    v["schema"] = 1.into();
    v["config"]["dataset"] = "mnist".into();
    let mnist = dir.path().join("mnist.json");
    std::fs::write(&mnist, v.to_string()).unwrap();
    let o = maskcl(&["--summarize", good.to_str().unwrap(), mnist.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mix"));
}
