use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_sfs-sim");

fn defaults() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/defaults.json");
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Bundled defaults shrunk to a quick run, writing into `dir/out`.
fn small(dir: &Path) -> Value {
    let mut cfg = defaults();
    cfg["workload"]["n_requests"] = json!(400);
    cfg["workload"]["cores"] = json!(4);
    cfg["output_dir"] = json!(dir.join("out"));
    cfg
}

fn write(dir: &Path, cfg: &Value) -> PathBuf {
    let p = dir.join("cfg.json");
    fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p
}

fn sfs_sim(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn run_writes_one_report_set_per_policy_and_a_comparison() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), &small(tmp.path()));
    let o = sfs_sim(&["run", "--config", cfg.to_str().unwrap(), "--print-summary"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("policy"));
    assert_eq!(stdout.lines().count(), 5);

    let out = tmp.path().join("out");
    let files = listing(&out);
    let csvs: Vec<&String> = files.iter().filter(|f| f.ends_with(".requests.csv")).collect();
    assert_eq!(
        csvs,
        ["cfs.rep0.requests.csv", "ideal.rep0.requests.csv", "sfs.rep0.requests.csv", "srtf.rep0.requests.csv"]
    );
    assert!(files.contains(&"comparison.rep0.json".to_string()));
    assert!(files.contains(&"sfs.rep0.slice.csv".to_string()));
    assert!(!files.iter().any(|f| f.ends_with(".timeline.csv")));

    let cmp: Value =
        serde_json::from_str(&fs::read_to_string(out.join("comparison.rep0.json")).unwrap()).unwrap();
    let text = cmp.to_string();
    for key in ["turnaround_cdf", "rte_cdf", "switch_ratios"] {
        assert!(text.contains(key), "comparison lacks {key}");
    }
}

#[test]
fn comparison_is_derivable_from_request_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), &small(tmp.path()));
    assert!(sfs_sim(&["run", "--config", cfg.to_str().unwrap()]).status.success());
    let out = tmp.path().join("out");
    let csv = fs::read_to_string(out.join("sfs.rep0.requests.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (a, c) = (col("arrival_us"), col("completion_us"));
    let ta: Vec<f64> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[c].parse::<u64>().unwrap() - f[a].parse::<u64>().unwrap()) as f64
        })
        .collect();
    let mean = ta.iter().sum::<f64>() / ta.len() as f64;
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("sfs.rep0.summary.json")).unwrap()).unwrap();
    let reported = summary["mean_turnaround_us"].as_f64().unwrap();
    assert!((reported - mean).abs() < 1e-6 * mean, "{reported} vs {mean}");
}

#[test]
fn repeat_count_gives_one_result_set_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg["repeat_count"] = json!(3);
    let path = write(tmp.path(), &cfg);
    let o = sfs_sim(&["run", "--config", path.to_str().unwrap(), "--policies", "sfs,cfs"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let reps: Vec<String> = (0..3)
        .map(|i| fs::read_to_string(out.join(format!("sfs.rep{i}.requests.csv"))).unwrap())
        .collect();
    assert!(reps[0] != reps[1] && reps[1] != reps[2]);
    for i in 0..3 {
        let cmp = fs::read_to_string(out.join(format!("comparison.rep{i}.json"))).unwrap();
        assert!(cmp.contains(&format!("\"seed\": {}", 42 + i)), "rep {i}");
    }
    assert!(!out.join("srtf.rep0.requests.csv").exists());
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg["workload"]["io"]["io_fraction"] = json!(0.5);
    let path = write(tmp.path(), &cfg);
    let p = path.to_str().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = sfs_sim(&["run", "--config", p, "--timeline", "--output-dir", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let files = listing(&a);
    assert_eq!(files, listing(&b));
    assert!(files.iter().any(|f| f.ends_with(".timeline.csv")));
    for f in files {
        assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{f}");
    }
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg["workload"]["n_reqests"] = json!(5);
    let path = write(tmp.path(), &cfg);
    let o = sfs_sim(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("n_reqests"), "{}", stderr(&o));
}

#[test]
fn unknown_policy_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg["policies"] = json!([{ "name": "lottery" }]);
    let path = write(tmp.path(), &cfg);
    let o = sfs_sim(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lottery"), "{}", stderr(&o));

    let path = write(tmp.path(), &small(tmp.path()));
    let o = sfs_sim(&["run", "--config", path.to_str().unwrap(), "--policies", "sfs,lottery"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lottery"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let mut cfg = small(tmp.path());
    cfg["output_dir"] = json!(blocker.join("out"));
    let path = write(tmp.path(), &cfg);
    let o = sfs_sim(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("output_dir"), "{}", stderr(&o));
}

#[test]
fn validate_accepts_bundled_defaults() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/defaults.json");
    let o = sfs_sim(&["validate", "--config", path]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).is_empty());
}

#[test]
fn validate_names_bucket_probabilities() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg["workload"]["buckets"][0]["probability"] = json!(0.396);
    let path = write(tmp.path(), &cfg);
    let o = sfs_sim(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("buckets"), "{}", stderr(&o));
}

#[test]
fn validate_reports_every_problem_at_once() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg["policies"][0]["sfs"]["window"] = json!(0);
    cfg["workload"]["cores"] = json!(0);
    cfg["repeat_count"] = json!(0);
    let path = write(tmp.path(), &cfg);
    let o = sfs_sim(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    for key in ["policies[0].sfs.window", "workload.cores", "repeat_count"] {
        assert!(err.contains(key), "missing {key}: {err}");
    }
}

#[test]
fn unparseable_file_gets_one_located_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.json");
    fs::write(&path, "{\n  \"workload\": {\n    \"cores\": ,\n").unwrap();
    let o = sfs_sim(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("line 3"), "{err}");
}
