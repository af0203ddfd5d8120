use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::{json, Value};
use ttrr_cli::{run, ExperimentConfig, ExperimentKind, ExperimentRecord, HamSource, Status};

fn ttrr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttrr"))
        .args(args)
        .output()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    static N: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!(
        "ttrr-cli-{}-{}",
        std::process::id(),
        N.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_json(name: &str, v: &Value) -> PathBuf {
    let p = scratch(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn example_h() -> Value {
    json!({"N": 4, "data": [100., 78., 76., 42., 78., 170., 111., 67., 76., 111., 85., 54., 42., 67., 54., 41.]})
}

fn config(kind: ExperimentKind, k: &[usize], r: &[usize], seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind);
    c.k = Some(k.to_vec());
    c.r = Some(r.to_vec());
    c.seed = Some(seed);
    c
}

#[test]
fn classify_reports_segre_structure() {
    let out = ttrr(&["classify", "--k", "2,2,2,2", "--r", "1,2,1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("segre: true dim Some(5)"), "{text}");
}

#[test]
fn missing_seed_is_a_config_error() {
    let out = ttrr(&["rrdeg", "--k", "2,2", "--r", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("`seed`"));
}

#[test]
fn mismatched_profile_is_a_config_error() {
    let out = ttrr(&["als", "--k", "2,2", "--r", "1,1", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ttrr(&[
        "als",
        "--k",
        "2,2",
        "--r",
        "1",
        "--seed",
        "1",
        "--ham",
        "/nonexistent.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn factorize_then_decompress_through_files() {
    let tensor =
        json!({"shape": [3, 2, 2], "re": [2., 3., 4., 6., 6., 9., 8., 12., -2., -3., -4., -6.]});
    let input = write_json("t.json", &tensor);
    let rec = scratch("f.json");
    let out = ttrr(&[
        "factorize",
        "--input",
        input.to_str().unwrap(),
        "--r",
        "2,1",
        "--out",
        rec.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let record = ExperimentRecord::read(&rec).unwrap();
    let train = write_json("train.json", &record.payload);
    let rec2 = scratch("d.json");
    let out = ttrr(&[
        "decompress",
        "--input",
        train.to_str().unwrap(),
        "--out",
        rec2.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let back = ExperimentRecord::read(&rec2).unwrap().payload;
    assert_eq!(back["shape"], tensor["shape"]);
    for (a, b) in back["re"]
        .as_array()
        .unwrap()
        .iter()
        .zip(tensor["re"].as_array().unwrap())
    {
        assert!((a.as_f64().unwrap() - b.as_f64().unwrap()).abs() < 1e-12);
    }
}

#[test]
fn records_reproduce_across_thread_counts() {
    let mut c = config(ExperimentKind::Als, &[2, 2, 2], &[2, 2], 11);
    c.threads = Some(1);
    let a = run(&c).unwrap();
    c.threads = Some(4);
    let b = run(&c).unwrap();
    assert_eq!(a.payload_bytes(), b.payload_bytes());

    let mut c = config(ExperimentKind::Rrdeg, &[2, 2], &[1], 5);
    c.threads = Some(1);
    let a = run(&c).unwrap();
    c.threads = Some(3);
    let b = run(&c).unwrap();
    assert_eq!(a.payload_bytes(), b.payload_bytes());
    assert_eq!(a.payload["report"]["count"], 8);
}

#[test]
fn record_round_trips_through_disk() {
    let mut c = config(ExperimentKind::Als, &[2, 2], &[1], 2);
    let path = scratch("als.json");
    c.out = Some(path.clone());
    let rec = run(&c).unwrap();
    let back = ExperimentRecord::read(&path).unwrap();
    assert_eq!(back.payload, rec.payload);
    assert_eq!(back.config, c);
    assert!(back.timings.contains_key("total"));
}

#[test]
fn enumerate_example_matrix_from_file() {
    let h = write_json("h.json", &example_h());
    let mut c = config(ExperimentKind::Enumerate, &[2, 2], &[1], 1);
    c.ham = HamSource::File { path: h };
    let rec = run(&c).unwrap();
    assert_eq!(rec.status, Status::Ok);
    assert_eq!(rec.payload["count"], 8);
    assert_eq!(rec.payload["real_count"], 6);
    assert_eq!(rec.payload["solutions"].as_array().unwrap().len(), 16);
}

#[test]
fn second_quantized_ground_state() {
    let n = 2;
    let t = vec![1.0, 0.5, 0.5, -1.0];
    let v: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64 * 0.1).collect();
    let spec = write_json("sq.json", &json!({"n": n, "t": t, "v": v}));
    let mut c = config(ExperimentKind::Dmrg, &[2, 2], &[2], 3);
    c.ham = HamSource::SecondQuantized { path: spec };
    let rec = run(&c).unwrap();
    let e = rec.payload["energy"].as_f64().unwrap();
    let lmin = rec.payload["lambda_min"].as_f64().unwrap();
    assert!((e - lmin).abs() < 1e-8, "{e} vs {lmin}");

    c.ham = HamSource::Random;
    c.k = Some(vec![2, 2, 2]);
    let err = {
        let spec = write_json(
            "sq2.json",
            &json!({"n": n, "t": [1.0, 0.0, 0.0, 1.0], "v": vec![0.0; 16]}),
        );
        c.ham = HamSource::SecondQuantized { path: spec };
        run(&c).unwrap_err()
    };
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn stats_clusters_match_minima() {
    let mut c = config(ExperimentKind::Stats, &[2, 2], &[1], 4);
    c.trials = 20;
    let rec = run(&c).unwrap();
    let clusters = rec.payload["clusters"].as_array().unwrap();
    assert!(!clusters.is_empty());
    for cl in clusters {
        assert!(!cl["matched_minimum"].is_null(), "{cl}");
    }
    assert!(clusters.iter().any(|c| c["is_global"] == true));
}

#[test]
fn budget_exhaustion_reports_a_lower_bound() {
    let out = ttrr(&[
        "rrdeg", "--k", "3,3", "--r", "1", "--seed", "1", "--budget", "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("lower bound"));
}

#[test]
fn realcount_histogram_sums_to_samples() {
    let mut c = ExperimentConfig::new(ExperimentKind::Realcount);
    c.family = Some("rnc".into());
    c.d = Some(3);
    c.samples = 25;
    c.seed = Some(9);
    let rec = run(&c).unwrap();
    let hist = rec.payload["histogram"].as_object().unwrap();
    let total: u64 = hist.values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 25);
    // Real critical points of a degree-3 curve: at least the min and max, at most 10.
    assert!(hist
        .keys()
        .all(|k| (2..=10).contains(&k.parse::<usize>().unwrap())));
}

#[test]
fn unknown_family_is_rejected() {
    let out = ttrr(&["realcount", "--family", "cubic", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn embedded_config_reproduces_the_payload() {
    let path = scratch("rr.json");
    let mut c = config(ExperimentKind::Rrdeg, &[2, 3], &[1], 8);
    c.out = Some(path.clone());
    run(&c).unwrap();
    let first = ExperimentRecord::read(&path).unwrap();
    let mut again = first.config.clone();
    again.out = None;
    let second = run(&again).unwrap();
    assert_eq!(first.payload_bytes(), second.payload_bytes());
    assert_eq!(second.payload["report"]["count"], 18);
}
