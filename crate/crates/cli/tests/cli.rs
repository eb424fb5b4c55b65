use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn ksm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ksm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn write_temp(dir: &tempfile::TempDir, name: &str, content: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, content).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn solve_cross() {
    let cross = data("cross.csv");
    let r = json(&ksm(&[
        "solve",
        "--input",
        cross.to_str().unwrap(),
        "--k",
        "1",
    ]));
    let cost = r["cost"].as_f64().unwrap();
    assert!((cost - 2.0).abs() < 1e-6, "cost {cost}");
    assert!(r["cert_ratio"].as_f64().unwrap() <= 2f64.sqrt());
    assert_eq!(r["n"], 4);
    assert_eq!(r["d"], 2);
    assert_eq!(r["algorithm"], "ksm");
    assert_eq!(r["sqrt_d"].as_f64().unwrap(), 2f64.sqrt());
    let basis = r["basis"].as_array().unwrap();
    assert_eq!(basis.len(), 1);
    assert_eq!(basis[0].as_array().unwrap().len(), 2);
    for key in ["total_us", "solver_us", "rounding_us"] {
        assert!(r["timings"][key].is_u64());
    }
    assert!(r["iterations"]["outer_stages"].as_u64().unwrap() > 0);
}

#[test]
fn k_out_of_range_is_a_usage_error() {
    let cross = data("cross.csv");
    for k in ["0", "2"] {
        let out = ksm(&["solve", "--input", cross.to_str().unwrap(), "--k", k]);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("k must be in [1, d-1]"));
    }
    let out = ksm(&[
        "solve",
        "--input",
        cross.to_str().unwrap(),
        "--k",
        "1",
        "--mu",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = ksm(&["solve", "--input", cross.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn svd_on_axis_data() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(&dir, "axis.txt", "1 0\n-2 0\n0.5 0\n");
    let r = json(&ksm(&[
        "solve",
        "--input",
        &f,
        "--k",
        "1",
        "--algorithm",
        "svd",
    ]));
    assert_eq!(r["cost"].as_f64().unwrap(), 0.0);
    assert!(r.get("cert_ratio").is_none());
}

#[test]
fn sampling_on_cross() {
    let cross = data("cross.csv");
    let r = json(&ksm(&[
        "solve",
        "--input",
        cross.to_str().unwrap(),
        "--k",
        "1",
        "--algorithm",
        "sampling",
        "--trials",
        "100",
    ]));
    assert!(r["cost"].as_f64().unwrap() <= 2.0 * 2f64.sqrt() + 1e-12);
}

#[test]
fn benchmark_table() {
    let outlier = data("outlier.csv");
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(
        &dir,
        "cube.csv",
        "1,2,0.5,-1\n0.3,-0.2,1,2\n-1,0.7,0.1,0\n2,1,1,1\n0,-1,0.4,0.9\n-0.6,0.2,-2,0.3\n",
    );
    let out = ksm(&[
        "benchmark",
        "--input",
        &f,
        "--k-min",
        "1",
        "--k-max",
        "3",
        "--algorithms",
        "ksm,svd",
        "--repeats",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "dataset,n,d,k,method,cost,objective_relax,cert_ratio,wall_micros,outer_stages,inner_newton"
    );
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 12);
    let sqrt_d = 2.0;
    let scale: f64 = [
        [1.0, 2.0, 0.5, -1.0],
        [0.3, -0.2, 1.0, 2.0],
        [-1.0, 0.7, 0.1, 0.0],
        [2.0, 1.0, 1.0, 1.0],
        [0.0, -1.0, 0.4, 0.9],
        [-0.6, 0.2, -2.0, 0.3],
    ]
    .iter()
    .map(|p: &[f64; 4]| p.iter().map(|v| v * v).sum::<f64>().sqrt())
    .sum();
    for r in &rows {
        assert_eq!(&r[0], "cube");
        let cost: f64 = r[5].parse().unwrap();
        assert!(cost >= 0.0);
        if &r[4] == "ksm" {
            // the certificate can be re-checked from the row alone
            let obj: f64 = r[6].parse().unwrap();
            assert!(cost <= sqrt_d * obj + 1e-6 * scale, "{cost} vs {obj}");
            assert!(!r[9].is_empty() && !r[10].is_empty());
        } else {
            assert!(r[6].is_empty() && r[7].is_empty());
        }
    }

    let out = ksm(&[
        "benchmark",
        "--input",
        outlier.to_str().unwrap(),
        "--k-min",
        "1",
        "--k-max",
        "1",
        "--repeats",
        "1",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let costs: Vec<(String, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[4].to_string(), r[5].parse().unwrap())
        })
        .collect();
    assert_eq!(costs[0].0, "ksm");
    assert!(costs[1].1 >= costs[0].1);
}

#[test]
fn oracle_commands() {
    let cross = data("cross.csv");
    let r = json(&ksm(&[
        "oracle",
        "--input",
        cross.to_str().unwrap(),
        "--k",
        "1",
        "--resolution",
        "10000",
    ]));
    let cost = r["cost"].as_f64().unwrap();
    assert!(
        (2.0..=2.0 + 4.0 * std::f64::consts::PI / 1e4).contains(&cost),
        "{cost}"
    );
    assert!(r["lower_bound"].as_f64().unwrap() <= cost);
    assert!(r["argmin_basis"].is_array());

    let dir = tempfile::tempdir().unwrap();
    let planar = write_temp(&dir, "plane.csv", "1,0,0\n0,1,0\n1,1,0\n-2,0.5,0\n");
    let r = json(&ksm(&["oracle", "--input", &planar, "--k", "2"]));
    assert!(r["cost"].as_f64().unwrap() <= 0.1);

    let five = write_temp(&dir, "five.csv", "1,2,3,4,5\n0,1,0,1,0\n");
    assert_eq!(
        ksm(&["oracle", "--input", &five, "--k", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn input_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_temp(&dir, "bad.csv", "1,2\n3,oops\n");
    let out = ksm(&["solve", "--input", &bad, "--k", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("row 2") && msg.contains("column 2"), "{msg}");

    let ragged = write_temp(&dir, "ragged.csv", "1,2\n3\n");
    assert_eq!(
        ksm(&["solve", "--input", &ragged, "--k", "1"])
            .status
            .code(),
        Some(3)
    );
    let missing = dir.path().join("nope.csv");
    assert_eq!(
        ksm(&["solve", "--input", missing.to_str().unwrap(), "--k", "1"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn selftest_quick_and_fault() {
    let out = ksm(&["selftest", "--quick"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(!text.contains("FAIL"));

    let out = ksm(&["selftest", "--quick", "--inject-fault", "gradient"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.lines()
            .any(|l| l.starts_with("FAIL") && l.contains("gradient-fd")),
        "{text}"
    );
}

#[test]
fn output_is_deterministic_without_timings() {
    let outlier = data("outlier.csv");
    let path = outlier.to_str().unwrap();
    for alg in ["ksm", "sampling"] {
        let a = ksm(&[
            "solve",
            "--input",
            path,
            "--k",
            "1",
            "--algorithm",
            alg,
            "--no-timing",
            "--seed",
            "7",
        ]);
        let b = ksm(&[
            "solve",
            "--input",
            path,
            "--k",
            "1",
            "--algorithm",
            alg,
            "--no-timing",
            "--seed",
            "7",
        ]);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn affine_flat() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..10)
        .map(|i| format!("{},{}\n", i as f64 * 0.3, 5.0 + i as f64 * 0.3))
        .collect();
    let f = write_temp(&dir, "line.csv", &rows);
    let r = json(&ksm(&["solve", "--input", &f, "--k", "1", "--affine"]));
    assert!(r["cost"].as_f64().unwrap() <= 1e-4 * 60.0);
    let offset: Vec<f64> = r["offset"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    // the offset lies on the line y = x + 5
    assert!((offset[1] - offset[0] - 5.0).abs() < 1e-4, "{offset:?}");
    assert_eq!(r["sqrt_d"].as_f64().unwrap(), 3f64.sqrt());
    assert!(r["lifted_cost"].is_f64());
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let cross = data("cross.csv");
    let out = ksm(&[
        "solve",
        "--input",
        cross.to_str().unwrap(),
        "--k",
        "1",
        "--output",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert!((r["cost"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}
