//! End-to-end runs of the compiled binary against files on disk.

use std::path::Path;
use std::process::Command;

use ndarray::Array1;
use relucheck::model_io::{serialize_nnet, serialize_property, Hyperrectangle, Objective};
use relucheck::testkit::{gen_network, GenSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relucheck"))
}

/// A seeded network plus a property file on disk; `shift` moves the output
/// threshold so the same network yields different verdicts.
fn write_instance(dir: &Path, seed: u64, shift: f64) -> (String, String) {
    let net = gen_network(&GenSpec {
        input_dim: (2, 2),
        layers: (2, 2),
        width: (3, 3),
        weight_scale: 1.0,
        seed,
    });
    let d = net.input_dim();
    let domain =
        Hyperrectangle::new(Array1::from_elem(d, -1.0), Array1::from_elem(d, 1.0)).unwrap();
    let mut c = Array1::zeros(net.output_dim());
    c[0] = 1.0;
    let objective = Objective::MaxViolation { c, b: shift };
    let net_path = dir.join("net.nnet");
    let prop_path = dir.join("prop.txt");
    std::fs::write(&net_path, serialize_nnet(&net)).unwrap();
    std::fs::write(&prop_path, serialize_property(&domain, &objective)).unwrap();
    (
        net_path.to_str().unwrap().to_string(),
        prop_path.to_str().unwrap().to_string(),
    )
}

#[test]
fn verify_reports_unsat_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    // A large negative threshold shift makes the property hold everywhere.
    let (net, prop) = write_instance(dir.path(), 7, -100.0);
    let out = bin()
        .args(["verify", "--network", &net, "--property", &prop])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("verdict=UNSAT"), "{text}");
}

#[test]
fn verify_reports_sat_with_exit_one_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let (net, prop) = write_instance(dir.path(), 7, 100.0);
    let json_path = dir.path().join("out.json");
    let out = bin()
        .args([
            "verify",
            "--network",
            &net,
            "--property",
            &prop,
            "--json",
            json_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("verdict=SAT"), "{text}");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(doc["verdict"]["kind"], "SAT");
    assert!(doc["verdict"]["counterexample"].is_array());
}

#[test]
fn missing_file_exits_with_error_code() {
    let out = bin()
        .args(["verify", "--network", "/nonexistent.nnet", "--property", "/nonexistent.txt"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(10));
}

#[test]
fn bounds_emits_csv_rows_per_combination() {
    let dir = tempfile::tempdir().unwrap();
    let (net, prop) = write_instance(dir.path(), 3, 0.0);
    let out = bin()
        .args([
            "bounds",
            "--network",
            &net,
            "--property",
            &prop,
            "--lambda-list",
            "0.0,0.5",
            "--max-vars-list",
            "0,20",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,max_vars,output_upper_bound,pass_time");
    assert_eq!(lines.len(), 5, "{text}");
}

#[test]
fn bench_writes_per_instance_rows_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let (net, prop) = write_instance(dir.path(), 7, -100.0);
    let (net2, prop2) = {
        let sub = dir.path().join("sat");
        std::fs::create_dir(&sub).unwrap();
        write_instance(&sub, 7, 100.0)
    };
    let manifest = dir.path().join("suite.txt");
    std::fs::write(
        &manifest,
        format!("# two instances\nholds {net} {prop}\nviolated {net2} {prop2}\n"),
    )
    .unwrap();
    let csv_path = dir.path().join("rows.csv");
    let cactus_path = dir.path().join("cactus.csv");
    let out = bin()
        .args([
            "bench",
            "--manifest",
            manifest.to_str().unwrap(),
            "--csv",
            csv_path.to_str().unwrap(),
            "--cactus",
            cactus_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("name,verdict,time,nodes,bound\n"), "{csv}");
    assert!(csv.contains("holds,UNSAT,"), "{csv}");
    assert!(csv.contains("violated,SAT,"), "{csv}");
    assert!(csv.contains("# aggregate sat=1 "), "{csv}");
    let cactus = std::fs::read_to_string(&cactus_path).unwrap();
    assert_eq!(cactus.lines().count(), 3, "{cactus}");
}

#[test]
fn bench_rejects_manifest_with_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("suite.txt");
    std::fs::write(&manifest, "ghost /nope.nnet /nope.txt\n").unwrap();
    let out = bin()
        .args(["bench", "--manifest", manifest.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(10));
}
