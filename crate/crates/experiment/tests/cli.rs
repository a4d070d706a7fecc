//! End-to-end checks of the `gsr` binary.

use std::path::Path;
use std::process::{Command, Output};

use gsr_core::data::io::{
    bundle, read_graph, read_mask, read_matrix, write_graph_dense, write_matrix,
};
use gsr_core::GraphShift;
use nalgebra::DMatrix;

fn gsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsr"))
        .args(args)
        .output()
        .unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn malformed_spec_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"task": "inpaint", "no_such_field": 1}"#).unwrap();
    let out = gsr(&["run", arg(&spec), "--out", arg(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_of_range_weight_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.csv");
    let signal = dir.path().join("t.csv");
    write_graph_dense(&graph, &GraphShift::cycle(5)).unwrap();
    write_matrix(&signal, &DMatrix::from_element(5, 1, 1.0)).unwrap();
    let est = dir.path().join("x.csv");
    let out = gsr(&[
        "inpaint",
        "--graph",
        arg(&graph),
        "--signal",
        arg(&signal),
        "--alpha",
        "-1",
        "--out",
        arg(&est),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = gsr(&[
        "eval",
        "--truth",
        arg(&missing),
        "--estimate",
        arg(&missing),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn build_graph_keeps_k_neighbors() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("features.csv");
    let rows: String = (0..12)
        .map(|i| format!("{},{}\n", i as f64, (i * i) as f64 / 10.0))
        .collect();
    std::fs::write(&features, rows).unwrap();
    let graph = dir.path().join("graph.csv");
    assert_ok(&gsr(&[
        "build-graph",
        "--features",
        arg(&features),
        "--k",
        "3",
        "--out",
        arg(&graph),
    ]));
    let a = read_graph(&graph).unwrap();
    assert_eq!(a.size(), 12);
    for row in a.weights().row_iter() {
        assert_eq!(row.iter().filter(|v| **v != 0.0).count(), 3);
    }
    let rho = a.spectral_radius().unwrap();
    assert!((rho - 1.0).abs() < 1e-9, "spectral radius {rho}");
}

#[test]
fn synth_inpaint_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("bundle");
    let synth = [
        "synth",
        "--nodes",
        "40",
        "--signals",
        "3",
        "--modes",
        "3",
        "--ratio",
        "0.6",
        "--seed",
        "5",
    ];
    assert_ok(&gsr(&[&synth[..], &["--out", arg(&b)]].concat()));

    let est = dir.path().join("x.csv");
    assert_ok(&gsr(&[
        "inpaint",
        "--graph",
        arg(&b.join(bundle::GRAPH)),
        "--signal",
        arg(&b.join(bundle::T)),
        "--mask",
        arg(&b.join(bundle::MASK)),
        "--alpha",
        "1",
        "--out",
        arg(&est),
    ]));
    let out = gsr(&[
        "eval",
        "--truth",
        arg(&b.join(bundle::X0)),
        "--estimate",
        arg(&est),
        "--mask",
        arg(&b.join(bundle::MASK)),
    ]);
    assert_ok(&out);
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let mse = m["mse"].as_f64().unwrap();
    let rmse = m["rmse"].as_f64().unwrap();
    assert!((rmse * rmse - mse).abs() <= 1e-12 * mse.max(1.0));

    // the estimate must beat filling the hidden entries with zeros
    let x0 = read_matrix(&b.join(bundle::X0)).unwrap();
    let mask = read_mask(&b.join(bundle::MASK), 40, 3).unwrap();
    let hidden: Vec<f64> = mask.complement_entries().map(|(i, j)| x0[(i, j)]).collect();
    assert!(!hidden.is_empty());
    let zero_mse = hidden.iter().map(|v| v * v).sum::<f64>() / hidden.len() as f64;
    assert!(mse < 0.5 * zero_mse, "mse {mse} vs zero fill {zero_mse}");

    // same seed, same bundle
    let again = dir.path().join("again");
    assert_ok(&gsr(&[&synth[..], &["--out", arg(&again)]].concat()));
    for name in [bundle::T, bundle::MASK, bundle::X0] {
        assert_eq!(
            std::fs::read(b.join(name)).unwrap(),
            std::fs::read(again.join(name)).unwrap()
        );
    }
}

#[test]
fn detect_finds_a_spike_on_a_constant_signal() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.csv");
    let signal = dir.path().join("t.csv");
    write_graph_dense(&graph, &GraphShift::cycle(20)).unwrap();
    let mut t = DMatrix::from_element(20, 1, 2.0);
    t[(7, 0)] += 5.0;
    write_matrix(&signal, &t).unwrap();
    let e_path = dir.path().join("e.csv");
    assert_ok(&gsr(&[
        "detect",
        "--graph",
        arg(&graph),
        "--signal",
        arg(&signal),
        "--beta",
        "0.5",
        "--out",
        arg(&e_path),
    ]));
    let e = read_matrix(&e_path).unwrap();
    let x = read_matrix(&dir.path().join("e.signal.csv")).unwrap();
    assert!(e[(7, 0)] > 1.0, "spike estimate {}", e[(7, 0)]);
    for i in (0..20).filter(|&i| i != 7) {
        assert!(e[(i, 0)].abs() < 1e-6, "e[{i}] = {}", e[(i, 0)]);
    }
    assert!((&x + &e - &t).norm() < 1e-9);
}

#[test]
fn combine_agreeing_experts() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.csv");
    let opinions = dir.path().join("o.csv");
    write_graph_dense(&graph, &GraphShift::cycle(8)).unwrap();
    let truth = [1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0];
    let t = DMatrix::from_fn(8, 5, |i, _| truth[i]);
    write_matrix(&opinions, &t).unwrap();
    for method in ["avg", "gtvr-denoise", "gmcr-denoise"] {
        let labels = dir.path().join(format!("{method}.csv"));
        assert_ok(&gsr(&[
            "combine",
            "--graph",
            arg(&graph),
            "--opinions",
            arg(&opinions),
            "--method",
            method,
            "--out",
            arg(&labels),
        ]));
        let got = read_matrix(&labels).unwrap();
        assert_eq!(got.as_slice(), &truth, "{method}");
    }
}

#[test]
fn combine_rejects_non_binary_opinions() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.csv");
    let opinions = dir.path().join("o.csv");
    write_graph_dense(&graph, &GraphShift::cycle(4)).unwrap();
    write_matrix(&opinions, &DMatrix::from_element(4, 2, 0.5)).unwrap();
    let out = gsr(&[
        "combine",
        "--graph",
        arg(&graph),
        "--opinions",
        arg(&opinions),
        "--out",
        arg(&dir.path().join("l.csv")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
