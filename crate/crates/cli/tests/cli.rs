use std::process::Command;

use proptest::prelude::*;

use allen_cahn_cli::config::{Param, RunConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_allen-cahn"))
}

fn write_config(dir: &std::path::Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    std::fs::write(&p, text).unwrap();
    p
}

proptest! {
    #[test]
    fn config_round_trip_is_idempotent(
        h in prop::sample::select(vec![0.05, 0.1, 0.2]),
        eps in 0.05f64..2.0,
        symbolic in any::<bool>(),
        n_scan in 2usize..1000,
        emit in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let mut cfg = RunConfig::default();
        cfg.grid.h = h;
        cfg.potential.eps = Some(if symbolic { Param::Symbol("2*sqrt3/6".into()) } else { Param::Value(eps) });
        cfg.shooting.n_scan = n_scan;
        cfg.outputs.emit_svg = emit;
        cfg.seed = seed;
        let once = serde_json::to_string(&cfg).unwrap();
        let parsed = RunConfig::from_json_str(&once, &[]).unwrap();
        prop_assert_eq!(&parsed, &cfg);
        prop_assert_eq!(serde_json::to_string(&parsed).unwrap(), once);
        prop_assert_eq!(parsed.hash(), cfg.hash());
    }
}

#[test]
fn invalid_config_exits_1_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"solver": {"tol_rel": 2.0}}"#);
    let out = bin()
        .args(["minimize2d", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver.tol_rel"));

    let cfg = write_config(dir.path(), r#"{"flow": {"t_end": 1.0, "speed": 3}}"#);
    let out = bin()
        .args(["flow", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("flow"));
}

#[test]
fn missing_prerequisite_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{}");
    let out_dir = dir.path().join("out");
    let out = bin()
        .args([
            "minimize2d",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("connections.json") && err.contains("`connections`"),
        "{err}"
    );
}

#[test]
fn w1_connections_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"outputs": {"dir": "unused", "emit_svg": true}}"#,
    );
    let out_dir = dir.path().join("out");
    let run = |cmd: &str| {
        bin()
            .args([
                cmd,
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .status()
            .unwrap()
            .code()
    };
    assert_eq!(run("connections"), Some(0));
    for f in [
        "e0.csv",
        "e_plus.csv",
        "e_minus.csv",
        "connections.json",
        "scan.csv",
        "connections.svg",
    ] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("connections.json")).unwrap())
            .unwrap();
    let action = |label: &str| {
        doc["connections"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["label"] == label)
            .unwrap()["summary"]["action"]
            .as_f64()
            .unwrap()
    };
    assert!(action("e_plus") < action("e0"));
    assert_eq!(action("e_plus"), action("e_minus"));
    let svg = std::fs::read_to_string(out_dir.join("connections.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 2, "two poles marked");

    assert_eq!(run("report"), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(
        report["provenance"]["artifacts"],
        serde_json::json!(["connections.json"])
    );
    assert!(out_dir.join("timing.txt").exists());
}

#[test]
fn epsilon_star_without_sign_change_exits_2_with_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"crossing": {"eps_bracket": [1.5, 2.0]}, "path": {"N": 501}}"#,
    );
    let out_dir = dir.path().join("out");
    let status = bin()
        .args([
            "epsilon-star",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let table = std::fs::read_to_string(out_dir.join("epsilon_star_gaps.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "source,parameter,gap,e0,e_pm,e_i,e_ii");
    assert!(
        rows.iter().filter(|r| r.starts_with("quadrature,")).count() == 2,
        "{table}"
    );
}
