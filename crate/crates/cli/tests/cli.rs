//! End-to-end checks of the cvwit binary: state emission, solve reports,
//! round-trip agreement with the library, byte stability, and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

use cvwit_core::states::{two_mode_squeezed, ww_state};
use cvwit_core::symplectic::{Mat, ModePartition};
use cvwit_core::witnessprob::{duan_witness, fully_wit};

const BIN: &str = env!("CARGO_BIN_EXE_cvwit");

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary should spawn")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("binary should exit normally")
}

fn report(out: &Output) -> serde_json::Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report should be JSON")
}

fn rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn write_state(name: &str, modes: &[usize], gamma: &Mat) -> PathBuf {
    let path = tmp(name);
    let doc = serde_json::json!({ "modes": modes, "gamma": rows(gamma) });
    std::fs::write(&path, serde_json::to_vec(&doc).unwrap()).unwrap();
    path
}

#[test]
fn state_to_solve_round_trip_matches_the_library() {
    let state_path = tmp("tms.json");
    let emitted = run(&["state", "tms", "--r", "0.5", "--output", state_path.to_str().unwrap()]);
    assert_eq!(code(&emitted), 0);

    let doc = report(&run(&["fullywit", "--input", state_path.to_str().unwrap()]));
    let gamma = two_mode_squeezed(0.5).unwrap();
    let partition = ModePartition::new(vec![1, 1]).unwrap();
    let library = fully_wit(&gamma, &partition, &[], 1e-8).unwrap();

    assert_eq!(doc["schema"], "cvwit-report/1");
    assert_eq!(doc["task"], "fullywit");
    assert_eq!(doc["status"], "optimal");
    assert_eq!(doc["verdict"], "entangled");
    assert!(doc["input_digest"].as_str().unwrap().starts_with("sha256:"));
    assert!((doc["c"].as_f64().unwrap() - library.c).abs() <= 1e-9);
    assert!((doc["x_e"].as_f64().unwrap() - library.x_e).abs() <= 1e-9);
    assert!((doc["p_measure"].as_f64().unwrap() - std::f64::consts::E).abs() <= 1e-6);
    assert_eq!(doc["validation"]["passes"], true);
    assert_eq!(doc["witness"].as_array().unwrap().len(), 4);
}

#[test]
fn reports_are_byte_stable() {
    let state_path = write_state("stable.json", &[1, 1], two_mode_squeezed(0.3).unwrap().matrix());
    let mut bytes = Vec::new();
    for name in ["stable-a.json", "stable-b.json"] {
        let out_path = tmp(name);
        let out = run(&[
            "fullywit",
            "--input",
            state_path.to_str().unwrap(),
            "--output",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        bytes.push(std::fs::read(&out_path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn no_witness_flag_omits_the_matrix() {
    let state_path = write_state("noz.json", &[1, 1], two_mode_squeezed(0.4).unwrap().matrix());
    let doc = report(&run(&["fullywit", "--input", state_path.to_str().unwrap(), "--no-witness"]));
    assert!(doc.get("witness").is_none());
    assert_eq!(doc["status"], "optimal");
}

#[test]
fn partition_flag_overrides_the_file() {
    let ww = ww_state();
    let state_path = write_state("ww.json", &[2, 2], ww.matrix());
    let doc = report(&run(&[
        "fullywit",
        "--input",
        state_path.to_str().unwrap(),
        "--partition",
        "1,1,1,1",
    ]));
    let partition = ModePartition::new(vec![1, 1, 1, 1]).unwrap();
    let library = fully_wit(&ww, &partition, &[], 1e-8).unwrap();
    assert!((doc["c"].as_f64().unwrap() - library.c).abs() <= 1e-9);
}

#[test]
fn bad_inputs_exit_with_code_2() {
    let garbage = tmp("garbage.json");
    std::fs::write(&garbage, b"not json").unwrap();
    let out = run(&["fullywit", "--input", garbage.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("cvwit:"));

    let missing = run(&["fullywit", "--input", tmp("absent.json").to_str().unwrap()]);
    assert_eq!(code(&missing), 2);

    let state_path = write_state("badpart.json", &[1, 1], two_mode_squeezed(0.2).unwrap().matrix());
    let bad_flag =
        run(&["fullywit", "--input", state_path.to_str().unwrap(), "--partition", "1,x"]);
    assert_eq!(code(&bad_flag), 2);
}

#[test]
fn infeasible_constraints_exit_with_code_3() {
    let gamma = two_mode_squeezed(0.5).unwrap();
    let path = tmp("infeasible.json");
    let doc = serde_json::json!({
        "modes": [1, 1],
        "gamma": rows(gamma.matrix()),
        "constraints": [rows(&Mat::identity(4, 4))],
    });
    std::fs::write(&path, serde_json::to_vec(&doc).unwrap()).unwrap();
    let out_path = tmp("infeasible-report.json");
    let out = run(&[
        "fullywit",
        "--input",
        path.to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    let written: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(written["status"], "constraints_infeasible");
    assert!(written["c"].is_null());
}

#[test]
fn validate_reports_all_conditions_for_the_reference_witness() {
    let path = tmp("duan.json");
    let doc = serde_json::json!({ "z": rows(&duan_witness(1.0).unwrap()) });
    std::fs::write(&path, serde_json::to_vec(&doc).unwrap()).unwrap();
    let out =
        report(&run(&["validate", "--witness", path.to_str().unwrap(), "--partition", "1,1"]));
    assert_eq!(out["task"], "validate");
    assert_eq!(out["conditions"]["passes"], true);
    assert!(out["multipartite_conditions"].is_null());
}

#[test]
fn product_subcommand_detects_the_squeezed_pair() {
    let witness_path = tmp("duan-product.json");
    let doc = serde_json::json!({ "z": rows(&duan_witness(1.0).unwrap()) });
    std::fs::write(&witness_path, serde_json::to_vec(&doc).unwrap()).unwrap();
    let state_path =
        write_state("tms-product.json", &[1, 1], two_mode_squeezed(0.5).unwrap().matrix());
    let out = report(&run(&[
        "product",
        "--witness",
        witness_path.to_str().unwrap(),
        "--input",
        state_path.to_str().unwrap(),
    ]));
    assert_eq!(out["detected"], true);
    assert!((out["product_value"].as_f64().unwrap() - (-2.0f64).exp() / 4.0).abs() <= 1e-12);
    assert!((out["linear_value"].as_f64().unwrap() - (-1.0f64).exp()).abs() <= 1e-12);
    assert!((out["balance_parameter"].as_f64().unwrap() - 1.0).abs() <= 1e-9);
}

#[test]
fn state_ghz_emits_the_closed_form() {
    let out =
        report(&run(&["state", "ghz", "--parties", "3", "--r1", "0.34657", "--r2", "0.34657"]));
    assert_eq!(out["modes"], serde_json::json!([1, 1, 1]));
    let gamma = out["gamma"].as_array().unwrap();
    assert_eq!(gamma.len(), 6);
    assert!((gamma[0][0].as_f64().unwrap() - 1.0).abs() <= 1e-4);
    assert!((gamma[0][2].as_f64().unwrap() - 0.5).abs() <= 1e-4);
    assert!((gamma[1][3].as_f64().unwrap() + 0.5).abs() <= 1e-4);
}
