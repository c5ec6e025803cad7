//! End-to-end tests of the `schpack` binary: each one writes a scenario
//! file, runs a command in a fresh temp directory, and checks the exit code
//! and the artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

/// Run a subcommand against a scenario text; returns the process output and
/// the output directory (with its tempdir guard).
fn run(subcommand: &str, scenario: &str, extra: &[&str]) -> (Output, PathBuf, TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("scenario.toml");
    std::fs::write(&config_path, scenario).unwrap();
    let out_dir = dir.path().join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_schpack"))
        .arg(subcommand)
        .arg("--config")
        .arg(&config_path)
        .arg("--out")
        .arg(&out_dir)
        .args(extra)
        .output()
        .unwrap();
    (output, out_dir, dir)
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("process should exit normally")
}

fn stderr_text(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Parse a numeric CSV written by the tool: header names plus f64 rows.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .expect("CSV must have a header")
        .split(',')
        .map(|s| s.to_string())
        .collect();
    let rows = lines
        .map(|line| {
            line.split(',')
                .map(|field| field.parse::<f64>().expect("numeric field"))
                .collect()
        })
        .collect();
    (header, rows)
}

fn column<'a>(header: &[String], rows: &'a [Vec<f64>], name: &str) -> Vec<f64> {
    let idx = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("column {name} missing from {header:?}"));
    rows.iter().map(|r| r[idx]).collect()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const A_EQ: &str = "0.7071067811865476";

fn damped_free_scenario(times: &str) -> String {
    format!(
        r#"
[physics]
nu = 0.5

[initial]
x0 = 0.0
v0 = 1.0
a0 = 1.0

[potential]
kind = "free"

[grid]
x_min = -8.0
x_max = 8.0
n = 256

[times]
{times}
"#
    )
}

fn harmonic_scenario(extra_sections: &str) -> String {
    format!(
        r#"
[physics]
nu = 0.3

[initial]
x0 = 1.0
v0 = 0.0
a0 = {A_EQ}

[potential]
kind = "harmonic"
omega = 1.0

[grid]
x_min = -8.0
x_max = 8.0
n = 1024

[times]
list = [0.0, 0.7]
{extra_sections}
"#
    )
}

#[test]
fn trajectory_damped_free_matches_the_closed_form() {
    let scenario = damped_free_scenario("list = [0.0, 2.0]");
    let (output, out_dir, _guard) = run("trajectory", &scenario, &[]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));

    let (header, rows) = read_csv(&out_dir.join("trajectory.csv"));
    assert_eq!(header, ["t", "q", "qdot", "a", "adot", "S0"]);
    assert_eq!(rows.len(), 2);
    let q = column(&header, &rows, "q");
    // q(t) = (v0/nu)(1 − e^{−nu t}) at nu = 0.5, v0 = 1, t = 2.
    let expected = 2.0 * (1.0 - (-1.0f64).exp());
    assert!(
        (q[1] - expected).abs() < 1e-8,
        "q(2) = {}, expected {expected}",
        q[1]
    );
    // Every run records the resolved scenario next to its outputs.
    let echo = std::fs::read_to_string(out_dir.join("config_used.toml")).unwrap();
    assert!(echo.contains("variant"));
}

#[test]
fn free_width_column_grows_monotonically() {
    let scenario = damped_free_scenario("linspace = { start = 0.0, stop = 2.0, count = 9 }")
        .replace("nu = 0.5", "nu = 0.0");
    let (output, out_dir, _guard) = run("trajectory", &scenario, &["--seedless"]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));

    let (header, rows) = read_csv(&out_dir.join("trajectory.csv"));
    let a = column(&header, &rows, "a");
    assert_eq!(a.len(), 9);
    for pair in a.windows(2) {
        assert!(pair[1] >= pair[0], "width must not shrink: {pair:?}");
    }
}

#[test]
fn empty_time_list_yields_a_header_only_csv() {
    let scenario = damped_free_scenario("list = []");
    let (output, out_dir, _guard) = run("trajectory", &scenario, &[]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));
    let text = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert_eq!(text, "t,q,qdot,a,adot,S0\n");
}

#[test]
fn csv_numbers_carry_seventeen_significant_digits() {
    let scenario = damped_free_scenario("list = [0.0, 2.0]");
    let (output, out_dir, _guard) = run("trajectory", &scenario, &[]);
    assert_eq!(exit_code(&output), 0);
    let text = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let first_row = text.lines().nth(1).unwrap();
    assert!(
        first_row.starts_with("0.0000000000000000e0,"),
        "row was: {first_row}"
    );
}

#[test]
fn unknown_config_key_exits_2_naming_the_key() {
    let scenario = damped_free_scenario("list = [0.0]").replace("nu = 0.5", "nu = 0.5\nnuu = 1.0");
    let (output, _out, _guard) = run("trajectory", &scenario, &[]);
    assert_eq!(exit_code(&output), 2);
    assert!(
        stderr_text(&output).contains("nuu"),
        "stderr: {}",
        stderr_text(&output)
    );
}

#[test]
fn invalid_initial_width_exits_2() {
    let scenario = damped_free_scenario("list = [0.0]").replace("a0 = 1.0", "a0 = -1.0");
    let (output, _out, _guard) = run("trajectory", &scenario, &[]);
    assert_eq!(exit_code(&output), 2);
    assert!(
        stderr_text(&output).contains("a0"),
        "stderr: {}",
        stderr_text(&output)
    );
}

#[test]
fn missing_config_flag_exits_2() {
    let output = Command::new(env!("CARGO_BIN_EXE_schpack"))
        .arg("trajectory")
        .output()
        .unwrap();
    assert_eq!(exit_code(&output), 2);
    assert!(stderr_text(&output).contains("--config"));
}

#[test]
fn packet_fields_satisfy_their_closed_form_relations() {
    let scenario = harmonic_scenario("");
    let (output, out_dir, _guard) = run("packet", &scenario, &[]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));

    let index = read_json(&out_dir.join("packet_index.json"));
    let files: Vec<String> = index["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap().to_string())
        .collect();
    assert_eq!(files, ["packet_0000.csv", "packet_0001.csv"]);

    for (k, name) in files.iter().enumerate() {
        let (header, rows) = read_csv(&out_dir.join(name));
        assert_eq!(
            header,
            ["x", "re_psi", "im_psi", "rho", "S", "v_qu", "theta_qu", "V_qu"]
        );
        let x = column(&header, &rows, "x");
        let rho = column(&header, &rows, "rho");
        let v_qu = column(&header, &rows, "v_qu");

        // Density normalization by the trapezoid rule on the bounded grid.
        let dx = x[1] - x[0];
        let mut norm = 0.0;
        for (i, r) in rho.iter().enumerate() {
            let w = if i == 0 || i == rho.len() - 1 { 0.5 } else { 1.0 };
            norm += w * r * dx;
        }
        assert!((norm - 1.0).abs() < 1e-8, "file {name}: norm {norm}");

        // The flux velocity is affine in x: all second differences vanish.
        for w in v_qu.windows(3) {
            assert!(
                (w[2] - 2.0 * w[1] + w[0]).abs() < 1e-9,
                "file {name}: v_qu is not affine"
            );
        }

        // At t = 0 the peak sits at x0 = 1 where the Bohm potential equals
        // hbar^2/(4 m a^2) = 0.5 for the equilibrium width.
        if k == 0 {
            let v_bohm = column(&header, &rows, "V_qu");
            let peak = rho
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert!((x[peak] - 1.0).abs() < 0.02, "peak at {}", x[peak]);
            assert!(
                (v_bohm[peak] - 0.5).abs() < 1e-3,
                "V_qu at the peak: {}",
                v_bohm[peak]
            );
        }
    }
}

#[test]
fn free_kernel_matrix_has_uniform_modulus_and_full_metadata() {
    let scenario = r#"
[physics]
nu = 0.0

[initial]
x0 = 0.0
v0 = 0.0
a0 = 1.0

[potential]
kind = "free"

[grid]
x_min = -3.0
x_max = 3.0
n = 48

[times]
list = [0.0]

[kernel]
t = 1.0
n_v = 257
"#;
    let (output, out_dir, _guard) = run("kernel", scenario, &[]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));

    let (header, rows) = read_csv(&out_dir.join("kernel.csv"));
    assert_eq!(header, ["x", "x0", "re_K", "im_K"]);
    assert_eq!(rows.len(), 48 * 48);
    let expected = (1.0 / (2.0 * std::f64::consts::PI)).sqrt();
    for row in &rows {
        let modulus = (row[2] * row[2] + row[3] * row[3]).sqrt();
        assert!(
            (modulus - expected).abs() / expected < 1e-6,
            "|K|({}, {}) = {modulus}",
            row[0],
            row[1]
        );
    }

    let meta = read_json(&out_dir.join("kernel_meta.json"));
    assert_eq!(meta["variant"], "corrected");
    assert_eq!(meta["n_v"], 257);
    assert_eq!(meta["rule"], "gauss-legendre");
    assert!(meta["edge_envelope_ratio"].as_f64().unwrap() < 1e-10);
    assert!(meta["trajectories"].as_u64().unwrap() >= 1);
}

#[test]
fn identical_configs_produce_bit_identical_outputs() {
    let scenario = harmonic_scenario("");
    let (out1, dir1, _g1) = run("trajectory", &scenario, &[]);
    let (out2, dir2, _g2) = run("trajectory", &scenario, &[]);
    assert_eq!(exit_code(&out1), 0);
    assert_eq!(exit_code(&out2), 0);
    let bytes1 = std::fs::read(dir1.join("trajectory.csv")).unwrap();
    let bytes2 = std::fs::read(dir2.join("trajectory.csv")).unwrap();
    assert_eq!(bytes1, bytes2);
}

#[test]
fn verify_default_suite_passes_on_the_harmonic_scenario() {
    let scenario = harmonic_scenario("");
    let (output, out_dir, _guard) = run("verify", &scenario, &[]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));

    let report = read_json(&out_dir.join("verify.json"));
    assert_eq!(report["variant"], "corrected");
    assert_eq!(report["all_passed"], true);
    let checks = report["checks"].as_array().unwrap();
    let names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    for expected in [
        "log_identity",
        "mean_log",
        "continuity",
        "phase_c1c2",
        "phase_c0",
        "packet_norm",
        "action_consistency",
    ] {
        assert!(names.contains(&expected), "missing check {expected}");
    }
    for check in checks {
        assert_eq!(check["passed"], true, "failed: {check}");
    }
    // Under the corrected convention the phase offset is asserted.
    let c0 = checks.iter().find(|c| c["name"] == "phase_c0").unwrap();
    assert_eq!(c0["asserted"], true);
}

#[test]
fn verify_paper_variant_reports_the_phase_offset_without_asserting() {
    let scenario = harmonic_scenario("");
    let (output, out_dir, _guard) = run("verify", &scenario, &["--variant", "paper"]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));

    let report = read_json(&out_dir.join("verify.json"));
    assert_eq!(report["variant"], "paper");
    assert_eq!(report["all_passed"], true);
    let checks = report["checks"].as_array().unwrap();
    let c0 = checks.iter().find(|c| c["name"] == "phase_c0").unwrap();
    assert_eq!(c0["asserted"], false);
    assert!(c0["tolerance"].is_null());
    // The leftover offset is a real O(nu) quantity, far above the noise.
    assert!(c0["value"].as_f64().unwrap() > 1e-4);
}

#[test]
fn verify_free_suite_includes_the_kernel_checks() {
    // The grid must cover the packet through its spread at t = 1
    // (a(1) = sqrt(2), so 8 widths around the drifting center is ±12).
    let scenario = r#"
[physics]
nu = 0.0

[initial]
x0 = 0.0
v0 = 0.4
a0 = 1.0

[potential]
kind = "free"

[grid]
x_min = -12.0
x_max = 12.0
n = 1024

[times]
list = [0.0, 1.0]

[kernel]
t = 1.0
n_v = 257
"#;
    let (output, out_dir, _guard) = run("verify", scenario, &[]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));

    let report = read_json(&out_dir.join("verify.json"));
    assert_eq!(report["all_passed"], true);
    let checks = report["checks"].as_array().unwrap();
    for name in ["free_kernel_modulus", "free_kernel_phase"] {
        let check = checks.iter().find(|c| c["name"] == name).unwrap();
        assert_eq!(check["passed"], true, "failed: {check}");
        assert_eq!(check["asserted"], true);
    }
}

#[test]
fn verify_composition_fails_honestly_under_friction() {
    let scenario = r#"
[physics]
nu = 0.3

[initial]
x0 = 1.0
v0 = 0.0
a0 = 0.7071067811865476

[potential]
kind = "harmonic"
omega = 1.0

[grid]
x_min = -6.0
x_max = 8.0
n = 128

[times]
list = [0.0, 1.0]

[kernel]
t = 1.0
n_v = 385

[verify]
checks = ["composition"]
"#;
    let (output, out_dir, _guard) = run("verify", scenario, &[]);
    assert_eq!(exit_code(&output), 4, "stderr: {}", stderr_text(&output));

    let report = read_json(&out_dir.join("verify.json"));
    assert_eq!(report["all_passed"], false);
    let checks = report["checks"].as_array().unwrap();
    let comp = checks.iter().find(|c| c["name"] == "composition").unwrap();
    assert_eq!(comp["passed"], false);
    // The friction phase-mixing gap is O(nu), not a quadrature artifact.
    let value = comp["value"].as_f64().unwrap();
    assert!(
        (1e-2..1.0).contains(&value),
        "composition gap should be O(nu), got {value}"
    );
}

#[test]
fn unknown_check_name_exits_2() {
    let scenario = harmonic_scenario("\n[verify]\nchecks = [\"continuity\", \"no_such_check\"]\n");
    let (output, _out, _guard) = run("verify", &scenario, &[]);
    assert_eq!(exit_code(&output), 2);
    assert!(
        stderr_text(&output).contains("no_such_check"),
        "stderr: {}",
        stderr_text(&output)
    );
}

#[test]
fn oracle_tabulates_moment_agreement_with_the_odes() {
    let scenario = r#"
[physics]
nu = 0.3

[initial]
x0 = 1.0
v0 = 0.0
a0 = 0.7071067811865476

[potential]
kind = "harmonic"
omega = 1.0

[grid]
x_min = -10.0
x_max = 10.0
n = 512
periodic = true

[times]
list = [0.0, 0.25, 0.5]

[oracle]
dt = 1e-3
"#;
    let (output, out_dir, _guard) = run("oracle", scenario, &[]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));

    let (header, rows) = read_csv(&out_dir.join("oracle.csv"));
    assert_eq!(rows.len(), 3);
    for name in ["delta_mean", "delta_width"] {
        for (row, v) in column(&header, &rows, name).iter().enumerate() {
            assert!(*v < 1e-4, "{name} at row {row} is {v}");
        }
    }
    let norm = column(&header, &rows, "norm");
    for v in &norm {
        assert!((v - 1.0).abs() < 1e-8);
    }

    let meta = read_json(&out_dir.join("oracle_meta.json"));
    assert!(meta["worst_delta_mean"].as_f64().unwrap() < 1e-4);
    assert!(meta["worst_delta_width"].as_f64().unwrap() < 1e-4);
    assert!(meta["worst_norm_drift"].as_f64().unwrap() < 1e-8);
}

#[test]
fn oracle_on_a_bounded_grid_exits_2() {
    let scenario = harmonic_scenario("\n[oracle]\ndt = 1e-3\n");
    let (output, _out, _guard) = run("oracle", &scenario, &[]);
    assert_eq!(exit_code(&output), 2);
    assert!(
        stderr_text(&output).contains("periodic"),
        "stderr: {}",
        stderr_text(&output)
    );
}

#[test]
fn propagate_reproduces_the_free_packet_through_the_kernel() {
    let scenario = r#"
[physics]
nu = 0.0

[initial]
x0 = 0.0
v0 = 0.4
a0 = 1.0

[potential]
kind = "free"

[grid]
x_min = -7.0
x_max = 7.0
n = 96

[times]
list = [0.0, 1.0]

[kernel]
t = 1.0
n_v = 257
"#;
    let (output, out_dir, _guard) = run("propagate", scenario, &[]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));

    let meta = read_json(&out_dir.join("propagate_meta.json"));
    let rel = meta["relative_l2_vs_closed_form"].as_f64().unwrap();
    assert!(rel < 1e-6, "free composition should be exact, got {rel}");

    let (header, rows) = read_csv(&out_dir.join("propagate.csv"));
    assert_eq!(header, ["x", "re_psi", "im_psi", "rho"]);
    assert_eq!(rows.len(), 96);
}
