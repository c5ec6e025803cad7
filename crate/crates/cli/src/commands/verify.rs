//! `verify`: run the named consistency checks for the configured scenario
//! and write a machine-readable report.
//!
//! Checks come in two kinds. *Asserted* checks compare a measured value
//! against a fixed tolerance and decide the exit code. *Reported* checks
//! carry informational values — quantities whose correct magnitude is still
//! under adjudication (the `paper`-variant phase offset) — and never fail
//! the run. The default suite asserts every identity the closed-form packet
//! must satisfy; kernel-based checks join in automatically (free particle)
//! or on request (`composition`, which is expected to fail for ν > 0 — see
//! the README).

use serde_json::json;

use schpack::dynamics::{classical_action, integrate_trajectory, PacketState};
use schpack::packet::density;
use schpack::propagator::{kernel as build_kernel, propagate};
use schpack::quad::trapezoid_integral;
use schpack::residuals::{
    continuity_residual, hamilton_jacobi_residual, log_identity_residual, mean_log_density,
};
use schpack::{Grid, MeanActionVariant, SchError};

use crate::config::{Scenario, DEFAULT_ODE_TOL};
use crate::output::{json_doc, write_atomic};
use crate::CliError;

const LOG_IDENTITY_TOL: f64 = 1e-6;
const MEAN_LOG_TOL: f64 = 1e-8;
const CONTINUITY_TOL: f64 = 1e-10;
const PHASE_COEFF_TOL: f64 = 1e-8;
const PACKET_NORM_TOL: f64 = 1e-8;
const FREE_KERNEL_MODULUS_TOL: f64 = 1e-6;
const FREE_KERNEL_PHASE_TOL: f64 = 1e-5;
const COMPOSITION_TOL: f64 = 1e-4;
/// Points for the free-kernel closed-form comparison; the check is
/// grid-insensitive (the modulus is uniform), so a small matrix suffices.
const FREE_KERNEL_POINTS: usize = 48;
/// Record spacing for the action-consistency quadrature.
const ACTION_SPACING: f64 = 0.02;

struct Outcome {
    name: String,
    value: f64,
    tolerance: Option<f64>,
    passed: bool,
    asserted: bool,
}

impl Outcome {
    fn asserted(name: &str, value: f64, tolerance: f64) -> Self {
        Outcome {
            name: name.to_string(),
            value,
            tolerance: Some(tolerance),
            passed: value < tolerance,
            asserted: true,
        }
    }

    fn reported(name: &str, value: f64) -> Self {
        Outcome {
            name: name.to_string(),
            value,
            tolerance: None,
            passed: true,
            asserted: false,
        }
    }
}

pub fn run(scenario: &Scenario) -> Result<(), CliError> {
    let requested = match &scenario.verify_checks {
        Some(list) => list.clone(),
        None => default_suite(scenario),
    };
    if requested.is_empty() {
        return Err(CliError::config("verify.checks must not be empty"));
    }

    let states = verification_states(scenario)?;
    let mut outcomes = Vec::new();
    for name in &requested {
        match name.as_str() {
            "log_identity" => outcomes.push(check_log_identity(scenario, &states)?),
            "mean_log" => outcomes.push(check_mean_log(scenario, &states)?),
            "continuity" => outcomes.push(check_continuity(scenario, &states)?),
            "phase_coefficients" => outcomes.extend(check_phase_coefficients(scenario, &states)?),
            "packet_norm" => outcomes.push(check_packet_norm(scenario, &states)?),
            "action_consistency" => outcomes.push(check_action_consistency(scenario)?),
            "free_kernel" => outcomes.extend(check_free_kernel(scenario)?),
            "composition" => outcomes.push(check_composition(scenario)?),
            other => {
                return Err(CliError::config(format!(
                    "unknown check \"{other}\"; available: log_identity, mean_log, continuity, \
                     phase_coefficients, packet_norm, action_consistency, free_kernel, composition"
                )))
            }
        }
    }

    let all_passed = outcomes.iter().all(|o| o.passed);
    for o in &outcomes {
        let verdict = if !o.asserted {
            "REPORTED"
        } else if o.passed {
            "pass"
        } else {
            "FAIL"
        };
        match o.tolerance {
            Some(tol) => println!("{:<28} {:>12.4e}  (tol {tol:.0e})  {verdict}", o.name, o.value),
            None => println!("{:<28} {:>12.4e}  {verdict}", o.name, o.value),
        }
    }

    let report = json!({
        "variant": super::variant_name(scenario),
        "all_passed": all_passed,
        "checks": outcomes.iter().map(|o| json!({
            "name": o.name,
            "value": o.value,
            "tolerance": o.tolerance,
            "passed": o.passed,
            "asserted": o.asserted,
        })).collect::<Vec<_>>(),
    });
    let path = write_atomic(&scenario.out_dir, "verify.json", &json_doc(&report)?)?;
    println!("wrote {}", path.display());

    if all_passed {
        Ok(())
    } else {
        Err(CliError::Verification)
    }
}

fn default_suite(scenario: &Scenario) -> Vec<String> {
    let mut suite: Vec<String> = [
        "log_identity",
        "mean_log",
        "continuity",
        "phase_coefficients",
        "packet_norm",
        "action_consistency",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let free = matches!(scenario.potential, schpack::PotentialModel::Free);
    if scenario.params.nu == 0.0 && free && scenario.kernel.is_some() {
        suite.push("free_kernel".to_string());
    }
    suite
}

/// States the residual checks sample: the configured output times, always
/// including t = 0.
fn verification_states(scenario: &Scenario) -> Result<Vec<PacketState>, CliError> {
    if scenario.times.is_empty() {
        return Ok(vec![super::initial_state(scenario)]);
    }
    let mut times = scenario.times.clone();
    if times[0] > 0.0 {
        times.insert(0, 0.0);
    }
    super::states_at(scenario, &times)
}

fn check_log_identity(scenario: &Scenario, states: &[PacketState]) -> Result<Outcome, CliError> {
    let mut worst = 0.0f64;
    for state in states {
        worst = worst.max(
            log_identity_residual(state, &scenario.grid).map_err(CliError::runtime)?,
        );
    }
    Ok(Outcome::asserted("log_identity", worst, LOG_IDENTITY_TOL))
}

fn check_mean_log(scenario: &Scenario, states: &[PacketState]) -> Result<Outcome, CliError> {
    let mut worst = 0.0f64;
    for state in states {
        let measured = mean_log_density(state, &scenario.grid).map_err(CliError::runtime)?;
        let closed_form =
            -0.5 * (2.0 * std::f64::consts::PI * state.a * state.a).ln() - 0.5;
        worst = worst.max((measured - closed_form).abs());
    }
    Ok(Outcome::asserted("mean_log", worst, MEAN_LOG_TOL))
}

fn check_continuity(scenario: &Scenario, states: &[PacketState]) -> Result<Outcome, CliError> {
    let mut worst = 0.0f64;
    for state in states {
        worst = worst.max(
            continuity_residual(state, &scenario.grid, &scenario.params, &scenario.potential)
                .map_err(CliError::runtime)?,
        );
    }
    Ok(Outcome::asserted("continuity", worst, CONTINUITY_TOL))
}

fn check_phase_coefficients(
    scenario: &Scenario,
    states: &[PacketState],
) -> Result<Vec<Outcome>, CliError> {
    let variant = scenario.variant.to_core();
    let mut worst_c1c2 = 0.0f64;
    let mut worst_c0 = 0.0f64;
    for state in states {
        let (c0, c1, c2) = hamilton_jacobi_residual(
            state,
            &scenario.grid,
            &scenario.params,
            &scenario.potential,
            variant,
        )
        .map_err(CliError::runtime)?;
        worst_c1c2 = worst_c1c2.max(c1.abs()).max(c2.abs());
        worst_c0 = worst_c0.max(c0.abs());
    }
    let c0_outcome = match variant {
        MeanActionVariant::Corrected => Outcome::asserted("phase_c0", worst_c0, PHASE_COEFF_TOL),
        MeanActionVariant::Paper => Outcome::reported("phase_c0", worst_c0),
    };
    Ok(vec![
        Outcome::asserted("phase_c1c2", worst_c1c2, PHASE_COEFF_TOL),
        c0_outcome,
    ])
}

fn check_packet_norm(scenario: &Scenario, states: &[PacketState]) -> Result<Outcome, CliError> {
    let mut worst = 0.0f64;
    for state in states {
        let rho = density(state, &scenario.grid).map_err(CliError::runtime)?;
        let norm = trapezoid_integral(&rho).map_err(CliError::runtime)?;
        worst = worst.max((norm - 1.0).abs());
    }
    Ok(Outcome::asserted("packet_norm", worst, PACKET_NORM_TOL))
}

fn check_action_consistency(scenario: &Scenario) -> Result<Outcome, CliError> {
    let t_max = scenario.times.last().copied().unwrap_or(1.0).max(ACTION_SPACING);
    let count = (t_max / ACTION_SPACING).ceil() as usize;
    let times: Vec<f64> = (0..=count)
        .map(|i| t_max * i as f64 / count as f64)
        .collect();
    let record = integrate_trajectory(
        &scenario.initial,
        &scenario.potential,
        &scenario.params,
        &times,
        DEFAULT_ODE_TOL,
    )
    .map_err(CliError::runtime)?;
    match classical_action(&record, &scenario.potential, &scenario.params) {
        Ok(action) => {
            let mut worst = 0.0f64;
            for (state, s_quad) in record.states.iter().zip(&action) {
                worst = worst.max((state.s0 - s_quad).abs());
            }
            Ok(Outcome::asserted(
                "action_consistency",
                worst,
                schpack::dynamics::ACTION_CONSISTENCY_TOL,
            ))
        }
        Err(SchError::ActionInconsistency { deviation, .. }) => Ok(Outcome {
            name: "action_consistency".to_string(),
            value: deviation,
            tolerance: Some(schpack::dynamics::ACTION_CONSISTENCY_TOL),
            passed: false,
            asserted: true,
        }),
        Err(e) => Err(CliError::runtime(e)),
    }
}

fn check_free_kernel(scenario: &Scenario) -> Result<Vec<Outcome>, CliError> {
    if scenario.params.nu != 0.0 || !matches!(scenario.potential, schpack::PotentialModel::Free) {
        return Err(CliError::config(
            "the free_kernel check needs physics.nu = 0 and potential.kind = \"free\"",
        ));
    }
    let spec = scenario.kernel_spec()?;
    let g = Grid::bounded(scenario.grid.x_min, scenario.grid.x_max, FREE_KERNEL_POINTS)
        .map_err(|e| CliError::config(format!("grid: {e}")))?;
    let quad = scenario.velocity_quadrature(&g, &g)?;
    let matrix = build_kernel(
        spec.t,
        &g,
        &g,
        &quad,
        &scenario.initial,
        &scenario.potential,
        &scenario.params,
    )
    .map_err(CliError::runtime)?;

    let params = &scenario.params;
    let expected_mod =
        (params.mass / (2.0 * std::f64::consts::PI * params.hbar * spec.t)).sqrt();
    let phase_scale = params.mass / (2.0 * params.hbar * spec.t);

    let mut modulus_err = 0.0f64;
    let mut rotated = Vec::with_capacity(g.n * g.n);
    for ix in 0..g.n {
        for i0 in 0..g.n {
            let v = matrix.value(ix, i0);
            modulus_err = modulus_err.max((v.norm() - expected_mod).abs() / expected_mod);
            let dx = g.point(ix) - g.point(i0);
            let expected_phase = phase_scale * dx * dx;
            rotated.push(v * num_complex::Complex64::from_polar(1.0, -expected_phase));
        }
    }
    // The closed form fixes the phase only up to one global constant;
    // estimate it as the argument of the coherent sum, then measure the
    // worst remaining pointwise deviation.
    let global: num_complex::Complex64 = rotated.iter().sum();
    let global_phase = global.arg();
    let mut phase_spread = 0.0f64;
    for z in &rotated {
        phase_spread = phase_spread
            .max((z * num_complex::Complex64::from_polar(1.0, -global_phase)).arg().abs());
    }

    Ok(vec![
        Outcome::asserted("free_kernel_modulus", modulus_err, FREE_KERNEL_MODULUS_TOL),
        Outcome::asserted("free_kernel_phase", phase_spread, FREE_KERNEL_PHASE_TOL),
    ])
}

fn check_composition(scenario: &Scenario) -> Result<Outcome, CliError> {
    let spec = scenario.kernel_spec()?;
    let grid = &scenario.grid;
    let params = &scenario.params;
    let quad = scenario.velocity_quadrature(grid, grid)?;
    let matrix = build_kernel(
        spec.t,
        grid,
        grid,
        &quad,
        &scenario.initial,
        &scenario.potential,
        params,
    )
    .map_err(CliError::runtime)?;

    let psi0 = schpack::packet::evaluate_packet(&super::initial_state(scenario), grid, params)
        .map_err(CliError::runtime)?;
    let psi_t = propagate(&matrix, &psi0).map_err(CliError::runtime)?;
    let states = super::states_at(scenario, &[spec.t])?;
    let reference = schpack::packet::evaluate_packet(&states[0], grid, params)
        .map_err(CliError::runtime)?;

    let mut err2 = 0.0;
    let mut ref2 = 0.0;
    for i in 0..grid.n {
        let w = grid.weight(i);
        err2 += w * (psi_t.values[i] - reference.values[i]).norm_sqr();
        ref2 += w * reference.values[i].norm_sqr();
    }
    Ok(Outcome::asserted(
        "composition",
        (err2 / ref2).sqrt(),
        COMPOSITION_TOL,
    ))
}
