//! Command drivers: each public `run` takes a validated [`Scenario`],
//! performs the computation through the core library, and writes its
//! artifacts atomically into the output directory.

pub mod kernel;
pub mod oracle;
pub mod packet;
pub mod propagate;
pub mod trajectory;
pub mod verify;

use schpack::dynamics::{integrate_trajectory, PacketState};

use crate::config::{Scenario, DEFAULT_ODE_TOL};
use crate::CliError;

/// Packet states at the scenario's output times.
///
/// The integrator requires a strictly increasing list starting at 0; a
/// leading 0 is inserted (and its state dropped from the result) when the
/// first requested time is positive, so configs may ask for any window.
pub(crate) fn states_at(scenario: &Scenario, times: &[f64]) -> Result<Vec<PacketState>, CliError> {
    if times.is_empty() {
        return Ok(Vec::new());
    }
    let prepend = times[0] > 0.0;
    let mut padded = Vec::with_capacity(times.len() + 1);
    if prepend {
        padded.push(0.0);
    }
    padded.extend_from_slice(times);
    let record = integrate_trajectory(
        &scenario.initial,
        &scenario.potential,
        &scenario.params,
        &padded,
        DEFAULT_ODE_TOL,
    )
    .map_err(CliError::runtime)?;
    let mut states = record.states;
    if prepend {
        states.remove(0);
    }
    Ok(states)
}

/// The packet state at t = 0 for the scenario's initial conditions.
pub(crate) fn initial_state(scenario: &Scenario) -> PacketState {
    PacketState::initial(&scenario.initial, &scenario.params)
}

/// The variant name as it appears in config files and reports.
pub(crate) fn variant_name(scenario: &Scenario) -> &'static str {
    match scenario.variant {
        crate::config::VariantSpec::Paper => "paper",
        crate::config::VariantSpec::Corrected => "corrected",
    }
}
