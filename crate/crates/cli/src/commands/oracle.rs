//! `oracle`: evolve the full nonlinear equation on the periodic grid with
//! the split-step solver and tabulate its moments against the moment-ODE
//! prediction — the library's central cross-validation as a command.

use serde_json::json;

use schpack::oracle::{evolve, periodized_packet};

use crate::config::Scenario;
use crate::output::{json_doc, write_atomic, CsvDoc};
use crate::CliError;

pub fn run(scenario: &Scenario) -> Result<(), CliError> {
    let config = scenario.oracle_config()?;
    if scenario.times.is_empty() {
        return Err(CliError::config("the oracle needs a non-empty time list"));
    }
    if scenario.times[0] != 0.0 {
        return Err(CliError::config("oracle times must start at 0"));
    }

    let params = &scenario.params;
    let psi0 = periodized_packet(&super::initial_state(scenario), &scenario.grid, params)
        .map_err(CliError::runtime)?;
    let run = evolve(
        &psi0,
        &scenario.times,
        &scenario.potential,
        params,
        &config,
    )
    .map_err(CliError::runtime)?;
    let states = super::states_at(scenario, &scenario.times)?;

    let mut doc = CsvDoc::new(&[
        "t",
        "norm",
        "mean_x",
        "variance",
        "log_mean",
        "q_model",
        "a_model",
        "delta_mean",
        "delta_width",
    ]);
    let mut worst_mean = 0.0f64;
    let mut worst_width = 0.0f64;
    let mut worst_norm = 0.0f64;
    for (m, s) in run.moments.iter().zip(&states) {
        let delta_mean = (m.mean - s.q).abs();
        let delta_width = (m.variance.sqrt() - s.a).abs();
        worst_mean = worst_mean.max(delta_mean);
        worst_width = worst_width.max(delta_width);
        worst_norm = worst_norm.max((m.norm - 1.0).abs());
        doc.row(&[
            s.t,
            m.norm,
            m.mean,
            m.variance,
            m.log_mean,
            s.q,
            s.a,
            delta_mean,
            delta_width,
        ]);
    }
    let path = write_atomic(&scenario.out_dir, "oracle.csv", &doc.finish())?;
    println!("wrote {}", path.display());

    let meta = json!({
        "variant": super::variant_name(scenario),
        "dt": scenario.oracle.dt,
        "grid": {
            "x_min": scenario.grid.x_min,
            "x_max": scenario.grid.x_max,
            "n": scenario.grid.n,
        },
        "worst_delta_mean": worst_mean,
        "worst_delta_width": worst_width,
        "worst_norm_drift": worst_norm,
    });
    let path = write_atomic(&scenario.out_dir, "oracle_meta.json", &json_doc(&meta)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
