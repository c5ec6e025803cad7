//! `packet`: evaluate the closed-form Gaussian packet and its Madelung
//! fields on the grid, one CSV per output time plus a JSON index.

use serde_json::json;

use schpack::packet::{
    convective_velocity, density, evaluate_packet, phase, quantum_potential, quantum_velocity,
};

use crate::config::Scenario;
use crate::output::{fmt_f64, json_doc, write_atomic, CsvDoc};
use crate::CliError;

pub fn run(scenario: &Scenario) -> Result<(), CliError> {
    let grid = &scenario.grid;
    let params = &scenario.params;
    let states = super::states_at(scenario, &scenario.times)?;

    let mut files = Vec::with_capacity(states.len());
    for (k, state) in states.iter().enumerate() {
        let psi = evaluate_packet(state, grid, params).map_err(CliError::runtime)?;
        let rho = density(state, grid).map_err(CliError::runtime)?;
        let s = phase(state, grid, params).map_err(CliError::runtime)?;
        let v_qu = quantum_velocity(state, grid, params).map_err(CliError::runtime)?;
        let theta_qu = convective_velocity(state, grid, params).map_err(CliError::runtime)?;
        let v_bohm = quantum_potential(state, grid, params).map_err(CliError::runtime)?;

        let mut doc = CsvDoc::new(&[
            "x", "re_psi", "im_psi", "rho", "S", "v_qu", "theta_qu", "V_qu",
        ]);
        for i in 0..grid.n {
            doc.row(&[
                grid.point(i),
                psi.values[i].re,
                psi.values[i].im,
                rho.values[i],
                s.values[i],
                v_qu.values[i],
                theta_qu.values[i],
                v_bohm.values[i],
            ]);
        }
        let name = format!("packet_{k:04}.csv");
        let path = write_atomic(&scenario.out_dir, &name, &doc.finish())?;
        println!("wrote {}", path.display());
        files.push(name);
    }

    let index = json!({
        "variant": super::variant_name(scenario),
        "times": states.iter().map(|s| fmt_f64(s.t)).collect::<Vec<_>>(),
        "files": files,
    });
    let path = write_atomic(&scenario.out_dir, "packet_index.json", &json_doc(&index)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
