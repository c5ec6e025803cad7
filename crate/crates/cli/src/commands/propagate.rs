//! `propagate`: apply the kernel to the initial packet and compare the
//! result against the closed-form packet at the same time.
//!
//! The comparison is written to the metadata rather than asserted: at ν = 0
//! the two agree to quadrature accuracy, while at ν > 0 the kernel
//! composition differs from the single closed-form packet by a friction
//! phase-mixing term of order ν (see the README), and this command is the
//! tool for measuring that gap.

use serde_json::json;

use schpack::packet::evaluate_packet;
use schpack::propagator::{kernel as build_kernel, propagate};

use crate::config::Scenario;
use crate::output::{json_doc, write_atomic, CsvDoc};
use crate::CliError;

pub fn run(scenario: &Scenario) -> Result<(), CliError> {
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

    let psi0 = evaluate_packet(&super::initial_state(scenario), grid, params)
        .map_err(CliError::runtime)?;
    let psi_t = propagate(&matrix, &psi0).map_err(CliError::runtime)?;

    // Closed-form reference at the same time, for the metadata comparison.
    let states = super::states_at(scenario, &[spec.t])?;
    let reference = evaluate_packet(&states[0], grid, params).map_err(CliError::runtime)?;
    let mut err2 = 0.0;
    let mut ref2 = 0.0;
    for i in 0..grid.n {
        let w = grid.weight(i);
        err2 += w * (psi_t.values[i] - reference.values[i]).norm_sqr();
        ref2 += w * reference.values[i].norm_sqr();
    }
    let rel_l2 = (err2 / ref2).sqrt();

    let mut doc = CsvDoc::new(&["x", "re_psi", "im_psi", "rho"]);
    for i in 0..grid.n {
        let v = psi_t.values[i];
        doc.row(&[grid.point(i), v.re, v.im, v.norm_sqr()]);
    }
    let path = write_atomic(&scenario.out_dir, "propagate.csv", &doc.finish())?;
    println!("wrote {}", path.display());

    let meta = json!({
        "variant": super::variant_name(scenario),
        "t": spec.t,
        "n_v": matrix.quad.n_v,
        "v_min": matrix.quad.v_min,
        "v_max": matrix.quad.v_max,
        "edge_envelope_ratio": matrix.edge_envelope_ratio,
        "relative_l2_vs_closed_form": rel_l2,
    });
    let path = write_atomic(&scenario.out_dir, "propagate_meta.json", &json_doc(&meta)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
