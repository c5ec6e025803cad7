//! `kernel`: build the velocity-integral time-evolution kernel on the grid
//! and write the matrix plus quadrature metadata.

use serde_json::json;

use schpack::propagator::kernel as build_kernel;

use crate::config::Scenario;
use crate::output::{json_doc, write_atomic, CsvDoc};
use crate::CliError;

pub fn run(scenario: &Scenario) -> Result<(), CliError> {
    let spec = scenario.kernel_spec()?;
    let grid = &scenario.grid;
    let quad = scenario.velocity_quadrature(grid, grid)?;
    let matrix = build_kernel(
        spec.t,
        grid,
        grid,
        &quad,
        &scenario.initial,
        &scenario.potential,
        &scenario.params,
    )
    .map_err(CliError::runtime)?;

    let mut doc = CsvDoc::new(&["x", "x0", "re_K", "im_K"]);
    for ix in 0..grid.n {
        let x = grid.point(ix);
        for i0 in 0..grid.n {
            let v = matrix.value(ix, i0);
            doc.row(&[x, grid.point(i0), v.re, v.im]);
        }
    }
    let path = write_atomic(&scenario.out_dir, "kernel.csv", &doc.finish())?;
    println!("wrote {}", path.display());

    let meta = json!({
        "variant": super::variant_name(scenario),
        "t": matrix.t,
        "n_x": grid.n,
        "n_x0": grid.n,
        "n_v": matrix.quad.n_v,
        "rule": match matrix.quad.rule {
            schpack::QuadratureRule::Trapezoid => "trapezoid",
            schpack::QuadratureRule::GaussLegendre => "gauss-legendre",
        },
        "v_min": matrix.quad.v_min,
        "v_max": matrix.quad.v_max,
        "edge_envelope_ratio": matrix.edge_envelope_ratio,
        "trajectories": matrix.trajectories,
    });
    let path = write_atomic(&scenario.out_dir, "kernel_meta.json", &json_doc(&meta)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
