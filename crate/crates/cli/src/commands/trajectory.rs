//! `trajectory`: integrate the packet moment equations and write the five
//! degrees of freedom per output time.

use crate::config::Scenario;
use crate::output::{write_atomic, CsvDoc};
use crate::CliError;

pub fn run(scenario: &Scenario) -> Result<(), CliError> {
    let mut doc = CsvDoc::new(&["t", "q", "qdot", "a", "adot", "S0"]);
    for state in super::states_at(scenario, &scenario.times)? {
        doc.row(&[state.t, state.q, state.qdot, state.a, state.adot, state.s0]);
    }
    let path = write_atomic(&scenario.out_dir, "trajectory.csv", &doc.finish())?;
    println!("wrote {}", path.display());
    Ok(())
}
