//! Describe a different wall in a JSON scenario, with a custom material,
//! and evaluate it.

use wallsim::antenna_link::{link_spectrum, Combination};
use wallsim::layered_em::Polarization;
use wallsim::materials::builtin_database;
use wallsim::scenario::Scenario;
use wallsim::thermal::u_value_analytical;

const SCENARIO: &str = r#"{
  "materials": [
    {"name": "aerated_concrete", "electrical": {"fixed": {"eps_real": 2.2, "eps_imag": 0.1}}, "thermal_conductivity": 0.12}
  ],
  "wall": [
    {"material": "aerated_concrete", "thickness_mm": 300},
    {"material": "rockwool", "thickness_mm": 100}
  ],
  "cell": {"size_mm": 120}
}"#;

fn main() -> wallsim::Result<()> {
    let scenario = Scenario::from_json(SCENARIO)?;
    let r = scenario.resolve(&builtin_database())?;
    println!("U (layers only) = {:.3} W/(m²·K)", u_value_analytical(&r.stack, &scenario.boundary)?.u);
    for p in link_spectrum(&r.cell, &[2.0, 3.5, 5.0, 8.0], 0.0, Polarization::RHCP, Combination::Incoherent)? {
        println!("{:.1} GHz: wall {:.1} dB, with antennas {:.1} dB", p.frequency_ghz, p.wall_db, p.combined_db);
    }
    Ok(())
}
