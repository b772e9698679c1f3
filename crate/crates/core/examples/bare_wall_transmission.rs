//! Plane-wave transmission through the reference concrete / rock wool /
//! concrete wall for both linear polarizations and circular polarization.

use wallsim::layered_em::{cp_transmission, tmm_coefficients, Incidence, LayerStack, Polarization};
use wallsim::materials::builtin_database;
use wallsim::units::amplitude_db;

fn main() -> wallsim::Result<()> {
    let db = builtin_database();
    let wall = LayerStack::load_bearing_wall(&db)?;
    println!("{:>6} {:>6} {:>9} {:>9} {:>9} {:>9}", "f_GHz", "theta", "TE_dB", "TM_dB", "co_dB", "cross_dB");
    // At normal incidence TE and TM coincide and there is no cross-polar term.
    let db = |x: f64| if x < 1e-12 { "-".to_owned() } else { format!("{:.2}", amplitude_db(x)) };
    for f in [1.0, 2.0, 3.5, 5.0, 8.0] {
        for theta in [0.0, 30.0, 60.0] {
            let te = tmm_coefficients(
                &wall,
                &Incidence { frequency_ghz: f, theta_deg: theta, polarization: Polarization::TE },
            )?;
            let tm = tmm_coefficients(
                &wall,
                &Incidence { frequency_ghz: f, theta_deg: theta, polarization: Polarization::TM },
            )?;
            let cp = cp_transmission(&wall, f, theta)?;
            println!(
                "{f:>6.1} {theta:>6.0} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                amplitude_db(te.t.norm()),
                amplitude_db(tm.t.norm()),
                amplitude_db(cp.co.norm()),
                db(cp.cross.norm()),
            );
        }
    }
    Ok(())
}
