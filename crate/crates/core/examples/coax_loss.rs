//! Impedance and loss of the thin stainless-steel coax that joins the two
//! antennas through the wall.

use wallsim::antenna_link::{coax_attenuation, coax_impedance, CoaxSpec};

fn main() -> wallsim::Result<()> {
    let coax = CoaxSpec::default();
    let z = coax_impedance(&coax)?;
    println!("Z0 = {:.1} ohm per line, {:.1} ohm for the balanced pair", z.line_ohm, z.assembly_ohm);
    println!("{:>6} {:>9} {:>11} {:>12} {:>10}", "f_GHz", "total_dB", "conductor", "dielectric", "skin_um");
    for f in [1.0, 2.0, 3.5, 5.0, 8.0] {
        let l = coax_attenuation(&coax, f)?;
        println!(
            "{f:>6.1} {:>9.2} {:>11.2} {:>12.2} {:>10.2}",
            l.total_db,
            l.conductor_db,
            l.dielectric_db,
            l.skin_depth_mm * 1e3
        );
    }
    Ok(())
}
