//! Through-wall link with and without the embedded back-to-back antennas,
//! for two antenna separations.

use wallsim::antenna_link::{improvement_onset, link_spectrum, Combination, UnitCell};
use wallsim::layered_em::{linear_grid, LayerStack, Polarization};
use wallsim::materials::builtin_database;

fn main() -> wallsim::Result<()> {
    let wall = LayerStack::load_bearing_wall(&builtin_database())?;
    let freqs = linear_grid(1.0, 8.0, 141);
    for sep in [150.0, 90.0] {
        let cell = UnitCell::with_default_system(wall.clone(), sep);
        let pts = link_spectrum(&cell, &freqs, 0.0, Polarization::RHCP, Combination::Incoherent)?;
        println!("separation {sep} mm");
        println!("{:>6} {:>8} {:>10} {:>10} {:>8}", "f_GHz", "wall_dB", "antenna_dB", "combined", "gain_dB");
        for p in pts.iter().step_by(20) {
            println!(
                "{:>6.2} {:>8.2} {:>10.2} {:>10.2} {:>8.2}",
                p.frequency_ghz, p.wall_db, p.antenna_db, p.combined_db, p.improvement_db
            );
        }
        match improvement_onset(&pts) {
            Some(f) => println!("antenna path dominates from {f:.2} GHz\n"),
            None => println!("antenna path never dominates\n"),
        }
    }
    Ok(())
}
