//! Cross-check the transfer-matrix spectrum against a 1-D FDTD run.
//!
//! Pass a band on the command line (`cargo run --release --example
//! fdtd_cross_check -- 1 8`); the default 2–3 GHz keeps the run short.

use wallsim::fdtd::compare_with_tmm;
use wallsim::layered_em::LayerStack;
use wallsim::materials::builtin_database;

fn main() -> wallsim::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (f0, f1) = match args[..] {
        [a, b] => (a, b),
        _ => (2.0, 3.0),
    };
    let wall = LayerStack::load_bearing_wall(&builtin_database())?;
    let rows = compare_with_tmm(&wall, f0, f1, 0.1)?;
    println!("{:>8} {:>9} {:>9} {:>8}", "f_GHz", "TMM_dB", "FDTD_dB", "delta");
    for r in rows.iter().step_by(3) {
        println!("{:>8.3} {:>9.3} {:>9.3} {:>8.3}", r.frequency_ghz, r.tmm_db, r.fdtd_db, r.delta_db());
    }
    let worst = rows.iter().map(|r| r.delta_db().abs()).fold(0.0, f64::max);
    println!("{} points, max |delta| = {worst:.3} dB", rows.len());
    Ok(())
}
