//! Trade the thermal bridge of denser antenna grids against link gain and
//! pick a separation under a U-value limit.

use wallsim::antenna_link::UnitCell;
use wallsim::design_sweep::{run_sweep, SweepConfig};
use wallsim::layered_em::LayerStack;
use wallsim::materials::builtin_database;

fn main() -> wallsim::Result<()> {
    let db = builtin_database();
    let template = UnitCell::with_default_system(LayerStack::load_bearing_wall(&db)?, 150.0);
    let cfg = SweepConfig { separations_mm: vec![70.0, 80.0, 90.0, 100.0, 150.0, 200.0], ..Default::default() };
    let result = run_sweep(&cfg, &template, &db)?;
    println!("bare wall U = {:.4}", result.bare_u);
    for r in &result.rows {
        println!(
            "{:>5} mm  U = {:.4}  {:<10} mean improvement {:>5.2} dB",
            r.separation_mm,
            r.thermal.u,
            if r.feasible { "feasible" } else { "too leaky" },
            r.mean_improvement_db
        );
    }
    println!("{}", result.rationale);
    Ok(())
}
