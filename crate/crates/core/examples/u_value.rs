//! U-value of the bare wall (layered model and finite volumes) and of a
//! unit cell pierced by the antenna system's stainless coax.

use std::time::Instant;

use wallsim::antenna_link::UnitCell;
use wallsim::layered_em::LayerStack;
use wallsim::materials::builtin_database;
use wallsim::thermal::{
    solve_steady_state, u_value_analytical, voxelize_unit_cell, ThermalBoundary, VoxelOptions, DEFAULT_MAX_ITER,
    DEFAULT_TOLERANCE,
};

fn main() -> wallsim::Result<()> {
    let db = builtin_database();
    let wall = LayerStack::load_bearing_wall(&db)?;
    let bc = ThermalBoundary::default();
    println!("layered model:       U = {:.4} W/(m²·K)", u_value_analytical(&wall, &bc)?.u);

    for cell in [UnitCell::bare(wall.clone(), 150.0), UnitCell::with_default_system(wall, 150.0)] {
        let t = Instant::now();
        let grid = voxelize_unit_cell(&cell, &db, &VoxelOptions::default())?;
        let r = solve_steady_state(&grid, &bc, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?;
        let (nx, ny, nz) = grid.dims();
        println!(
            "finite volume, {}: U = {:.4} W/(m²·K)  [{nx}x{ny}x{nz}, {} iterations, {:.1} s]",
            if cell.system.is_some() { "with coax" } else { "bare     " },
            r.u,
            r.iterations,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
