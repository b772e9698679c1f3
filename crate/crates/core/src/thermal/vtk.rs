use std::io::Write;

use super::VoxelGrid;
use crate::error::{Error, Result};

/// Legacy-ASCII VTK rectilinear grid with per-voxel temperature (K),
/// material id and conductivity. Coordinates in mm.
pub fn write_vtk<W: Write>(grid: &VoxelGrid, temperature_k: &[f64], mut out: W) -> Result<()> {
    if temperature_k.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} temperatures for {} voxels", temperature_k.len(), grid.len())));
    }
    let (nx, ny, nz) = grid.dims();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "wallsim unit-cell temperature")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET RECTILINEAR_GRID")?;
    writeln!(out, "DIMENSIONS {} {} {}", nx + 1, ny + 1, nz + 1)?;
    for (axis, edges) in [("X", grid.x_edges_mm()), ("Y", grid.y_edges_mm()), ("Z", grid.z_edges_mm())] {
        writeln!(out, "{axis}_COORDINATES {} double", edges.len())?;
        for e in edges {
            writeln!(out, "{e:.6}")?;
        }
    }
    // VTK cell order is x fastest; the grid stores z fastest.
    let vtk_order = || (0..nz).flat_map(move |k| (0..ny).flat_map(move |j| (0..nx).map(move |i| (i, j, k))));
    writeln!(out, "CELL_DATA {}", grid.len())?;
    writeln!(out, "SCALARS temperature_K double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for (i, j, k) in vtk_order() {
        writeln!(out, "{:.6}", temperature_k[grid.index(i, j, k)])?;
    }
    writeln!(out, "SCALARS material_id int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for (i, j, k) in vtk_order() {
        writeln!(out, "{}", grid.material_id(i, j, k))?;
    }
    writeln!(out, "SCALARS conductivity double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for (i, j, k) in vtk_order() {
        writeln!(out, "{:.6}", grid.conductivity_at(i, j, k))?;
    }
    Ok(())
}
