//! Thermal transmittance of walls.
//!
//! Two routes: the layered ISO 6946 sum of resistances, and a 3-D
//! finite-volume conduction solve of a unit cell that resolves the cable
//! thermal bridge. The finite-volume grid puts the outdoor face at `z = 0`,
//! matching the layer order of [`LayerStack`](crate::layered_em::LayerStack).

mod solver;
mod voxel;
mod vtk;

pub use solver::{solve_steady_state, solve_temperature, ThermalSolution, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
pub use voxel::{voxelize_unit_cell, VoxelGrid, VoxelOptions};
pub use vtk::write_vtk;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layered_em::LayerStack;
use crate::units::mm_to_m;

/// Surface resistances (m²·K/W) and ambient temperatures (K) on both faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalBoundary {
    /// Indoor surface resistance.
    pub r_si: f64,
    /// Outdoor surface resistance.
    pub r_se: f64,
    pub t_si_air: f64,
    pub t_se_air: f64,
}

impl Default for ThermalBoundary {
    fn default() -> Self {
        Self { r_si: 0.13, r_se: 0.04, t_si_air: 293.0, t_se_air: 271.0 }
    }
}

impl ThermalBoundary {
    /// Surface resistances may be zero (prescribed surface temperature).
    pub fn validate(&self) -> Result<()> {
        if !(self.r_si >= 0.0 && self.r_se >= 0.0) || !self.r_si.is_finite() || !self.r_se.is_finite() {
            return Err(Error::invalid("surface resistances must be finite and >= 0"));
        }
        if !(self.t_si_air.is_finite() && self.t_se_air.is_finite()) || self.t_si_air == self.t_se_air {
            return Err(Error::invalid("indoor and outdoor air temperatures must be finite and differ"));
        }
        Ok(())
    }

    pub fn delta_t(&self) -> f64 {
        self.t_si_air - self.t_se_air
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UValueResult {
    /// W/(m²·K).
    pub u: f64,
    /// Heat flow through the indoor face, W (per m² for the layered model).
    pub heat_flow_w: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Relative residual norm of the linear solve.
    pub residual: f64,
    /// `|Q_in − Q_out| / |Q_in|`.
    pub balance_error: f64,
}

/// Sum of layer resistances `Σ d/λ`, m²·K/W.
pub fn layer_resistance(stack: &LayerStack) -> Result<f64> {
    stack
        .layers()
        .iter()
        .map(|l| {
            let lambda = l.material.thermal_conductivity;
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::invalid(format!(
                    "layer `{}` needs a thermal conductivity > 0 (got {lambda})",
                    l.material.name
                )));
            }
            Ok(mm_to_m(l.thickness_mm) / lambda)
        })
        .sum()
}

/// `U = 1 / (R_si + Σ d/λ + R_se)`.
pub fn u_value_analytical(stack: &LayerStack, bc: &ThermalBoundary) -> Result<UValueResult> {
    bc.validate()?;
    let r_total = bc.r_si + layer_resistance(stack)? + bc.r_se;
    let u = 1.0 / r_total;
    Ok(UValueResult {
        u,
        heat_flow_w: u * bc.delta_t().abs(),
        converged: true,
        iterations: 0,
        residual: 0.0,
        balance_error: 0.0,
    })
}
