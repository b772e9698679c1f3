//! JSON scenario files.
//!
//! Every field is optional; an empty document `{}` describes the reference
//! configuration (70/220/150 mm concrete–rock wool–concrete wall, 150 mm
//! cell with the dual-coax antenna system, ISO surface resistances).
//!
//! ```json
//! {
//!   "materials": [{"name": "wet_concrete", "electrical": {"itu": {"a": 5.84, "b": 0, "c": 0.205, "d": 0.06}}, "thermal_conductivity": 1.6}],
//!   "wall": [{"material": "wet_concrete", "thickness_mm": 70}, {"material": "rockwool", "thickness_mm": 220},
//!            {"material": "wet_concrete", "thickness_mm": 150}],
//!   "cell": {"size_mm": 120},
//!   "sweep": {"separations_mm": [80, 90, 100], "u_limit": 0.17}
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::antenna_link::{AntennaSystem, UnitCell};
use crate::design_sweep::SweepConfig;
use crate::error::{Error, Result};
use crate::inverse::FitConfig;
use crate::layered_em::LayerStack;
use crate::materials::{builtin_database, Material, MaterialDb};
use crate::thermal::{ThermalBoundary, VoxelOptions, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use crate::units::mm_to_m;

/// Environment variable naming a material database that replaces the built-in one.
pub const MATERIALS_ENV: &str = "WALLSIM_MATERIALS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallLayer {
    pub material: String,
    pub thickness_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellSpec {
    /// Square cell side (antenna separation), mm.
    pub size_mm: f64,
    pub system: AntennaSystem,
    /// Set the cable length to the wall depth instead of `system.coax.length_m`.
    pub match_cable_length: bool,
}

impl Default for CellSpec {
    fn default() -> Self {
        Self { size_mm: 150.0, system: AntennaSystem::default(), match_cable_length: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalSettings {
    pub tolerance: f64,
    pub max_iter: usize,
    pub voxel: VoxelOptions,
}

impl Default for ThermalSettings {
    fn default() -> Self {
        Self { tolerance: DEFAULT_TOLERANCE, max_iter: DEFAULT_MAX_ITER, voxel: VoxelOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Added to (or replacing same-named entries of) the material database.
    pub materials: Vec<Material>,
    /// Outdoor layer first.
    pub wall: Vec<WallLayer>,
    pub cell: CellSpec,
    pub boundary: ThermalBoundary,
    pub thermal: ThermalSettings,
    pub sweep: SweepConfig,
    pub fit: FitConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        let wall = [("concrete", 70.0), ("rockwool", 220.0), ("concrete", 150.0)]
            .into_iter()
            .map(|(m, t)| WallLayer { material: m.into(), thickness_mm: t })
            .collect();
        Self {
            materials: Vec::new(),
            wall,
            cell: CellSpec::default(),
            boundary: ThermalBoundary::default(),
            thermal: ThermalSettings::default(),
            sweep: SweepConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

/// A scenario with all material references resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub db: MaterialDb,
    pub stack: LayerStack,
    /// Cell with the antenna system embedded.
    pub cell: UnitCell,
}

impl Resolved {
    pub fn bare_cell(&self) -> UnitCell {
        UnitCell::bare(self.stack.clone(), self.cell.size_x_mm)
    }
}

impl Scenario {
    /// Parse JSON; schema errors name the offending path, e.g. `cell.size_mm`.
    pub fn from_json(json: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(json);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Parse(format!("scenario: {} at `{path}`", e.into_inner()))
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Resolve against `base`, after merging the scenario's own materials.
    pub fn resolve(&self, base: &MaterialDb) -> Result<Resolved> {
        let mut db = base.clone();
        db.merge(MaterialDb::from_materials(self.materials.iter().cloned())?);
        let layers: Vec<(&str, f64)> = self.wall.iter().map(|l| (l.material.as_str(), l.thickness_mm)).collect();
        let stack = LayerStack::from_names(&db, &layers)?;
        let mut system = self.cell.system.clone();
        if self.cell.match_cable_length {
            system.coax.length_m = mm_to_m(stack.total_thickness_mm());
        }
        for name in [
            &system.coax.conductor_material,
            &system.coax.dielectric_material,
            &system.antenna.laminate_material,
            &system.foam.material,
        ] {
            db.get(name)?;
        }
        let cell = UnitCell {
            size_x_mm: self.cell.size_mm,
            size_y_mm: self.cell.size_mm,
            stack: stack.clone(),
            system: Some(system),
        };
        cell.validate()?;
        self.boundary.validate()?;
        Ok(Resolved { db, stack, cell })
    }
}

/// Built-in materials, or the database named by [`MATERIALS_ENV`] if set.
pub fn base_database() -> Result<MaterialDb> {
    match std::env::var_os(MATERIALS_ENV) {
        Some(path) if !path.is_empty() => MaterialDb::load(path),
        _ => Ok(builtin_database()),
    }
}
