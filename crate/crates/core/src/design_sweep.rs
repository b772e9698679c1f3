//! Antenna-separation study: thermal bridge penalty versus link improvement.
//!
//! Every separation is an independent square unit cell: its U-value comes
//! from the finite-volume solver, its transmission from the link model. The
//! selected design is the feasible separation with the best mean improvement.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antenna_link::{aperture_transmission, combine_paths, Combination, UnitCell};
use crate::error::{Error, Result};
use crate::layered_em::{tmm_coefficients, Incidence, Polarization};
use crate::materials::MaterialDb;
use crate::thermal::{
    solve_steady_state, u_value_analytical, voxelize_unit_cell, ThermalBoundary, UValueResult, VoxelOptions,
    DEFAULT_MAX_ITER, DEFAULT_TOLERANCE,
};
use crate::units::amplitude_db;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Square cell sides, mm.
    pub separations_mm: Vec<f64>,
    pub frequencies_ghz: Vec<f64>,
    /// W/(m²·K).
    pub u_limit: f64,
    pub combination: Combination,
    pub theta_deg: f64,
    pub polarization: Polarization,
    pub thermal_tolerance: f64,
    pub max_iter: usize,
    pub boundary: ThermalBoundary,
    pub voxel: VoxelOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            separations_mm: (7..=20).map(|s| s as f64 * 10.0).collect(),
            frequencies_ghz: vec![1.5, 3.5, 5.0, 8.0],
            u_limit: 0.17,
            combination: Combination::Incoherent,
            theta_deg: 0.0,
            polarization: Polarization::RHCP,
            thermal_tolerance: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
            boundary: ThermalBoundary::default(),
            voxel: VoxelOptions::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self, template: &UnitCell) -> Result<()> {
        let Some(system) = &template.system else {
            return Err(Error::invalid("sweep template needs an antenna system"));
        };
        if self.separations_mm.is_empty() {
            return Err(Error::invalid("separation list is empty"));
        }
        if self.frequencies_ghz.is_empty() {
            return Err(Error::invalid("frequency list is empty"));
        }
        let footprint = system.antenna.laminate_size_mm.max(system.foam.size_mm);
        if let Some(s) = self.separations_mm.iter().find(|s| !(**s > footprint && s.is_finite())) {
            return Err(Error::invalid(format!("separation {s} mm must exceed the {footprint} mm antenna footprint")));
        }
        if !(self.u_limit > 0.0) {
            return Err(Error::invalid("U limit must be > 0"));
        }
        if !(self.thermal_tolerance > 0.0) {
            return Err(Error::invalid("thermal tolerance must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub frequency_ghz: f64,
    pub bare_db: f64,
    pub combined_db: f64,
    pub improvement_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationResult {
    pub separation_mm: f64,
    pub thermal: UValueResult,
    pub feasible: bool,
    pub points: Vec<SweepPoint>,
    pub mean_improvement_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// In the order of `SweepConfig::separations_mm`.
    pub rows: Vec<SeparationResult>,
    pub u_limit: f64,
    /// U-value of the wall without antennas (layered model).
    pub bare_u: f64,
    pub selected_mm: Option<f64>,
    pub rationale: String,
    pub diagnostics: Vec<String>,
}

impl SweepResult {
    /// One row per separation and frequency:
    /// `separation_mm,U,feasible,f_GHz,t_dB,improvement_dB`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("separation_mm,U,feasible,f_GHz,t_dB,improvement_dB\n");
        for r in &self.rows {
            for p in &r.points {
                let _ = writeln!(
                    out,
                    "{:.3},{:.6},{},{:.6},{:.6},{:.6}",
                    r.separation_mm, r.thermal.u, r.feasible, p.frequency_ghz, p.combined_db, p.improvement_db
                );
            }
        }
        out
    }

    pub fn smallest_feasible_mm(&self) -> Option<f64> {
        self.rows.iter().filter(|r| r.feasible).map(|r| r.separation_mm).min_by(f64::total_cmp)
    }
}

fn cell_for(template: &UnitCell, separation_mm: f64) -> UnitCell {
    template.resized(separation_mm)
}

/// Finite-volume U-value of the template resized to `separation_mm`.
pub fn separation_u_value(
    cfg: &SweepConfig,
    template: &UnitCell,
    db: &MaterialDb,
    separation_mm: f64,
) -> Result<UValueResult> {
    let grid = voxelize_unit_cell(&cell_for(template, separation_mm), db, &cfg.voxel)?;
    solve_steady_state(&grid, &cfg.boundary, cfg.thermal_tolerance, cfg.max_iter)
}

fn bare_levels(cfg: &SweepConfig, template: &UnitCell) -> Result<Vec<f64>> {
    cfg.frequencies_ghz
        .iter()
        .map(|&f| {
            let inc = Incidence { frequency_ghz: f, theta_deg: cfg.theta_deg, polarization: cfg.polarization };
            Ok(amplitude_db(tmm_coefficients(&template.stack, &inc)?.t.norm()))
        })
        .collect()
}

fn evaluate(
    cfg: &SweepConfig,
    template: &UnitCell,
    db: &MaterialDb,
    s: f64,
    bare_db: &[f64],
) -> Result<SeparationResult> {
    let cell = cell_for(template, s);
    let thermal = separation_u_value(cfg, template, db, s)?;
    let points = cfg
        .frequencies_ghz
        .iter()
        .zip(bare_db)
        .map(|(&f, &bare)| {
            let inc = Incidence { frequency_ghz: f, theta_deg: cfg.theta_deg, polarization: cfg.polarization };
            let wall = tmm_coefficients(&cell.stack, &inc)?.t;
            let ant = aperture_transmission(&cell, f, cfg.theta_deg)?;
            let combined_db = amplitude_db(combine_paths(wall, ant, cfg.combination));
            Ok(SweepPoint { frequency_ghz: f, bare_db: bare, combined_db, improvement_db: combined_db - bare })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_improvement_db = points.iter().map(|p| p.improvement_db).sum::<f64>() / points.len() as f64;
    Ok(SeparationResult { separation_mm: s, feasible: thermal.u <= cfg.u_limit, thermal, points, mean_improvement_db })
}

/// Evaluate every separation (in parallel) and select the feasible one with
/// the largest mean improvement; ties go to the larger separation.
pub fn run_sweep(cfg: &SweepConfig, template: &UnitCell, db: &MaterialDb) -> Result<SweepResult> {
    cfg.validate(template)?;
    let bare_db = bare_levels(cfg, template)?;
    let bare_u = u_value_analytical(&template.stack, &cfg.boundary)?.u;
    let rows =
        cfg.separations_mm.par_iter().map(|&s| evaluate(cfg, template, db, s, &bare_db)).collect::<Result<Vec<_>>>()?;

    let mut diagnostics = Vec::new();
    for r in rows.iter().filter(|r| !r.thermal.converged) {
        diagnostics.push(format!(
            "thermal solve at {} mm stopped after {} iterations (residual {:.2e})",
            r.separation_mm, r.thermal.iterations, r.thermal.residual
        ));
    }
    if cfg.u_limit < bare_u {
        diagnostics.push(format!("U limit {} is below the bare-wall U-value {bare_u:.4}", cfg.u_limit));
    }

    let mut best: Option<&SeparationResult> = None;
    for r in rows.iter().filter(|r| r.feasible) {
        best = match best {
            Some(b)
                if b.mean_improvement_db > r.mean_improvement_db
                    || (b.mean_improvement_db == r.mean_improvement_db && b.separation_mm >= r.separation_mm) =>
            {
                Some(b)
            }
            _ => Some(r),
        };
    }
    let freqs = cfg.frequencies_ghz.iter().map(|f| format!("{f}")).collect::<Vec<_>>().join("/");
    let rationale = match best {
        Some(b) => format!(
            "{} mm: U = {:.4} W/(m²·K) <= {} and the largest mean improvement ({:.2} dB over {freqs} GHz) among feasible separations. \
             Mutual coupling between neighbouring antenna systems is not modelled, so the ranking of close separations \
             (e.g. 90 vs 100 mm) may differ from full-wave results.",
            b.separation_mm, b.thermal.u, cfg.u_limit, b.mean_improvement_db
        ),
        None => {
            diagnostics.push("no separation satisfies the U limit".to_owned());
            format!("no separation satisfies U <= {} W/(m²·K)", cfg.u_limit)
        }
    };
    let selected_mm = best.map(|b| b.separation_mm);
    Ok(SweepResult { rows, u_limit: cfg.u_limit, bare_u, selected_mm, rationale, diagnostics })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinFeasible {
    /// `None` when no separation satisfies the limit.
    pub separation_mm: Option<f64>,
    pub u: Option<f64>,
    /// Every `(separation, U)` that was solved, in evaluation order.
    pub evaluated: Vec<(f64, f64)>,
}

/// Smallest separation with `U <= u_limit`. Feasibility is monotone in
/// separation, so the sorted list is binary-searched. With `refine_1mm` the
/// gap to the previous (infeasible) entry is then bisected to 1 mm.
pub fn min_feasible_separation(
    cfg: &SweepConfig,
    template: &UnitCell,
    db: &MaterialDb,
    refine_1mm: bool,
) -> Result<MinFeasible> {
    cfg.validate(template)?;
    let list = &cfg.separations_mm;
    if !list.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::invalid("separation list must be sorted ascending"));
    }
    let mut evaluated = Vec::new();
    let mut u_at = |s: f64| -> Result<f64> {
        let u = separation_u_value(cfg, template, db, s)?.u;
        evaluated.push((s, u));
        Ok(u)
    };
    if cfg.u_limit == f64::INFINITY {
        return Ok(MinFeasible { separation_mm: Some(list[0]), u: None, evaluated });
    }

    // Invariant: everything below `lo` is infeasible, `hi` (if < len) is feasible.
    let (mut lo, mut hi) = (0usize, list.len());
    let mut u_hi = None;
    while lo < hi {
        let mid = (lo + hi) / 2;
        let u = u_at(list[mid])?;
        if u <= cfg.u_limit {
            hi = mid;
            u_hi = Some(u);
        } else {
            lo = mid + 1;
        }
    }
    if hi == list.len() {
        return Ok(MinFeasible { separation_mm: None, u: None, evaluated });
    }
    let mut best = list[hi];
    if refine_1mm && hi > 0 {
        let (mut a, mut b) = (list[hi - 1].floor() as i64, best.ceil() as i64);
        while b - a > 1 {
            let m = (a + b) / 2;
            let u = u_at(m as f64)?;
            if u <= cfg.u_limit {
                b = m;
                u_hi = Some(u);
            } else {
                a = m;
            }
        }
        best = b as f64;
    }
    Ok(MinFeasible { separation_mm: Some(best), u: u_hi, evaluated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layered_em::LayerStack;
    use crate::materials::builtin_database;

    fn template() -> UnitCell {
        let db = builtin_database();
        UnitCell::with_default_system(LayerStack::load_bearing_wall(&db).unwrap(), 150.0)
    }

    /// Coarse lateral mesh keeps these unit tests quick.
    fn quick(separations: Vec<f64>) -> SweepConfig {
        SweepConfig {
            separations_mm: separations,
            voxel: VoxelOptions {
                cable_step_mm: 0.4,
                lateral_max_mm: 16.0,
                lateral_growth: 2.0,
                z_refine: 1,
                ..Default::default()
            },
            thermal_tolerance: 1e-6,
            ..Default::default()
        }
    }

    #[test]
    fn config_validation() {
        let db = builtin_database();
        let t = template();
        assert!(run_sweep(&quick(vec![]), &t, &db).is_err());
        assert!(run_sweep(&quick(vec![45.0]), &t, &db).is_err());
        let bare = UnitCell::bare(t.stack.clone(), 150.0);
        assert!(run_sweep(&quick(vec![100.0]), &bare, &db).is_err());
        let unsorted = quick(vec![120.0, 100.0]);
        assert!(min_feasible_separation(&unsorted, &t, &db, false).is_err());
    }

    #[test]
    fn sweep_rows_and_csv() {
        let db = builtin_database();
        let r = run_sweep(&quick(vec![200.0, 90.0]), &template(), &db).unwrap();
        assert_eq!(r.rows[0].separation_mm, 200.0);
        assert!(r.rows[0].thermal.u < r.rows[1].thermal.u);
        assert_eq!(r.selected_mm, Some(90.0));
        assert!(r.rationale.contains("coupling"));
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1 + 2 * 4);
        assert!(csv.starts_with("separation_mm,U,feasible,f_GHz,t_dB,improvement_dB\n200.000,"));
    }

    #[test]
    fn unconstrained_and_infeasible_limits() {
        let db = builtin_database();
        let t = template();
        let cfg = SweepConfig { u_limit: f64::INFINITY, ..quick(vec![80.0, 120.0]) };
        let m = min_feasible_separation(&cfg, &t, &db, false).unwrap();
        assert_eq!(m.separation_mm, Some(80.0));
        let cfg = SweepConfig { u_limit: 0.1, ..quick(vec![120.0, 200.0]) };
        let m = min_feasible_separation(&cfg, &t, &db, false).unwrap();
        assert_eq!(m.separation_mm, None);
        let r = run_sweep(&cfg, &t, &db).unwrap();
        assert_eq!(r.selected_mm, None);
        assert!(r.diagnostics.iter().any(|d| d.contains("bare-wall")));
    }

    #[test]
    fn ties_prefer_larger_separation() {
        let db = builtin_database();
        let cfg = SweepConfig {
            frequencies_ghz: vec![1.0],
            combination: Combination::Incoherent,
            ..quick(vec![100.0, 110.0])
        };
        let mut t = template();
        // Zero realized gain: both cells improve nothing, so they tie.
        t.system.as_mut().unwrap().antenna.gain = crate::antenna_link::GainModel::Constant { dbi: -300.0 };
        let r = run_sweep(&cfg, &t, &db).unwrap();
        assert_eq!(r.rows[0].mean_improvement_db, r.rows[1].mean_improvement_db);
        assert_eq!(r.selected_mm, Some(110.0));
    }
}
