//! Back-to-back antenna path through the wall.
//!
//! The relay is modelled as a power budget: an element of realized gain `G`
//! captures `A_eff = G·λ²/4π` out of the unit-cell area it serves, the
//! dual-coax assembly attenuates the captured power, and the indoor element
//! re-radiates it. The antenna path and the direct through-wall path are then
//! combined incoherently (or bounded coherently).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layered_em::{tmm_coefficients, Incidence, LayerStack, Polarization};
use crate::units::{amplitude_db, db_to_power, free_space_wavelength, ghz_to_hz, mm_to_m, C0, ETA0, MU0};

/// Dual-coax cable assembly. Radii follow the connector geometry: `b` is the
/// outer radius of the shield and is also the radius used in the
/// characteristic-impedance logarithm (this reproduces the 82 Ω line).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoaxSpec {
    /// Centre pin radius `a`, mm.
    pub inner_radius_mm: f64,
    /// Outer radius `b`, mm.
    pub outer_radius_mm: f64,
    pub shield_thickness_mm: f64,
    pub eps_r: f64,
    pub tan_delta: f64,
    /// Conductor resistivity, Ω·m.
    pub resistivity_ohm_m: f64,
    pub mu_r: f64,
    pub length_m: f64,
    /// Coax lines in the assembly (2 for the balanced dual-coax).
    pub count: u32,
    /// Material names used when the cable is voxelised for thermal analysis.
    pub conductor_material: String,
    pub dielectric_material: String,
}

impl Default for CoaxSpec {
    fn default() -> Self {
        Self {
            inner_radius_mm: 0.1435,
            outer_radius_mm: 0.88,
            shield_thickness_mm: 0.2,
            eps_r: 1.75,
            tan_delta: 0.004,
            resistivity_ohm_m: 6.9e-7,
            mu_r: 1.0,
            length_m: 0.44,
            count: 2,
            conductor_material: "stainless_steel".into(),
            dielectric_material: "ptfe".into(),
        }
    }
}

impl CoaxSpec {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.inner_radius_mm, self.outer_radius_mm);
        if !(a > 0.0 && b > a) {
            return Err(Error::invalid(format!("coax radii need b > a > 0 (a = {a}, b = {b})")));
        }
        if !(self.length_m > 0.0) {
            return Err(Error::invalid("coax length must be > 0"));
        }
        if !(self.shield_thickness_mm > 0.0 && self.shield_thickness_mm < b - a) {
            return Err(Error::invalid("shield thickness must be > 0 and leave room for the dielectric"));
        }
        if !(self.eps_r >= 1.0 && self.tan_delta >= 0.0 && self.resistivity_ohm_m >= 0.0 && self.mu_r > 0.0) {
            return Err(Error::invalid("coax needs eps_r >= 1, tan_delta >= 0, resistivity >= 0, mu_r > 0"));
        }
        if self.count == 0 {
            return Err(Error::invalid("coax count must be >= 1"));
        }
        Ok(())
    }

    /// Metal cross-section of one line (pin plus shield annulus), mm².
    pub fn conductor_area_mm2(&self) -> f64 {
        let (a, b, t) = (self.inner_radius_mm, self.outer_radius_mm, self.shield_thickness_mm);
        std::f64::consts::PI * (a * a + b * b - (b - t) * (b - t))
    }

    /// Full cross-section of one line, mm².
    pub fn outer_area_mm2(&self) -> f64 {
        std::f64::consts::PI * self.outer_radius_mm * self.outer_radius_mm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoaxImpedance {
    /// One coax line, Ω.
    pub line_ohm: f64,
    /// Balanced assembly (`count` lines in series), Ω.
    pub assembly_ohm: f64,
}

pub fn coax_impedance(spec: &CoaxSpec) -> Result<CoaxImpedance> {
    spec.validate()?;
    let line =
        ETA0 / (2.0 * std::f64::consts::PI * spec.eps_r.sqrt()) * (spec.outer_radius_mm / spec.inner_radius_mm).ln();
    Ok(CoaxImpedance { line_ohm: line, assembly_ohm: line * spec.count as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoaxLoss {
    pub total_db: f64,
    pub conductor_db: f64,
    pub dielectric_db: f64,
    pub skin_depth_mm: f64,
    /// Skin depth reaches the shield thickness; the surface-resistance model is out of its range.
    pub skin_depth_warning: bool,
}

/// Attenuation over the full cable length. The balanced mode of the
/// dual-coax sees `count` times both the series resistance and the
/// impedance, so its loss in dB equals that of a single line.
pub fn coax_attenuation(spec: &CoaxSpec, f_ghz: f64) -> Result<CoaxLoss> {
    spec.validate()?;
    if !(f_ghz > 0.0) {
        return Err(Error::invalid(format!("frequency {f_ghz} GHz must be > 0")));
    }
    let f = ghz_to_hz(f_ghz);
    let mu = MU0 * spec.mu_r;
    let z0 = coax_impedance(spec)?.line_ohm;
    let (a, b) = (mm_to_m(spec.inner_radius_mm), mm_to_m(spec.outer_radius_mm));
    let rs = (std::f64::consts::PI * f * mu * spec.resistivity_ohm_m).sqrt();
    let r_per_m = rs / (2.0 * std::f64::consts::PI) * (1.0 / a + 1.0 / b);
    let alpha_c = r_per_m / (2.0 * z0);
    let alpha_d = std::f64::consts::PI * f * spec.eps_r.sqrt() / C0 * spec.tan_delta;
    let np_to_db = 20.0 / std::f64::consts::LN_10;
    let skin_depth = if spec.resistivity_ohm_m > 0.0 {
        (spec.resistivity_ohm_m / (std::f64::consts::PI * f * mu)).sqrt()
    } else {
        0.0
    };
    let skin_depth_mm = skin_depth * 1e3;
    Ok(CoaxLoss {
        total_db: np_to_db * (alpha_c + alpha_d) * spec.length_m,
        conductor_db: np_to_db * alpha_c * spec.length_m,
        dielectric_db: np_to_db * alpha_d * spec.length_m,
        skin_depth_mm,
        skin_depth_warning: skin_depth_mm >= spec.shield_thickness_mm,
    })
}

/// Broadside realized gain versus frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainModel {
    Constant {
        dbi: f64,
    },
    /// `(GHz, dBi)` points, linearly interpolated in dB and held flat beyond the ends.
    Table {
        points: Vec<(f64, f64)>,
    },
}

impl GainModel {
    pub fn dbi_at(&self, f_ghz: f64) -> f64 {
        match self {
            GainModel::Constant { dbi } => *dbi,
            GainModel::Table { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if f_ghz <= first.0 {
                    return first.1;
                }
                if f_ghz >= last.0 {
                    return last.1;
                }
                let i = points.partition_point(|p| p.0 <= f_ghz);
                let (f0, g0) = points[i - 1];
                let (f1, g1) = points[i];
                g0 + (g1 - g0) * (f_ghz - f0) / (f1 - f0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            GainModel::Constant { dbi } if dbi.is_finite() => Ok(()),
            GainModel::Constant { .. } => Err(Error::invalid("gain must be finite")),
            GainModel::Table { points } => {
                if points.is_empty() {
                    return Err(Error::invalid("gain table is empty"));
                }
                if !points.iter().all(|p| p.0.is_finite() && p.1.is_finite()) {
                    return Err(Error::invalid("gain table entries must be finite"));
                }
                if !points.windows(2).all(|w| w[1].0 > w[0].0) {
                    return Err(Error::invalid("gain table frequencies must be strictly increasing"));
                }
                Ok(())
            }
        }
    }
}

/// Foam-backed Archimedean spiral element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaSpec {
    pub gain: GainModel,
    /// `G(θ) = G0·cosⁿθ`.
    pub pattern_exponent: f64,
    /// Order of the high-pass roll-off below the spiral's lower band edge
    /// `c / (2π·r_ex)`; 0 keeps the gain model unchanged at low frequency.
    pub low_cutoff_order: u32,
    pub spiral_inner_radius_mm: f64,
    pub spiral_outer_radius_mm: f64,
    pub spiral_turns: u32,
    /// Square laminate side, mm.
    pub laminate_size_mm: f64,
    pub laminate_thickness_mm: f64,
    pub laminate_material: String,
}

impl Default for AntennaSpec {
    fn default() -> Self {
        Self {
            gain: GainModel::Constant { dbi: 4.6 },
            pattern_exponent: 1.0,
            low_cutoff_order: 4,
            spiral_inner_radius_mm: 1.08,
            spiral_outer_radius_mm: 17.4,
            spiral_turns: 6,
            laminate_size_mm: 40.0,
            laminate_thickness_mm: 0.5,
            laminate_material: "laminate".into(),
        }
    }
}

impl AntennaSpec {
    pub fn validate(&self) -> Result<()> {
        self.gain.validate()?;
        if !(self.pattern_exponent >= 0.0) {
            return Err(Error::invalid("pattern exponent must be >= 0"));
        }
        if !(self.spiral_outer_radius_mm > self.spiral_inner_radius_mm && self.spiral_inner_radius_mm >= 0.0) {
            return Err(Error::invalid("spiral radii need r_ex > r_in >= 0"));
        }
        if !(self.laminate_size_mm > 0.0 && self.laminate_thickness_mm > 0.0) {
            return Err(Error::invalid("laminate dimensions must be > 0"));
        }
        Ok(())
    }

    /// Frequency at which the outer spiral turn is one wavelength around.
    pub fn lower_band_edge_ghz(&self) -> f64 {
        C0 / (2.0 * std::f64::consts::PI * mm_to_m(self.spiral_outer_radius_mm)) / 1e9
    }

    /// Linear realized gain at `f_ghz` and `theta_deg` off broadside.
    pub fn realized_gain(&self, f_ghz: f64, theta_deg: f64) -> f64 {
        let mut g = db_to_power(self.gain.dbi_at(f_ghz));
        if self.low_cutoff_order > 0 {
            let x = self.lower_band_edge_ghz() / f_ghz;
            g /= 1.0 + x.powi(2 * self.low_cutoff_order as i32);
        }
        let c = theta_deg.to_radians().cos().max(0.0);
        g * c.powf(self.pattern_exponent)
    }
}

/// Foam block behind each element, recessed into the outer concrete layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoamCavity {
    /// Square side, mm.
    pub size_mm: f64,
    pub thickness_mm: f64,
    pub material: String,
}

impl Default for FoamCavity {
    fn default() -> Self {
        Self { size_mm: 50.0, thickness_mm: 10.0, material: "foam_backing".into() }
    }
}

/// Everything embedded in one unit cell: two elements, their foam and the cable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaSystem {
    pub antenna: AntennaSpec,
    pub coax: CoaxSpec,
    pub foam: FoamCavity,
}

impl AntennaSystem {
    /// Default system with the cable length matched to `stack`.
    pub fn for_stack(stack: &LayerStack) -> Self {
        let mut s = Self::default();
        s.coax.length_m = mm_to_m(stack.total_thickness_mm());
        s
    }
}

/// Lateral period of the wall plus its embedded system, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCell {
    pub size_x_mm: f64,
    pub size_y_mm: f64,
    pub stack: LayerStack,
    pub system: Option<AntennaSystem>,
}

impl UnitCell {
    pub fn bare(stack: LayerStack, size_mm: f64) -> Self {
        Self { size_x_mm: size_mm, size_y_mm: size_mm, stack, system: None }
    }

    /// Square cell with the default antenna system.
    pub fn with_default_system(stack: LayerStack, size_mm: f64) -> Self {
        let system = AntennaSystem::for_stack(&stack);
        Self { size_x_mm: size_mm, size_y_mm: size_mm, stack, system: Some(system) }
    }

    /// Same cell resized to a square of side `size_mm`.
    pub fn resized(&self, size_mm: f64) -> Self {
        Self { size_x_mm: size_mm, size_y_mm: size_mm, ..self.clone() }
    }

    pub fn area_m2(&self) -> f64 {
        mm_to_m(self.size_x_mm) * mm_to_m(self.size_y_mm)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.size_x_mm > 0.0 && self.size_y_mm > 0.0) {
            return Err(Error::Geometry("cell dimensions must be > 0".into()));
        }
        if let Some(sys) = &self.system {
            sys.antenna.validate()?;
            sys.coax.validate()?;
            let footprint = sys.antenna.laminate_size_mm;
            if self.size_x_mm <= footprint || self.size_y_mm <= footprint {
                return Err(Error::Geometry(format!(
                    "cell {}×{} mm must exceed the {footprint} mm antenna footprint",
                    self.size_x_mm, self.size_y_mm
                )));
            }
            let depth_m = mm_to_m(self.stack.total_thickness_mm());
            if (sys.coax.length_m - depth_m).abs() > 1e-9 {
                return Err(Error::Geometry(format!(
                    "coax length {} m must equal the wall depth {depth_m} m",
                    sys.coax.length_m
                )));
            }
        }
        Ok(())
    }
}

/// Power budget of the antenna path at one frequency and angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AperturePath {
    /// `min(A_eff(θ) / (A_cell·cosθ), 1)`.
    pub capture_fraction: f64,
    pub cable_loss_db: f64,
    /// Power transmission through the antenna path.
    pub power: f64,
}

impl AperturePath {
    pub fn amplitude(&self) -> f64 {
        self.power.sqrt()
    }
}

pub fn aperture_path(cell: &UnitCell, f_ghz: f64, theta_deg: f64) -> Result<AperturePath> {
    cell.validate()?;
    if !(0.0..90.0).contains(&theta_deg) {
        return Err(Error::InvalidAngle(theta_deg));
    }
    let Some(sys) = &cell.system else {
        return Ok(AperturePath { capture_fraction: 0.0, cable_loss_db: 0.0, power: 0.0 });
    };
    let lambda = free_space_wavelength(f_ghz);
    let a_eff = sys.antenna.realized_gain(f_ghz, theta_deg) * lambda * lambda / (4.0 * std::f64::consts::PI);
    let projected = cell.area_m2() * theta_deg.to_radians().cos();
    let capture_fraction = (a_eff / projected).min(1.0);
    let cable_loss_db = coax_attenuation(&sys.coax, f_ghz)?.total_db;
    Ok(AperturePath { capture_fraction, cable_loss_db, power: capture_fraction * db_to_power(-cable_loss_db) })
}

/// Amplitude transmission through the antenna path (0 for a cell without antennas).
pub fn aperture_transmission(cell: &UnitCell, f_ghz: f64, theta_deg: f64) -> Result<f64> {
    Ok(aperture_path(cell, f_ghz, theta_deg)?.amplitude())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    #[default]
    Incoherent,
    CoherentBest,
    CoherentWorst,
}

impl std::str::FromStr for Combination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "incoherent" => Ok(Combination::Incoherent),
            "coherent_best" | "coherent-best" => Ok(Combination::CoherentBest),
            "coherent_worst" | "coherent-worst" => Ok(Combination::CoherentWorst),
            _ => Err(Error::Parse(format!("unknown combination mode `{s}`"))),
        }
    }
}

/// Combine the through-wall and antenna paths into one amplitude.
/// Both magnitudes are expected in [0, 1].
pub fn combine_paths(t_wall: Complex64, t_ant: f64, mode: Combination) -> f64 {
    let w = t_wall.norm();
    match mode {
        Combination::Incoherent => (w * w + t_ant * t_ant).sqrt(),
        Combination::CoherentBest => w + t_ant,
        Combination::CoherentWorst => (w - t_ant).abs(),
    }
}

/// Wall, antenna and combined levels at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPoint {
    pub frequency_ghz: f64,
    pub wall_db: f64,
    pub antenna_db: f64,
    pub combined_db: f64,
    pub improvement_db: f64,
}

/// Evaluate both paths of `cell` over `freqs_ghz`.
pub fn link_spectrum(
    cell: &UnitCell,
    freqs_ghz: &[f64],
    theta_deg: f64,
    polarization: Polarization,
    mode: Combination,
) -> Result<Vec<LinkPoint>> {
    freqs_ghz
        .iter()
        .map(|&f| {
            let wall = tmm_coefficients(&cell.stack, &Incidence { frequency_ghz: f, theta_deg, polarization })?.t;
            let ant = aperture_transmission(cell, f, theta_deg)?;
            let combined = combine_paths(wall, ant, mode);
            let wall_db = amplitude_db(wall.norm());
            let combined_db = amplitude_db(combined);
            Ok(LinkPoint {
                frequency_ghz: f,
                wall_db,
                antenna_db: amplitude_db(ant),
                combined_db,
                improvement_db: combined_db - wall_db,
            })
        })
        .collect()
}

/// Lowest frequency from which the antenna path stays at or above the
/// through-wall path up to the end of the grid, interpolated linearly on the
/// dB difference. `None` when the antenna path is below the wall at the top.
pub fn improvement_onset(points: &[LinkPoint]) -> Option<f64> {
    let diff = |p: &LinkPoint| p.antenna_db - p.wall_db;
    let last = points.last()?;
    if diff(last) < 0.0 {
        return None;
    }
    match points.iter().rposition(|p| diff(p) < 0.0) {
        None => Some(points[0].frequency_ghz),
        Some(i) => {
            let (p, q) = (&points[i], &points[i + 1]);
            let (d0, d1) = (diff(p), diff(q));
            Some(p.frequency_ghz + (q.frequency_ghz - p.frequency_ghz) * (-d0) / (d1 - d0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::builtin_database;

    fn wall() -> LayerStack {
        LayerStack::load_bearing_wall(&builtin_database()).unwrap()
    }

    #[test]
    fn reference_coax_impedance() {
        let z = coax_impedance(&CoaxSpec::default()).unwrap();
        assert!((z.line_ohm - 82.0).abs() < 0.5, "{}", z.line_ohm);
        assert!((z.assembly_ohm - 164.0).abs() < 1.0);
    }

    #[test]
    fn impedance_analytic_point() {
        let spec = CoaxSpec {
            inner_radius_mm: 1.0,
            outer_radius_mm: std::f64::consts::E,
            shield_thickness_mm: 0.1,
            eps_r: 1.0,
            ..CoaxSpec::default()
        };
        let z = coax_impedance(&spec).unwrap().line_ohm;
        assert!((z - 59.958).abs() < 1e-2, "{z}");
    }

    #[test]
    fn impedance_with_dielectric_radius() {
        let spec = CoaxSpec { outer_radius_mm: 0.68, shield_thickness_mm: 0.1, ..CoaxSpec::default() };
        let z = coax_impedance(&spec).unwrap().line_ohm;
        assert!((z - 70.5).abs() < 0.1, "{z}");
    }

    #[test]
    fn radii_validation() {
        let bad = CoaxSpec { outer_radius_mm: 0.1, ..CoaxSpec::default() };
        assert!(coax_impedance(&bad).is_err());
        let bad = CoaxSpec { length_m: 0.0, ..CoaxSpec::default() };
        assert!(coax_attenuation(&bad, 3.5).is_err());
    }

    #[test]
    fn reference_cable_losses() {
        let spec = CoaxSpec::default();
        let l35 = coax_attenuation(&spec, 3.5).unwrap();
        let l8 = coax_attenuation(&spec, 8.0).unwrap();
        assert!((l35.total_db - 3.7).abs() <= 0.5, "{}", l35.total_db);
        assert!((l8.total_db - 6.3).abs() <= 0.5, "{}", l8.total_db);
        assert!(!l35.skin_depth_warning);
        let ratio = l8.conductor_db / l35.conductor_db;
        assert!((ratio / (8.0f64 / 3.5).sqrt() - 1.0).abs() < 0.01);
    }

    #[test]
    fn lossless_line() {
        let spec = CoaxSpec { tan_delta: 0.0, resistivity_ohm_m: 0.0, ..CoaxSpec::default() };
        assert_eq!(coax_attenuation(&spec, 5.0).unwrap().total_db, 0.0);
    }

    #[test]
    fn thin_shield_warns() {
        let spec = CoaxSpec { resistivity_ohm_m: 1e-3, ..CoaxSpec::default() };
        assert!(coax_attenuation(&spec, 1.0).unwrap().skin_depth_warning);
    }

    #[test]
    fn conductor_area() {
        let a = CoaxSpec::default().conductor_area_mm2();
        assert!((a - 1.045).abs() < 1e-3, "{a}");
    }

    #[test]
    fn gain_table_interpolates() {
        let g = GainModel::Table { points: vec![(2.0, 0.0), (4.0, 4.0), (8.0, 6.0)] };
        assert_eq!(g.dbi_at(1.0), 0.0);
        assert_eq!(g.dbi_at(3.0), 2.0);
        assert_eq!(g.dbi_at(6.0), 5.0);
        assert_eq!(g.dbi_at(9.0), 6.0);
        assert!(GainModel::Table { points: vec![(2.0, 0.0), (2.0, 1.0)] }.validate().is_err());
    }

    #[test]
    fn aperture_at_8_ghz_150_mm() {
        let cell = UnitCell::with_default_system(wall(), 150.0);
        let t = aperture_transmission(&cell, 8.0, 0.0).unwrap();
        assert!((amplitude_db(t) + 24.7).abs() < 0.5, "{}", amplitude_db(t));
    }

    #[test]
    fn capture_saturates() {
        let mut cell = UnitCell::with_default_system(wall(), 45.0);
        cell.system.as_mut().unwrap().antenna.gain = GainModel::Constant { dbi: 30.0 };
        let p = aperture_path(&cell, 3.0, 0.0).unwrap();
        assert_eq!(p.capture_fraction, 1.0);
        assert_eq!(p.power, db_to_power(-p.cable_loss_db));
    }

    #[test]
    fn cell_without_system_has_no_antenna_path() {
        let cell = UnitCell::bare(wall(), 150.0);
        assert_eq!(aperture_transmission(&cell, 5.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn cell_geometry_checks() {
        let cell = UnitCell::with_default_system(wall(), 30.0);
        assert!(cell.validate().is_err());
        let mut cell = UnitCell::with_default_system(wall(), 150.0);
        cell.system.as_mut().unwrap().coax.length_m = 0.5;
        assert!(matches!(cell.validate(), Err(Error::Geometry(_))));
    }

    #[test]
    fn combination_modes() {
        let w = Complex64::new(0.0, 0.3);
        assert_eq!(combine_paths(w, 0.0, Combination::Incoherent), 0.3);
        assert_eq!(combine_paths(Complex64::new(0.0, 0.0), 0.2, Combination::Incoherent), 0.2);
        assert!((combine_paths(w, 0.4, Combination::Incoherent) - 0.5).abs() < 1e-15);
        assert!((combine_paths(w, 0.4, Combination::CoherentBest) - 0.7).abs() < 1e-15);
        assert!((combine_paths(w, 0.4, Combination::CoherentWorst) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn onset_of_150_mm_cell() {
        let cell = UnitCell::with_default_system(wall(), 150.0);
        let freqs = crate::layered_em::linear_grid(1.0, 8.0, 141);
        let pts = link_spectrum(&cell, &freqs, 0.0, Polarization::RHCP, Combination::Incoherent).unwrap();
        let onset = improvement_onset(&pts).unwrap();
        assert!((2.0..=3.5).contains(&onset), "{onset}");
        let at8 = pts.last().unwrap();
        assert!((at8.improvement_db - 17.0).abs() <= 3.0, "{}", at8.improvement_db);
    }

    #[test]
    fn onset_edge_cases() {
        let p =
            |f, w, a| LinkPoint { frequency_ghz: f, wall_db: w, antenna_db: a, combined_db: 0.0, improvement_db: 0.0 };
        assert_eq!(improvement_onset(&[p(1.0, -10.0, -5.0), p(2.0, -10.0, -5.0)]), Some(1.0));
        assert_eq!(improvement_onset(&[p(1.0, -10.0, -5.0), p(2.0, -10.0, -15.0)]), None);
        let on = improvement_onset(&[p(1.0, -10.0, -14.0), p(2.0, -10.0, -6.0)]).unwrap();
        assert!((on - 1.5).abs() < 1e-12);
        assert_eq!(improvement_onset(&[]), None);
    }
}
