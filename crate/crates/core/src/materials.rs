//! Building-material database and frequency-dependent complex permittivity.
//!
//! Dielectric media follow the ITU-R P.2040 power law
//!
//! ```text
//! eps_r(f) = a·f^b − j·c·f^d / (eps0·ω)
//! ```
//!
//! with `f` in GHz inside the power laws and `ω = 2π·f·1e9` rad/s. The sign
//! convention is `eps = eps' − j·eps''` (time dependence `e^{+jωt}`), so
//! `eps''` is stored non-negative.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{angular_frequency, EPS0};

/// Frequency range (GHz) over which the ITU power-law model is defined.
pub const ITU_VALID_RANGE_GHZ: (f64, f64) = (1.0, 100.0);

/// Shipped material database.
pub const BUILTIN_DATABASE_JSON: &str = include_str!("../data/materials.json");

/// Power-law permittivity coefficients `(a, b, c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPermittivityModel")]
pub struct PermittivityModel {
    /// Real-permittivity scale.
    pub a: f64,
    /// Real-permittivity exponent.
    pub b: f64,
    /// Conductivity scale, S/m at 1 GHz.
    pub c: f64,
    /// Conductivity exponent.
    pub d: f64,
}

#[derive(Deserialize)]
struct RawPermittivityModel {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl TryFrom<RawPermittivityModel> for PermittivityModel {
    type Error = Error;

    fn try_from(raw: RawPermittivityModel) -> Result<Self> {
        PermittivityModel::new(raw.a, raw.b, raw.c, raw.d)
    }
}

impl PermittivityModel {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("permittivity coefficients must be finite"));
        }
        if a <= 0.0 {
            return Err(Error::invalid(format!("permittivity scale a = {a} must be > 0")));
        }
        if c < 0.0 {
            return Err(Error::invalid(format!("conductivity scale c = {c} must be >= 0")));
        }
        Ok(Self { a, b, c, d })
    }

    /// Conductivity in S/m at `f_ghz`.
    pub fn conductivity(&self, f_ghz: f64) -> f64 {
        self.c * f_ghz.powf(self.d)
    }

    /// Complex relative permittivity at `f_ghz` (no validity-range check).
    pub fn at(&self, f_ghz: f64) -> Result<ComplexPermittivity> {
        permittivity_at(self, f_ghz)
    }
}

/// Complex relative permittivity `eps' − j·eps''` at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPermittivity {
    pub eps_real: f64,
    /// Loss part, non-negative.
    pub eps_imag: f64,
    pub frequency_ghz: f64,
}

impl ComplexPermittivity {
    /// As a complex number with the `eps' − j·eps''` sign convention.
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.eps_real, -self.eps_imag)
    }

    /// Equivalent conductivity `eps''·eps0·ω` in S/m.
    pub fn conductivity(self) -> f64 {
        self.eps_imag * EPS0 * angular_frequency(self.frequency_ghz)
    }

    pub fn loss_tangent(self) -> f64 {
        self.eps_imag / self.eps_real
    }
}

/// Evaluate the power-law model at `f_ghz`.
pub fn permittivity_at(model: &PermittivityModel, f_ghz: f64) -> Result<ComplexPermittivity> {
    if !(f_ghz > 0.0 && f_ghz.is_finite()) {
        return Err(Error::invalid(format!("frequency {f_ghz} GHz must be > 0")));
    }
    let eps_real = model.a * f_ghz.powf(model.b);
    let sigma = model.conductivity(f_ghz);
    let eps_imag = sigma / (EPS0 * angular_frequency(f_ghz));
    Ok(ComplexPermittivity { eps_real, eps_imag, frequency_ghz: f_ghz })
}

/// Electrical description of a material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Electrical {
    /// ITU power-law dielectric.
    Itu(PermittivityModel),
    /// Frequency-independent complex permittivity.
    Fixed { eps_real: f64, eps_imag: f64 },
    /// Metallic conductor with resistivity in ohm·m.
    Conductor { resistivity: f64 },
}

impl Electrical {
    /// Fixed permittivity from a relative permittivity and loss tangent.
    pub fn from_loss_tangent(eps_real: f64, tan_delta: f64) -> Self {
        Electrical::Fixed { eps_real, eps_imag: eps_real * tan_delta }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub electrical: Electrical,
    /// Thermal conductivity λ in W/(m·K).
    pub thermal_conductivity: f64,
}

impl Material {
    pub fn new(name: impl Into<String>, electrical: Electrical, thermal_conductivity: f64) -> Result<Self> {
        let m = Self { name: name.into(), description: String::new(), electrical, thermal_conductivity };
        m.validate()?;
        Ok(m)
    }

    /// Vacuum, used for ambient media.
    pub fn vacuum() -> Self {
        Self {
            name: "vacuum".into(),
            description: String::new(),
            electrical: Electrical::Fixed { eps_real: 1.0, eps_imag: 0.0 },
            thermal_conductivity: 0.026,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.thermal_conductivity > 0.0 && self.thermal_conductivity.is_finite()) {
            return Err(Error::invalid(format!(
                "material `{}`: thermal conductivity {} must be > 0",
                self.name, self.thermal_conductivity
            )));
        }
        match self.electrical {
            Electrical::Itu(m) => {
                PermittivityModel::new(m.a, m.b, m.c, m.d)?;
            }
            Electrical::Fixed { eps_real, eps_imag } => {
                if !(eps_real.is_finite() && eps_imag.is_finite() && eps_imag >= 0.0 && eps_real > 0.0) {
                    return Err(Error::invalid(format!(
                        "material `{}`: fixed permittivity needs eps_real > 0, eps_imag >= 0",
                        self.name
                    )));
                }
            }
            Electrical::Conductor { resistivity } => {
                if !(resistivity >= 0.0 && resistivity.is_finite()) {
                    return Err(Error::invalid(format!("material `{}`: resistivity must be >= 0", self.name)));
                }
            }
        }
        Ok(())
    }

    /// Complex permittivity at `f_ghz`. Power-law media are only evaluated
    /// inside [`ITU_VALID_RANGE_GHZ`].
    pub fn permittivity_at(&self, f_ghz: f64) -> Result<ComplexPermittivity> {
        match self.electrical {
            Electrical::Itu(model) => {
                let (lo, hi) = ITU_VALID_RANGE_GHZ;
                if !(lo..=hi).contains(&f_ghz) {
                    return Err(Error::FrequencyOutOfRange { f_ghz, lo, hi });
                }
                permittivity_at(&model, f_ghz)
            }
            Electrical::Fixed { eps_real, eps_imag } => {
                if !(f_ghz > 0.0 && f_ghz.is_finite()) {
                    return Err(Error::invalid(format!("frequency {f_ghz} GHz must be > 0")));
                }
                Ok(ComplexPermittivity { eps_real, eps_imag, frequency_ghz: f_ghz })
            }
            Electrical::Conductor { .. } => Err(Error::NotDielectric { name: self.name.clone() }),
        }
    }

    pub fn is_conductor(&self) -> bool {
        matches!(self.electrical, Electrical::Conductor { .. })
    }
}

#[derive(Serialize, Deserialize)]
struct DatabaseFile {
    materials: Vec<Material>,
}

/// Named collection of materials. Immutable once built; clone to extend.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialDb {
    materials: BTreeMap<String, Material>,
}

impl MaterialDb {
    pub fn from_materials(materials: impl IntoIterator<Item = Material>) -> Result<Self> {
        let mut db = Self::default();
        for m in materials {
            m.validate()?;
            db.materials.insert(m.name.clone(), m);
        }
        Ok(db)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(json);
        let file: DatabaseFile = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Parse(format!("{} at `{}`", e.inner(), e.path())))?;
        Self::from_materials(file.materials)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = DatabaseFile { materials: self.materials.values().cloned().collect() };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Entries of `other` replace same-named entries here.
    pub fn merge(&mut self, other: MaterialDb) {
        self.materials.extend(other.materials);
    }

    pub fn insert(&mut self, material: Material) -> Result<()> {
        material.validate()?;
        self.materials.insert(material.name.clone(), material);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Material> {
        self.materials.get(name).ok_or_else(|| Error::MaterialNotFound(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.materials.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Material> {
        self.materials.values()
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }
}

/// The shipped database.
pub fn builtin_database() -> MaterialDb {
    MaterialDb::from_json(BUILTIN_DATABASE_JSON).expect("shipped material database is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn concrete() -> PermittivityModel {
        PermittivityModel::new(5.24, 0.0, 0.0462, 0.7822).unwrap()
    }

    // Hand oracle: eps'' = 17.975·c·f^d / f.
    fn hand_eps_imag(c: f64, d: f64, f: f64) -> f64 {
        let k = 1.0 / (EPS0 * 2.0 * std::f64::consts::PI * 1e9);
        k * c * f.powf(d) / f
    }

    #[test]
    fn concrete_at_3_5_ghz() {
        let e = permittivity_at(&concrete(), 3.5).unwrap();
        assert_eq!(e.eps_real, 5.24);
        assert!((e.eps_imag - 0.633).abs() < 2e-3, "{}", e.eps_imag);
        assert!((e.eps_imag - hand_eps_imag(0.0462, 0.7822, 3.5)).abs() < 1e-12);
    }

    #[test]
    fn rockwool_at_8_ghz() {
        let m = PermittivityModel::new(1.48, 0.0, 1.1e-3, 1.075).unwrap();
        let e = permittivity_at(&m, 8.0).unwrap();
        assert!((e.eps_real - 1.48).abs() < 1e-15);
        assert!((e.eps_imag - 0.0231).abs() < 1e-4, "{}", e.eps_imag);
    }

    #[test]
    fn zero_exponent_real_part_is_flat() {
        let m = concrete();
        let a = permittivity_at(&m, 1.3).unwrap().eps_real;
        let b = permittivity_at(&m, 77.0).unwrap().eps_real;
        assert_eq!(a, b);
    }

    #[test]
    fn eps_imag_two_routes_agree() {
        for &(c, d) in &[(0.0462, 0.7822), (1.1e-3, 1.075), (0.205, 0.06)] {
            for f in [1.0, 2.5, 3.5, 8.0, 40.0, 100.0] {
                let m = PermittivityModel::new(2.0, 0.0, c, d).unwrap();
                let direct = permittivity_at(&m, f).unwrap().eps_imag;
                let shortcut = 17.98 * c * f.powf(d) / f;
                assert!(((direct - shortcut) / direct).abs() < 5e-4, "{c} {d} {f}");
            }
        }
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(PermittivityModel::new(0.0, 0.0, 0.1, 1.0).is_err());
        assert!(PermittivityModel::new(1.0, 0.0, -0.1, 1.0).is_err());
        assert!(PermittivityModel::new(1.0, f64::NAN, 0.1, 1.0).is_err());
        assert!(permittivity_at(&concrete(), 0.0).is_err());
    }

    #[test]
    fn builtin_lookups() {
        let db = builtin_database();
        assert_eq!(db.get("rockwool").unwrap().thermal_conductivity, 0.035);
        assert_eq!(db.get("stainless_steel").unwrap().thermal_conductivity, 15.0);
        assert_eq!(db.get("copper").unwrap().thermal_conductivity, 400.0);
        assert_eq!(db.get("concrete").unwrap().thermal_conductivity, 1.3);
        assert!(matches!(db.get("unobtainium"), Err(Error::MaterialNotFound(_))));
        for name in ["ptfe", "eps", "laminate", "moist_concrete", "foam_backing"] {
            assert!(db.contains(name), "{name}");
        }
        let ptfe = db.get("ptfe").unwrap().permittivity_at(3.5).unwrap();
        assert!((ptfe.loss_tangent() - 0.004).abs() < 1e-12);
    }

    #[test]
    fn itu_material_range_is_enforced() {
        let db = builtin_database();
        let c = db.get("concrete").unwrap();
        assert!(matches!(c.permittivity_at(0.5), Err(Error::FrequencyOutOfRange { .. })));
        assert!(c.permittivity_at(100.0).is_ok());
        assert!(matches!(db.get("copper").unwrap().permittivity_at(3.0), Err(Error::NotDielectric { .. })));
    }

    #[test]
    fn json_round_trip_is_bit_identical() {
        let db = builtin_database();
        let back = MaterialDb::from_json(&db.to_json().unwrap()).unwrap();
        assert_eq!(db, back);
        for (m, n) in db.iter().zip(back.iter()) {
            if let (Electrical::Itu(x), Electrical::Itu(y)) = (m.electrical, n.electrical) {
                assert_eq!(x.c.to_bits(), y.c.to_bits());
                assert_eq!(x.d.to_bits(), y.d.to_bits());
            }
        }
    }

    #[test]
    fn bad_json_reports_path() {
        let err = MaterialDb::from_json(
            r#"{"materials":[{"name":"x","electrical":{"itu":{"a":-1,"b":0,"c":0,"d":0}},"thermal_conductivity":1}]}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("materials[0]"), "{err}");
    }

    #[test]
    fn merge_overrides() {
        let mut db = builtin_database();
        let user = MaterialDb::from_materials([Material::new(
            "foam_backing",
            Electrical::Fixed { eps_real: 1.05, eps_imag: 0.0 },
            0.03,
        )
        .unwrap()])
        .unwrap();
        db.merge(user);
        assert_eq!(db.get("foam_backing").unwrap().thermal_conductivity, 0.03);
    }
}
