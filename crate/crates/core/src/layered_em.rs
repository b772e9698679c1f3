//! Plane-wave transmission and reflection through planar lossy layer stacks.
//!
//! Fields are propagated with 2×2 characteristic (transfer) matrices acting on
//! the transverse field pair `(E_t, η0·H_t)`. Time dependence is `e^{+jωt}`,
//! permittivities are `eps' − j·eps''`, and each layer's normal wavenumber is
//! taken on the branch with `Im(k_z) <= 0` so waves decay in the direction
//! they travel. Coefficients relate transverse electric field amplitudes of
//! the transmitted/reflected waves to the incident wave at the stack faces.
//!
//! Circular polarisation uses the linear basis: for either handedness the
//! co-polar amplitude is `(t_TE + t_TM)/2` and the cross-polar amplitude is
//! `(t_TE − t_TM)/2`. Reflection for circular inputs is reported the same way,
//! `(r_TE + r_TM)/2`, in that linear basis.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::{Material, MaterialDb};
use crate::units::{amplitude_db, free_space_wavenumber, mm_to_m};

/// Below this transmitted amplitude (−300 dB) the transfer-matrix product is
/// no longer trusted and the recursive scattering cascade is used instead.
const TMM_UNDERFLOW: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub material: Material,
    pub thickness_mm: f64,
}

/// Ordered slabs between two ambient half-spaces. The first layer faces the
/// incident (outdoor) side.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    layers: Vec<Layer>,
    ambient_in: Material,
    ambient_out: Material,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        Self::with_ambients(layers, Material::vacuum(), Material::vacuum())
    }

    pub fn with_ambients(layers: Vec<Layer>, ambient_in: Material, ambient_out: Material) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("layer stack must contain at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if !(l.thickness_mm > 0.0 && l.thickness_mm.is_finite()) {
                return Err(Error::invalid(format!(
                    "layer {i} (`{}`) thickness {} mm must be > 0",
                    l.material.name, l.thickness_mm
                )));
            }
            l.material.validate()?;
        }
        Ok(Self { layers, ambient_in, ambient_out })
    }

    /// Build from `(material name, thickness mm)` pairs.
    pub fn from_names(db: &MaterialDb, layers: &[(&str, f64)]) -> Result<Self> {
        let layers = layers
            .iter()
            .map(|&(name, t)| Ok(Layer { material: db.get(name)?.clone(), thickness_mm: t }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    /// 70 mm concrete / 220 mm rock wool / 150 mm concrete sandwich panel.
    pub fn load_bearing_wall(db: &MaterialDb) -> Result<Self> {
        Self::from_names(db, &[("concrete", 70.0), ("rockwool", 220.0), ("concrete", 150.0)])
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn ambient_in(&self) -> &Material {
        &self.ambient_in
    }

    pub fn ambient_out(&self) -> &Material {
        &self.ambient_out
    }

    pub fn total_thickness_mm(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness_mm).sum()
    }

    /// Same stack traversed from the other side.
    pub fn reversed(&self) -> Self {
        Self {
            layers: self.layers.iter().rev().cloned().collect(),
            ambient_in: self.ambient_out.clone(),
            ambient_out: self.ambient_in.clone(),
        }
    }

    /// Copy with layer `index` split into two halves of the same material.
    pub fn split_layer(&self, index: usize) -> Result<Self> {
        let layer = self.layers.get(index).ok_or_else(|| Error::invalid(format!("no layer {index}")))?.clone();
        let half = Layer { thickness_mm: layer.thickness_mm / 2.0, ..layer };
        let mut layers = self.layers.clone();
        layers.splice(index..=index, [half.clone(), half]);
        Self::with_ambients(layers, self.ambient_in.clone(), self.ambient_out.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    TE,
    TM,
    RHCP,
    LHCP,
}

impl Polarization {
    pub fn is_circular(self) -> bool {
        matches!(self, Polarization::RHCP | Polarization::LHCP)
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Polarization::TE => "TE",
            Polarization::TM => "TM",
            Polarization::RHCP => "RHCP",
            Polarization::LHCP => "LHCP",
        };
        f.write_str(s)
    }
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TE" => Ok(Polarization::TE),
            "TM" => Ok(Polarization::TM),
            "RHCP" => Ok(Polarization::RHCP),
            "LHCP" => Ok(Polarization::LHCP),
            _ => Err(Error::Parse(format!("unknown polarization `{s}` (TE, TM, RHCP, LHCP)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incidence {
    pub frequency_ghz: f64,
    /// Angle from the surface normal, degrees.
    pub theta_deg: f64,
    pub polarization: Polarization,
}

impl Incidence {
    pub fn normal(frequency_ghz: f64, polarization: Polarization) -> Self {
        Self { frequency_ghz, theta_deg: 0.0, polarization }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..90.0).contains(&self.theta_deg) {
            return Err(Error::InvalidAngle(self.theta_deg));
        }
        if !(self.frequency_ghz > 0.0 && self.frequency_ghz.is_finite()) {
            return Err(Error::invalid(format!("frequency {} GHz must be > 0", self.frequency_ghz)));
        }
        Ok(())
    }
}

/// Transmission and reflection amplitude coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub t: Complex64,
    pub r: Complex64,
}

/// Co- and cross-polar transmission for a circularly polarised incident wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpTransmission {
    pub co: Complex64,
    pub cross: Complex64,
}

/// Which algebraic route evaluates the stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Product of characteristic matrices, falling back to the cascade on underflow.
    TransferMatrix,
    /// Recursive interface/propagation scattering cascade.
    Cascade,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Linear {
    TE,
    TM,
}

struct Medium {
    /// Normal wavenumber normalised by k0.
    kz: Complex64,
    /// Transverse wave admittance normalised by 1/η0.
    admittance: Complex64,
}

fn medium(eps: Complex64, sin2: Complex64, pol: Linear) -> Medium {
    let mut kz = (eps - sin2).sqrt();
    if kz.im > 0.0 {
        kz = -kz;
    }
    let admittance = match pol {
        Linear::TE => kz,
        Linear::TM => eps / kz,
    };
    Medium { kz, admittance }
}

struct Resolved {
    k0: f64,
    sin2: Complex64,
    eps_in: Complex64,
    eps_out: Complex64,
    /// (eps, thickness m)
    layers: Vec<(Complex64, f64)>,
}

fn resolve(stack: &LayerStack, f_ghz: f64, theta_deg: f64) -> Result<Resolved> {
    let eps_in = stack.ambient_in.permittivity_at(f_ghz)?.to_complex();
    let eps_out = stack.ambient_out.permittivity_at(f_ghz)?.to_complex();
    let layers = stack
        .layers
        .iter()
        .map(|l| Ok((l.material.permittivity_at(f_ghz)?.to_complex(), mm_to_m(l.thickness_mm))))
        .collect::<Result<Vec<_>>>()?;
    let s = theta_deg.to_radians().sin();
    Ok(Resolved { k0: free_space_wavenumber(f_ghz), sin2: eps_in * s * s, eps_in, eps_out, layers })
}

fn transfer_matrix(res: &Resolved, pol: Linear) -> Coefficients {
    let one = Complex64::new(1.0, 0.0);
    let j = Complex64::i();
    let (mut a, mut b, mut c, mut d) = (one, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), one);
    for &(eps, thick) in &res.layers {
        let m = medium(eps, res.sin2, pol);
        let delta = m.kz * res.k0 * thick;
        let (cos, sin) = (delta.cos(), delta.sin());
        let (la, lb, lc, ld) = (cos, j * sin / m.admittance, j * m.admittance * sin, cos);
        let na = a * la + b * lc;
        let nb = a * lb + b * ld;
        let nc = c * la + d * lc;
        let nd = c * lb + d * ld;
        a = na;
        b = nb;
        c = nc;
        d = nd;
    }
    let yi = medium(res.eps_in, res.sin2, pol).admittance;
    let yo = medium(res.eps_out, res.sin2, pol).admittance;
    let den = yi * a + yi * yo * b + c + d * yo;
    Coefficients { t: 2.0 * yi / den, r: (yi * a + yi * yo * b - c - d * yo) / den }
}

fn cascade(res: &Resolved, pol: Linear) -> Coefficients {
    let mut media = Vec::with_capacity(res.layers.len() + 2);
    media.push((medium(res.eps_in, res.sin2, pol), 0.0));
    for &(eps, thick) in &res.layers {
        media.push((medium(eps, res.sin2, pol), thick));
    }
    media.push((medium(res.eps_out, res.sin2, pol), 0.0));

    let fresnel = |yi: Complex64, yj: Complex64| ((yi - yj) / (yi + yj), 2.0 * yi / (yi + yj));
    let last = media.len() - 2;
    let (mut big_r, mut big_t) = fresnel(media[last].0.admittance, media[last + 1].0.admittance);
    for i in (0..last).rev() {
        let (r, t) = fresnel(media[i].0.admittance, media[i + 1].0.admittance);
        let (ref next, thick) = media[i + 1];
        let p = (-Complex64::i() * next.kz * res.k0 * thick).exp();
        let p2 = p * p;
        let den = 1.0 + r * big_r * p2;
        big_t = t * big_t * p / den;
        big_r = (r + big_r * p2) / den;
    }
    Coefficients { t: big_t, r: big_r }
}

fn linear_coefficients(
    stack: &LayerStack,
    f_ghz: f64,
    theta_deg: f64,
    pol: Linear,
    method: Method,
) -> Result<Coefficients> {
    let res = resolve(stack, f_ghz, theta_deg)?;
    Ok(match method {
        Method::Cascade => cascade(&res, pol),
        Method::TransferMatrix => {
            let c = transfer_matrix(&res, pol);
            if c.t.norm() < TMM_UNDERFLOW || !c.t.is_finite() || !c.r.is_finite() {
                cascade(&res, pol)
            } else {
                c
            }
        }
    })
}

/// Transmission/reflection coefficients using the requested evaluation route.
pub fn coefficients_with(stack: &LayerStack, inc: &Incidence, method: Method) -> Result<Coefficients> {
    inc.validate()?;
    match inc.polarization {
        Polarization::TE => linear_coefficients(stack, inc.frequency_ghz, inc.theta_deg, Linear::TE, method),
        Polarization::TM => linear_coefficients(stack, inc.frequency_ghz, inc.theta_deg, Linear::TM, method),
        Polarization::RHCP | Polarization::LHCP => {
            let te = linear_coefficients(stack, inc.frequency_ghz, inc.theta_deg, Linear::TE, method)?;
            let tm = linear_coefficients(stack, inc.frequency_ghz, inc.theta_deg, Linear::TM, method)?;
            Ok(Coefficients { t: (te.t + tm.t) / 2.0, r: (te.r + tm.r) / 2.0 })
        }
    }
}

/// Transmission/reflection coefficients of `stack` for one incidence.
/// Circular polarisations return the co-polar coefficient; see
/// [`cp_transmission`] for the cross-polar part.
pub fn tmm_coefficients(stack: &LayerStack, inc: &Incidence) -> Result<Coefficients> {
    coefficients_with(stack, inc, Method::TransferMatrix)
}

pub fn cp_transmission(stack: &LayerStack, f_ghz: f64, theta_deg: f64) -> Result<CpTransmission> {
    Incidence { frequency_ghz: f_ghz, theta_deg, polarization: Polarization::RHCP }.validate()?;
    let te = linear_coefficients(stack, f_ghz, theta_deg, Linear::TE, Method::TransferMatrix)?;
    let tm = linear_coefficients(stack, f_ghz, theta_deg, Linear::TM, Method::TransferMatrix)?;
    Ok(CpTransmission { co: (te.t + tm.t) / 2.0, cross: (te.t - tm.t) / 2.0 })
}

/// Complex coefficients over a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies_ghz: Vec<f64>,
    pub t: Vec<Complex64>,
    pub r: Vec<Complex64>,
    pub polarization: Polarization,
    pub theta_deg: f64,
}

pub const SPECTRUM_CSV_HEADER: &str = "freq_GHz,t_dB,t_phase_deg,r_dB,r_phase_deg,pol,theta_deg";

impl Spectrum {
    pub fn len(&self) -> usize {
        self.frequencies_ghz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies_ghz.is_empty()
    }

    pub fn t_db(&self) -> Vec<f64> {
        self.t.iter().map(|t| amplitude_db(t.norm())).collect()
    }

    pub fn r_db(&self) -> Vec<f64> {
        self.r.iter().map(|r| amplitude_db(r.norm())).collect()
    }

    /// CSV with the fixed column set and six-decimal formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SPECTRUM_CSV_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&format!(
                "{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6}\n",
                self.frequencies_ghz[i],
                amplitude_db(self.t[i].norm()),
                self.t[i].arg().to_degrees(),
                amplitude_db(self.r[i].norm()),
                self.r[i].arg().to_degrees(),
                self.polarization,
                self.theta_deg,
            ));
        }
        out
    }
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let step = (stop - start) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { stop } else { start + step * i as f64 }).collect()
}

/// Evaluate [`tmm_coefficients`] over an evenly spaced grid.
pub fn transmission_spectrum(
    stack: &LayerStack,
    f_start: f64,
    f_stop: f64,
    n_points: usize,
    theta_deg: f64,
    polarization: Polarization,
) -> Result<Spectrum> {
    if n_points < 2 {
        return Err(Error::invalid("a spectrum needs at least 2 points"));
    }
    if !(f_start < f_stop) {
        return Err(Error::invalid(format!("f_start {f_start} must be below f_stop {f_stop}")));
    }
    let (lo, hi) = crate::materials::ITU_VALID_RANGE_GHZ;
    if f_start < lo || f_stop > hi {
        return Err(Error::FrequencyOutOfRange { f_ghz: if f_start < lo { f_start } else { f_stop }, lo, hi });
    }
    let freqs = linear_grid(f_start, f_stop, n_points);
    let coeffs = freqs
        .par_iter()
        .map(|&f| tmm_coefficients(stack, &Incidence { frequency_ghz: f, theta_deg, polarization }))
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        frequencies_ghz: freqs,
        t: coeffs.iter().map(|c| c.t).collect(),
        r: coeffs.iter().map(|c| c.r).collect(),
        polarization,
        theta_deg,
    })
}
