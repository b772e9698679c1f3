//! Measurement post-processing and permittivity estimation.
//!
//! Fixture spectra are normalised by an empty-fixture reference, then the
//! power-law coefficients `(a, c, d)` of a single slab are fitted to the
//! normalised transmission by a multistart simplex search.

mod io;
mod nelder_mead;

pub use io::{read_csv, read_touchstone, write_csv};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layered_em::{tmm_coefficients, Incidence, Layer, LayerStack, Polarization};
use crate::materials::{Electrical, Material, PermittivityModel};
use crate::units::{amplitude_db, free_space_wavenumber, mm_to_m};

/// Reference points weaker than this are flagged during normalisation.
pub const REFERENCE_FLOOR_DB: f64 = -100.0;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumData {
    Complex(Vec<Complex64>),
    /// Magnitude only, dB.
    MagnitudeDb(Vec<f64>),
}

impl SpectrumData {
    fn len(&self) -> usize {
        match self {
            SpectrumData::Complex(v) => v.len(),
            SpectrumData::MagnitudeDb(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub thickness_mm: Option<f64>,
    pub fixture_id: Option<String>,
    /// Set by [`normalize_spectrum`].
    pub reference_id: Option<String>,
    /// Indices whose reference was below [`REFERENCE_FLOOR_DB`].
    pub flagged: Vec<usize>,
}

/// Transmission measured on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredSpectrum {
    frequencies_ghz: Vec<f64>,
    data: SpectrumData,
    pub meta: SpectrumMeta,
}

impl MeasuredSpectrum {
    pub fn new(frequencies_ghz: Vec<f64>, data: SpectrumData, meta: SpectrumMeta) -> Result<Self> {
        if frequencies_ghz.is_empty() {
            return Err(Error::invalid("spectrum has no points"));
        }
        if frequencies_ghz.len() != data.len() {
            return Err(Error::GridMismatch(format!(
                "{} frequencies but {} values",
                frequencies_ghz.len(),
                data.len()
            )));
        }
        if !frequencies_ghz.iter().all(|f| f.is_finite() && *f > 0.0)
            || !frequencies_ghz.windows(2).all(|w| w[1] > w[0])
        {
            return Err(Error::invalid("frequency grid must be positive and strictly increasing"));
        }
        let finite = match &data {
            SpectrumData::Complex(v) => v.iter().all(|c| c.re.is_finite() && c.im.is_finite()),
            SpectrumData::MagnitudeDb(v) => v.iter().all(|d| d.is_finite()),
        };
        if !finite {
            return Err(Error::invalid("spectrum values must be finite"));
        }
        Ok(Self { frequencies_ghz, data, meta })
    }

    pub fn complex(frequencies_ghz: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        Self::new(frequencies_ghz, SpectrumData::Complex(values), SpectrumMeta::default())
    }

    pub fn magnitude_db(frequencies_ghz: Vec<f64>, db: Vec<f64>) -> Result<Self> {
        Self::new(frequencies_ghz, SpectrumData::MagnitudeDb(db), SpectrumMeta::default())
    }

    pub fn with_meta(mut self, meta: SpectrumMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn frequencies_ghz(&self) -> &[f64] {
        &self.frequencies_ghz
    }

    pub fn data(&self) -> &SpectrumData {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.frequencies_ghz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies_ghz.is_empty()
    }

    pub fn is_magnitude_only(&self) -> bool {
        matches!(self.data, SpectrumData::MagnitudeDb(_))
    }

    pub fn magnitudes_db(&self) -> Vec<f64> {
        match &self.data {
            SpectrumData::Complex(v) => v.iter().map(|c| amplitude_db(c.norm())).collect(),
            SpectrumData::MagnitudeDb(v) => v.clone(),
        }
    }

    /// Copy with every magnitude shifted by `db` (phase untouched).
    pub fn offset_db(&self, db: f64) -> Self {
        let data = match &self.data {
            SpectrumData::Complex(v) => {
                let k = 10f64.powf(db / 20.0);
                SpectrumData::Complex(v.iter().map(|c| c * k).collect())
            }
            SpectrumData::MagnitudeDb(v) => SpectrumData::MagnitudeDb(v.iter().map(|d| d + db).collect()),
        };
        Self { data, ..self.clone() }
    }

    /// Linear interpolation onto `grid` (magnitude in dB, unwrapped phase).
    fn resample(&self, grid: &[f64]) -> Result<Vec<(f64, Option<f64>)>> {
        let f = &self.frequencies_ghz;
        let (lo, hi) = (f[0], f[f.len() - 1]);
        if grid.iter().any(|g| *g < lo - 1e-12 || *g > hi + 1e-12) {
            return Err(Error::GridMismatch(format!("cannot interpolate outside the reference range {lo}–{hi} GHz")));
        }
        let db = self.magnitudes_db();
        let phase = match &self.data {
            SpectrumData::Complex(v) => Some(unwrap(&v.iter().map(|c| c.arg()).collect::<Vec<_>>())),
            SpectrumData::MagnitudeDb(_) => None,
        };
        Ok(grid
            .iter()
            .map(|&g| {
                let (i0, i1) = if f.len() == 1 {
                    (0, 0)
                } else {
                    let i = f.partition_point(|x| *x <= g).clamp(1, f.len() - 1);
                    (i - 1, i)
                };
                let w = if i1 == i0 { 0.0 } else { (g - f[i0]) / (f[i1] - f[i0]) };
                let lerp = |v: &[f64]| v[i0] + w * (v[i1] - v[i0]);
                (lerp(&db), phase.as_deref().map(lerp))
            })
            .collect())
    }
}

fn unwrap(phase: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(phase.len());
    let mut offset = 0.0;
    for (i, &p) in phase.iter().enumerate() {
        if i > 0 {
            let d = p + offset - out[i - 1];
            offset -= (d / std::f64::consts::TAU).round() * std::f64::consts::TAU;
        }
        out.push(p + offset);
    }
    out
}

/// Divide `dut` by `reference` point by point (dB subtraction if either is
/// magnitude-only). Grids must match unless `interpolate` is set, in which
/// case the reference is resampled onto the DUT grid.
pub fn normalize_spectrum(
    dut: &MeasuredSpectrum,
    reference: &MeasuredSpectrum,
    interpolate: bool,
) -> Result<MeasuredSpectrum> {
    let same_grid = dut.len() == reference.len()
        && dut.frequencies_ghz.iter().zip(&reference.frequencies_ghz).all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs());
    let reference_values: Vec<(f64, Option<Complex64>)> = if same_grid {
        match &reference.data {
            SpectrumData::Complex(v) => v.iter().map(|c| (amplitude_db(c.norm()), Some(*c))).collect(),
            SpectrumData::MagnitudeDb(v) => v.iter().map(|d| (*d, None)).collect(),
        }
    } else if interpolate {
        reference
            .resample(&dut.frequencies_ghz)?
            .into_iter()
            .map(|(db, ph)| (db, ph.map(|p| Complex64::from_polar(10f64.powf(db / 20.0), p))))
            .collect()
    } else {
        return Err(Error::GridMismatch(
            "DUT and reference frequency grids differ (enable interpolation to resample)".into(),
        ));
    };

    let flagged =
        reference_values.iter().enumerate().filter(|(_, (db, _))| *db < REFERENCE_FLOOR_DB).map(|(i, _)| i).collect();
    let data = match &dut.data {
        SpectrumData::Complex(v) if reference_values.iter().all(|r| r.1.is_some()) => {
            SpectrumData::Complex(v.iter().zip(&reference_values).map(|(d, r)| d / r.1.unwrap()).collect())
        }
        _ => {
            SpectrumData::MagnitudeDb(dut.magnitudes_db().iter().zip(&reference_values).map(|(d, r)| d - r.0).collect())
        }
    };
    let meta = SpectrumMeta {
        reference_id: Some(reference.meta.fixture_id.clone().unwrap_or_else(|| "reference".into())),
        flagged,
        ..dut.meta.clone()
    };
    MeasuredSpectrum::new(dut.frequencies_ghz.clone(), data, meta)
}

/// Transmission of a free-standing slab normalised to an empty fixture of
/// the same length, i.e. the slab's `t` advanced by the free-space delay.
pub fn insertion_transmission(model: &PermittivityModel, thickness_mm: f64, f_ghz: f64) -> Result<Complex64> {
    let stack = slab(model, thickness_mm)?;
    let t = tmm_coefficients(&stack, &Incidence::normal(f_ghz, Polarization::TE))?.t;
    Ok(t * Complex64::from_polar(1.0, free_space_wavenumber(f_ghz) * mm_to_m(thickness_mm)))
}

fn slab(model: &PermittivityModel, thickness_mm: f64) -> Result<LayerStack> {
    let material = Material {
        name: "fit".into(),
        description: String::new(),
        electrical: Electrical::Itu(*model),
        thermal_conductivity: 1.0,
    };
    LayerStack::new(vec![Layer { material, thickness_mm }])
}

/// Box bounds for the fitted coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitBounds {
    pub a: (f64, f64),
    pub c: (f64, f64),
    pub d: (f64, f64),
}

impl Default for FitBounds {
    fn default() -> Self {
        Self { a: (1.0, 10.0), c: (0.0, 1.0), d: (-1.0, 2.0) }
    }
}

impl FitBounds {
    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("a", self.a), ("c", self.c), ("d", self.d)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!("bound for {name} needs finite lo < hi")));
            }
        }
        if self.a.0 <= 0.0 || self.c.0 < 0.0 {
            return Err(Error::invalid("bounds need a > 0 and c >= 0"));
        }
        Ok(())
    }

    fn denormalize(&self, u: &[f64; 3]) -> [f64; 3] {
        let map = |(lo, hi): (f64, f64), t: f64| lo + (hi - lo) * t;
        [map(self.a, u[0]), map(self.c, u[1]), map(self.d, u[2])]
    }

    fn normalize(&self, p: &[f64; 3]) -> [f64; 3] {
        let map = |(lo, hi): (f64, f64), v: f64| (v - lo) / (hi - lo);
        [map(self.a, p[0]), map(self.c, p[1]), map(self.d, p[2])]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitObjective {
    /// RMS error of `20·log10|t|`.
    #[default]
    MagnitudeDb,
    /// RMS of `8.686·|ln(t_model / t_meas)|`: dB error plus phase error in
    /// dB-equivalent units. Needs complex data normalised to an empty fixture.
    /// Each start is first fitted on magnitude, then refined on this objective.
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub bounds: FitBounds,
    /// Held fixed during the fit.
    pub b: f64,
    pub n_starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub objective: FitObjective,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            bounds: FitBounds::default(),
            b: 0.0,
            n_starts: 16,
            seed: 2040,
            max_iter: 4000,
            objective: FitObjective::MagnitudeDb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartReport {
    pub index: usize,
    /// `[a, c, d]` at the start and at the end of the simplex run.
    pub start: [f64; 3],
    pub fitted: [f64; 3],
    pub residual_db: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: PermittivityModel,
    /// RMS error of the best start.
    pub residual_db: f64,
    pub iterations: usize,
    pub converged: bool,
    pub best_start: usize,
    pub starts: Vec<StartReport>,
    pub warnings: Vec<String>,
}

/// Objective value (RMS, dB) of `model` against `spectrum`.
pub fn fit_objective(
    spectrum: &MeasuredSpectrum,
    thickness_mm: f64,
    model: &PermittivityModel,
    objective: FitObjective,
) -> f64 {
    let Ok(stack) = slab(model, thickness_mm) else { return f64::INFINITY };
    let delay = free_space_wavenumber(1.0) * mm_to_m(thickness_mm);
    let mut sum = 0.0;
    for (i, &f) in spectrum.frequencies_ghz.iter().enumerate() {
        let Ok(c) = tmm_coefficients(&stack, &Incidence::normal(f, Polarization::TE)) else { return f64::INFINITY };
        let e = match (&spectrum.data, objective) {
            (SpectrumData::Complex(v), FitObjective::Complex) => {
                let t = c.t * Complex64::from_polar(1.0, delay * f);
                let ln = (t / v[i]).ln();
                20.0 / std::f64::consts::LN_10 * ln.norm()
            }
            (SpectrumData::Complex(v), FitObjective::MagnitudeDb) => {
                amplitude_db(c.t.norm()) - amplitude_db(v[i].norm())
            }
            (SpectrumData::MagnitudeDb(v), _) => amplitude_db(c.t.norm()) - v[i],
        };
        sum += e * e;
    }
    (sum / spectrum.len() as f64).sqrt()
}

/// Fit `(a, c, d)` of a slab of `thickness_mm` to `spectrum`, with `b` fixed.
/// Starts are drawn from a seeded generator and run concurrently; the best
/// residual wins, ties going to the lowest start index.
pub fn fit_permittivity(spectrum: &MeasuredSpectrum, thickness_mm: f64, cfg: &FitConfig) -> Result<FitResult> {
    if !(thickness_mm > 0.0 && thickness_mm.is_finite()) {
        return Err(Error::invalid(format!("slab thickness {thickness_mm} mm must be > 0")));
    }
    cfg.bounds.validate()?;
    if cfg.n_starts == 0 || cfg.max_iter == 0 {
        return Err(Error::invalid("n_starts and max_iter must be >= 1"));
    }
    if !cfg.b.is_finite() {
        return Err(Error::invalid("fixed b must be finite"));
    }
    if cfg.objective == FitObjective::Complex && spectrum.is_magnitude_only() {
        return Err(Error::invalid("complex objective needs complex spectrum data"));
    }

    let mut warnings = Vec::new();
    let f = spectrum.frequencies_ghz();
    if f.len() < 10 {
        warnings.push(format!("only {} frequency points; at least 10 are recommended", f.len()));
    }
    if f[f.len() - 1] < 2.0 * f[0] {
        warnings.push("spectrum spans less than one octave; c and d may be poorly identified".to_owned());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<[f64; 3]> = (0..cfg.n_starts).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
    let settings = nelder_mead::Settings { initial_step: 0.1, x_tol: 1e-9, f_tol: 1e-12, max_iter: cfg.max_iter };
    let model_at = |u: &[f64; 3]| {
        let [a, c, d] = cfg.bounds.denormalize(u);
        PermittivityModel { a, b: cfg.b, c, d }
    };

    let reports: Vec<StartReport> = starts
        .par_iter()
        .enumerate()
        .map(|(index, u0)| {
            let run = |objective, from| {
                nelder_mead::minimize(
                    |u| fit_objective(spectrum, thickness_mm, &model_at(u), objective),
                    from,
                    settings,
                )
            };
            let mut m = run(FitObjective::MagnitudeDb, *u0);
            if cfg.objective == FitObjective::Complex {
                // Phase wraps many times across a thick slab; refine from the magnitude fit.
                let iterations = m.iterations;
                m = run(FitObjective::Complex, m.x);
                m.iterations += iterations;
            }
            StartReport {
                index,
                start: cfg.bounds.denormalize(u0),
                fitted: cfg.bounds.denormalize(&m.x),
                residual_db: m.f,
                iterations: m.iterations,
                converged: m.converged && m.f.is_finite(),
            }
        })
        .collect();

    let mut best = 0;
    for r in &reports {
        if r.residual_db < reports[best].residual_db {
            best = r.index;
        }
    }
    let b = &reports[best];
    let model = model_at(&cfg.bounds.normalize(&b.fitted));
    if !b.converged {
        warnings.push("best start hit the iteration limit".to_owned());
    }
    Ok(FitResult {
        model,
        residual_db: b.residual_db,
        iterations: b.iterations,
        converged: b.converged,
        best_start: best,
        warnings,
        starts: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layered_em::linear_grid;

    fn truth() -> PermittivityModel {
        PermittivityModel { a: 5.84, b: 0.0, c: 0.205, d: 0.06 }
    }

    fn synthetic(thickness: f64) -> MeasuredSpectrum {
        let f = linear_grid(2.0, 8.0, 61);
        let t = f.iter().map(|&f| insertion_transmission(&truth(), thickness, f).unwrap()).collect();
        MeasuredSpectrum::complex(f, t).unwrap()
    }

    #[test]
    fn spectrum_validation() {
        assert!(MeasuredSpectrum::magnitude_db(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(MeasuredSpectrum::magnitude_db(vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(MeasuredSpectrum::magnitude_db(vec![1.0, 2.0], vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn self_normalization_is_flat() {
        let s = synthetic(290.0);
        let n = normalize_spectrum(&s, &s, false).unwrap();
        assert!(n.magnitudes_db().iter().all(|d| d.abs() < 1e-12));
        let shifted = s.offset_db(-20.0);
        let n = normalize_spectrum(&shifted, &s, false).unwrap();
        assert!(n.magnitudes_db().iter().all(|d| (d + 20.0).abs() < 1e-12));
        assert_eq!(n.meta.reference_id.as_deref(), Some("reference"));
    }

    #[test]
    fn magnitude_only_subtracts() {
        let dut = MeasuredSpectrum::magnitude_db(vec![1.0, 2.0], vec![-30.0, -40.0]).unwrap();
        let reference = MeasuredSpectrum::magnitude_db(vec![1.0, 2.0], vec![-1.0, -2.0]).unwrap();
        let n = normalize_spectrum(&dut, &reference, false).unwrap();
        assert_eq!(n.data(), &SpectrumData::MagnitudeDb(vec![-29.0, -38.0]));
    }

    #[test]
    fn grid_mismatch_and_interpolation() {
        let dut = MeasuredSpectrum::magnitude_db(vec![1.5, 2.5], vec![-30.0, -40.0]).unwrap();
        let reference = MeasuredSpectrum::magnitude_db(vec![1.0, 2.0, 3.0], vec![0.0, -2.0, -4.0]).unwrap();
        assert!(matches!(normalize_spectrum(&dut, &reference, false), Err(Error::GridMismatch(_))));
        let n = normalize_spectrum(&dut, &reference, true).unwrap();
        let db = n.magnitudes_db();
        assert!((db[0] + 29.0).abs() < 1e-12 && (db[1] + 37.0).abs() < 1e-12);
        let outside = MeasuredSpectrum::magnitude_db(vec![0.5], vec![0.0]).unwrap();
        assert!(normalize_spectrum(&outside, &reference, true).is_err());
    }

    #[test]
    fn weak_reference_points_are_flagged() {
        let dut = MeasuredSpectrum::magnitude_db(vec![1.0, 2.0], vec![-30.0, -40.0]).unwrap();
        let reference = MeasuredSpectrum::magnitude_db(vec![1.0, 2.0], vec![-120.0, -2.0]).unwrap();
        assert_eq!(normalize_spectrum(&dut, &reference, false).unwrap().meta.flagged, vec![0]);
    }

    #[test]
    fn recovers_slab_from_wall_times_reference() {
        let stack = slab(&truth(), 290.0).unwrap();
        let f = linear_grid(2.0, 8.0, 13);
        let reference: Vec<Complex64> = f.iter().map(|&f| Complex64::from_polar(0.9, 0.3 * f)).collect();
        let wall: Vec<Complex64> =
            f.iter().map(|&f| tmm_coefficients(&stack, &Incidence::normal(f, Polarization::TE)).unwrap().t).collect();
        let dut: Vec<Complex64> = wall.iter().zip(&reference).map(|(w, r)| w * r).collect();
        let n = normalize_spectrum(
            &MeasuredSpectrum::complex(f.clone(), dut).unwrap(),
            &MeasuredSpectrum::complex(f, reference).unwrap(),
            false,
        )
        .unwrap();
        let SpectrumData::Complex(v) = n.data() else { panic!() };
        for (a, b) in v.iter().zip(&wall) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let s = synthetic(290.0);
        let r = fit_permittivity(&s, 290.0, &FitConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.model.a - 5.84).abs() <= 0.05, "{:?}", r.model);
        assert!((r.model.c - 0.205).abs() <= 0.02, "{:?}", r.model);
        assert!(r.residual_db < 0.1);
        assert_eq!(r.model.b, 0.0);
        assert!(r.warnings.is_empty());
        // The generating point is at least as good as every other start's result.
        let at_truth = fit_objective(&s, 290.0, &truth(), FitObjective::MagnitudeDb);
        assert!(r.starts.iter().all(|st| at_truth <= st.residual_db + 1e-12));
    }

    #[test]
    fn complex_objective_round_trip() {
        let s = synthetic(290.0);
        let cfg = FitConfig { objective: FitObjective::Complex, n_starts: 8, ..Default::default() };
        let r = fit_permittivity(&s, 290.0, &cfg).unwrap();
        assert!((r.model.a - 5.84).abs() <= 0.05 && (r.model.c - 0.205).abs() <= 0.02, "{:?}", r.model);
        let mag = MeasuredSpectrum::magnitude_db(s.frequencies_ghz().to_vec(), s.magnitudes_db()).unwrap();
        assert!(fit_permittivity(&mag, 290.0, &cfg).is_err());
    }

    #[test]
    fn degenerate_inputs() {
        let s = synthetic(290.0);
        assert!(fit_permittivity(&s, 0.0, &FitConfig::default()).is_err());
        let cfg = FitConfig { bounds: FitBounds { a: (5.0, 4.0), ..Default::default() }, ..Default::default() };
        assert!(fit_permittivity(&s, 290.0, &cfg).is_err());
    }

    #[test]
    fn narrow_spectra_warn() {
        let f = linear_grid(3.0, 4.0, 5);
        let db = f.iter().map(|&f| amplitude_db(insertion_transmission(&truth(), 100.0, f).unwrap().norm())).collect();
        let s = MeasuredSpectrum::magnitude_db(f, db).unwrap();
        let r = fit_permittivity(&s, 100.0, &FitConfig { n_starts: 2, ..Default::default() }).unwrap();
        assert_eq!(r.warnings.len(), 2);
    }

    #[test]
    fn deterministic() {
        let s = synthetic(150.0);
        let cfg = FitConfig { n_starts: 4, ..Default::default() };
        assert_eq!(fit_permittivity(&s, 150.0, &cfg).unwrap(), fit_permittivity(&s, 150.0, &cfg).unwrap());
    }
}
