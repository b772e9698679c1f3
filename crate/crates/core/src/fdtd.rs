//! One-dimensional FDTD solver for normal-incidence transmission through a
//! layer stack, used as an independent check of [`crate::layered_em`].
//!
//! Each run covers a narrow band around `center_ghz`. Layer conductivity is
//! frozen at the band centre (non-dispersive lossy dielectric), so runs are
//! kept narrow and stitched together for broadband comparisons.
//!
//! Grid: `E` on integer nodes, `η0·H` on half nodes, first-order Mur
//! terminations at both ends, and a total-field/scattered-field plane fed by
//! an auxiliary vacuum line so the device and reference runs see identical
//! incident fields.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::layered_em::{self, Incidence, LayerStack, Polarization, Spectrum};
use crate::units::{amplitude_db, angular_frequency, free_space_wavelength, free_space_wavenumber, C0, EPS0};

/// Minimum cells per shortest in-medium wavelength.
pub const MIN_CELLS_PER_WAVELENGTH: f64 = 20.0;
/// Source spectrum level (relative to peak) bounding the valid band.
pub const VALID_BAND_FLOOR: f64 = 0.01;
/// Probe amplitude relative to its peak below which a run counts as decayed.
pub const DECAY_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Fdtd1dConfig {
    pub dx_mm: f64,
    /// Hard cap on time steps; the run stops earlier once probes have decayed.
    pub max_steps: usize,
    pub center_ghz: f64,
    /// −20 dB full width of the Gaussian source spectrum.
    pub bandwidth_ghz: f64,
    /// Analysis frequencies spread evenly over `center ± bandwidth/2`.
    pub n_freq: usize,
    /// CFL safety factor, `c·dt/dx`.
    pub courant: f64,
    /// Distance from the TF/SF plane to the front face of the stack.
    pub source_gap_mm: f64,
    /// Distance of the transmitted probe behind the stack, and of the
    /// reflected probe in front of the TF/SF plane.
    pub probe_gap_mm: f64,
}

impl Fdtd1dConfig {
    /// Configuration resolving the band with `cells_per_wavelength` cells in
    /// the densest layer, capped at 1 mm cells.
    pub fn for_band(
        stack: &LayerStack,
        center_ghz: f64,
        bandwidth_ghz: f64,
        cells_per_wavelength: f64,
    ) -> Result<Self> {
        let eps_max = max_eps_real(stack, center_ghz)?;
        let f_top = center_ghz + band_half_width_40db(bandwidth_ghz);
        let lambda_mm = free_space_wavelength(f_top) * 1e3 / eps_max.sqrt();
        let dx_mm = (lambda_mm / cells_per_wavelength).min(1.0);
        let cfg = Self {
            dx_mm,
            max_steps: 2_000_000,
            center_ghz,
            bandwidth_ghz,
            n_freq: 3,
            courant: 1.0,
            source_gap_mm: 20.0,
            probe_gap_mm: 20.0,
        };
        cfg.validate(stack)?;
        Ok(cfg)
    }

    pub fn validate(&self, stack: &LayerStack) -> Result<()> {
        if !(self.courant > 0.0 && self.courant <= 1.0) {
            return Err(Error::invalid(format!("CFL factor {} must lie in (0, 1]", self.courant)));
        }
        if !(self.dx_mm > 0.0 && self.center_ghz > 0.0 && self.bandwidth_ghz > 0.0) {
            return Err(Error::invalid("dx, centre frequency and bandwidth must be > 0"));
        }
        if self.bandwidth_ghz / 2.0 >= self.center_ghz {
            return Err(Error::invalid("bandwidth must stay below twice the centre frequency"));
        }
        if self.n_freq == 0 || self.max_steps == 0 {
            return Err(Error::invalid("n_freq and max_steps must be >= 1"));
        }
        if self.source_gap_mm < self.dx_mm || self.probe_gap_mm < self.dx_mm {
            return Err(Error::invalid("probe and source gaps must span at least one cell"));
        }
        let eps_max = max_eps_real(stack, self.center_ghz)?;
        let f_hi = self.center_ghz + self.bandwidth_ghz / 2.0;
        let cells = free_space_wavelength(f_hi) * 1e3 / eps_max.sqrt() / self.dx_mm;
        if cells < MIN_CELLS_PER_WAVELENGTH {
            return Err(Error::invalid(format!(
                "dx = {} mm gives {cells:.1} cells per wavelength at {f_hi} GHz (need >= {MIN_CELLS_PER_WAVELENGTH})",
                self.dx_mm
            )));
        }
        Ok(())
    }

    fn envelope_tau(&self) -> f64 {
        // amplitude spectrum exp(-Δf²/2σf²) falls to 0.1 at Δf = bw/2
        let sigma_f = self.bandwidth_ghz * 1e9 / 2.0 / (2.0 * 10f64.ln()).sqrt();
        1.0 / (2.0 * std::f64::consts::PI * sigma_f)
    }

    fn source_level(&self, f_ghz: f64) -> f64 {
        let sigma_f = self.bandwidth_ghz / 2.0 / (2.0 * 10f64.ln()).sqrt();
        (-(f_ghz - self.center_ghz).powi(2) / (2.0 * sigma_f * sigma_f)).exp()
    }
}

fn band_half_width_40db(bandwidth_ghz: f64) -> f64 {
    // Gaussian: level in dB is quadratic in Δf, so the -40 dB point is √2 further out.
    bandwidth_ghz / 2.0 * 2f64.sqrt()
}

fn max_eps_real(stack: &LayerStack, f_ghz: f64) -> Result<f64> {
    let mut m: f64 = 1.0;
    for l in stack.layers() {
        m = m.max(l.material.permittivity_at(f_ghz)?.eps_real);
    }
    Ok(m)
}

/// Energy bookkeeping of one device run, in units of the incident energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget {
    pub transmitted: f64,
    pub reflected: f64,
    pub absorbed: f64,
}

impl EnergyBudget {
    pub fn total(&self) -> f64 {
        self.transmitted + self.reflected + self.absorbed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdtdResult {
    pub spectrum: Spectrum,
    /// Lowest and highest frequency retained.
    pub valid_range: (f64, f64),
    /// Some requested analysis points fell outside the valid band and were dropped.
    pub truncated: bool,
    pub energy: EnergyBudget,
    /// Time steps of the device run.
    pub steps: usize,
}

struct Grid {
    ca: Vec<f64>,
    cb: Vec<f64>,
    sigma_dx: Vec<f64>,
    k_refl: usize,
    k_src: usize,
    k_trans: usize,
    z_front: f64,
    z_back: f64,
    transit_steps: usize,
}

fn build_grid(stack: Option<&LayerStack>, cfg: &Fdtd1dConfig, courant: f64) -> Result<Grid> {
    let dx = cfg.dx_mm * 1e-3;
    let cells = |mm: f64| (mm / cfg.dx_mm).ceil() as usize;
    let pad = 10;
    let k_refl = pad;
    let k_src = k_refl + cells(cfg.probe_gap_mm);
    let z_front = (k_src + cells(cfg.source_gap_mm)) as f64 * dx;
    let layers: Vec<(f64, f64, f64)> = match stack {
        Some(s) => s
            .layers()
            .iter()
            .map(|l| {
                let p = l.material.permittivity_at(cfg.center_ghz)?;
                Ok((l.thickness_mm * 1e-3, p.eps_real, p.conductivity()))
            })
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let thickness: f64 = match stack {
        Some(s) => s.total_thickness_mm() * 1e-3,
        None => 0.0,
    };
    let z_back = z_front + thickness;
    let k_trans = (z_back / dx).ceil() as usize + cells(cfg.probe_gap_mm);
    let n = k_trans + pad + 1;

    // control-volume average of (eps, sigma) around each E node
    let mut eps = vec![1.0; n];
    let mut sigma = vec![0.0; n];
    let mut start = z_front;
    let mut eps_max: f64 = 1.0;
    for &(t, e, s) in &layers {
        let end = start + t;
        eps_max = eps_max.max(e);
        let k_lo = ((start / dx) - 0.5).floor().max(0.0) as usize;
        let k_hi = (((end / dx) + 0.5).ceil() as usize).min(n - 1);
        for k in k_lo..=k_hi {
            let a = (k as f64 - 0.5) * dx;
            let b = (k as f64 + 0.5) * dx;
            let overlap = (b.min(end) - a.max(start)).max(0.0) / dx;
            if overlap > 0.0 {
                eps[k] += (e - 1.0) * overlap;
                sigma[k] += s * overlap;
            }
        }
        start = end;
    }

    let dt = courant * dx / C0;
    let mut ca = vec![0.0; n];
    let mut cb = vec![0.0; n];
    let mut sigma_dx = vec![0.0; n];
    for k in 0..n {
        let loss = sigma[k] * dt / (2.0 * EPS0 * eps[k]);
        ca[k] = (1.0 - loss) / (1.0 + loss);
        cb[k] = (courant / eps[k]) / (1.0 + loss);
        sigma_dx[k] = sigma[k] * dx;
    }
    let transit_steps = ((n as f64) * eps_max.sqrt() / courant).ceil() as usize;
    Ok(Grid { ca, cb, sigma_dx, k_refl, k_src, k_trans, z_front, z_back, transit_steps })
}

struct RunOutput {
    dft_refl: Vec<Complex64>,
    dft_trans: Vec<Complex64>,
    energy_refl: f64,
    energy_trans: f64,
    absorbed: f64,
    steps: usize,
    trace_trans: Vec<f64>,
}

fn simulate(grid: &Grid, cfg: &Fdtd1dConfig, freqs_ghz: &[f64], keep_trace: bool) -> Result<RunOutput> {
    let s = cfg.courant;
    let dx = cfg.dx_mm * 1e-3;
    let dt = s * dx / C0;
    let n = grid.ca.len();
    let mut e = vec![0.0f64; n];
    let mut h = vec![0.0f64; n - 1];

    // auxiliary incident line: hard source at node 0, TF/SF tap at node `tap`
    let tap = 4usize;
    let na = tap + 16;
    let mut ea = vec![0.0f64; na];
    let mut ha = vec![0.0f64; na - 1];

    let tau = cfg.envelope_tau();
    let t0 = 6.0 * tau;
    let wc = angular_frequency(cfg.center_ghz);
    let source = |t: f64| {
        let x = (t - t0) / tau;
        (-0.5 * x * x).exp() * (wc * (t - t0)).sin()
    };

    let omegas: Vec<f64> = freqs_ghz.iter().map(|&f| angular_frequency(f)).collect();
    let mut dft_refl = vec![Complex64::new(0.0, 0.0); freqs_ghz.len()];
    let mut dft_trans = dft_refl.clone();
    let (mut energy_refl, mut energy_trans, mut absorbed) = (0.0, 0.0, 0.0);
    let mut trace_trans = Vec::new();

    let mur = (s - 1.0) / (s + 1.0);
    let min_steps = (2.0 * t0 / dt).ceil() as usize + 2 * grid.transit_steps;
    let window = grid.transit_steps.max(16);
    let (mut peak_r, mut peak_t) = (0.0f64, 0.0f64);
    let (mut win_r, mut win_t) = (0.0f64, 0.0f64);
    let lossy: Vec<usize> = (0..n).filter(|&k| grid.sigma_dx[k] > 0.0).collect();

    let mut step = 0usize;
    loop {
        if step >= cfg.max_steps {
            return Err(Error::FdtdNotDecayed(cfg.max_steps));
        }
        // H update (n-1/2 → n+1/2)
        let e_inc_src = ea[tap];
        for k in 0..n - 1 {
            h[k] -= s * (e[k + 1] - e[k]);
        }
        h[grid.k_src - 1] += s * e_inc_src;
        for k in 0..na - 1 {
            ha[k] -= s * (ea[k + 1] - ea[k]);
        }
        let h_inc_src = ha[tap - 1];

        // E update (n → n+1)
        let (e1_old, en2_old, e0_old, en1_old) = (e[1], e[n - 2], e[0], e[n - 1]);
        let mut absorbed_step = 0.0;
        for &k in &lossy {
            absorbed_step += grid.sigma_dx[k] * e[k] * e[k] * 0.5;
        }
        for k in 1..n - 1 {
            e[k] = grid.ca[k] * e[k] - grid.cb[k] * (h[k] - h[k - 1]);
        }
        e[grid.k_src] += grid.cb[grid.k_src] * h_inc_src;
        for &k in &lossy {
            absorbed_step += grid.sigma_dx[k] * e[k] * e[k] * 0.5;
        }
        absorbed += absorbed_step;
        e[0] = e1_old + mur * (e[1] - e0_old);
        e[n - 1] = en2_old + mur * (e[n - 2] - en1_old);

        let (ea1_old, ean_old) = (ea[na - 2], ea[na - 1]);
        for k in 1..na - 1 {
            ea[k] -= s * (ha[k] - ha[k - 1]);
        }
        ea[na - 1] = ea1_old + mur * (ea[na - 2] - ean_old);
        step += 1;
        let t = step as f64 * dt;
        ea[0] = source(t);

        // probes
        let er = e[grid.k_refl];
        let et = e[grid.k_trans];
        energy_refl += er * er;
        energy_trans += et * et;
        if keep_trace {
            trace_trans.push(et);
        }
        for (i, &w) in omegas.iter().enumerate() {
            let ph = Complex64::from_polar(1.0, -w * t);
            dft_refl[i] += er * ph;
            dft_trans[i] += et * ph;
        }
        peak_r = peak_r.max(er.abs());
        peak_t = peak_t.max(et.abs());
        win_r = win_r.max(er.abs());
        win_t = win_t.max(et.abs());

        if step.is_multiple_of(256) {
            let norm = e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !norm.is_finite() || norm > 1e3 {
                return Err(Error::FdtdUnstable { step, norm, courant: s });
            }
        }
        if step.is_multiple_of(window) {
            if step >= min_steps {
                let quiet = |w: f64, p: f64| w <= DECAY_FLOOR * p || w < 1e-12;
                if quiet(win_r, peak_r) && quiet(win_t, peak_t) {
                    break;
                }
            }
            win_r = 0.0;
            win_t = 0.0;
        }
    }

    // convert absorbed power to the probe normalisation (Σ E² per step, vacuum)
    let eta0 = crate::units::ETA0;
    Ok(RunOutput {
        dft_refl,
        dft_trans,
        energy_refl,
        energy_trans,
        absorbed: absorbed * eta0,
        steps: step,
        trace_trans,
    })
}

fn analysis_grid(cfg: &Fdtd1dConfig, stack: &LayerStack) -> Result<(Vec<f64>, bool)> {
    let half = cfg.bandwidth_ghz / 2.0;
    let requested = if cfg.n_freq == 1 {
        vec![cfg.center_ghz]
    } else {
        layered_em::linear_grid(cfg.center_ghz - half, cfg.center_ghz + half, cfg.n_freq)
    };
    let eps_max = max_eps_real(stack, cfg.center_ghz)?;
    let keep: Vec<f64> = requested
        .iter()
        .copied()
        .filter(|&f| {
            let cells = free_space_wavelength(f) * 1e3 / eps_max.sqrt() / cfg.dx_mm;
            f > 0.0 && cfg.source_level(f) >= VALID_BAND_FLOOR && cells >= MIN_CELLS_PER_WAVELENGTH
        })
        .collect();
    let truncated = keep.len() != requested.len();
    Ok((keep, truncated))
}

/// Run the device and free-space reference simulations and return the
/// normal-incidence transmission/reflection spectrum over the valid band.
pub fn run_fdtd(stack: &LayerStack, cfg: &Fdtd1dConfig) -> Result<FdtdResult> {
    cfg.validate(stack)?;
    let (freqs, truncated) = analysis_grid(cfg, stack)?;
    if freqs.is_empty() {
        return Err(Error::invalid("no analysis frequency inside the valid band"));
    }
    let dut_grid = build_grid(Some(stack), cfg, cfg.courant)?;
    let mut ref_grid = build_grid(None, cfg, cfg.courant)?;
    // identical probe positions for the reference
    ref_grid.k_trans = dut_grid.k_trans;
    let n = dut_grid.ca.len();
    ref_grid.ca.resize(n, 1.0);
    ref_grid.cb.resize(n, cfg.courant);
    ref_grid.sigma_dx.resize(n, 0.0);
    ref_grid.transit_steps = ref_grid.transit_steps.max(dut_grid.transit_steps);

    let dut = simulate(&dut_grid, cfg, &freqs, false)?;
    let reference = simulate(&ref_grid, cfg, &freqs, false)?;

    let dx = cfg.dx_mm * 1e-3;
    let z_t = dut_grid.k_trans as f64 * dx;
    let z_r = dut_grid.k_refl as f64 * dx;
    let (z_f, z_b) = (dut_grid.z_front, dut_grid.z_back);
    let mut t = Vec::with_capacity(freqs.len());
    let mut r = Vec::with_capacity(freqs.len());
    for (i, &f) in freqs.iter().enumerate() {
        let k0 = free_space_wavenumber(f);
        let inc = reference.dft_trans[i];
        let j = Complex64::i();
        t.push(dut.dft_trans[i] / inc * (-j * k0 * (z_b - z_f)).exp());
        r.push(dut.dft_refl[i] / inc * (j * k0 * (z_f - z_r)).exp() * (-j * k0 * (z_t - z_f)).exp());
    }
    let incident = reference.energy_trans;
    let energy = EnergyBudget {
        transmitted: dut.energy_trans / incident,
        reflected: dut.energy_refl / incident,
        absorbed: dut.absorbed / incident,
    };
    let valid_range = (freqs[0], *freqs.last().unwrap());
    Ok(FdtdResult {
        spectrum: Spectrum { frequencies_ghz: freqs, t, r, polarization: Polarization::TE, theta_deg: 0.0 },
        valid_range,
        truncated,
        energy,
        steps: dut.steps,
    })
}

/// Transmitted-probe time trace of the device run (for determinism checks).
pub fn transmitted_trace(stack: &LayerStack, cfg: &Fdtd1dConfig) -> Result<Vec<f64>> {
    cfg.validate(stack)?;
    let (freqs, _) = analysis_grid(cfg, stack)?;
    let grid = build_grid(Some(stack), cfg, cfg.courant)?;
    Ok(simulate(&grid, cfg, &freqs, true)?.trace_trans)
}

/// One row of a TMM/FDTD comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub frequency_ghz: f64,
    /// Centre of the sub-band run that produced this point.
    pub band_center_ghz: f64,
    pub tmm_db: f64,
    pub fdtd_db: f64,
}

impl ComparisonRow {
    pub fn delta_db(&self) -> f64 {
        self.fdtd_db - self.tmm_db
    }
}

/// Compare normal-incidence TMM and FDTD transmission from `f_start` to
/// `f_stop`, one FDTD run per sub-band of width `band_ghz`. Sub-bands run in
/// parallel; rows come back in frequency order.
pub fn compare_with_tmm(stack: &LayerStack, f_start: f64, f_stop: f64, band_ghz: f64) -> Result<Vec<ComparisonRow>> {
    if !(band_ghz > 0.0 && f_stop >= f_start) {
        return Err(Error::invalid("band width must be > 0 and f_stop >= f_start"));
    }
    let n_bands = ((f_stop - f_start) / band_ghz).round() as usize + 1;
    let centers: Vec<f64> = (0..n_bands).map(|i| f_start + band_ghz * i as f64).collect();
    let rows = centers
        .par_iter()
        .map(|&fc| -> Result<Vec<ComparisonRow>> {
            let cfg = Fdtd1dConfig::for_band(stack, fc, band_ghz, 40.0)?;
            let res = run_fdtd(stack, &cfg)?;
            res.spectrum
                .frequencies_ghz
                .iter()
                .zip(&res.spectrum.t)
                .filter(|(f, _)| **f >= f_start - 1e-9 && **f <= f_stop + 1e-9)
                .map(|(&f, t)| {
                    let tmm = layered_em::tmm_coefficients(stack, &Incidence::normal(f, Polarization::TE))?;
                    Ok(ComparisonRow {
                        frequency_ghz: f,
                        band_center_ghz: fc,
                        tmm_db: amplitude_db(tmm.t.norm()),
                        fdtd_db: amplitude_db(t.norm()),
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layered_em::Layer;
    use crate::materials::{Electrical, Material};

    fn slab(eps_real: f64, mm: f64) -> LayerStack {
        let m = Material::new("slab", Electrical::Fixed { eps_real, eps_imag: 0.0 }, 1.0).unwrap();
        LayerStack::new(vec![Layer { material: m, thickness_mm: mm }]).unwrap()
    }

    #[test]
    fn vacuum_stack_is_transparent() {
        let s = slab(1.0, 50.0);
        let cfg = Fdtd1dConfig { n_freq: 7, ..Fdtd1dConfig::for_band(&s, 4.0, 2.0, 40.0).unwrap() };
        let res = run_fdtd(&s, &cfg).unwrap();
        for t in &res.spectrum.t {
            assert!(amplitude_db(t.norm()).abs() < 0.01);
        }
        // Mur terminations: nothing comes back
        for r in &res.spectrum.r {
            assert!(amplitude_db(r.norm()) < -60.0, "{}", amplitude_db(r.norm()));
        }
    }

    #[test]
    fn mur_reflection_below_60_db_with_reduced_courant() {
        let s = slab(1.0, 30.0);
        let cfg = Fdtd1dConfig { courant: 0.9, n_freq: 5, ..Fdtd1dConfig::for_band(&s, 3.0, 1.0, 40.0).unwrap() };
        let res = run_fdtd(&s, &cfg).unwrap();
        for r in &res.spectrum.r {
            assert!(amplitude_db(r.norm()) < -60.0, "{}", amplitude_db(r.norm()));
        }
    }

    #[test]
    fn lossless_slab_matches_tmm() {
        let s = slab(4.0, 50.0);
        for fc in [1.5, 4.0, 7.5] {
            let cfg = Fdtd1dConfig { n_freq: 5, ..Fdtd1dConfig::for_band(&s, fc, 1.0, 40.0).unwrap() };
            let res = run_fdtd(&s, &cfg).unwrap();
            for (f, t) in res.spectrum.frequencies_ghz.iter().zip(&res.spectrum.t) {
                let tmm = layered_em::tmm_coefficients(&s, &Incidence::normal(*f, Polarization::TE)).unwrap().t;
                let d = amplitude_db(t.norm()) - amplitude_db(tmm.norm());
                assert!(d.abs() < 0.3, "{f} GHz: {d}");
            }
            let e = res.energy;
            assert!((e.total() - 1.0).abs() < 5e-3, "{e:?}");
        }
    }

    #[test]
    fn invalid_configs() {
        let s = slab(4.0, 50.0);
        let good = Fdtd1dConfig::for_band(&s, 4.0, 1.0, 40.0).unwrap();
        assert!(run_fdtd(&s, &Fdtd1dConfig { courant: 1.2, ..good.clone() }).is_err());
        assert!(run_fdtd(&s, &Fdtd1dConfig { dx_mm: 5.0, ..good.clone() }).is_err());
        assert!(matches!(run_fdtd(&s, &Fdtd1dConfig { max_steps: 100, ..good }), Err(Error::FdtdNotDecayed(100))));
    }

    #[test]
    fn analysis_points_outside_band_are_dropped() {
        let s = slab(2.0, 20.0);
        let mut cfg = Fdtd1dConfig::for_band(&s, 4.0, 1.0, 40.0).unwrap();
        cfg.n_freq = 5;
        let (kept, truncated) = analysis_grid(&cfg, &s).unwrap();
        assert_eq!(kept.len(), 5);
        assert!(!truncated);
        // a coarse grid cannot resolve the top of the band
        cfg.dx_mm = free_space_wavelength(4.3) * 1e3 / 2f64.sqrt() / 20.0;
        let (kept, truncated) = analysis_grid(&cfg, &s).unwrap();
        assert!(truncated);
        assert!(kept.iter().all(|&f| f <= 4.3));
    }

    #[test]
    fn halving_dx_at_least_halves_error() {
        let s = slab(4.0, 50.0);
        let tmm = layered_em::tmm_coefficients(&s, &Incidence::normal(5.0, Polarization::TE)).unwrap().t;
        let err = |dx_mm: f64| {
            let cfg = Fdtd1dConfig { dx_mm, n_freq: 1, ..Fdtd1dConfig::for_band(&s, 5.0, 1.0, 40.0).unwrap() };
            (run_fdtd(&s, &cfg).unwrap().spectrum.t[0] - tmm).norm()
        };
        let (coarse, fine) = (err(1.0), err(0.5));
        assert!(coarse / fine >= 2.0, "coarse {coarse:e} fine {fine:e}");
    }

    #[test]
    fn identical_config_gives_identical_trace() {
        let s = slab(3.0, 40.0);
        let cfg = Fdtd1dConfig::for_band(&s, 2.0, 0.5, 30.0).unwrap();
        let a = transmitted_trace(&s, &cfg).unwrap();
        let b = transmitted_trace(&s, &cfg).unwrap();
        assert_eq!(a.len(), b.len());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn bare_wall_at_3_5_ghz() {
        let db = crate::materials::builtin_database();
        let wall = LayerStack::load_bearing_wall(&db).unwrap();
        let cfg = Fdtd1dConfig { n_freq: 1, ..Fdtd1dConfig::for_band(&wall, 3.5, 0.1, 40.0).unwrap() };
        let res = run_fdtd(&wall, &cfg).unwrap();
        let db35 = amplitude_db(res.spectrum.t[0].norm());
        assert!((db35 + 23.2).abs() <= 0.5, "{db35}");
        // passive: nothing beyond the injected energy
        assert!(res.energy.total() <= 1.005, "{:?}", res.energy);
    }
}
