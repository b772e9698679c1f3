//! Recover power-law permittivity coefficients from a noisy synthetic
//! transmission measurement of a concrete slab.
//!
//! Through a thick lossy slab the magnitude mostly constrains the
//! attenuation, i.e. the ratio of `c` to `√a`; the reproduced spectrum is the
//! quantity to judge.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use wallsim::inverse::{fit_permittivity, insertion_transmission, FitConfig, MeasuredSpectrum};
use wallsim::layered_em::linear_grid;
use wallsim::materials::PermittivityModel;
use wallsim::units::amplitude_db;

fn spectrum_db(m: &PermittivityModel, thickness_mm: f64, freqs: &[f64]) -> wallsim::Result<Vec<f64>> {
    freqs.iter().map(|&f| Ok(amplitude_db(insertion_transmission(m, thickness_mm, f)?.norm()))).collect()
}

fn main() -> wallsim::Result<()> {
    let truth = PermittivityModel::new(5.84, 0.0, 0.205, 0.06)?;
    let thickness_mm = 290.0;
    let freqs = linear_grid(2.0, 8.0, 121);
    let clean = spectrum_db(&truth, thickness_mm, &freqs)?;
    let noise = Normal::new(0.0, 0.5).expect("valid sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noisy: Vec<f64> = clean.iter().map(|d| d + noise.sample(&mut rng)).collect();
    let measured = MeasuredSpectrum::magnitude_db(freqs.clone(), noisy)?;

    let fit = fit_permittivity(&measured, thickness_mm, &FitConfig::default())?;
    let m = fit.model;
    let fitted = spectrum_db(&m, thickness_mm, &freqs)?;
    let dev = (clean.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / clean.len() as f64).sqrt();
    println!("truth:  a = {:.3}  c = {:.4}  d = {:.4}", truth.a, truth.c, truth.d);
    println!("fitted: a = {:.3}  c = {:.4}  d = {:.4}", m.a, m.c, m.d);
    println!(
        "residual to the noisy data: {:.3} dB RMS ({} starts, best #{})",
        fit.residual_db,
        fit.starts.len(),
        fit.best_start
    );
    println!("deviation from the clean spectrum: {dev:.3} dB RMS");
    for w in &fit.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
