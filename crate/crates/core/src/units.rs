//! Physical constants and the single place where public GHz/mm quantities are
//! converted to SI.

use std::f64::consts::PI;

/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability, H/m.
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;
/// Free-space wave impedance, ohm.
pub const ETA0: f64 = 376.730_313_668;

/// GHz to Hz.
#[inline]
pub fn ghz_to_hz(f_ghz: f64) -> f64 {
    f_ghz * 1e9
}

/// Angular frequency in rad/s for a frequency given in GHz.
#[inline]
pub fn angular_frequency(f_ghz: f64) -> f64 {
    2.0 * PI * ghz_to_hz(f_ghz)
}

/// Free-space wavenumber in rad/m.
#[inline]
pub fn free_space_wavenumber(f_ghz: f64) -> f64 {
    angular_frequency(f_ghz) / C0
}

/// Free-space wavelength in metres.
#[inline]
pub fn free_space_wavelength(f_ghz: f64) -> f64 {
    C0 / ghz_to_hz(f_ghz)
}

#[inline]
pub fn mm_to_m(mm: f64) -> f64 {
    mm * 1e-3
}

#[inline]
pub fn m_to_mm(m: f64) -> f64 {
    m * 1e3
}

/// Amplitude ratio to dB (20·log10).
#[inline]
pub fn amplitude_db(x: f64) -> f64 {
    20.0 * x.log10()
}

/// Power ratio to dB (10·log10).
#[inline]
pub fn power_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[inline]
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

#[inline]
pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impedance_matches_constants() {
        assert!((ETA0 - (MU0 / EPS0).sqrt()).abs() < 1e-6);
        assert!((C0 - 1.0 / (MU0 * EPS0).sqrt()).abs() < 1.0);
    }

    #[test]
    fn db_round_trip() {
        assert!((db_to_amplitude(amplitude_db(0.3)) - 0.3).abs() < 1e-15);
        assert!((db_to_power(-6.3) - 0.234_422_881_531_99).abs() < 1e-12);
    }
}
