//! Spectrum readers: CSV (`freq_GHz,s21_dB[,s21_phase_deg]`, or the `t_dB`,
//! `t_phase_deg` columns of a transmission export) and two-port
//! Touchstone (`.s2p`, MA/DB/RI, any frequency unit).

use std::fmt::Write as _;
use std::io::Read;

use num_complex::Complex64;

use super::{MeasuredSpectrum, SpectrumData, SpectrumMeta};
use crate::error::{Error, Result};
use crate::units::{amplitude_db, db_to_amplitude};

/// Read a CSV spectrum. With a phase column the data is complex, otherwise
/// magnitude-only. Lines starting with `#` are ignored.
pub fn read_csv<R: Read>(reader: R) -> Result<MeasuredSpectrum> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let col = |names: &[&str]| headers.iter().position(|h| names.contains(&h.as_str()));
    // `t_*` columns are what `wallsim transmission` writes.
    let (Some(fi), Some(mi)) = (col(&["freq_ghz"]), col(&["s21_db", "t_db"])) else {
        return Err(Error::Parse(format!(
            "CSV header must contain freq_GHz and s21_dB (found: {})",
            headers.join(",")
        )));
    };
    let pi = col(&["s21_phase_deg", "t_phase_deg"]);

    let mut freqs = Vec::new();
    let mut mags = Vec::new();
    let mut phases = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse().map_err(|_| Error::Parse(format!("row {}: `{raw}` is not a number", line + 1)))
        };
        freqs.push(field(fi)?);
        mags.push(field(mi)?);
        if let Some(pi) = pi {
            phases.push(field(pi)?);
        }
    }
    let data = match pi {
        Some(_) => SpectrumData::Complex(
            mags.iter().zip(&phases).map(|(m, p)| Complex64::from_polar(db_to_amplitude(*m), p.to_radians())).collect(),
        ),
        None => SpectrumData::MagnitudeDb(mags),
    };
    MeasuredSpectrum::new(freqs, data, SpectrumMeta::default())
}

/// CSV in the layout accepted by [`read_csv`].
pub fn write_csv(spectrum: &MeasuredSpectrum) -> String {
    let mut out = String::new();
    match spectrum.data() {
        SpectrumData::Complex(v) => {
            out.push_str("freq_GHz,s21_dB,s21_phase_deg\n");
            for (f, t) in spectrum.frequencies_ghz().iter().zip(v) {
                let _ = writeln!(out, "{f:.6},{:.6},{:.6}", amplitude_db(t.norm()), t.arg().to_degrees());
            }
        }
        SpectrumData::MagnitudeDb(v) => {
            out.push_str("freq_GHz,s21_dB\n");
            for (f, d) in spectrum.frequencies_ghz().iter().zip(v) {
                let _ = writeln!(out, "{f:.6},{d:.6}");
            }
        }
    }
    out
}

#[derive(Clone, Copy)]
enum Format {
    Ma,
    Db,
    Ri,
}

/// Parse S21 out of a two-port Touchstone file. Data may wrap over several
/// lines; the option line defaults to `# GHZ S MA R 50`.
pub fn read_touchstone(text: &str) -> Result<MeasuredSpectrum> {
    let mut scale = 1.0;
    let mut format = Format::Ma;
    let mut seen_options = false;
    let mut numbers = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(opts) = line.strip_prefix('#') {
            if seen_options {
                continue;
            }
            seen_options = true;
            let mut tokens = opts.split_whitespace().map(|t| t.to_ascii_uppercase());
            while let Some(t) = tokens.next() {
                match t.as_str() {
                    "HZ" => scale = 1e-9,
                    "KHZ" => scale = 1e-6,
                    "MHZ" => scale = 1e-3,
                    "GHZ" => scale = 1.0,
                    "MA" => format = Format::Ma,
                    "DB" => format = Format::Db,
                    "RI" => format = Format::Ri,
                    "S" => {}
                    "R" => {
                        tokens.next();
                    }
                    other => {
                        return Err(Error::Parse(format!("line {}: unsupported Touchstone option `{other}`", n + 1)))
                    }
                }
            }
            continue;
        }
        if line.starts_with('[') {
            return Err(Error::Parse(format!("line {}: Touchstone 2.0 keywords are not supported", n + 1)));
        }
        for tok in line.split_whitespace() {
            numbers.push(
                tok.parse::<f64>().map_err(|_| Error::Parse(format!("line {}: `{tok}` is not a number", n + 1)))?,
            );
        }
    }
    if numbers.is_empty() || numbers.len() % 9 != 0 {
        return Err(Error::Parse(format!(
            "two-port data needs 9 values per frequency, found {} values",
            numbers.len()
        )));
    }
    let (freqs, s21): (Vec<f64>, Vec<Complex64>) = numbers
        .chunks_exact(9)
        // Column order: f, S11, S21, S12, S22.
        .map(|row| {
            let (x, y) = (row[3], row[4]);
            let s = match format {
                Format::Ma => Complex64::from_polar(x, y.to_radians()),
                Format::Db => Complex64::from_polar(db_to_amplitude(x), y.to_radians()),
                Format::Ri => Complex64::new(x, y),
            };
            (row[0] * scale, s)
        })
        .unzip();
    MeasuredSpectrum::new(freqs, SpectrumData::Complex(s21), SpectrumMeta::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_magnitude_only() {
        let s = read_csv("freq_GHz, s21_dB\n# comment\n1.0,-20\n2.0,-30.5\n".as_bytes()).unwrap();
        assert!(s.is_magnitude_only());
        assert_eq!(s.magnitudes_db(), vec![-20.0, -30.5]);
    }

    #[test]
    fn csv_round_trip_with_phase() {
        let s = read_csv("freq_GHz,s21_dB,s21_phase_deg\n1,-6.020600,90\n2,-20,-45\n".as_bytes()).unwrap();
        let SpectrumData::Complex(v) = s.data() else { panic!("expected complex") };
        assert!((v[0] - Complex64::new(0.0, 0.5)).norm() < 1e-6);
        let again = read_csv(write_csv(&s).as_bytes()).unwrap();
        assert_eq!(write_csv(&again), write_csv(&s));
    }

    #[test]
    fn csv_accepts_transmission_export() {
        let s = read_csv("freq_GHz,t_dB,t_phase_deg,r_dB,r_phase_deg,pol,theta_deg\n1.0,-3,10,-5,0,TE,0\n".as_bytes())
            .unwrap();
        assert!(!s.is_magnitude_only());
        assert!((s.magnitudes_db()[0] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(read_csv("f,x\n1,2\n".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(read_csv("freq_GHz,s21_dB\n1,abc\n".as_bytes()), Err(Error::Parse(_))));
        assert!(read_csv("freq_GHz,s21_dB\n2,0\n1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn touchstone_formats() {
        let ma = "! test\n# MHz S MA R 50\n1000 0.1 0 0.5 90 0.5 90 0.1 0\n2000 0.1 0 0.25 -90 0.25 -90 0.1 0\n";
        let s = read_touchstone(ma).unwrap();
        assert_eq!(s.frequencies_ghz(), &[1.0, 2.0]);
        let SpectrumData::Complex(v) = s.data() else { panic!() };
        assert!((v[0] - Complex64::new(0.0, 0.5)).norm() < 1e-12);
        assert!((v[1] - Complex64::new(0.0, -0.25)).norm() < 1e-12);

        let db = "# Hz S DB R 50\n3e9 -20 0 -6.0206 180 -6.0206 180 -20 0\n";
        let s = read_touchstone(db).unwrap();
        assert!((s.frequencies_ghz()[0] - 3.0).abs() < 1e-12);
        let SpectrumData::Complex(v) = s.data() else { panic!() };
        assert!((v[0] - Complex64::new(-0.5, 0.0)).norm() < 1e-4);

        let ri = "# GHz S RI R 50\n1.5 0 0 0.3 -0.4\n 0.3 -0.4 0 0\n";
        let SpectrumData::Complex(v) = read_touchstone(ri).unwrap().data().clone() else { panic!() };
        assert_eq!(v[0], Complex64::new(0.3, -0.4));
    }

    #[test]
    fn touchstone_defaults_and_errors() {
        let s = read_touchstone("2 0 0 1 0 1 0 0 0\n").unwrap();
        assert_eq!(s.frequencies_ghz(), &[2.0]);
        assert!(read_touchstone("# GHz S MA R 50\n1 2 3\n").is_err());
        assert!(read_touchstone("# GHz Y MA R 50\n1 0 0 1 0 1 0 0 0\n").is_err());
        assert!(read_touchstone("").is_err());
    }
}
