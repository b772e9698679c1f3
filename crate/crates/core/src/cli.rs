//! The `wallsim` command line.
//!
//! Tabular results are CSV: written to `--out` when given (with the summary
//! on stdout), otherwise to stdout (with the summary on stderr). Exit codes:
//! 0 success, 1 I/O failure, 2 usage or invalid input, 3 infeasible design or
//! diverged solver.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::antenna_link::{improvement_onset, link_spectrum, Combination, UnitCell};
use crate::design_sweep::{min_feasible_separation, run_sweep};
use crate::error::{Error, Result};
use crate::fdtd::compare_with_tmm;
use crate::inverse::{fit_permittivity, normalize_spectrum, read_csv, read_touchstone, FitObjective, MeasuredSpectrum};
use crate::layered_em::{linear_grid, tmm_coefficients, transmission_spectrum, Incidence, LayerStack, Polarization};
use crate::materials::{Electrical, MaterialDb};
use crate::scenario::{base_database, Resolved, Scenario};
use crate::thermal::{solve_temperature, u_value_analytical, voxelize_unit_cell, write_vtk, UValueResult};
use crate::units::amplitude_db;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Tolerance printed alongside the FDTD comparison, dB.
const FDTD_AGREEMENT_DB: f64 = 0.5;

#[derive(Debug, Parser)]
#[command(name = "wallsim", version, about = "EM and thermal models of multi-layer walls with embedded antennas")]
struct Cli {
    /// Material database (JSON) merged over the built-in one.
    #[arg(long, global = true, value_name = "FILE")]
    materials: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plane-wave transmission spectrum of the wall, optionally with the antenna path.
    Transmission(TransmissionArgs),
    /// U-value by the layered model and/or the finite-volume solver.
    Uvalue(UvalueArgs),
    /// Fit power-law permittivity coefficients to a measured slab spectrum.
    FitPermittivity(FitArgs),
    /// Antenna-separation sweep under a U-value limit.
    Sweep(SweepArgs),
    /// Compare the transfer-matrix spectrum with a 1-D FDTD run.
    FdtdValidate(FdtdArgs),
    /// Material database commands.
    #[command(subcommand)]
    Materials(MaterialsCommand),
}

#[derive(Debug, Subcommand)]
enum MaterialsCommand {
    /// List the available materials.
    List {
        /// Print the database as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
struct ScenarioArg {
    /// Scenario file (JSON); defaults to the reference configuration.
    #[arg(long, value_name = "FILE")]
    scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TransmissionArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Add the back-to-back antenna path of the scenario's unit cell.
    #[arg(long)]
    with_antennas: bool,
    /// Incidence angle, degrees.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// TE, TM, RHCP or LHCP.
    #[arg(long, default_value = "TE")]
    pol: Polarization,
    /// Frequency band, GHz.
    #[arg(long, num_args = 2, value_names = ["START", "STOP"], default_values_t = [1.0, 8.0])]
    band: Vec<f64>,
    #[arg(long, default_value_t = 141)]
    points: usize,
    /// incoherent, coherent_best or coherent_worst.
    #[arg(long, default_value = "incoherent")]
    combine: Combination,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct UvalueArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Finite-volume solve of the unit cell.
    #[arg(long)]
    fv: bool,
    /// Layered (one-dimensional) model.
    #[arg(long)]
    analytical: bool,
    /// Embed the antenna system in the finite-volume cell.
    #[arg(long)]
    with_antennas: bool,
    /// Cell side (antenna separation), mm.
    #[arg(long, value_name = "MM")]
    separation: Option<f64>,
    /// Write the finite-volume temperature field as a VTK file.
    #[arg(long, value_name = "FILE")]
    vtk: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Measured spectrum: CSV or Touchstone `.s2p`.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Empty-fixture reference to normalise by.
    #[arg(long, value_name = "FILE")]
    reference: Option<PathBuf>,
    /// Resample the reference onto the input grid when they differ.
    #[arg(long)]
    interpolate: bool,
    /// Slab thickness, mm.
    #[arg(long, value_name = "MM")]
    thickness: f64,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed value of the frequency exponent of the real part.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    a_bounds: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    c_bounds: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    d_bounds: Option<Vec<f64>>,
    /// Fit complex transmission (magnitude and phase).
    #[arg(long)]
    complex: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Comma-separated separations, mm.
    #[arg(long, value_delimiter = ',', value_name = "MM,...")]
    separations: Option<Vec<f64>>,
    /// Comma-separated frequencies, GHz.
    #[arg(long, value_delimiter = ',', value_name = "GHZ,...")]
    frequencies: Option<Vec<f64>>,
    /// U-value limit, W/(m²·K).
    #[arg(long)]
    u_limit: Option<f64>,
    /// Bisect the smallest feasible separation to 1 mm.
    #[arg(long)]
    refine: bool,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FdtdArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Frequency band, GHz.
    #[arg(long, num_args = 2, value_names = ["START", "STOP"], default_values_t = [1.0, 8.0])]
    band: Vec<f64>,
    /// Width of each FDTD sub-band, GHz.
    #[arg(long, default_value_t = 0.1)]
    sub_band: f64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Io(_) => EXIT_IO,
                Error::FdtdUnstable { .. } | Error::FdtdNotDecayed(_) => EXIT_INFEASIBLE,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let mut db = base_database()?;
    if let Some(path) = &cli.materials {
        db.merge(MaterialDb::load(path)?);
    }
    let load = |s: &ScenarioArg| -> Result<(Scenario, Resolved)> {
        let scenario = match &s.scenario {
            Some(p) => Scenario::load(p)?,
            None => Scenario::default(),
        };
        let resolved = scenario.resolve(&db)?;
        Ok((scenario, resolved))
    };
    match cli.command {
        Command::Transmission(a) => {
            let (_, r) = load(&a.scenario)?;
            cmd_transmission(&a, &r, stdout, stderr)
        }
        Command::Uvalue(a) => {
            let (s, r) = load(&a.scenario)?;
            cmd_uvalue(&a, &s, &r, stdout)
        }
        Command::FitPermittivity(a) => {
            let (s, _) = load(&a.scenario)?;
            cmd_fit(&a, &s, stdout)
        }
        Command::Sweep(a) => {
            let (s, r) = load(&a.scenario)?;
            cmd_sweep(&a, &s, &r, stdout, stderr)
        }
        Command::FdtdValidate(a) => {
            let (_, r) = load(&a.scenario)?;
            cmd_fdtd_validate(&a, &r, stdout, stderr)
        }
        Command::Materials(MaterialsCommand::List { json }) => cmd_materials(&db, json, stdout),
    }
}

/// Write `csv` to `path` or to stdout; return the stream for the summary.
fn emit<'a>(
    csv: &str,
    path: Option<&Path>,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
) -> Result<&'a mut dyn Write> {
    match path {
        Some(p) => {
            std::fs::write(p, csv)?;
            Ok(stdout)
        }
        None => {
            stdout.write_all(csv.as_bytes())?;
            Ok(stderr)
        }
    }
}

fn band(v: &[f64]) -> Result<(f64, f64)> {
    match v {
        [a, b] if a.is_finite() && b.is_finite() && b > a => Ok((*a, *b)),
        _ => Err(Error::invalid("band needs START < STOP (GHz)")),
    }
}

fn describe_stack(stack: &LayerStack) -> String {
    stack.layers().iter().map(|l| format!("{} {} mm", l.material.name, l.thickness_mm)).collect::<Vec<_>>().join(" | ")
}

fn wall_db(stack: &LayerStack, f: f64, theta: f64, pol: Polarization) -> Result<f64> {
    let inc = Incidence { frequency_ghz: f, theta_deg: theta, polarization: pol };
    Ok(amplitude_db(tmm_coefficients(stack, &inc)?.t.norm()))
}

fn cmd_transmission(a: &TransmissionArgs, r: &Resolved, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let (f0, f1) = band(&a.band)?;
    let mut summary = String::new();
    writeln!(summary, "wall: {}", describe_stack(&r.stack)).unwrap();
    writeln!(summary, "incidence: theta = {} deg, {}", a.theta, a.pol).unwrap();
    let csv = if a.with_antennas {
        let freqs = linear_grid(f0, f1, a.points);
        let pts = link_spectrum(&r.cell, &freqs, a.theta, a.pol, a.combine)?;
        let mut csv = String::from("freq_GHz,wall_dB,antenna_dB,combined_dB,improvement_dB,pol,theta_deg\n");
        for p in &pts {
            writeln!(
                csv,
                "{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6}",
                p.frequency_ghz, p.wall_db, p.antenna_db, p.combined_db, p.improvement_db, a.pol, a.theta
            )
            .unwrap();
        }
        writeln!(summary, "cell: {} mm, combination: {:?}", r.cell.size_x_mm, a.combine).unwrap();
        for f in [3.5, 8.0] {
            let p = link_spectrum(&r.cell, &[f], a.theta, a.pol, a.combine)?[0];
            writeln!(
                summary,
                "loss @ {f:.1} GHz: wall {:.2} dB, with antennas {:.2} dB, improvement {:.2} dB",
                -p.wall_db, -p.combined_db, p.improvement_db
            )
            .unwrap();
        }
        match improvement_onset(&pts) {
            Some(f) => writeln!(summary, "improvement onset: {f:.3} GHz").unwrap(),
            None => writeln!(summary, "improvement onset: none in band").unwrap(),
        }
        csv
    } else {
        let spectrum = transmission_spectrum(&r.stack, f0, f1, a.points, a.theta, a.pol)?;
        for f in [3.5, 8.0] {
            writeln!(summary, "loss @ {f:.1} GHz: {:.2} dB", -wall_db(&r.stack, f, a.theta, a.pol)?).unwrap();
        }
        spectrum.to_csv()
    };
    let s = emit(&csv, a.out.as_deref(), stdout, stderr)?;
    s.write_all(summary.as_bytes())?;
    Ok(EXIT_OK)
}

fn u_row(out: &mut String, label: &str, u: &UValueResult, delta_t: f64) {
    writeln!(
        out,
        "{label:<14} {:>10.6} {:>10.4} {:>9} {:>10} {:>10.2e}",
        u.u,
        u.u * delta_t,
        if u.converged { "yes" } else { "no" },
        u.iterations,
        u.residual
    )
    .unwrap();
}

fn cmd_uvalue(a: &UvalueArgs, s: &Scenario, r: &Resolved, stdout: &mut dyn Write) -> Result<i32> {
    let (analytical, fv) = if !a.fv && !a.analytical { (true, true) } else { (a.analytical, a.fv) };
    if a.vtk.is_some() && !fv {
        return Err(Error::invalid("--vtk needs the finite-volume solve (--fv)"));
    }
    let mut cell = if a.with_antennas { r.cell.clone() } else { r.bare_cell() };
    if let Some(sep) = a.separation {
        cell = cell.resized(sep);
    }
    let mut out = String::new();
    writeln!(out, "wall: {}", describe_stack(&r.stack)).unwrap();
    writeln!(
        out,
        "cell: {} mm{}",
        cell.size_x_mm,
        if cell.system.is_some() { " with antenna system" } else { ", no embedded features" }
    )
    .unwrap();
    writeln!(
        out,
        "{:<14} {:>10} {:>10} {:>9} {:>10} {:>10}",
        "method", "U_W/m2K", "q_W/m2", "converged", "iterations", "residual"
    )
    .unwrap();
    let mut code = EXIT_OK;
    if analytical {
        u_row(&mut out, "analytical", &u_value_analytical(&r.stack, &s.boundary)?, s.boundary.delta_t());
    }
    if fv {
        let grid = voxelize_unit_cell(&cell, &r.db, &s.thermal.voxel)?;
        let sol = solve_temperature(&grid, &s.boundary, s.thermal.tolerance, s.thermal.max_iter)?;
        u_row(&mut out, "finite-volume", &sol.result, s.boundary.delta_t());
        let (nx, ny, nz) = grid.dims();
        writeln!(out, "grid: {nx} x {ny} x {nz} voxels, balance error {:.2e}", sol.result.balance_error).unwrap();
        if let Some(path) = &a.vtk {
            let file = std::io::BufWriter::new(std::fs::File::create(path)?);
            write_vtk(&grid, &sol.temperature_k, file)?;
        }
        if !sol.result.converged {
            writeln!(out, "finite-volume solve did not converge").unwrap();
            code = EXIT_INFEASIBLE;
        }
    }
    stdout.write_all(out.as_bytes())?;
    Ok(code)
}

fn read_spectrum(path: &Path) -> Result<MeasuredSpectrum> {
    let is_s2p = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("s2p"));
    let mut spectrum =
        if is_s2p { read_touchstone(&std::fs::read_to_string(path)?)? } else { read_csv(std::fs::File::open(path)?)? };
    spectrum.meta.fixture_id = Some(path.display().to_string());
    Ok(spectrum)
}

fn bounds(v: &Option<Vec<f64>>, default: (f64, f64)) -> (f64, f64) {
    match v.as_deref() {
        Some([lo, hi]) => (*lo, *hi),
        _ => default,
    }
}

fn cmd_fit(a: &FitArgs, s: &Scenario, stdout: &mut dyn Write) -> Result<i32> {
    let mut spectrum = read_spectrum(&a.input)?;
    if let Some(reference) = &a.reference {
        spectrum = normalize_spectrum(&spectrum, &read_spectrum(reference)?, a.interpolate)?;
    }
    let mut cfg = s.fit.clone();
    cfg.n_starts = a.starts.unwrap_or(cfg.n_starts);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.b = a.b.unwrap_or(cfg.b);
    cfg.bounds.a = bounds(&a.a_bounds, cfg.bounds.a);
    cfg.bounds.c = bounds(&a.c_bounds, cfg.bounds.c);
    cfg.bounds.d = bounds(&a.d_bounds, cfg.bounds.d);
    if a.complex {
        cfg.objective = FitObjective::Complex;
    }
    let r = fit_permittivity(&spectrum, a.thickness, &cfg)?;

    let mut out = String::new();
    writeln!(out, "input: {} ({} points, {} mm slab)", a.input.display(), spectrum.len(), a.thickness).unwrap();
    if !spectrum.meta.flagged.is_empty() {
        writeln!(out, "reference below -100 dB at {} points", spectrum.meta.flagged.len()).unwrap();
    }
    let m = r.model;
    writeln!(out, "a = {:.4}\nb = {} (fixed)\nc = {:.4}\nd = {:.4}", m.a, m.b, m.c, m.d).unwrap();
    writeln!(out, "residual = {:.4} dB RMS", r.residual_db).unwrap();
    writeln!(
        out,
        "converged = {} (best of {} starts: #{}, {} iterations)",
        if r.converged { "yes" } else { "no" },
        r.starts.len(),
        r.best_start,
        r.iterations
    )
    .unwrap();
    for w in &r.warnings {
        writeln!(out, "warning: {w}").unwrap();
    }
    stdout.write_all(out.as_bytes())?;
    Ok(if r.converged { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn cmd_sweep(a: &SweepArgs, s: &Scenario, r: &Resolved, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let mut cfg = s.sweep.clone();
    if let Some(v) = &a.separations {
        cfg.separations_mm = v.clone();
    }
    if let Some(v) = &a.frequencies {
        cfg.frequencies_ghz = v.clone();
    }
    cfg.u_limit = a.u_limit.unwrap_or(cfg.u_limit);
    let template: &UnitCell = &r.cell;
    let result = run_sweep(&cfg, template, &r.db)?;

    let mut summary = String::new();
    writeln!(summary, "{:>13} {:>10} {:>9} {:>20}", "separation_mm", "U_W/m2K", "feasible", "mean_improvement_dB")
        .unwrap();
    for row in &result.rows {
        writeln!(
            summary,
            "{:>13} {:>10.5} {:>9} {:>20.2}",
            row.separation_mm,
            row.thermal.u,
            if row.feasible { "yes" } else { "no" },
            row.mean_improvement_db
        )
        .unwrap();
    }
    writeln!(summary, "U limit: {} W/(m²·K), bare wall: {:.5}", cfg.u_limit, result.bare_u).unwrap();
    match result.smallest_feasible_mm() {
        Some(sm) => writeln!(summary, "smallest feasible separation: {sm} mm").unwrap(),
        None => writeln!(summary, "smallest feasible separation: none").unwrap(),
    }
    if a.refine && result.selected_mm.is_some() {
        let sorted = {
            let mut c = cfg.clone();
            c.separations_mm.sort_by(f64::total_cmp);
            c.separations_mm.dedup();
            c
        };
        let m = min_feasible_separation(&sorted, template, &r.db, true)?;
        if let Some(sm) = m.separation_mm {
            writeln!(summary, "smallest feasible separation (1 mm bisection): {sm} mm").unwrap();
        }
    }
    match result.selected_mm {
        Some(sel) => writeln!(summary, "selected: {sel} mm").unwrap(),
        None => writeln!(summary, "selected: none").unwrap(),
    }
    writeln!(summary, "rationale: {}", result.rationale).unwrap();
    for d in &result.diagnostics {
        writeln!(summary, "note: {d}").unwrap();
    }
    let sink = emit(&result.to_csv(), a.out.as_deref(), stdout, stderr)?;
    sink.write_all(summary.as_bytes())?;
    Ok(if result.selected_mm.is_some() { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn cmd_fdtd_validate(a: &FdtdArgs, r: &Resolved, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let (f0, f1) = band(&a.band)?;
    let rows = compare_with_tmm(&r.stack, f0, f1, a.sub_band)?;
    let mut csv = String::from("freq_GHz,band_center_GHz,tmm_dB,fdtd_dB,delta_dB\n");
    for row in &rows {
        writeln!(
            csv,
            "{:.6},{:.6},{:.6},{:.6},{:.6}",
            row.frequency_ghz,
            row.band_center_ghz,
            row.tmm_db,
            row.fdtd_db,
            row.delta_db()
        )
        .unwrap();
    }
    let worst = rows.iter().max_by(|x, y| x.delta_db().abs().total_cmp(&y.delta_db().abs()));
    let mut summary = String::new();
    writeln!(summary, "wall: {}", describe_stack(&r.stack)).unwrap();
    writeln!(summary, "points compared: {}", rows.len()).unwrap();
    if let Some(w) = worst {
        let verdict = if w.delta_db().abs() <= FDTD_AGREEMENT_DB { "within" } else { "exceeds" };
        writeln!(
            summary,
            "max |delta| = {:.3} dB at {:.3} GHz ({verdict} {FDTD_AGREEMENT_DB} dB)",
            w.delta_db().abs(),
            w.frequency_ghz
        )
        .unwrap();
    }
    let sink = emit(&csv, a.out.as_deref(), stdout, stderr)?;
    sink.write_all(summary.as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_materials(db: &MaterialDb, json: bool, stdout: &mut dyn Write) -> Result<i32> {
    if json {
        writeln!(stdout, "{}", db.to_json()?)?;
        return Ok(EXIT_OK);
    }
    let mut out = String::new();
    writeln!(out, "{:<16} {:<10} {:>10} {:>12} {:>10}", "name", "model", "eps'@3.5", "eps''@3.5", "lambda").unwrap();
    for m in db.iter() {
        let kind = match m.electrical {
            Electrical::Itu(_) => "power-law",
            Electrical::Fixed { .. } => "fixed",
            Electrical::Conductor { .. } => "conductor",
        };
        let (re, im) = match m.permittivity_at(3.5) {
            Ok(e) => (format!("{:.4}", e.eps_real), format!("{:.4}", e.eps_imag)),
            Err(_) => ("-".to_owned(), "-".to_owned()),
        };
        writeln!(out, "{:<16} {:<10} {:>10} {:>12} {:>10}", m.name, kind, re, im, m.thermal_conductivity).unwrap();
    }
    stdout.write_all(out.as_bytes())?;
    Ok(EXIT_OK)
}
