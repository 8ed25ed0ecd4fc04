use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use pxp_scars::analysis::{build_report, ReportInputs};
use pxp_scars::lyapunov::{eighth_period_dt, ks_entropy, lyapunov_spectrum, monodromy_symmetric, LyapunovSpectrum};
use pxp_scars::quantum::{z2_quench, ObservableKind, ObservableSeries, QuenchConfig};
use pxp_scars::semiclassics::{find_orbit_period, integrate, ModelParams, UnitCellState};
use pxp_scars::wigner::{peak_width, twa_observable_series, twa_sample, wigner_grid, WignerGrid};
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::io::{read_csv, read_json, write_csv, write_json, Meta};

const ANGLE_CONVENTION: &str = "full-angle TDVP variables, Z2 point (0, pi/2)";
const BOUNDARY_TERMS: &str = "open ends use one-sided projectors";

#[derive(Debug)]
pub enum CliError {
    Validation { kind: String, message: String, missing: Vec<String> },
    Numerical { kind: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Numerical { .. } => 3,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Validation { kind, message, missing } if !missing.is_empty() => {
                json!({ "error": kind, "message": message, "missing": missing })
            }
            CliError::Validation { kind, message, .. } | CliError::Numerical { kind, message } => {
                json!({ "error": kind, "message": message })
            }
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::Validation { kind: "InvalidParameter".into(), message: message.into(), missing: Vec::new() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

impl From<pxp_scars::Error> for CliError {
    fn from(e: pxp_scars::Error) -> Self {
        let kind = e.kind().to_string();
        let message = e.to_string();
        match e {
            pxp_scars::Error::MissingInput(missing) => CliError::Validation { kind, message, missing },
            e if e.is_validation() => CliError::Validation { kind, message, missing: Vec::new() },
            _ => CliError::Numerical { kind, message },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical { kind: "Io".into(), message: e.to_string() }
    }
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let text = serde_json::to_string(cfg).expect("config serialises");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

struct Ctx {
    dir: PathBuf,
    meta: Meta,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

/// Runs one command and returns the directory holding its artifacts.
pub fn run(cfg: &RunConfig, out_root: &Path) -> Result<PathBuf, CliError> {
    let hash = config_hash(cfg);
    let dir = out_root.join(format!("{}-{hash}", cfg.command.name()));
    let meta = Meta::new()
        .with("command", cfg.command.name())
        .with("config_hash", &hash)
        .with("config", serde_json::to_string(cfg).expect("config serialises"))
        .with("version", env!("CARGO_PKG_VERSION"));
    use crate::config::Command::*;
    let meta = match cfg.command {
        Orbit | Lyapunov | Twa => meta.with("angle_convention", ANGLE_CONVENTION),
        Wigner => meta.with("wigner_orientation", "constrained peak at (theta1, theta2) = (0, pi)"),
        Quantum => meta.with("boundary_term_convention", BOUNDARY_TERMS),
        Report => meta.with("log_base", "natural"),
    };
    // The report is assembled before anything is written.
    let report = match cfg.command {
        Report => Some(build_report(&load_report_inputs(cfg)?)?),
        _ => None,
    };
    fs::create_dir_all(&dir)?;
    let ctx = Ctx { dir: dir.clone(), meta };
    match cfg.command {
        Orbit => orbit(cfg, &ctx)?,
        Lyapunov => lyapunov(cfg, &ctx)?,
        Wigner => wigner(cfg, &ctx)?,
        Twa => twa(cfg, &ctx)?,
        Quantum => quantum(cfg, &ctx)?,
        Report => write_json(&ctx.path("report.json"), &ctx.meta, &report.unwrap())?,
    }
    Ok(dir)
}

fn orbit(cfg: &RunConfig, ctx: &Ctx) -> Result<(), CliError> {
    let p = &cfg.params;
    let l = p.l.unwrap();
    let params = ModelParams::new(p.omega.unwrap(), l)?;
    let traj = integrate(&UnitCellState::z2(l), &params, p.t_end.unwrap(), p.dt.unwrap())?;
    let revival = find_orbit_period(&traj, PI)?;
    let angle = find_orbit_period(&traj, 2.0 * PI).ok();
    let mut header = vec!["t".to_string()];
    header.extend((1..=l).map(|i| format!("theta_{i}")));
    let stride = p.stride.unwrap();
    let rows: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(&traj.states)
        .step_by(stride)
        .map(|(t, s)| std::iter::once(*t).chain(s.thetas.iter().copied()).collect())
        .collect();
    write_csv(&ctx.path("trajectory.csv"), &ctx.meta, &header, &rows)?;
    let body = json!({
        "period": revival.period,
        "frequency": revival.frequency,
        "closure_error": revival.closure_error,
        "angle_orbit": angle,
    });
    write_json(&ctx.path("orbit.json"), &ctx.meta, &body)?;
    Ok(())
}

/// Angular frequency of the Z₂ orbit in the TDVP angles (one full 2π loop).
fn orbit_frequency(omega: f64) -> Result<f64, CliError> {
    let params = ModelParams::new(omega, 2)?;
    let t_end = 1.1 * 2.0 * PI * 1.51 * 2.0 / omega;
    let traj = integrate(&UnitCellState::z2(2), &params, t_end, 1e-3 / omega)?;
    Ok(find_orbit_period(&traj, 2.0 * PI)?.frequency)
}

fn lyapunov(cfg: &RunConfig, ctx: &Ctx) -> Result<(), CliError> {
    let p = &cfg.params;
    let omega = p.omega.unwrap();
    let l_max = p.l.unwrap();
    let w = orbit_frequency(omega)?;
    let dt = eighth_period_dt(w, p.steps_per_eighth.unwrap());
    let sizes: Vec<usize> = (1..=l_max / 2).map(|k| 2 * k).collect();
    let spectra: Vec<LyapunovSpectrum> = sizes
        .par_iter()
        .map(|&l| {
            let params = ModelParams::new(omega, l)?;
            lyapunov_spectrum(&monodromy_symmetric(&params, w, dt)?)
        })
        .collect::<Result<_, _>>()?;
    let mut header = vec!["L".to_string()];
    header.extend((1..=l_max).map(|i| format!("lambda_{i}")));
    let rows: Vec<Vec<f64>> = spectra
        .iter()
        .map(|s| std::iter::once(s.unit_cell as f64).chain(s.exponents.iter().copied()).collect())
        .collect();
    write_csv(&ctx.path("spectrum.csv"), &ctx.meta, &header, &rows)?;
    let summary = |s: &LyapunovSpectrum| {
        json!({
            "L": s.unit_cell,
            "h_ks": ks_entropy(s),
            "lambda_max": s.max(),
            "pairing_residual": s.pairing_residual(),
        })
    };
    let last = spectra.last().unwrap();
    let mut body = summary(last);
    body["orbit_frequency"] = json!(w);
    body["sweep"] = Value::Array(spectra.iter().map(summary).collect());
    write_json(&ctx.path("ks.json"), &ctx.meta, &body)?;
    Ok(())
}

fn grid_rows(g: &WignerGrid) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(g.n1() * g.n2());
    for i in 0..g.n1() {
        for j in 0..g.n2() {
            rows.push(vec![g.theta1[i], g.theta2[j], g.values[(i, j)]]);
        }
    }
    rows
}

fn wigner(cfg: &RunConfig, ctx: &Ctx) -> Result<(), CliError> {
    let n = cfg.params.grid.unwrap();
    let header: Vec<String> = ["theta1", "theta2", "W"].map(String::from).to_vec();
    let con = wigner_grid(n, n, true)?;
    let unc = wigner_grid(n, n, false)?;
    write_csv(&ctx.path("wigner_constrained.csv"), &ctx.meta, &header, &grid_rows(&con))?;
    write_csv(&ctx.path("wigner_unconstrained.csv"), &ctx.meta, &header, &grid_rows(&unc))?;
    let wc = peak_width(&con);
    let wu = peak_width(&unc);
    let body = json!({
        "delta_theta0": wc.second_moment,
        "width_ratio": wu.second_moment / wc.second_moment,
        "constrained": { "normalization": con.normalization(), "width": wc },
        "unconstrained": { "normalization": unc.normalization(), "width": wu },
    });
    write_json(&ctx.path("width.json"), &ctx.meta, &body)?;
    Ok(())
}

fn twa(cfg: &RunConfig, ctx: &Ctx) -> Result<(), CliError> {
    let p = &cfg.params;
    let n = p.samples.unwrap();
    let samples = twa_sample(p.seed.unwrap(), n)?;
    let rows: Vec<Vec<f64>> = samples.iter().map(|s| vec![s.theta1, s.theta2, s.weight]).collect();
    let header: Vec<String> = ["theta1", "theta2", "weight"].map(String::from).to_vec();
    write_csv(&ctx.path("samples.csv"), &ctx.meta, &header, &rows)?;
    let params = ModelParams::new(p.omega.unwrap(), 2)?;
    let (dt, stride) = (p.dt.unwrap(), p.stride.unwrap());
    let n_out = (p.t_end.unwrap() / (dt * stride as f64) + 1e-9).floor() as usize;
    let series = twa_observable_series(&samples, &params, dt, stride, n_out)?;
    let header: Vec<String> = ["t", "obs_mean", "obs_stderr", "n_alive"].map(String::from).to_vec();
    let rows: Vec<Vec<f64>> = (0..series.times.len())
        .map(|k| vec![series.times[k], series.mean[k], series.stderr[k], series.n_alive[k] as f64])
        .collect();
    write_csv(&ctx.path("series.csv"), &ctx.meta, &header, &rows)?;
    let negative = samples.iter().filter(|s| s.weight < 0.0).count();
    let body = json!({
        "samples": n,
        "negative_fraction": negative as f64 / n as f64,
        "dropped": series.dropped,
        "observable": "sin^2 of the site-2 angle",
    });
    write_json(&ctx.path("twa.json"), &ctx.meta, &body)?;
    Ok(())
}

fn quantum(cfg: &RunConfig, ctx: &Ctx) -> Result<(), CliError> {
    let p = &cfg.params;
    let n = p.n_sites.unwrap();
    let q = QuenchConfig {
        n_sites: n,
        boundary: p.boundary.unwrap().into(),
        omega: p.omega.unwrap(),
        t_end: p.t_end.unwrap(),
        dt: p.dt.unwrap(),
        sample_dt: p.sample_dt.unwrap(),
        entropy_stride: p.entropy_stride.unwrap(),
        method: p.method.unwrap().into(),
    };
    let series = z2_quench(&q)?;
    let header: Vec<String> = ["t", "value"].map(String::from).to_vec();
    let mut rates = serde_json::Map::new();
    for (name, s) in [("density", &series.density), ("entropy", &series.entropy), ("echo", &series.echo)] {
        let rows: Vec<Vec<f64>> = s.times.iter().zip(&s.values).map(|(t, v)| vec![*t, *v]).collect();
        write_csv(&ctx.path(&format!("{name}.csv")), &ctx.meta, &header, &rows)?;
        let fit = pxp_scars::quantum::fit_observable(s)?;
        rates.insert(name.into(), json!({ "value": fit.rate, "stderr": fit.stderr, "points": fit.n_points }));
    }
    let body = json!({
        "N": n,
        "boundary": q.boundary,
        "dim": series.dim,
        "method": q.method,
        "dt": q.dt,
        "omega": q.omega,
        "boundary_term_convention": BOUNDARY_TERMS,
        "rates": rates,
    });
    write_json(&ctx.path("fit.json"), &ctx.meta, &body)?;
    Ok(())
}

fn load_series(dir: Option<&PathBuf>, name: &str, kind: ObservableKind) -> Option<ObservableSeries> {
    let (_, rows) = read_csv(&dir?.join(format!("{name}.csv"))).ok()?;
    Some(ObservableSeries { kind, times: rows.iter().map(|r| r[0]).collect(), values: rows.iter().map(|r| r[1]).collect() })
}

fn load_number(path: Option<PathBuf>, key: &str) -> Option<f64> {
    read_json(&path?).ok()?.get(key)?.as_f64()
}

fn load_report_inputs(cfg: &RunConfig) -> Result<ReportInputs, CliError> {
    let p = &cfg.params;
    let ks = p.lyapunov_dir.as_ref().map(|d| d.join("ks.json"));
    let width = p.wigner_dir.as_ref().map(|d| d.join("width.json"));
    let inputs = ReportInputs {
        h_ks: load_number(ks.clone(), "h_ks"),
        lambda_max_exponent: load_number(ks, "lambda_max"),
        delta_theta0: load_number(width, "delta_theta0"),
        density: load_series(p.quantum_dir.as_ref(), "density", ObservableKind::RydbergDensity),
        entropy: load_series(p.quantum_dir.as_ref(), "entropy", ObservableKind::Entropy),
        echo: load_series(p.quantum_dir.as_ref(), "echo", ObservableKind::Echo),
    };
    let mut missing = Vec::new();
    for (name, ok) in [
        ("h_ks", inputs.h_ks.is_some()),
        ("delta_theta0", inputs.delta_theta0.is_some()),
        ("density", inputs.density.is_some()),
        ("entropy", inputs.entropy.is_some()),
        ("echo", inputs.echo.is_some()),
    ] {
        if !ok {
            missing.push(name.to_string());
        }
    }
    if !missing.is_empty() {
        return Err(pxp_scars::Error::MissingInput(missing).into());
    }
    Ok(inputs)
}

