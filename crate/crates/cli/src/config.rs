use std::path::PathBuf;

use clap::{Args, ValueEnum};
use pxp_scars::quantum::{Boundary, Method};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Orbit,
    Lyapunov,
    Wigner,
    Twa,
    Quantum,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Orbit => "orbit",
            Command::Lyapunov => "lyapunov",
            Command::Wigner => "wigner",
            Command::Twa => "twa",
            Command::Quantum => "quantum",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryArg {
    Open,
    Periodic,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::Periodic => Boundary::Periodic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Krylov,
    Rk4,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Krylov => Method::Krylov,
            MethodArg::Rk4 => Method::Rk4,
        }
    }
}

/// Parameters shared by the config file and the command line. Every field
/// is optional here; per-command defaults are filled in by [`resolve`].
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Rabi frequency Ω.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Unit cell size (orbit) or largest cell of the sweep (lyapunov).
    #[arg(long = "L", id = "L")]
    #[serde(rename = "L")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[arg(long = "t-end")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Keep every k-th integration step in trajectory and series output.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    /// Integration steps per eighth of the orbit period.
    #[arg(long = "steps-per-eighth")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_per_eighth: Option<usize>,
    /// Gauss–Legendre nodes per axis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Chain length for exact evolution.
    #[arg(long = "N", id = "N")]
    #[serde(rename = "N")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryArg>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodArg>,
    /// Spacing of the recorded quantum observables.
    #[arg(long = "sample-dt")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_dt: Option<f64>,
    #[arg(long = "entropy-stride")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_stride: Option<usize>,
    #[arg(long = "lyapunov-dir")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lyapunov_dir: Option<PathBuf>,
    #[arg(long = "wigner-dir")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wigner_dir: Option<PathBuf>,
    #[arg(long = "quantum-dir")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantum_dir: Option<PathBuf>,
}

impl Params {
    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: Params) -> Params {
        macro_rules! pick {
            ($($f:ident),*) => { Params { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            omega, l, dt, t_end, stride, steps_per_eighth, grid, seed, samples, n_sites, boundary, method,
            sample_dt, entropy_stride, lyapunov_dir, wigner_dir, quantum_dir
        )
    }
}

/// Fully resolved configuration. Serialised to JSON it is both the run
/// metadata and the input of the run-directory hash.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(flatten)]
    pub params: Params,
}

fn positive(name: &str, v: Option<f64>) -> Result<(), String> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(format!("{name} must be positive and finite, got {x}")),
        _ => Ok(()),
    }
}

/// Applies per-command defaults, drops fields the command ignores and
/// validates what remains.
pub fn resolve(command: Command, p: Params) -> Result<RunConfig, String> {
    let mut r = Params::default();
    match command {
        Command::Orbit => {
            r.omega = Some(p.omega.unwrap_or(1.0));
            r.l = Some(p.l.unwrap_or(2));
            r.dt = Some(p.dt.unwrap_or(1e-3));
            r.t_end = Some(p.t_end.unwrap_or(20.0));
            r.stride = Some(p.stride.unwrap_or(10));
        }
        Command::Lyapunov => {
            r.omega = Some(p.omega.unwrap_or(1.0));
            r.l = Some(p.l.unwrap_or(30));
            r.steps_per_eighth = Some(p.steps_per_eighth.unwrap_or(2000));
        }
        Command::Wigner => {
            r.grid = Some(p.grid.unwrap_or(400));
        }
        Command::Twa => {
            r.seed = Some(p.seed.ok_or("--seed is required for twa")?);
            r.omega = Some(p.omega.unwrap_or(1.0));
            r.samples = Some(p.samples.unwrap_or(2000));
            r.dt = Some(p.dt.unwrap_or(1e-2));
            r.t_end = Some(p.t_end.unwrap_or(20.0));
            r.stride = Some(p.stride.unwrap_or(10));
        }
        Command::Quantum => {
            r.omega = Some(p.omega.unwrap_or(1.0));
            r.n_sites = Some(p.n_sites.unwrap_or(16));
            r.boundary = Some(p.boundary.unwrap_or(BoundaryArg::Open));
            r.method = Some(p.method.unwrap_or(MethodArg::Krylov));
            r.t_end = Some(p.t_end.unwrap_or(60.0));
            r.dt = Some(p.dt.unwrap_or(0.1));
            r.sample_dt = Some(p.sample_dt.unwrap_or(0.1));
            r.entropy_stride = Some(p.entropy_stride.unwrap_or(5));
        }
        Command::Report => {
            r.lyapunov_dir = p.lyapunov_dir;
            r.wigner_dir = p.wigner_dir;
            r.quantum_dir = p.quantum_dir;
        }
    }
    for (name, v) in [("omega", r.omega), ("dt", r.dt), ("t_end", r.t_end), ("sample_dt", r.sample_dt)] {
        positive(name, v)?;
    }
    for (name, v) in [
        ("stride", r.stride),
        ("steps_per_eighth", r.steps_per_eighth),
        ("samples", r.samples),
        ("entropy_stride", r.entropy_stride),
    ] {
        if v == Some(0) {
            return Err(format!("{name} must be at least 1"));
        }
    }
    if let Some(l) = r.l {
        if l < 2 || l % 2 != 0 {
            return Err(format!("L must be even and at least 2, got {l}"));
        }
    }
    if let Some(g) = r.grid {
        if g < 16 {
            return Err(format!("grid must be at least 16, got {g}"));
        }
    }
    Ok(RunConfig { command, params: r })
}
