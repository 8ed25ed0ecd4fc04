use serde::{Deserialize, Serialize};

use super::basis::{Boundary, ConstrainedBasis};
use super::evolve::{evolve_with, Method};
use super::fit::{ObservableKind, ObservableSeries};
use super::hamiltonian::PxpHamiltonian;
use super::observables::{entanglement_entropy, loschmidt_echo, rydberg_density};
use super::basis_state;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchConfig {
    pub n_sites: usize,
    pub boundary: Boundary,
    pub omega: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Spacing of the density and echo samples.
    pub sample_dt: f64,
    /// Entropy is evaluated on every `entropy_stride`-th sample.
    pub entropy_stride: usize,
    pub method: Method,
}

impl QuenchConfig {
    pub fn new(n_sites: usize) -> Self {
        QuenchConfig {
            n_sites,
            boundary: Boundary::Open,
            omega: 1.0,
            t_end: 60.0,
            dt: 0.1,
            sample_dt: 0.1,
            entropy_stride: 5,
            method: Method::Krylov,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchSeries {
    pub density: ObservableSeries,
    pub entropy: ObservableSeries,
    pub echo: ObservableSeries,
    pub dim: usize,
}

/// Evolves the Z₂ product state and records the Rydberg density on site
/// N/2, the half-chain entropy and the Loschmidt echo.
pub fn z2_quench(cfg: &QuenchConfig) -> Result<QuenchSeries> {
    if !(cfg.sample_dt > 0.0 && cfg.t_end > 0.0) || cfg.entropy_stride == 0 {
        return Err(Error::InvalidParameter("need positive t_end, sample_dt and entropy_stride".into()));
    }
    let basis = ConstrainedBasis::new(cfg.n_sites, cfg.boundary)?;
    let h = PxpHamiltonian::new(&basis, cfg.omega);
    let psi0 = basis_state(&basis, basis.z2_config()).expect("Z2 config satisfies the blockade");
    let n_samples = (cfg.t_end / cfg.sample_dt + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=n_samples).map(|k| k as f64 * cfg.sample_dt).collect();
    let site = cfg.n_sites / 2;
    let cut = cfg.n_sites / 2;
    let mut density = Vec::with_capacity(grid.len());
    let mut echo = Vec::with_capacity(grid.len());
    let (mut s_t, mut s_v) = (Vec::new(), Vec::new());
    evolve_with(&h, &psi0, &grid, cfg.dt, cfg.method, |k, t, psi| {
        density.push(rydberg_density(&basis, psi, site));
        echo.push(loschmidt_echo(psi, &psi0)?);
        if k % cfg.entropy_stride == 0 {
            s_t.push(t);
            s_v.push(entanglement_entropy(&basis, psi, cut)?);
        }
        Ok(())
    })?;
    Ok(QuenchSeries {
        density: ObservableSeries { kind: ObservableKind::RydbergDensity, times: grid.clone(), values: density },
        entropy: ObservableSeries { kind: ObservableKind::Entropy, times: s_t, values: s_v },
        echo: ObservableSeries { kind: ObservableKind::Echo, times: grid, values: echo },
        dim: basis.dim(),
    })
}
