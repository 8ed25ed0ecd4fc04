use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hamiltonian::PxpHamiltonian;
use super::{inner, norm, StateVector};
use crate::error::{Error, Result};

/// Largest Krylov subspace per step.
pub const KRYLOV_DIM: usize = 20;
/// Local error target for one Krylov step.
pub const KRYLOV_TOL: f64 = 1e-10;
/// Step bound in units of 1/Ω.
pub const MAX_STEP_OMEGA: f64 = 0.1;

const MAX_HALVINGS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Krylov,
    Rk4,
}

struct Lanczos {
    vs: Vec<StateVector>,
    w: StateVector,
}

impl Lanczos {
    fn new(dim: usize) -> Self {
        Lanczos { vs: Vec::with_capacity(KRYLOV_DIM + 1), w: vec![Complex64::new(0.0, 0.0); dim] }
    }

    /// Returns exp(−iHτ)ψ in place together with the a-posteriori error
    /// estimate β_m |e_mᵀ exp(−iTτ) e_1|.
    fn step(&mut self, h: &PxpHamiltonian, psi: &mut StateVector, tau: f64) -> Result<f64> {
        let nrm = norm(psi);
        let mut alpha = Vec::with_capacity(KRYLOV_DIM);
        let mut beta: Vec<f64> = Vec::with_capacity(KRYLOV_DIM);
        self.vs.clear();
        self.vs.push(psi.iter().map(|z| z / nrm).collect());
        let mut err = f64::INFINITY;
        let mut coeffs = Vec::new();
        for j in 0..KRYLOV_DIM {
            h.apply_into(&self.vs[j], &mut self.w)?;
            let a = inner(&self.vs[j], &self.w).re;
            alpha.push(a);
            for (wk, vk) in self.w.iter_mut().zip(&self.vs[j]) {
                *wk -= vk * a;
            }
            if j > 0 {
                let b = beta[j - 1];
                for (wk, vk) in self.w.iter_mut().zip(&self.vs[j - 1]) {
                    *wk -= vk * b;
                }
            }
            // One pass of full reorthogonalisation keeps the small basis clean.
            for v in &self.vs {
                let c = inner(v, &self.w);
                for (wk, vk) in self.w.iter_mut().zip(v) {
                    *wk -= vk * c;
                }
            }
            let b = norm(&self.w);
            coeffs = tridiagonal_exp(&alpha, &beta, tau);
            let last = coeffs[j].norm();
            err = b * last;
            if b < 1e-12 || err < KRYLOV_TOL {
                break;
            }
            beta.push(b);
            self.vs.push(self.w.iter().map(|z| z / b).collect());
        }
        if err >= KRYLOV_TOL {
            return Ok(err);
        }
        psi.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (c, v) in coeffs.iter().zip(&self.vs) {
            let c = c * nrm;
            for (p, x) in psi.iter_mut().zip(v) {
                *p += x * c;
            }
        }
        Ok(err)
    }
}

/// exp(−iTτ) e_1 for the symmetric tridiagonal T(alpha, beta).
fn tridiagonal_exp(alpha: &[f64], beta: &[f64], tau: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let u = eig.eigenvectors[(0, k)] * eig.eigenvectors[(r, k)];
                    Complex64::from_polar(u, -eig.eigenvalues[k] * tau)
                })
                .sum()
        })
        .collect()
}

fn krylov_advance(h: &PxpHamiltonian, lz: &mut Lanczos, psi: &mut StateVector, tau: f64, t: f64) -> Result<()> {
    let mut halvings = 0;
    let mut pieces = 1u32;
    loop {
        let saved = psi.clone();
        let sub = tau / pieces as f64;
        let mut worst = 0.0f64;
        let mut ok = true;
        for _ in 0..pieces {
            let err = lz.step(h, psi, sub)?;
            worst = worst.max(err);
            if err >= KRYLOV_TOL {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(());
        }
        *psi = saved;
        halvings += 1;
        if halvings > MAX_HALVINGS {
            return Err(Error::ConvergenceFailure { time: t, residual: worst });
        }
        pieces *= 2;
    }
}

fn rk4_advance(h: &PxpHamiltonian, bufs: &mut [StateVector; 5], psi: &mut StateVector, dt: f64) -> Result<()> {
    let mi = Complex64::new(0.0, -1.0);
    let [k1, k2, k3, k4, tmp] = bufs;
    h.apply_into(psi, k1)?;
    k1.iter_mut().for_each(|z| *z *= mi);
    for ((t, p), k) in tmp.iter_mut().zip(psi.iter()).zip(k1.iter()) {
        *t = p + k * (0.5 * dt);
    }
    h.apply_into(tmp, k2)?;
    k2.iter_mut().for_each(|z| *z *= mi);
    for ((t, p), k) in tmp.iter_mut().zip(psi.iter()).zip(k2.iter()) {
        *t = p + k * (0.5 * dt);
    }
    h.apply_into(tmp, k3)?;
    k3.iter_mut().for_each(|z| *z *= mi);
    for ((t, p), k) in tmp.iter_mut().zip(psi.iter()).zip(k3.iter()) {
        *t = p + k * dt;
    }
    h.apply_into(tmp, k4)?;
    k4.iter_mut().for_each(|z| *z *= mi);
    for (i, p) in psi.iter_mut().enumerate() {
        *p += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
    }
    Ok(())
}

/// Propagates `state0` under exp(−iHt) and calls `observe(k, t_k, ψ(t_k))`
/// at every grid time. The grid must be non-decreasing and start at t ≥ 0;
/// each interval is split into equal steps no longer than `dt`.
pub fn evolve_with<F>(
    h: &PxpHamiltonian,
    state0: &[Complex64],
    t_grid: &[f64],
    dt: f64,
    method: Method,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &[Complex64]) -> Result<()>,
{
    if state0.len() != h.dim {
        return Err(Error::DimensionMismatch { expected: h.dim, got: state0.len() });
    }
    if !(dt > 0.0) || (method == Method::Krylov && dt * h.omega.abs() > MAX_STEP_OMEGA * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!("step {dt} outside (0, 0.1/omega]")));
    }
    if (norm(state0) - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter("initial state is not normalized".into()));
    }
    if t_grid.first().is_some_and(|&t| t < 0.0) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("time grid must be non-negative and non-decreasing".into()));
    }
    let mut psi = state0.to_vec();
    let mut lz = Lanczos::new(h.dim);
    let zero = vec![Complex64::new(0.0, 0.0); h.dim];
    let mut bufs = match method {
        Method::Rk4 => [zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero],
        Method::Krylov => Default::default(),
    };
    let mut t = 0.0;
    for (k, &target) in t_grid.iter().enumerate() {
        let span = target - t;
        if span > 0.0 {
            let n = (span / dt - 1e-9).ceil().max(1.0) as usize;
            let sub = span / n as f64;
            for s in 0..n {
                let now = t + s as f64 * sub;
                match method {
                    Method::Krylov => krylov_advance(h, &mut lz, &mut psi, sub, now)?,
                    Method::Rk4 => rk4_advance(h, &mut bufs, &mut psi, sub)?,
                }
            }
            t = target;
        }
        observe(k, target, &psi)?;
    }
    Ok(())
}

/// Collects the state at every grid time. Intended for small systems;
/// large runs should observe through [`evolve_with`].
pub fn evolve(
    h: &PxpHamiltonian,
    state0: &[Complex64],
    t_grid: &[f64],
    dt: f64,
    method: Method,
) -> Result<Vec<StateVector>> {
    let mut out = Vec::with_capacity(t_grid.len());
    evolve_with(h, state0, t_grid, dt, method, |_, _, psi| {
        out.push(psi.to_vec());
        Ok(())
    })?;
    Ok(out)
}
