//! Fixed-step classical Runge-Kutta integration.

use crate::error::{Error, Result};

/// An autonomous first-order system `dy/dt = f(y)`.
pub trait Flow {
    fn dim(&self) -> usize;
    fn rhs(&self, y: &[f64], out: &mut [f64]) -> Result<()>;
}

/// Adapter turning a closure into a [`Flow`].
pub struct FnFlow<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> Flow for FnFlow<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn rhs(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(y, out)
    }
}

/// Reusable stage buffers so that stepping does not allocate.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
    /// Largest allowed per-step increment of any component. A step that
    /// would move further is rejected as unresolved.
    pub max_increment: f64,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
            max_increment: f64::INFINITY,
        }
    }

    pub fn step<F: Flow + ?Sized>(&mut self, flow: &F, y: &mut [f64], dt: f64) -> Result<()> {
        let n = y.len();
        flow.rhs(y, &mut self.k1)?;
        let kmax = self.k1.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !(kmax * dt <= self.max_increment) {
            return Err(Error::SingularCell {
                residual: 1.0 / (kmax * dt),
            });
        }
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * dt * self.k1[i];
        }
        flow.rhs(&self.tmp, &mut self.k2)?;
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * dt * self.k2[i];
        }
        flow.rhs(&self.tmp, &mut self.k3)?;
        for i in 0..n {
            self.tmp[i] = y[i] + dt * self.k3[i];
        }
        flow.rhs(&self.tmp, &mut self.k4)?;
        for i in 0..n {
            y[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

/// Advance `y` by `n_steps` steps of size `dt`.
pub fn advance<F: Flow + ?Sized>(flow: &F, y: &mut [f64], dt: f64, n_steps: usize) -> Result<()> {
    let mut rk = Rk4::new(y.len());
    for _ in 0..n_steps {
        rk.step(flow, y, dt)?;
    }
    Ok(())
}
