use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::{Boundary, ConstrainedBasis};
use crate::error::{Error, Result};

/// H = (Ω/2) Σ_i P σ^x_i P in the constrained basis, stored as neighbour
/// lists. Every nonzero entry equals Ω/2, so only the connectivity is kept.
///
/// On open chains the end sites carry a one-sided projector; a flip is
/// allowed whenever the existing neighbours are in the ground state.
#[derive(Debug, Clone)]
pub struct PxpHamiltonian {
    pub omega: f64,
    pub dim: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl PxpHamiltonian {
    pub fn new(basis: &ConstrainedBasis, omega: f64) -> Self {
        let n = basis.n_sites;
        let mut offsets = Vec::with_capacity(basis.dim() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for &c in &basis.configs {
            for i in 0..n {
                let left = if i > 0 {
                    Some(i - 1)
                } else if basis.boundary == Boundary::Periodic {
                    Some(n - 1)
                } else {
                    None
                };
                let right = if i + 1 < n {
                    Some(i + 1)
                } else if basis.boundary == Boundary::Periodic {
                    Some(0)
                } else {
                    None
                };
                let free = |s: Option<usize>| s.is_none_or(|s| c >> s & 1 == 0);
                if free(left) && free(right) {
                    let t = c ^ (1 << i);
                    let idx = basis.index(t).expect("flip with free neighbours stays in the blockade space");
                    targets.push(idx as u32);
                }
            }
            offsets.push(targets.len());
        }
        PxpHamiltonian { omega, dim: basis.dim(), offsets, targets }
    }

    pub fn nnz(&self) -> usize {
        self.targets.len()
    }

    pub fn neighbours(&self, j: usize) -> &[u32] {
        &self.targets[self.offsets[j]..self.offsets[j + 1]]
    }

    /// out = H v. Each output entry gathers from its own neighbour list, so
    /// chunks of `out` are written by exactly one worker.
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        if out.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: out.len() });
        }
        let h = 0.5 * self.omega;
        out.par_iter_mut().with_min_len(4096).enumerate().for_each(|(j, o)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &k in self.neighbours(j) {
                acc += v[k as usize];
            }
            *o = acc * h;
        });
        Ok(())
    }

    /// ⟨v|H|v⟩, real because H is symmetric.
    pub fn expectation(&self, v: &[Complex64]) -> Result<f64> {
        let mut hv = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply_into(v, &mut hv)?;
        Ok(super::inner(v, &hv).re)
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            for &k in self.neighbours(j) {
                m[(j, k as usize)] = 0.5 * self.omega;
            }
        }
        m
    }
}

pub fn hamiltonian_apply(basis: &ConstrainedBasis, state: &[Complex64], omega: f64) -> Result<Vec<Complex64>> {
    let h = PxpHamiltonian::new(basis, omega);
    let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
    h.apply_into(state, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_action() {
        let b = ConstrainedBasis::new(2, Boundary::Open).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); 3];
        v[0] = Complex64::new(1.0, 0.0);
        let out = hamiltonian_apply(&b, &v, 1.0).unwrap();
        assert_eq!(out, vec![0.0.into(), 0.5.into(), 0.5.into()]);
        let d = PxpHamiltonian::new(&b, 1.0).dense();
        assert!((0..3).all(|i| d[(i, i)] == 0.0));
    }

    #[test]
    fn wrong_length_rejected() {
        let b = ConstrainedBasis::new(4, Boundary::Open).unwrap();
        assert!(matches!(
            hamiltonian_apply(&b, &[Complex64::new(1.0, 0.0)], 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
