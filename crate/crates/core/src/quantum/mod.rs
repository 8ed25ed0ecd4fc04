//! Exact dynamics in the blockade-constrained Hilbert space.

pub mod basis;
pub mod evolve;
pub mod fit;
pub mod hamiltonian;
pub mod mps;
pub mod observables;
pub mod quench;

pub use basis::{Boundary, ConstrainedBasis};
pub use evolve::{evolve, evolve_with, Method};
pub use fit::{fit_decay_rate, fit_decay_rate_with, fit_observable, DecayFit, FitKind, ObservableKind, ObservableSeries};
pub use hamiltonian::{hamiltonian_apply, PxpHamiltonian};
pub use mps::{mps_amplitude, mps_state_vector};
pub use quench::{z2_quench, QuenchConfig, QuenchSeries};
pub use observables::{entanglement_entropy, loschmidt_echo, rydberg_density};

use num_complex::Complex64;

pub type StateVector = Vec<Complex64>;

/// Product state with the given configuration occupied.
pub fn basis_state(basis: &ConstrainedBasis, config: u32) -> Option<StateVector> {
    let i = basis.index(config)?;
    let mut v = vec![Complex64::new(0.0, 0.0); basis.dim()];
    v[i] = Complex64::new(1.0, 0.0);
    Some(v)
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ⟨a|b⟩, conjugate-linear in `a`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
