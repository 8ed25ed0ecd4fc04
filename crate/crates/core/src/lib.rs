//! Semiclassical and exact dynamics of the PXP chain: TDVP orbits,
//! Lyapunov spectra, constrained Wigner functions and Krylov evolution.

pub mod analysis;
pub mod error;
pub mod ode;
pub mod quantum;
pub mod lyapunov;
pub mod semiclassics;
pub mod wigner;

pub use error::{Error, Result};
