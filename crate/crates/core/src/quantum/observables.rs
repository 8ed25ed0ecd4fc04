use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::ConstrainedBasis;
use super::inner;
use crate::error::{Error, Result};

/// Probability of a Rydberg excitation on `site`.
pub fn rydberg_density(basis: &ConstrainedBasis, state: &[Complex64], site: usize) -> f64 {
    basis
        .configs
        .iter()
        .zip(state)
        .filter(|(c, _)| *c >> site & 1 == 1)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Von Neumann entropy (nats) of sites `0..cut` against `cut..N`.
///
/// Rows are the distinct left strings, columns the distinct right strings;
/// pairs that are not in the basis (excited on both sides of the junction,
/// or across the seam for rings) stay zero.
pub fn entanglement_entropy(basis: &ConstrainedBasis, state: &[Complex64], cut: usize) -> Result<f64> {
    let n = basis.n_sites;
    if !(1..n).contains(&cut) {
        return Err(Error::InvalidParameter(format!("cut {cut} outside 1..{n}")));
    }
    if state.len() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: state.len() });
    }
    let mask = (1u32 << cut) - 1;
    let mut left: Vec<u32> = basis.configs.iter().map(|c| c & mask).collect();
    left.sort_unstable();
    left.dedup();
    let mut right: Vec<u32> = basis.configs.iter().map(|c| c >> cut).collect();
    right.sort_unstable();
    right.dedup();
    let mut m = DMatrix::<Complex64>::zeros(left.len(), right.len());
    for (&c, &a) in basis.configs.iter().zip(state) {
        let i = left.binary_search(&(c & mask)).unwrap();
        let j = right.binary_search(&(c >> cut)).unwrap();
        m[(i, j)] = a;
    }
    let svd = m.try_svd(false, false, 1e-15, 10_000).ok_or(Error::SvdFailure)?;
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    Ok(svd
        .singular_values
        .iter()
        .map(|s| s * s / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0))
}

/// |⟨ψ_0|ψ_t⟩|.
pub fn loschmidt_echo(state_t: &[Complex64], state_0: &[Complex64]) -> Result<f64> {
    if state_t.len() != state_0.len() {
        return Err(Error::DimensionMismatch { expected: state_0.len(), got: state_t.len() });
    }
    Ok(inner(state_0, state_t).norm().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{basis_state, Boundary};

    #[test]
    fn z2_density_and_entropy() {
        let b = ConstrainedBasis::new(10, Boundary::Open).unwrap();
        let psi = basis_state(&b, b.z2_config()).unwrap();
        for i in 0..10 {
            assert_eq!(rydberg_density(&b, &psi, i), (i % 2) as f64);
        }
        for cut in 1..10 {
            assert_eq!(entanglement_entropy(&b, &psi, cut).unwrap(), 0.0);
        }
    }

    #[test]
    fn uniform_two_site_density() {
        let b = ConstrainedBasis::new(2, Boundary::Open).unwrap();
        let a = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
        let psi = vec![a; 3];
        assert!((rydberg_density(&b, &psi, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((rydberg_density(&b, &psi, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bell_pair_entropy() {
        let b = ConstrainedBasis::new(2, Boundary::Open).unwrap();
        let s = Complex64::new(0.5f64.sqrt(), 0.0);
        let psi = vec![Complex64::new(0.0, 0.0), s, s];
        let e = entanglement_entropy(&b, &psi, 1).unwrap();
        assert!((e - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn echo_limits() {
        let b = ConstrainedBasis::new(4, Boundary::Open).unwrap();
        let u = basis_state(&b, 0).unwrap();
        let v = basis_state(&b, 0b101).unwrap();
        assert_eq!(loschmidt_echo(&u, &u).unwrap(), 1.0);
        assert_eq!(loschmidt_echo(&u, &v).unwrap(), 0.0);
        assert!(loschmidt_echo(&u, &v[..3]).is_err());
    }
}
