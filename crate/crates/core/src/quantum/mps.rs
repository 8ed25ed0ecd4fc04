use num_complex::Complex64;

use super::basis::ConstrainedBasis;
use super::{norm, StateVector};
use crate::error::{Error, Result};

/// v_Lᵀ A^{σ_0}(θ_0,φ_0) ⋯ A^{σ_{N−1}} v_R for one bit pattern, with
/// A^g = [[cos θ, 0], [1, 0]], A^r = [[0, i e^{iφ} sin θ], [0, 0]],
/// v_L = (1, 0) and v_R = (1, 1). Site i is bit i. Unnormalised.
pub fn mps_amplitude(thetas: &[f64], phis: &[f64], config: u32) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut row = [one, zero];
    for (i, (&th, &ph)) in thetas.iter().zip(phis).enumerate() {
        row = if config >> i & 1 == 1 {
            let r = Complex64::new(0.0, 1.0) * Complex64::from_polar(th.sin(), ph);
            [zero, row[0] * r]
        } else {
            [row[0] * th.cos() + row[1], zero]
        };
    }
    row[0] + row[1]
}

/// Normalised χ=2 state projected onto the constrained basis. The angle
/// lists are per site; tile a unit cell before calling.
pub fn mps_state_vector(thetas: &[f64], phis: &[f64], basis: &ConstrainedBasis) -> Result<StateVector> {
    let n = basis.n_sites;
    if thetas.len() != n || phis.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: thetas.len().min(phis.len()) });
    }
    let mut v: StateVector = basis.configs.iter().map(|&c| mps_amplitude(thetas, phis, c)).collect();
    let nrm = norm(&v);
    v.iter_mut().for_each(|z| *z /= nrm);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::Boundary;

    #[test]
    fn ground_state_at_zero_angles() {
        let b = ConstrainedBasis::new(6, Boundary::Open).unwrap();
        let v = mps_state_vector(&[0.0; 6], &[0.0; 6], &b).unwrap();
        assert_eq!(v[0], Complex64::new(1.0, 0.0));
        assert!(v[1..].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn z2_angles_give_z2_config() {
        let b = ConstrainedBasis::new(8, Boundary::Open).unwrap();
        let th: Vec<f64> = (0..8).map(|i| if i % 2 == 1 { std::f64::consts::FRAC_PI_2 } else { 0.0 }).collect();
        let v = mps_state_vector(&th, &[0.0; 8], &b).unwrap();
        let k = b.index(b.z2_config()).unwrap();
        assert!((v[k].norm() - 1.0).abs() < 1e-15);
    }
}
