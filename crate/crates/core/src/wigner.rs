//! Wigner functions of the Z₂ product state, with and without the
//! blockade constraint, and truncated-Wigner ensembles built on them.
//!
//! Wigner angles are half-angle spin-coherent coordinates in [0, π]: a site
//! in the ground state sits at 0 and a Rydberg site at π. They map to the
//! full-angle variables of [`crate::semiclassics`] by θ_eom = θ_w / 2.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::Rk4;
use crate::semiclassics::{ModelParams, TdvpFlow, MAX_STEP_INCREMENT};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglePair {
    pub theta1: f64,
    pub theta2: f64,
}

impl AnglePair {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        AnglePair { theta1, theta2 }
    }

    pub fn swapped(self) -> Self {
        AnglePair { theta1: self.theta2, theta2: self.theta1 }
    }
}

/// Gauss–Legendre nodes and weights on (a, b), ascending.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = mid - half * z;
        x[n - 1 - i] = mid + half * z;
        w[i] = half * wt;
        w[n - 1 - i] = half * wt;
    }
    (x, w)
}

/// ϑ(θ₁, θ₂) = 2 atan[tan(θ₁/2) / cos(θ₂/2)].
fn vartheta(a: f64, b: f64) -> Result<f64> {
    let (sa, ca) = (0.5 * a).sin_cos();
    let cb = (0.5 * b).cos();
    if cb.abs() < 1e-15 && sa.abs() > 1e-15 {
        return Err(Error::SingularPoint { theta1: a, theta2: b });
    }
    Ok(2.0 * sa.atan2(ca * cb))
}

/// Gauge transform to the variables in which the constrained state factorises.
pub fn theta_to_vartheta(p: AnglePair) -> Result<AnglePair> {
    Ok(AnglePair {
        theta1: vartheta(p.theta1, p.theta2)?,
        theta2: vartheta(p.theta2, p.theta1)?,
    })
}

/// Solves t² + (1 + T_other − T_self) t − T_self = 0 for t = tan²(θ/2)
/// without subtractive cancellation.
fn inverse_tan2(t_self: f64, t_other: f64) -> f64 {
    let b = 1.0 + t_other - t_self;
    let s = (b * b + 4.0 * t_self).sqrt();
    if b >= 0.0 {
        2.0 * t_self / (b + s)
    } else {
        0.5 * (s - b)
    }
}

pub fn vartheta_to_theta(p: AnglePair) -> Result<AnglePair> {
    let bad = |v: f64| !(0.0..PI).contains(&v);
    if bad(p.theta1) || bad(p.theta2) {
        return Err(Error::SingularPoint { theta1: p.theta1, theta2: p.theta2 });
    }
    let t1 = (0.5 * p.theta1).tan().powi(2);
    let t2 = (0.5 * p.theta2).tan().powi(2);
    let u1 = inverse_tan2(t1, t2);
    let u2 = inverse_tan2(t2, t1);
    if !(u1.is_finite() && u2.is_finite()) {
        return Err(Error::SingularPoint { theta1: p.theta1, theta2: p.theta2 });
    }
    Ok(AnglePair {
        theta1: 2.0 * u1.sqrt().atan(),
        theta2: 2.0 * u2.sqrt().atan(),
    })
}

pub fn wigner_unconstrained(p: AnglePair) -> f64 {
    0.25 * (1.0 - SQRT3 * p.theta1.cos()) * (1.0 + SQRT3 * p.theta2.cos())
}

/// The constrained-space formula exactly as assembled from the gauge
/// transform, its Jacobian and the sine ratio. It is peaked at (π, 0).
pub fn wigner_constrained_printed(p: AnglePair) -> Result<f64> {
    let (t1, t2) = (p.theta1, p.theta2);
    if !(t1 > 0.0 && t1 < PI && t2 > 0.0 && t2 < PI) {
        return Err(Error::SingularPoint { theta1: t1, theta2: t2 });
    }
    let v1 = vartheta(t1, t2)?;
    let v2 = vartheta(t2, t1)?;
    let (s1h, c1h) = (0.5 * t1).sin_cos();
    let (s2h, c2h) = (0.5 * t2).sin_cos();
    let tan1 = s1h / c1h;
    let tan2 = s2h / c2h;
    let jac = (1.0 - s1h * s1h * s2h * s2h)
        / ((c1h * c1h + tan2 * tan2) * (c2h * c2h + tan1 * tan1) * c1h * c2h);
    let k = jac * v1.sin() * v2.sin() / (t1.sin() * t2.sin());
    Ok(0.25 * k * (1.0 - SQRT3 * v1.cos()) * (1.0 + SQRT3 * v2.cos()))
}

/// Constrained Wigner function of the Z₂ state with site 1 in the ground
/// state, i.e. peaked at (θ₁, θ₂) = (0, π). This is the printed formula
/// with its two sites exchanged.
pub fn wigner_constrained(p: AnglePair) -> Result<f64> {
    wigner_constrained_printed(p.swapped())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub constrained: bool,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub weight1: Vec<f64>,
    pub weight2: Vec<f64>,
    /// values[(i, j)] = W(theta1[i], theta2[j])
    pub values: DMatrix<f64>,
}

impl WignerGrid {
    pub fn n1(&self) -> usize {
        self.theta1.len()
    }

    pub fn n2(&self) -> usize {
        self.theta2.len()
    }

    /// ∫∫ sinθ₁ sinθ₂ W dθ₁ dθ₂ by the tensor Gauss–Legendre rule.
    pub fn normalization(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n1() {
            let wi = self.weight1[i] * self.theta1[i].sin();
            let mut row = 0.0;
            for j in 0..self.n2() {
                row += self.weight2[j] * self.theta2[j].sin() * self.values[(i, j)];
            }
            total += wi * row;
        }
        total
    }

    /// Index and location of max |W|.
    pub fn argmax_abs(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut val = f64::NEG_INFINITY;
        for i in 0..self.n1() {
            for j in 0..self.n2() {
                let v = self.values[(i, j)].abs();
                if v > val {
                    val = v;
                    best = (i, j);
                }
            }
        }
        best
    }

    /// Fraction of nodes where |W| exceeds `frac` of max |W|.
    pub fn support_fraction(&self, frac: f64) -> f64 {
        let max = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let count = self.values.iter().filter(|v| v.abs() > frac * max).count();
        count as f64 / self.values.len() as f64
    }
}

pub fn grid_from_fn<F>(n1: usize, n2: usize, f: F) -> Result<WignerGrid>
where
    F: Fn(AnglePair) -> Result<f64>,
{
    let (theta1, weight1) = gauss_legendre(n1, 0.0, PI);
    let (theta2, weight2) = gauss_legendre(n2, 0.0, PI);
    let mut values = DMatrix::zeros(n1, n2);
    for i in 0..n1 {
        for j in 0..n2 {
            values[(i, j)] = f(AnglePair::new(theta1[i], theta2[j]))?;
        }
    }
    Ok(WignerGrid { constrained: false, theta1, theta2, weight1, weight2, values })
}

pub fn wigner_grid(n1: usize, n2: usize, constrained: bool) -> Result<WignerGrid> {
    if n1 < 16 || n2 < 16 {
        return Err(Error::InvalidParameter(format!("grid needs at least 16 nodes per axis, got {n1}x{n2}")));
    }
    let mut g = if constrained {
        grid_from_fn(n1, n2, wigner_constrained)?
    } else {
        grid_from_fn(n1, n2, |p| Ok(wigner_unconstrained(p)))?
    };
    g.constrained = constrained;
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakWidth {
    /// |W|-weighted RMS distance in θ₁ from the peak node.
    pub second_moment: f64,
    /// Distance along θ₁ from the peak to the first node below half maximum.
    pub hwhm: f64,
    pub peak_theta1: f64,
    pub peak_theta2: f64,
}

/// Width of the θ₁ marginal about the peak of |W|.
///
/// Weights are the bare quadrature weights, so a smooth bump of width σ
/// reports σ regardless of where it sits on the sphere.
pub fn peak_width(grid: &WignerGrid) -> PeakWidth {
    let (ip, jp) = grid.argmax_abs();
    let t_peak = grid.theta1[ip];
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..grid.n1() {
        let d2 = (grid.theta1[i] - t_peak).powi(2);
        for j in 0..grid.n2() {
            let m = grid.weight1[i] * grid.weight2[j] * grid.values[(i, j)].abs();
            num += m * d2;
            den += m;
        }
    }
    let half = 0.5 * grid.values[(ip, jp)].abs();
    let mut hwhm = f64::INFINITY;
    for i in 0..grid.n1() {
        if grid.values[(i, jp)].abs() < half {
            hwhm = hwhm.min((grid.theta1[i] - t_peak).abs());
        }
    }
    PeakWidth {
        second_moment: (num / den).sqrt(),
        hwhm,
        peak_theta1: t_peak,
        peak_theta2: grid.theta2[jp],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwaSample {
    pub theta1: f64,
    pub theta2: f64,
    pub weight: f64,
    pub density: f64,
}

/// Sampling density |W| sinθ₁ sinθ₂ of the constrained function.
pub fn sampling_density(p: AnglePair) -> Result<(f64, f64)> {
    let w = wigner_constrained(p)?;
    Ok((w.signum(), w.abs() * p.theta1.sin() * p.theta2.sin()))
}

/// Independent stream for sample `index`.
fn sample_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws sample `index` by rejection against a uniform proposal on (0, π)².
fn draw_one(seed: u64, index: u64, envelope: f64) -> Result<TwaSample> {
    let mut rng = sample_rng(seed, index);
    loop {
        // Open interval: the density is only evaluated at interior points.
        let t1 = PI * rng.random_range(f64::EPSILON..1.0);
        let t2 = PI * rng.random_range(f64::EPSILON..1.0);
        let u: f64 = rng.random();
        let p = AnglePair::new(t1, t2);
        let (sign, dens) = match sampling_density(p) {
            Ok(v) => v,
            Err(Error::SingularPoint { .. }) => continue,
            Err(e) => return Err(e),
        };
        if dens > envelope {
            return Err(Error::EnvelopeTooSmall { value: dens, envelope });
        }
        if u * envelope < dens {
            return Ok(TwaSample { theta1: t1, theta2: t2, weight: if sign < 0.0 { -1.0 } else { 1.0 }, density: dens });
        }
    }
}

/// Initial envelope: 1.1 × the largest density on a 64² Gauss–Legendre grid.
pub fn default_envelope() -> Result<f64> {
    let g = grid_from_fn(64, 64, |p| sampling_density(p).map(|v| v.1))?;
    Ok(1.1 * g.values.iter().fold(0.0_f64, |m, &v| m.max(v)))
}

/// `n` signed samples of the constrained Z₂ Wigner function.
///
/// Sample i is drawn from its own ChaCha stream, so results are
/// independent of evaluation order. If a proposal exceeds the envelope the
/// envelope is raised to 1.1 × that value and the whole set is redrawn.
pub fn twa_sample(seed: u64, n: usize) -> Result<Vec<TwaSample>> {
    let mut envelope = default_envelope()?;
    'retry: loop {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            match draw_one(seed, i as u64, envelope) {
                Ok(s) => out.push(s),
                Err(Error::EnvelopeTooSmall { value, .. }) => {
                    envelope = 1.1 * value;
                    continue 'retry;
                }
                Err(e) => return Err(e),
            }
        }
        return Ok(out);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwaSeries {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_alive: Vec<usize>,
    pub dropped: usize,
}

/// Rydberg-density proxy sin²(θ_w/2) = sin²(θ_eom) on site 2 of the cell.
pub fn density_symbol(theta_eom: f64) -> f64 {
    theta_eom.sin().powi(2)
}

/// Evolves every sample under the TDVP flow and returns the signed,
/// self-normalised mean of the site-2 density proxy.
///
/// The output grid is `n_out + 1` points spaced `dt * stride`. Samples whose
/// trajectory hits a chart singularity are dropped from the first output
/// time at which they are lost onward, and counted.
pub fn twa_observable_series(
    samples: &[TwaSample],
    params: &ModelParams,
    dt: f64,
    stride: usize,
    n_out: usize,
) -> Result<TwaSeries> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    if !(dt > 0.0) || stride == 0 {
        return Err(Error::InvalidParameter("dt and stride must be positive".into()));
    }
    let l = params.l;
    let flow = TdvpFlow::new(params);
    let mut rk = Rk4::new(l);
    rk.max_increment = MAX_STEP_INCREMENT;
    // obs[k][i] is None once sample i is lost.
    let mut obs: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(samples.len()); n_out + 1];
    let mut dropped = 0;
    for s in samples {
        let mut y: Vec<f64> = (0..l)
            .map(|i| if i % 2 == 0 { 0.5 * s.theta1 } else { 0.5 * s.theta2 })
            .collect();
        let mut alive = true;
        obs[0].push(Some(density_symbol(y[1])));
        for row in obs.iter_mut().skip(1) {
            if alive {
                for _ in 0..stride {
                    if rk.step(&flow, &mut y, dt).is_err() {
                        alive = false;
                        dropped += 1;
                        break;
                    }
                }
            }
            row.push(if alive { Some(density_symbol(y[1])) } else { None });
        }
    }
    let mut series = TwaSeries {
        times: (0..=n_out).map(|k| k as f64 * stride as f64 * dt).collect(),
        mean: Vec::with_capacity(n_out + 1),
        stderr: Vec::with_capacity(n_out + 1),
        n_alive: Vec::with_capacity(n_out + 1),
        dropped,
    };
    for row in &obs {
        let (m, se, n) = signed_mean(samples.iter().zip(row).filter_map(|(s, o)| o.map(|v| (s.weight, v))));
        series.mean.push(m);
        series.stderr.push(se);
        series.n_alive.push(n);
    }
    Ok(series)
}

/// Self-normalised estimate Σ wᵢ oᵢ / Σ wᵢ with its delta-method standard error.
pub fn signed_mean<I: Iterator<Item = (f64, f64)>>(it: I) -> (f64, f64, usize) {
    let pairs: Vec<(f64, f64)> = it.collect();
    let n = pairs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let sw: f64 = pairs.iter().map(|p| p.0).sum();
    let mean = pairs.iter().map(|p| p.0 * p.1).sum::<f64>() / sw;
    let nf = n as f64;
    let wbar = sw / nf;
    let var = pairs.iter().map(|p| (p.0 * (p.1 - mean)).powi(2)).sum::<f64>() / (nf * wbar * wbar);
    let se = if n > 1 { (var / (nf - 1.0)).sqrt() } else { f64::NAN };
    (mean, se, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5, -1.0, 1.0);
        let int = |f: &dyn Fn(f64) -> f64| x.iter().zip(&w).map(|(a, b)| b * f(*a)).sum::<f64>();
        assert_abs_diff_eq!(int(&|_| 1.0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(int(&|t| t.powi(8)), 2.0 / 9.0, epsilon = 1e-14);
        let (x, w) = gauss_legendre(40, 0.0, PI);
        let s: f64 = x.iter().zip(&w).map(|(a, b)| b * a.sin()).sum();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn forward_map_edges() {
        let v = theta_to_vartheta(AnglePair::new(1.2, 0.0)).unwrap();
        assert_abs_diff_eq!(v.theta1, 1.2, epsilon = 1e-15);
        let v = theta_to_vartheta(AnglePair::new(0.0, 2.0)).unwrap();
        assert_eq!(v.theta1, 0.0);
        assert!(theta_to_vartheta(AnglePair::new(0.5, PI)).is_err());
    }

    #[test]
    fn inverse_map_edges() {
        let t = vartheta_to_theta(AnglePair::new(1.2, 0.0)).unwrap();
        assert_abs_diff_eq!(t.theta1, 1.2, epsilon = 1e-14);
        let t = vartheta_to_theta(AnglePair::new(0.0, 0.7)).unwrap();
        assert_abs_diff_eq!(t.theta1, 0.0, epsilon = 1e-15);
        assert!(vartheta_to_theta(AnglePair::new(PI, 0.3)).is_err());
    }

    #[test]
    fn unconstrained_corner_values() {
        let a = wigner_unconstrained(AnglePair::new(0.0, PI));
        let b = wigner_unconstrained(AnglePair::new(PI, 0.0));
        assert_abs_diff_eq!(a, (1.0 - SQRT3).powi(2) / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b, (1.0 + SQRT3).powi(2) / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn constrained_rejects_boundary() {
        assert!(wigner_constrained(AnglePair::new(0.0, 1.0)).is_err());
        assert!(wigner_constrained(AnglePair::new(1.0, PI)).is_err());
    }

    #[test]
    fn constrained_is_continuous_towards_theta_edge() {
        // Along the edge where the gauge transform is the identity, the
        // function tends to ¼·K·[1−√3 cos θ][1+√3 cos ϑ] evaluated there.
        let t = 1.1;
        let near = wigner_constrained(AnglePair::new(1e-6, t)).unwrap();
        let nearer = wigner_constrained(AnglePair::new(1e-7, t)).unwrap();
        assert!(near.is_finite());
        assert!((near - nearer).abs() < 1e-9 * near.abs().max(1.0));
    }

    #[test]
    fn signed_mean_handles_negative_weights() {
        let (m, _, n) = signed_mean([(1.0, 2.0), (1.0, 4.0), (-1.0, 1.0)].into_iter());
        assert_eq!(n, 3);
        assert_abs_diff_eq!(m, 5.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_sample_request() {
        assert!(twa_sample(1, 0).unwrap().is_empty());
    }
}
