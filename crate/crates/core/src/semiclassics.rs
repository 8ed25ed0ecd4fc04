//! TDVP dynamics of the bond-dimension-2 ansatz on even unit cells.
//!
//! Angles use the full-angle convention of the MPS matrices, so a site in
//! the ground state has θ = 0 and a Rydberg site has θ = π/2. The phases φ
//! stay at zero on the Z₂ orbit and are carried only for bookkeeping.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Flow, Rk4};

/// Tolerance on |1 − Π| below which the chart is treated as singular.
pub const SINGULAR_PI_TOL: f64 = 1e-10;
/// |cos θ| below which the tangent term switches to its limiting form.
pub const LIMIT_COS_TOL: f64 = 1e-8;
/// |sin θ| below which the limiting form of the tangent term is zero.
pub const LIMIT_SIN_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub l: usize,
}

impl ModelParams {
    pub fn new(omega: f64, l: usize) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        if l < 2 || l % 2 != 0 {
            return Err(Error::InvalidParameter(format!("unit cell must be even and >= 2, got {l}")));
        }
        Ok(ModelParams { omega, l })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitCellState {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl UnitCellState {
    pub fn new(thetas: Vec<f64>) -> Self {
        let phis = vec![0.0; thetas.len()];
        UnitCellState { thetas, phis }
    }

    /// Odd sites (1-based) take `theta1`, even sites `theta2`.
    pub fn z2_tiled(l: usize, theta1: f64, theta2: f64) -> Self {
        Self::new((0..l).map(|i| if i % 2 == 0 { theta1 } else { theta2 }).collect())
    }

    /// The product state |g r g r ...⟩: site 1 ground, site 2 excited.
    pub fn z2(l: usize) -> Self {
        Self::z2_tiled(l, 0.0, FRAC_PI_2)
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellCoefficients {
    pub pi_product: f64,
    pub a: Vec<f64>,
    pub cap_a: Vec<f64>,
    pub phi_cap: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<UnitCellState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitInfo {
    pub period: f64,
    pub frequency: f64,
    pub closure_error: f64,
}

fn check_even(l: usize) -> Result<()> {
    if l < 2 || l % 2 != 0 {
        return Err(Error::InvalidParameter(format!("unit cell must be even and >= 2, got {l}")));
    }
    Ok(())
}

/// Write a_m for every m into `a`, returning Π.
///
/// The alternating sum 1 − s² + s²s'² − ... is regrouped pairwise into
/// Σ_{k even} P_k cos²θ_{m−k−1}, which has no cancellation. This matters at
/// θ = π/2, where sin² rounds to exactly 1.
fn fill_a(thetas: &[f64], a: &mut [f64], sin2: &mut [f64], cos2: &mut [f64]) -> f64 {
    let l = thetas.len();
    for (i, &t) in thetas.iter().enumerate() {
        let (s, c) = t.sin_cos();
        sin2[i] = s * s;
        cos2[i] = c * c;
    }
    for m in 0..l {
        let mut acc = 0.0;
        let mut prod = 1.0;
        let mut k = 0;
        while k + 2 <= l {
            acc += prod * cos2[(m + 2 * l - k - 1) % l];
            prod *= sin2[(m + 2 * l - k - 1) % l] * sin2[(m + 2 * l - k - 2) % l];
            k += 2;
        }
        a[m] = acc;
    }
    sin2.iter().product()
}

pub fn cell_coefficients(thetas: &[f64]) -> Result<CellCoefficients> {
    let l = thetas.len();
    check_even(l)?;
    let mut a = vec![0.0; l];
    let mut sin2 = vec![0.0; l];
    let mut cos2 = vec![0.0; l];
    let pi_product = fill_a(thetas, &mut a, &mut sin2, &mut cos2);
    let gap = 1.0 - pi_product;
    if gap.abs() < SINGULAR_PI_TOL {
        return Err(Error::SingularCell { residual: gap.abs() });
    }
    let cap_a: Vec<f64> = a.iter().map(|x| x / gap).collect();
    let phi_cap = cap_a.iter().zip(&sin2).map(|(x, s)| x * s).collect();
    Ok(CellCoefficients { pi_product, a, cap_a, phi_cap })
}

/// sin a · cos² a · tan b, with the limit along the orbit where both
/// cos b and sin a vanish.
fn tangent_term(a: f64, b: f64) -> Result<f64> {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    if cb.abs() < LIMIT_COS_TOL {
        if sa.abs() < LIMIT_SIN_TOL {
            return Ok(0.0);
        }
        return Err(Error::SingularCell { residual: cb.abs() });
    }
    Ok(sa * ca * ca * sb / cb)
}

/// Closed-form two-site equations of motion.
pub fn eom_rhs_l2(theta1: f64, theta2: f64, omega: f64) -> Result<(f64, f64)> {
    let d1 = -0.5 * omega * (tangent_term(theta1, theta2)? + theta2.cos());
    let d2 = -0.5 * omega * (tangent_term(theta2, theta1)? + theta1.cos());
    Ok((d1, d2))
}

/// Scratch space for repeated evaluation of the general-L right-hand side.
#[derive(Debug, Clone)]
pub struct EomWorkspace {
    a: Vec<f64>,
    sin2: Vec<f64>,
    cos2: Vec<f64>,
}

impl EomWorkspace {
    pub fn new(l: usize) -> Self {
        EomWorkspace { a: vec![0.0; l], sin2: vec![0.0; l], cos2: vec![0.0; l] }
    }
}

/// dθ_i/dt = −(Ω/2)[cos θ_{i+1} + (a_{i−1}/a_i) sin θ_{i−1} cos θ_{i−1} sin θ_i].
///
/// The ratio A_{i−1}/A_i equals a_{i−1}/a_i, so 1 − Π only enters the
/// singularity check. When a_i underflows, the same limit rule as the
/// two-site tangent is applied to the numerator.
pub fn eom_rhs_into(thetas: &[f64], omega: f64, ws: &mut EomWorkspace, out: &mut [f64]) -> Result<()> {
    let l = thetas.len();
    check_even(l)?;
    if out.len() != l {
        return Err(Error::DimensionMismatch { expected: l, got: out.len() });
    }
    if ws.a.len() != l {
        *ws = EomWorkspace::new(l);
    }
    let pi = fill_a(thetas, &mut ws.a, &mut ws.sin2, &mut ws.cos2);
    if (1.0 - pi).abs() < SINGULAR_PI_TOL {
        return Err(Error::SingularCell { residual: (1.0 - pi).abs() });
    }
    let floor = LIMIT_COS_TOL * LIMIT_COS_TOL;
    for i in 0..l {
        let im = (i + l - 1) % l;
        let ip = (i + 1) % l;
        let (sm, cm) = thetas[im].sin_cos();
        let si = thetas[i].sin();
        let num = ws.a[im] * sm * cm;
        let term = if ws.a[i] < floor {
            if (num * si).abs() < LIMIT_SIN_TOL {
                0.0
            } else {
                return Err(Error::SingularCell { residual: ws.a[i] });
            }
        } else {
            num / ws.a[i] * si
        };
        out[i] = -0.5 * omega * (thetas[ip].cos() + term);
    }
    Ok(())
}

pub fn eom_rhs_general(state: &UnitCellState, params: &ModelParams) -> Result<Vec<f64>> {
    let l = state.thetas.len();
    if l != params.l {
        return Err(Error::DimensionMismatch { expected: params.l, got: l });
    }
    let mut out = vec![0.0; l];
    eom_rhs_into(&state.thetas, params.omega, &mut EomWorkspace::new(l), &mut out)?;
    Ok(out)
}

/// The general-L equations as a [`Flow`] on the θ variables.
pub struct TdvpFlow {
    pub omega: f64,
    pub l: usize,
    ws: std::cell::RefCell<EomWorkspace>,
}

impl TdvpFlow {
    pub fn new(params: &ModelParams) -> Self {
        TdvpFlow {
            omega: params.omega,
            l: params.l,
            ws: std::cell::RefCell::new(EomWorkspace::new(params.l)),
        }
    }
}

impl Flow for TdvpFlow {
    fn dim(&self) -> usize {
        self.l
    }
    fn rhs(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        eom_rhs_into(y, self.omega, &mut self.ws.borrow_mut(), out)
    }
}

/// Per-step increments larger than this mean the step cannot resolve the
/// flow, which only happens when a trajectory grazes a chart singularity.
pub const MAX_STEP_INCREMENT: f64 = FRAC_PI_4;

/// Fixed-step RK4 from `state0`, sampled every `dt`.
pub fn integrate(state0: &UnitCellState, params: &ModelParams, t_end: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidParameter(format!("need dt > 0 and t_end >= 0, got dt={dt}, t_end={t_end}")));
    }
    if state0.len() != params.l {
        return Err(Error::DimensionMismatch { expected: params.l, got: state0.len() });
    }
    let n = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let flow = TdvpFlow::new(params);
    let mut rk = Rk4::new(params.l);
    rk.max_increment = MAX_STEP_INCREMENT;
    let mut y = state0.thetas.clone();
    let mut traj = Trajectory {
        times: Vec::with_capacity(n + 1),
        states: Vec::with_capacity(n + 1),
    };
    traj.times.push(0.0);
    traj.states.push(state0.clone());
    for k in 1..=n {
        rk.step(&flow, &mut y, dt)?;
        traj.times.push(k as f64 * dt);
        traj.states.push(UnitCellState { thetas: y.clone(), phis: state0.phis.clone() });
    }
    Ok(traj)
}

fn wrap(x: f64, period: f64) -> f64 {
    x - period * (x / period).round()
}

/// Distance between two angle vectors with each component taken modulo
/// `identification` (pass `f64::INFINITY` for the plain Euclidean distance).
pub fn angle_distance(a: &[f64], b: &[f64], identification: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = if identification.is_finite() { wrap(x - y, identification) } else { x - y };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Threshold on the closest approach for accepting a Poincaré return.
pub const RETURN_THRESHOLD: f64 = 1e-2;

/// Period of the first return to the initial point.
///
/// Angles are compared modulo `identification`. On the Z₂ orbit, θ and
/// θ + π describe the same configuration probabilities, so the physical
/// recurrence uses `identification = π`, while the closure of the angle
/// orbit itself uses 2π.
pub fn find_orbit_period(traj: &Trajectory, identification: f64) -> Result<OrbitInfo> {
    let x0 = traj
        .states
        .first()
        .ok_or(Error::NoReturnFound { closest: f64::INFINITY })?;
    let d2: Vec<f64> = traj
        .states
        .iter()
        .map(|s| angle_distance(&s.thetas, &x0.thetas, identification).powi(2))
        .collect();
    // Only look for a return after the trajectory has left the neighbourhood.
    let leave = 100.0 * RETURN_THRESHOLD * RETURN_THRESHOLD;
    let start = d2.iter().position(|&v| v > leave);
    let mut closest = f64::INFINITY;
    if let Some(start) = start {
        for i in start.max(1)..d2.len().saturating_sub(1) {
            closest = closest.min(d2[i].sqrt());
            if d2[i] <= d2[i - 1] && d2[i] < d2[i + 1] && d2[i].sqrt() < RETURN_THRESHOLD {
                // Parabolic refinement of the squared distance.
                let (t0, t1, t2) = (traj.times[i - 1], traj.times[i], traj.times[i + 1]);
                let (y0, y1, y2) = (d2[i - 1], d2[i], d2[i + 1]);
                let h = t1 - t0;
                let curv = y0 - 2.0 * y1 + y2;
                let (t_min, _y_min) = if curv > 0.0 && (t2 - t1 - h).abs() < 1e-9 * h.abs().max(1.0) {
                    let off = 0.5 * h * (y0 - y2) / curv;
                    (t1 + off, y1 - (y0 - y2).powi(2) / (8.0 * curv))
                } else {
                    (t1, y1)
                };
                let period = t_min - traj.times[0];
                return Ok(OrbitInfo {
                    period,
                    frequency: 2.0 * PI / period,
                    closure_error: y1.sqrt(),
                });
            }
        }
    }
    Err(Error::NoReturnFound { closest })
}

/// First-harmonic approximation of the Z₂ orbit at angular frequency
/// `omega_orbit` (the frequency of the angle orbit, not of the revivals).
pub fn first_harmonic_orbit(t: f64, omega_orbit: f64) -> (f64, f64) {
    let (s, c) = (omega_orbit * t).sin_cos();
    (-FRAC_PI_2 * (1.0 - c), FRAC_PI_2 * (1.0 - s))
}

/// Time shift δ minimising the largest distance between the harmonic
/// evaluated at t + δ and the first two sites of `traj`. Returns (δ, max distance).
pub fn harmonic_phase_shift(traj: &Trajectory, omega_orbit: f64, n_scan: usize) -> (f64, f64) {
    let period = 2.0 * PI / omega_orbit;
    let cost = |shift: f64| {
        traj.times
            .iter()
            .zip(&traj.states)
            .map(|(&t, s)| {
                let (h1, h2) = first_harmonic_orbit(t + shift, omega_orbit);
                angle_distance(&s.thetas[..2], &[h1, h2], f64::INFINITY)
            })
            .fold(0.0_f64, f64::max)
    };
    let mut best = (0.0, cost(0.0));
    let n_scan = n_scan.max(1);
    for k in 1..n_scan {
        let shift = period * (k as f64 / n_scan as f64 - 0.5);
        let c = cost(shift);
        if c < best.1 {
            best = (shift, c);
        }
    }
    // Golden-section polish around the coarse optimum.
    let h = period / n_scan as f64;
    let (mut lo, mut hi) = (best.0 - h, best.0 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if cost(m1) < cost(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mid = 0.5 * (lo + hi);
    let c = cost(mid);
    if c < best.1 {
        (mid, c)
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn coefficients_trivial_and_quarter() {
        let c = cell_coefficients(&[0.0, 0.0]).unwrap();
        assert_eq!(c.pi_product, 0.0);
        assert_eq!(c.a, vec![1.0, 1.0]);
        assert_eq!(c.phi_cap, vec![0.0, 0.0]);

        let q = std::f64::consts::FRAC_PI_4;
        let c = cell_coefficients(&[q, q]).unwrap();
        assert_abs_diff_eq!(c.pi_product, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(c.a[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.cap_a[1], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.phi_cap[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.phi_cap[0], 1.0 - c.cap_a[1], epsilon = 1e-15);
    }

    #[test]
    fn coefficients_singular_corner() {
        assert!(matches!(
            cell_coefficients(&[FRAC_PI_2, FRAC_PI_2]),
            Err(Error::SingularCell { .. })
        ));
    }

    #[test]
    fn odd_cell_rejected() {
        assert!(cell_coefficients(&[0.1, 0.2, 0.3]).is_err());
        assert!(ModelParams::new(1.0, 3).is_err());
        assert!(ModelParams::new(0.0, 2).is_err());
    }

    #[test]
    fn l2_closed_form_examples() {
        let (a, b) = eom_rhs_l2(0.0, 0.0, 1.0).unwrap();
        assert_eq!((a, b), (-0.5, -0.5));
        let (a, b) = eom_rhs_l2(0.0, PI, 1.0).unwrap();
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn general_matches_l2_at_sample_point() {
        let p = ModelParams::new(1.0, 2).unwrap();
        let g = eom_rhs_general(&UnitCellState::new(vec![0.3, 0.7]), &p).unwrap();
        let (a, b) = eom_rhs_l2(0.3, 0.7, 1.0).unwrap();
        assert_abs_diff_eq!(g[0], a, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1], b, epsilon = 1e-12);
        let g = eom_rhs_general(&UnitCellState::new(vec![0.0, PI]), &p).unwrap();
        assert_abs_diff_eq!(g[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn tiled_cell_repeats_l2_pattern() {
        let p2 = ModelParams::new(1.0, 2).unwrap();
        let p4 = ModelParams::new(1.0, 4).unwrap();
        let f2 = eom_rhs_general(&UnitCellState::new(vec![0.4, 1.1]), &p2).unwrap();
        let f4 = eom_rhs_general(&UnitCellState::z2_tiled(4, 0.4, 1.1), &p4).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(f4[i], f2[i % 2], epsilon = 1e-13);
        }
    }

    #[test]
    fn l6_rhs_matches_integrator_difference() {
        let p = ModelParams::new(1.0, 6).unwrap();
        let s = UnitCellState::new(vec![0.3, 1.2, -0.4, 0.9, 0.2, 2.0]);
        let f = eom_rhs_general(&s, &p).unwrap();
        let h = 1e-4;
        let fwd = integrate(&s, &p, h, h).unwrap();
        let mut back = s.clone();
        let flow = TdvpFlow::new(&p);
        crate::ode::advance(&flow, &mut back.thetas, -h, 1).unwrap();
        for i in 0..6 {
            let fd = (fwd.states[1].thetas[i] - back.thetas[i]) / (2.0 * h);
            assert_abs_diff_eq!(fd, f[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn zero_length_integration_is_identity() {
        let p = ModelParams::new(1.0, 2).unwrap();
        let s = UnitCellState::z2(2);
        let t = integrate(&s, &p, 0.0, 1e-3).unwrap();
        assert_eq!(t.times, vec![0.0]);
        assert_eq!(t.states, vec![s]);
    }

    #[test]
    fn synthetic_rotation_period() {
        let w0 = 0.7;
        let dt = 0.01;
        let traj = Trajectory {
            times: (0..2000).map(|k| k as f64 * dt).collect(),
            states: (0..2000).map(|k| UnitCellState::new(vec![w0 * k as f64 * dt, 0.0])).collect(),
        };
        let info = find_orbit_period(&traj, 2.0 * PI).unwrap();
        assert_abs_diff_eq!(info.period, 2.0 * PI / w0, epsilon = 1e-9);
        assert_abs_diff_eq!(info.frequency * info.period, 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn constant_trajectory_has_no_return() {
        let traj = Trajectory {
            times: (0..100).map(|k| k as f64).collect(),
            states: vec![UnitCellState::new(vec![0.1, 0.2]); 100],
        };
        assert!(matches!(find_orbit_period(&traj, 2.0 * PI), Err(Error::NoReturnFound { .. })));
    }

    #[test]
    fn harmonic_special_values() {
        let w = 0.3;
        let tau = 2.0 * PI / w;
        assert_eq!(first_harmonic_orbit(0.0, w), (0.0, FRAC_PI_2));
        let (a, b) = first_harmonic_orbit(tau / 4.0, w);
        assert_abs_diff_eq!(a, -FRAC_PI_2, epsilon = 1e-14);
        assert_abs_diff_eq!(b, 0.0, epsilon = 1e-14);
        for k in 0..50 {
            let t = k as f64 * tau / 50.0;
            let (a1, _) = first_harmonic_orbit(tau / 4.0 - t, w);
            let (_, b2) = first_harmonic_orbit(t, w);
            assert_abs_diff_eq!(a1, -b2, epsilon = 1e-13);
            let (a3, b3) = first_harmonic_orbit(t + tau / 4.0, w);
            let (a0, b0) = first_harmonic_orbit(t, w);
            assert_abs_diff_eq!(a3, b0 - PI, epsilon = 1e-13);
            assert_abs_diff_eq!(b3, -a0, epsilon = 1e-13);
        }
    }
}
