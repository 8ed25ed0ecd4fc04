use std::f64::consts::PI;

use pxp_scars::semiclassics::*;

fn z2_trajectory(t_end: f64, dt: f64) -> Trajectory {
    let p = ModelParams::new(1.0, 2).unwrap();
    integrate(&UnitCellState::z2(2), &p, t_end, dt).unwrap()
}

#[test]
fn z2_angle_orbit_closes() {
    let traj = z2_trajectory(20.0, 1e-3);
    let info = find_orbit_period(&traj, 2.0 * PI).unwrap();
    println!("angle orbit: {info:?}");
    assert!(info.closure_error < 1e-3);
    assert!((info.period - 19.279).abs() < 0.01);
}

#[test]
fn z2_revival_frequency() {
    let traj = z2_trajectory(20.0, 1e-3);
    let info = find_orbit_period(&traj, PI).unwrap();
    println!("revival: {info:?}");
    assert!((info.frequency - 1.0 / 1.51).abs() < 0.02 / 1.51);
}

// The orbit crosses a chart singularity at every quarter period, where the
// local error is set by how the step straddles the pole. The smooth
// stretch before the first crossing shows the clean asymptotic order.
#[test]
fn step_halving_is_fourth_order() {
    let end = |dt: f64| z2_trajectory(4.0, dt).states.last().unwrap().thetas.clone();
    let a = end(0.04);
    let b = end(0.02);
    let c = end(0.01);
    let e1 = (a[0] - b[0]).hypot(a[1] - b[1]);
    let e2 = (b[0] - c[0]).hypot(b[1] - c[1]);
    let ratio = e1 / e2;
    assert!((ratio - 16.0).abs() < 3.2, "halving ratio {ratio}");
}

#[test]
fn harmonic_tracks_integrated_orbit() {
    let traj = z2_trajectory(19.3, 1e-3);
    let w = find_orbit_period(&traj, 2.0 * PI).unwrap().frequency;
    let (shift, dev) = harmonic_phase_shift(&traj, w, 200);
    println!("harmonic shift {shift}, max deviation {dev}");
    assert!(dev < 0.15);
}
