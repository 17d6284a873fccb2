//! Physical constants in the simulator's unit system: hbar = 1, time in
//! microseconds, angular frequencies in rad/us.

use std::f64::consts::PI;

/// Vacuum Rabi frequency (2 pi x 50 kHz).
pub const OMEGA: f64 = 2.0 * PI * 0.05;
/// Cavity energy damping time, 130 ms.
pub const T_CAVITY: f64 = 130_000.0;
/// Mean thermal photon number.
pub const N_THERMAL: f64 = 0.05;
/// Default Fock truncation.
pub const DIM: usize = 60;
