//! Physical constants (CODATA 2018, SI).

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * core::f64::consts::PI);
/// Atomic unit of electric dipole moment, e·a₀ (C·m).
pub const ATOMIC_DIPOLE: f64 = 8.478_353_625_5e-30;
