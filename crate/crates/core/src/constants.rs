//! Physical constants (SI unless noted).

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

/// Geocentric gravitational constant, m^3/s^2.
pub const GM_EARTH: f64 = 3.986_004_418e14;

/// Mean spherical Earth radius, m.
pub const R_EARTH: f64 = 6.371e6;

/// Earth rotation rate, rad/s.
pub const OMEGA_EARTH: f64 = 7.292_115_9e-5;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Joules per electronvolt.
pub const EV: f64 = 1.602_176_634e-19;

/// Bohr magneton, eV/T.
pub const BOHR_MAGNETON_EV_PER_T: f64 = 5.7884e-5;

/// Surface gravity used for the order-of-magnitude estimates, m/s^2.
pub const G_SURFACE: f64 = 9.81;

pub const SECONDS_PER_DAY: f64 = 86_400.0;
