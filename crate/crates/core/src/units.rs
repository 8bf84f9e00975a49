//! Conversions between lab units and the internal unit system
//! (ħ = 1, ns, μm, rad/ns).

use std::f64::consts::PI;

use crate::constants::{ATOMIC_MASS_UNIT, HBAR};

/// Frequency in MHz (cycles) to angular frequency in rad/ns.
pub fn mhz_to_rad_per_ns(f_mhz: f64) -> f64 {
    f_mhz * 2.0 * PI * 1e-3
}

/// Angular frequency in rad/ns to frequency in MHz.
pub fn rad_per_ns_to_mhz(w: f64) -> f64 {
    w / (2.0 * PI * 1e-3)
}

pub fn khz_to_rad_per_ns(f_khz: f64) -> f64 {
    mhz_to_rad_per_ns(f_khz * 1e-3)
}

/// ħ/m in μm²/ns for a mass given in atomic mass units.
pub fn hbar_over_mass(mass_amu: f64) -> f64 {
    // m²/s -> μm²/ns is a factor 1e12 / 1e9.
    HBAR / (mass_amu * ATOMIC_MASS_UNIT) * 1e3
}

/// Lifetime in ns to decay rate in 1/ns; an infinite or non-positive lifetime
/// means no decay.
pub fn rate_from_lifetime_ns(lifetime_ns: f64) -> f64 {
    if lifetime_ns.is_finite() && lifetime_ns > 0.0 {
        1.0 / lifetime_ns
    } else {
        0.0
    }
}
