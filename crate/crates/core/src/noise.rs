//! Closed-form estimates of surface-induced perturbations of Rydberg atoms
//! trapped near an atom chip: static adsorbate fields, patch-charge
//! dephasing, thermally enhanced decay, surface and blackbody level shifts.
//!
//! Inputs use lab units (μm, K, ns, MHz); results are SI unless the name
//! says otherwise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::constants::{
    ATOMIC_DIPOLE, BOLTZMANN, ELECTRON_MASS, FINE_STRUCTURE, HARTREE, HBAR, PLANCK, SPEED_OF_LIGHT,
    VACUUM_PERMITTIVITY,
};
use crate::error::{invalid, Result};

const UM: f64 = 1e-6;

/// Detuning of the nearby pair-state resonance, MHz.
pub const FORSTER_MISMATCH_MHZ: f64 = 7.0;
/// Pair interaction at the gate distance, MHz.
pub const INTERACTION_SCALE_MHZ: f64 = 50.0;

fn check_distance(z_um: f64) -> Result<()> {
    if !(z_um > 0.0) {
        return invalid(format!("distance must be positive, got {z_um} μm"));
    }
    Ok(())
}

/// On-axis field (V/m) of an upright dipole `p` (units of `e a_B`) at
/// height `z`: `2p / (4πε₀ z³)`.
pub fn dipole_field(p: f64, z_um: f64) -> Result<f64> {
    check_distance(z_um)?;
    let z = z_um * UM;
    Ok(2.0 * p * ATOMIC_DIPOLE / (4.0 * PI * VACUUM_PERMITTIVITY * z.powi(3)))
}

/// Field of a single adsorbed atom with dipole `e a_B` directly below.
pub fn impurity_field(z_um: f64) -> Result<f64> {
    dipole_field(1.0, z_um)
}

/// Vertical field (V/m) above the center of a square patch of side `extent`
/// covered with upright dipoles `p` (units of `e a_B`) on a square lattice
/// of the given areal density (1/μm²). Sites sit at cell centers.
pub fn adsorbate_field_sum(density: f64, extent_um: f64, z_um: f64, p: f64) -> Result<f64> {
    check_distance(z_um)?;
    if !(density >= 0.0) || !(extent_um >= 0.0) {
        return invalid("density and extent must be non-negative");
    }
    let per_side = (density.sqrt() * extent_um).round() as usize;
    if per_side == 0 || p == 0.0 {
        return Ok(0.0);
    }
    let a = extent_um / per_side as f64;
    let z = z_um * UM;
    let offset = 0.5 * (per_side as f64 - 1.0);
    let mut sum = 0.0;
    for i in 0..per_side {
        let x = (i as f64 - offset) * a * UM;
        for j in 0..per_side {
            let y = (j as f64 - offset) * a * UM;
            let r2 = x * x + y * y + z * z;
            sum += (3.0 * z * z - r2) / (r2 * r2 * r2.sqrt());
        }
    }
    Ok(p * ATOMIC_DIPOLE / (4.0 * PI * VACUUM_PERMITTIVITY) * sum)
}

/// Linear Stark coupling `e a_B n² E / h` in MHz.
pub fn stark_matrix_element(n: f64, field: f64) -> Result<f64> {
    if !(n >= 1.0) || !(field >= 0.0) {
        return invalid("need n ≥ 1 and a non-negative field");
    }
    Ok(ATOMIC_DIPOLE * n * n * field / PLANCK * 1e-6)
}

/// `α_R E²` with `α_R` in MHz/(V/m)², result in MHz.
pub fn quadratic_stark_shift(alpha_mhz: f64, field: f64) -> Result<f64> {
    if !(field >= 0.0) {
        return invalid("field must be non-negative");
    }
    Ok(alpha_mhz * field * field)
}

/// Dipole `d = α_R E` induced by a static field, in units of `e a_B`, with
/// `α_R` in MHz/(V/m)².
pub fn induced_dipole(alpha_mhz: f64, field: f64) -> f64 {
    alpha_mhz * 1e6 * PLANCK * field / ATOMIC_DIPOLE
}

/// `S_E(z, ω) = S_ref (z_ref/z)⁴ (ω_ref/ω)^β`, (V/m)²/Hz.
pub fn noise_spectrum(s_ref: f64, z_ref_um: f64, omega_ref: f64, beta: f64, z_um: f64, omega: f64) -> Result<f64> {
    check_distance(z_um)?;
    check_distance(z_ref_um)?;
    if !(omega > 0.0) || !(omega_ref > 0.0) {
        return invalid("frequencies must be positive; apply a low-frequency cutoff");
    }
    Ok(s_ref * (z_ref_um / z_um).powi(4) * (omega_ref / omega).powf(beta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParameters {
    /// Atom–surface distance, μm.
    pub z_um: f64,
    pub temperature_k: f64,
    pub n: f64,
    pub n_star: f64,
    /// Induced Rydberg dipole, `e a_B`.
    pub d_r: f64,
    /// Quasi-static polarizability, MHz/(V/m)².
    pub alpha_r_mhz: f64,
    /// Reference field-noise density, (V/m)²/Hz.
    pub s_e_ref: f64,
    pub z_ref_um: f64,
    /// Reference angular frequency, rad/s.
    pub omega_ref: f64,
    pub beta: f64,
    /// Time spent in the Rydberg state, ns.
    pub tau_ns: f64,
    /// Decay enhancement near the surface relative to free space.
    pub enhancement: f64,
    /// Adatom areal density, 1/μm².
    pub adatom_density: f64,
    /// Side of the adatom patch, μm.
    pub patch_extent_um: f64,
    /// Dipole of one adatom, `e a_B`.
    pub adatom_dipole: f64,
}

impl Default for NoiseParameters {
    fn default() -> Self {
        Self {
            z_um: 10.0,
            temperature_k: 300.0,
            n: 58.0,
            n_star: 56.66,
            d_r: 200.0,
            alpha_r_mhz: 2.5,
            s_e_ref: 1e-11,
            z_ref_um: 75.0,
            omega_ref: 2.0 * PI * 1e6,
            beta: 0.7,
            tau_ns: 20.0,
            enhancement: 5.0,
            adatom_density: 100.0,
            patch_extent_um: 10.0,
            adatom_dipole: 1.0,
        }
    }
}

impl NoiseParameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.z_um > 0.0 && self.z_ref_um > 0.0) {
            return invalid("distances must be positive");
        }
        if !(self.tau_ns > 0.0) {
            return invalid("tau must be positive");
        }
        if !(self.temperature_k >= 0.0) {
            return invalid("temperature must be non-negative");
        }
        if !(self.enhancement >= 0.0) {
            return invalid("enhancement must be non-negative");
        }
        if !(self.beta > 0.0 && self.beta < 2.0) {
            return invalid("beta must lie in (0, 2)");
        }
        if self.beta == 1.0 {
            return invalid("beta = 1 makes the dephasing integral diverge; use 1 ± δ");
        }
        if !(self.omega_ref > 0.0) {
            return invalid("reference frequency must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Dephasing {
    /// Phase variance after `τ`, rad².
    pub variance: f64,
    /// `variance / τ`, 1/s.
    pub rate: f64,
    /// `variance / 2`.
    pub error: f64,
}

/// Phase diffusion of a dipole `d_r` (units of `e a_B`) in power-law field
/// noise over the time `τ`.
pub fn dephasing_variance(d_r: f64, params: &NoiseParameters) -> Result<Dephasing> {
    params.validate()?;
    let tau = params.tau_ns * 1e-9;
    let d = d_r * ATOMIC_DIPOLE;
    let s = noise_spectrum(
        params.s_e_ref,
        params.z_ref_um,
        params.omega_ref,
        params.beta,
        params.z_ref_um,
        1.0 / tau,
    )?;
    let distance = (params.z_um / params.z_ref_um).powi(4);
    let shape = (PI * params.beta / 2.0).cos() * gamma(2.0 + params.beta);
    let variance = tau * d * d * s / (2.0 * HBAR * HBAR * distance) / shape;
    Ok(Dephasing {
        variance,
        rate: variance / tau,
        error: 0.5 * variance,
    })
}

/// Bose occupation of a mode at angular frequency `omega` (rad/s).
pub fn bose_occupation(omega: f64, temperature_k: f64) -> f64 {
    if temperature_k <= 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (BOLTZMANN * temperature_k)).exp_m1()
}

/// Spontaneous rate `ω³ μ² / (3π ε₀ ħ c³)` in 1/s.
pub fn free_space_rate(omega: f64, mu: f64) -> f64 {
    omega.powi(3) * mu * mu / (3.0 * PI * VACUUM_PERMITTIVITY * HBAR * SPEED_OF_LIGHT.powi(3))
}

/// Rate (1/s) of a transition at `omega_rs` (rad/s; positive for emission,
/// negative for absorption) with dipole `mu` (C m), scaled by the surface
/// enhancement of the field fluctuations.
pub fn thermal_decay_rate(omega_rs: f64, mu: f64, temperature_k: f64, enhancement: f64) -> Result<f64> {
    if omega_rs == 0.0 || !omega_rs.is_finite() {
        return invalid("transition frequency must be non-zero");
    }
    let w = omega_rs.abs();
    let nbar = bose_occupation(w, temperature_k);
    let occupation = if omega_rs > 0.0 { 1.0 + nbar } else { nbar };
    Ok(occupation * free_space_rate(w, mu) * enhancement)
}

/// Level spacing `1/n³` Hartree as an angular frequency (rad/s).
pub fn rydberg_spacing(n: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return invalid("n must be at least 1");
    }
    Ok(HARTREE / n.powi(3) / HBAR)
}

pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI) * 1e-9
}

/// Angular frequency (rad/s) to wavenumber in 1/cm.
pub fn angular_to_wavenumber(omega: f64) -> f64 {
    omega / (2.0 * PI * SPEED_OF_LIGHT) * 1e-2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SignedShift {
    pub magnitude: f64,
    /// `-1` for a downward (attractive) shift.
    pub sign: i8,
}

/// Surface shift `-<μx² + μy² + 2μz²>/(8πε₀ (2z)³)` with
/// `<…> = (5/2)(e a_B n*²)²`, magnitude in MHz.
pub fn vdw_shift(n_star: f64, z_um: f64) -> Result<SignedShift> {
    check_distance(z_um)?;
    let mu = ATOMIC_DIPOLE * n_star * n_star;
    let d = 2.0 * z_um * UM;
    let v = 2.5 * mu * mu / (8.0 * PI * VACUUM_PERMITTIVITY * d.powi(3));
    Ok(SignedShift {
        magnitude: v / PLANCK * 1e-6,
        sign: if v == 0.0 { 0 } else { -1 },
    })
}

/// `ħc/k_B T` in μm.
pub fn thermal_wavelength(temperature_k: f64) -> f64 {
    HBAR * SPEED_OF_LIGHT / (BOLTZMANN * temperature_k) / UM
}

/// `α_fs (k_B T)² / (m_e c²)` in kHz, times `λ_T/z` near a surface.
pub fn blackbody_shift(temperature_k: f64, z_um: Option<f64>) -> Result<f64> {
    if !(temperature_k >= 0.0) {
        return invalid("temperature must be non-negative");
    }
    let kt = BOLTZMANN * temperature_k;
    let free = FINE_STRUCTURE * kt * kt / (ELECTRON_MASS * SPEED_OF_LIGHT * SPEED_OF_LIGHT) / PLANCK * 1e-3;
    match z_um {
        None => Ok(free),
        Some(z) if temperature_k == 0.0 => check_distance(z).map(|_| 0.0),
        Some(z) => {
            check_distance(z)?;
            Ok(free * thermal_wavelength(temperature_k) / z)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThermalDecay {
    pub transition_ghz: f64,
    pub dipole_e_ab: f64,
    pub rate_free_space: f64,
    pub rate_near_surface: f64,
    /// `τ` times the near-surface rate.
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StarkEntry {
    pub field_v_per_m: f64,
    pub linear_element_mhz: f64,
    pub quadratic_shift_mhz: f64,
    pub exceeds_forster_mismatch: bool,
    pub exceeds_interaction: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseBudget {
    pub parameters: NoiseParameters,
    pub impurity_field_v_per_m: f64,
    pub stark: StarkEntry,
    pub induced_dipole_e_ab: f64,
    pub noise_spectrum_at_z: f64,
    pub dephasing: Dephasing,
    pub thermal_decay: ThermalDecay,
    pub vdw_shift_mhz: SignedShift,
    pub blackbody_shift_khz: f64,
    pub blackbody_shift_surface_khz: f64,
    pub rydberg_spacing_ghz: f64,
    pub rydberg_spacing_per_cm: f64,
}

/// All estimates at one parameter set. Decay uses the transition to the
/// adjacent level (`1/n*³` Hartree) with dipole `e a_B n*²`, counting
/// emission and absorption.
pub fn noise_budget_report(params: &NoiseParameters) -> Result<NoiseBudget> {
    params.validate()?;
    let z = params.z_um;
    let e_imp = dipole_field(params.adatom_dipole, z)?;
    let e_ads = adsorbate_field_sum(params.adatom_density, params.patch_extent_um, z, params.adatom_dipole)?;
    let linear = if params.n >= 1.0 {
        stark_matrix_element(params.n, e_ads)?
    } else {
        0.0
    };
    let quadratic = quadratic_stark_shift(params.alpha_r_mhz, e_ads)?;
    let shift = linear.max(quadratic);

    let (transition_ghz, rate_free, rate_surface, mu_e_ab) = if params.n_star >= 1.0 {
        let w = rydberg_spacing(params.n_star)?;
        let mu = ATOMIC_DIPOLE * params.n_star * params.n_star;
        let t = params.temperature_k;
        let total = |enh: f64| -> Result<f64> {
            Ok(thermal_decay_rate(w, mu, t, enh)? + thermal_decay_rate(-w, mu, t, enh)?)
        };
        (angular_to_ghz(w), total(1.0)?, total(params.enhancement)?, params.n_star * params.n_star)
    } else {
        (0.0, 0.0, 0.0, 0.0)
    };
    let spacing = rydberg_spacing(params.n.max(1.0))?;
    let omega_1_over_tau = 1e9 / params.tau_ns;

    Ok(NoiseBudget {
        impurity_field_v_per_m: e_imp,
        stark: StarkEntry {
            field_v_per_m: e_ads,
            linear_element_mhz: linear,
            quadratic_shift_mhz: quadratic,
            exceeds_forster_mismatch: shift > FORSTER_MISMATCH_MHZ,
            exceeds_interaction: shift > INTERACTION_SCALE_MHZ,
        },
        induced_dipole_e_ab: induced_dipole(params.alpha_r_mhz, e_ads),
        noise_spectrum_at_z: noise_spectrum(
            params.s_e_ref,
            params.z_ref_um,
            params.omega_ref,
            params.beta,
            z,
            omega_1_over_tau,
        )?,
        dephasing: dephasing_variance(params.d_r, params)?,
        thermal_decay: ThermalDecay {
            transition_ghz,
            dipole_e_ab: mu_e_ab,
            rate_free_space: rate_free,
            rate_near_surface: rate_surface,
            error: params.tau_ns * 1e-9 * rate_surface,
        },
        vdw_shift_mhz: vdw_shift(params.n_star, z)?,
        blackbody_shift_khz: blackbody_shift(params.temperature_k, None)?,
        blackbody_shift_surface_khz: blackbody_shift(params.temperature_k, Some(z))?,
        rydberg_spacing_ghz: if params.n >= 1.0 { angular_to_ghz(spacing) } else { 0.0 },
        rydberg_spacing_per_cm: if params.n >= 1.0 { angular_to_wavenumber(spacing) } else { 0.0 },
        parameters: params.clone(),
    })
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn inverse_power_laws(z in 0.5f64..200.0, s in 1.1f64..5.0) {
            let rel = |a: f64, b: f64| ((a - b) / b).abs();
            prop_assert!(rel(impurity_field(z).unwrap(), impurity_field(s * z).unwrap() * s.powi(3)) < 1e-12);
            let v1 = vdw_shift(56.66, z).unwrap().magnitude;
            let v2 = vdw_shift(56.66, s * z).unwrap().magnitude;
            prop_assert!(rel(v1, v2 * s.powi(3)) < 1e-12);
            let w = 2.0 * PI * 1e6;
            let s1 = noise_spectrum(1e-11, 75.0, w, 0.7, z, w).unwrap();
            let s2 = noise_spectrum(1e-11, 75.0, w, 0.7, s * z, w).unwrap();
            prop_assert!(rel(s1, s2 * s.powi(4)) < 1e-12);
        }

        #[test]
        fn spectrum_frequency_exponent(beta in 0.1f64..0.95, f in 1.5f64..10.0) {
            let w = 2.0 * PI * 1e6;
            let s1 = noise_spectrum(1e-11, 75.0, w, beta, 10.0, w).unwrap();
            let s2 = noise_spectrum(1e-11, 75.0, w, beta, 10.0, f * w).unwrap();
            prop_assert!(((s1 / s2) / f.powf(beta) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn emission_absorption_detailed_balance(ghz in 1.0f64..500.0, t in 1.0f64..400.0) {
            let w = 2.0 * PI * ghz * 1e9;
            let mu = 1e-26;
            let down = thermal_decay_rate(w, mu, t, 1.0).unwrap();
            let up = thermal_decay_rate(-w, mu, t, 1.0).unwrap();
            let boltzmann = (HBAR * w / (BOLTZMANN * t)).exp();
            prop_assert!((down / up / boltzmann - 1.0).abs() < 1e-10);
        }

        #[test]
        fn enhancement_is_a_plain_factor(e in 0.1f64..50.0) {
            let w = 2.0 * PI * 30e9;
            let a = thermal_decay_rate(w, 1e-26, 300.0, 1.0).unwrap();
            let b = thermal_decay_rate(w, 1e-26, 300.0, e).unwrap();
            prop_assert!((b / a / e - 1.0).abs() < 1e-12);
        }
    }
}
