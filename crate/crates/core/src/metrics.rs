//! Register projection, gate error, motional leakage, populations and pulse
//! spectra.

use rustfft::FftPlanner;

use crate::error::{invalid, Result};
use crate::grid::{harmonic_ground_state, harmonic_length, SpatialGrid, Wavefunction1D};
use crate::krotov::{fidelity, GateTarget};
use crate::propagator::Trajectory;
use crate::state::{channel_levels, TwoAtomState, N_CHANNELS, REGISTER_CHANNELS};
use crate::system::{ControlField, Field, SystemParameters};
use crate::units::rad_per_ns_to_mhz;
use crate::C64;

/// The four computational basis states `|jj'> ⊗ φ0`, ordered 00, 01, 10, 11.
#[derive(Clone, Debug)]
pub struct RegisterBasis {
    pub motion: Wavefunction1D,
    pub states: Vec<TwoAtomState>,
}

impl RegisterBasis {
    pub fn new(motion: Wavefunction1D) -> Self {
        let states = REGISTER_CHANNELS
            .iter()
            .map(|&c| {
                let (a, b) = channel_levels(c);
                TwoAtomState::product(a, b, &motion)
            })
            .collect();
        Self { motion, states }
    }

    /// Basis built on the trap ground state of `params`.
    pub fn trap_ground(params: &SystemParameters, grid: &SpatialGrid) -> Result<Self> {
        let motion = harmonic_ground_state(grid, params.omega_trap, params.mass_amu, params.r0)?;
        Ok(Self::new(motion))
    }

    pub fn n_r(&self) -> usize {
        self.motion.len()
    }

    /// `<φ0^k | psi>`.
    pub fn overlap(&self, k: usize, psi: &TwoAtomState) -> C64 {
        psi.channel_overlap(REGISTER_CHANNELS[k], &self.motion)
    }
}

pub(crate) fn check_states(states: &[TwoAtomState], basis: &RegisterBasis) -> Result<()> {
    if states.len() != 4 {
        return invalid(format!("expected four register states, got {}", states.len()));
    }
    if states.iter().any(|s| s.n_r != basis.n_r()) {
        return invalid("register states do not match the basis grid");
    }
    Ok(())
}

/// `M[j][k] = <φ0^j | ψ_k(T)>`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegisterProjection {
    pub m: [[C64; 4]; 4],
}

impl RegisterProjection {
    pub fn diagonal(&self) -> [C64; 4] {
        [self.m[0][0], self.m[1][1], self.m[2][2], self.m[3][3]]
    }
}

pub fn project_to_register(states: &[TwoAtomState], basis: &RegisterBasis) -> Result<RegisterProjection> {
    check_states(states, basis)?;
    let mut m = [[C64::new(0.0, 0.0); 4]; 4];
    for (k, psi) in states.iter().enumerate() {
        for (j, row) in m.iter_mut().enumerate() {
            row[k] = basis.overlap(j, psi);
        }
    }
    Ok(RegisterProjection { m })
}

/// `1 - F`.
pub fn gate_error(states: &[TwoAtomState], target: &GateTarget, basis: &RegisterBasis) -> Result<f64> {
    Ok(1.0 - fidelity(states, target, basis)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Leakage {
    /// `1 - |<φ0^k|ψ_k>|²` per register state.
    pub per_state: [f64; 4],
    pub total: f64,
}

/// Population not returned to the motional ground state of its own register
/// channel.
pub fn motional_leakage(states: &[TwoAtomState], basis: &RegisterBasis) -> Result<Leakage> {
    check_states(states, basis)?;
    let mut per_state = [0.0; 4];
    for (k, psi) in states.iter().enumerate() {
        per_state[k] = 1.0 - basis.overlap(k, psi).norm_sqr();
    }
    let total = per_state.iter().sum::<f64>() / 4.0;
    Ok(Leakage { per_state, total })
}

#[derive(Clone, Debug)]
pub struct Populations {
    pub times: Vec<f64>,
    pub values: Vec<[f64; N_CHANNELS]>,
}

pub fn population_dynamics(trajectory: &Trajectory) -> Populations {
    Populations {
        times: trajectory.times.clone(),
        values: trajectory.states.iter().map(|s| s.populations()).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumOptions {
    pub hann: bool,
    pub zero_padding: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            hann: true,
            zero_padding: 4,
        }
    }
}

impl SpectrumOptions {
    pub fn raw() -> Self {
        Self {
            hann: false,
            zero_padding: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub freq_mhz: Vec<f64>,
    pub amp_r: Vec<f64>,
    pub amp_b: Vec<f64>,
}

/// Magnitude of the DFT of `samples - mean` (in the units of `samples`),
/// normalized by the window sum; non-negative frequencies only, in MHz for
/// `dt` in ns.
pub fn amplitude_spectrum(samples: &[f64], dt: f64, options: SpectrumOptions) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let window: Vec<f64> = (0..n)
        .map(|j| {
            if options.hann && n > 1 {
                let x = std::f64::consts::PI * j as f64 / (n - 1) as f64;
                x.sin().powi(2)
            } else {
                1.0
            }
        })
        .collect();
    let wsum: f64 = window.iter().sum();
    let n_pad = n * options.zero_padding.max(1);
    let mut buf = vec![C64::new(0.0, 0.0); n_pad];
    for (j, (s, w)) in samples.iter().zip(&window).enumerate() {
        buf[j] = C64::new((s - mean) * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(n_pad).process(&mut buf);
    let half = n_pad / 2 + 1;
    let freq = (0..half).map(|k| 1e3 * k as f64 / (n_pad as f64 * dt)).collect();
    let amp = buf[..half].iter().map(|x| x.norm() / wsum).collect();
    (freq, amp)
}

/// Spectra of both Rabi envelopes, in MHz.
pub fn pulse_spectrum(fields: &ControlField, params: &SystemParameters, options: SpectrumOptions) -> Spectrum {
    let rabi_mhz = |f: Field| -> Vec<f64> {
        fields
            .rabi(f, params.cap(f))
            .into_iter()
            .map(rad_per_ns_to_mhz)
            .collect()
    };
    let (freq_mhz, amp_r) = amplitude_spectrum(&rabi_mhz(Field::Red), fields.dt, options);
    let (_, amp_b) = amplitude_spectrum(&rabi_mhz(Field::Blue), fields.dt, options);
    Spectrum {
        freq_mhz,
        amp_r,
        amp_b,
    }
}

/// `Σ amp² Δf` over frequencies at or above `f_min` (MHz).
pub fn sideband_power(freq_mhz: &[f64], amp: &[f64], f_min: f64) -> f64 {
    if freq_mhz.len() < 2 {
        return 0.0;
    }
    let df = freq_mhz[1] - freq_mhz[0];
    freq_mhz
        .iter()
        .zip(amp)
        .filter(|(f, _)| **f >= f_min)
        .map(|(_, a)| a * a * df)
        .sum()
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ForceKick {
    /// `3π/r0` in rad/μm (ħ = 1).
    pub delta_p: f64,
    /// `δp²/(2ħ m ω)`.
    pub motional_error: f64,
    /// `sqrt(ħ/mω)` in μm.
    pub ground_state_size: f64,
    /// `(√2/3π) r0` in μm.
    pub size_limit: f64,
    pub ratio: f64,
    pub condition_met: bool,
}

/// Motional excitation caused by the Rydberg-pair force acting during the
/// gate. The condition is considered met when the ground state is at least
/// ten times smaller than the limit.
pub fn force_kick_check(params: &SystemParameters) -> Result<ForceKick> {
    params.validate()?;
    let delta_p = 3.0 * std::f64::consts::PI / params.r0;
    let length = harmonic_length(params.omega_trap, params.mass_amu);
    let motional_error = 0.5 * delta_p * delta_p * length * length;
    let size_limit = 2f64.sqrt() / (3.0 * std::f64::consts::PI) * params.r0;
    let ratio = length / size_limit;
    Ok(ForceKick {
        delta_p,
        motional_error,
        ground_state_size: length,
        size_limit,
        ratio,
        condition_met: ratio < 0.1,
    })
}
