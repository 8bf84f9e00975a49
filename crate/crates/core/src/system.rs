//! Two-atom Hamiltonian in the rotating-wave approximation, applied
//! matrix-free on the 16 × `n_r` state space.
//!
//! Each atom has levels `|0>, |1>, |i>, |r>`. The red laser couples
//! `|0> ↔ |i>`, the blue laser `|i> ↔ |r>`; `|1>` is dark. Both atoms share a
//! single relative coordinate carrying the kinetic energy, and the pair
//! interacts through `c3/r³` only in `|rr>`.

use serde::{Deserialize, Serialize};

use crate::constants::RB87_MASS_AMU;
use crate::error::{invalid, Result};
use crate::grid::{KineticOperator, SpatialGrid};
use crate::state::{channel, channel_levels, Level, TwoAtomState, N_CHANNELS};
use crate::units::{hbar_over_mass, khz_to_rad_per_ns, mhz_to_rad_per_ns, rate_from_lifetime_ns};
use crate::C64;

/// Placement of the detunings on the excited levels: `Half` puts `Δ/2` on
/// `|i>` and `δ/2` on `|r>` for each atom, `Full` puts `Δ` and `δ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DetuningConvention {
    #[default]
    Half,
    Full,
}

impl DetuningConvention {
    fn factor(self) -> f64 {
        match self {
            DetuningConvention::Half => 0.5,
            DetuningConvention::Full => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    #[default]
    Hermitian,
    WithDecay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Red,
    Blue,
}

impl Field {
    pub const BOTH: [Field; 2] = [Field::Red, Field::Blue];

    /// Levels coupled by this field.
    pub fn levels(self) -> (Level, Level) {
        match self {
            Field::Red => (Level::Q0, Level::I),
            Field::Blue => (Level::I, Level::R),
        }
    }
}

/// Physical parameters in internal units (rad/ns, 1/ns, μm).
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParameters {
    pub omega_r0: f64,
    pub omega_b0: f64,
    /// Intermediate-state detuning Δ.
    pub delta: f64,
    /// Two-photon detuning δ.
    pub two_photon_detuning: f64,
    /// rad/ns · μm³.
    pub c3: f64,
    pub gamma_i: f64,
    pub gamma_r: f64,
    pub mass_amu: f64,
    pub omega_trap: f64,
    pub r0: f64,
    pub trap_on_during_gate: bool,
    pub detuning_convention: DetuningConvention,
}

impl SystemParameters {
    /// Rb two-photon excitation to 58d₃/₂ at 4 μm spacing: Rabi caps
    /// 2π·260 MHz, Δ = 2π·600 MHz, c3 = 3230 MHz μm³, lifetimes 27.7 ns and
    /// 210 μs, trap 2π·276 kHz.
    pub fn reference() -> Self {
        let omega_r0 = mhz_to_rad_per_ns(260.0);
        let omega_b0 = mhz_to_rad_per_ns(260.0);
        let delta = mhz_to_rad_per_ns(600.0);
        Self {
            omega_r0,
            omega_b0,
            delta,
            two_photon_detuning: (omega_b0 * omega_b0 - omega_r0 * omega_r0) / (4.0 * delta),
            c3: mhz_to_rad_per_ns(3230.0),
            gamma_i: rate_from_lifetime_ns(27.7),
            gamma_r: rate_from_lifetime_ns(210e3),
            mass_amu: RB87_MASS_AMU,
            omega_trap: khz_to_rad_per_ns(276.0),
            r0: 4.0,
            trap_on_during_gate: false,
            detuning_convention: DetuningConvention::Half,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_r0 > 0.0 && self.omega_b0 > 0.0) {
            return invalid("Rabi caps must be positive");
        }
        if self.delta == 0.0 || !self.delta.is_finite() {
            return invalid("intermediate detuning must be non-zero");
        }
        if !(self.c3 >= 0.0) {
            return invalid("c3 must be non-negative");
        }
        if !(self.gamma_i >= 0.0 && self.gamma_r >= 0.0) {
            return invalid("decay rates must be non-negative");
        }
        if !(self.mass_amu > 0.0 && self.omega_trap > 0.0 && self.r0 > 0.0) {
            return invalid("mass, trap frequency and r0 must be positive");
        }
        Ok(())
    }

    pub fn hbar_over_mass(&self) -> f64 {
        hbar_over_mass(self.mass_amu)
    }

    pub fn cap(&self, field: Field) -> f64 {
        match field {
            Field::Red => self.omega_r0,
            Field::Blue => self.omega_b0,
        }
    }

    /// Real diagonal offset of one atom in `level`.
    fn level_offset(&self, level: Level) -> f64 {
        let f = self.detuning_convention.factor();
        match level {
            Level::I => f * self.delta,
            Level::R => f * self.two_photon_detuning,
            _ => 0.0,
        }
    }

    fn level_decay(&self, level: Level) -> f64 {
        match level {
            Level::I => self.gamma_i,
            Level::R => self.gamma_r,
            _ => 0.0,
        }
    }
}

/// `Ω = Ω₀ (tanh ε + 1)/2`.
pub fn rabi_from_control(eps: f64, omega0: f64) -> f64 {
    omega0 * 0.5 * (eps.tanh() + 1.0)
}

/// `dΩ/dε = Ω₀ sech²(ε)/2`, stable for large `|ε|`.
pub fn rabi_derivative(eps: f64, omega0: f64) -> f64 {
    let e = (-2.0 * eps.abs()).exp();
    omega0 * 0.5 * 4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// Inverse of [`rabi_from_control`]; the ratio `Ω/Ω₀` is clamped to
/// `[1e-12, 1 - 1e-12]` so the control stays finite.
pub fn control_from_rabi(omega: f64, omega0: f64) -> f64 {
    let x = (omega / omega0).clamp(1e-12, 1.0 - 1e-12);
    (2.0 * x - 1.0).atanh()
}

/// Two-photon detuning compensating the differential light shift,
/// `δ = (Ω_B0² − Ω_R0²)/4Δ`.
pub fn stark_detuning(omega_r0: f64, omega_b0: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return invalid("stark_detuning needs a non-zero intermediate detuning");
    }
    Ok((omega_b0 * omega_b0 - omega_r0 * omega_r0) / (4.0 * delta))
}

/// `c3 / r³`.
pub fn interaction_potential(r: f64, c3: f64) -> Result<f64> {
    if !(r > 0.0) {
        return invalid(format!("interatomic distance must be positive, got {r}"));
    }
    Ok(c3 / (r * r * r))
}

/// Time-sampled unconstrained controls on `n_t + 1` equidistant nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlField {
    pub duration: f64,
    pub n_t: usize,
    pub dt: f64,
    pub eps_r: Vec<f64>,
    pub eps_b: Vec<f64>,
}

impl ControlField {
    pub fn constant(duration: f64, n_t: usize, eps_r: f64, eps_b: f64) -> Result<Self> {
        if !(duration > 0.0) || n_t == 0 {
            return invalid("control field needs a positive duration and at least one step");
        }
        Ok(Self {
            duration,
            n_t,
            dt: duration / n_t as f64,
            eps_r: vec![eps_r; n_t + 1],
            eps_b: vec![eps_b; n_t + 1],
        })
    }

    pub fn from_samples(duration: f64, eps_r: Vec<f64>, eps_b: Vec<f64>) -> Result<Self> {
        if eps_r.len() != eps_b.len() || eps_r.len() < 2 {
            return invalid("control samples must have equal length of at least two");
        }
        if !(duration > 0.0) {
            return invalid("control field duration must be positive");
        }
        let n_t = eps_r.len() - 1;
        Ok(Self {
            duration,
            n_t,
            dt: duration / n_t as f64,
            eps_r,
            eps_b,
        })
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_t).map(|n| self.time(n))
    }

    pub fn samples(&self, field: Field) -> &[f64] {
        match field {
            Field::Red => &self.eps_r,
            Field::Blue => &self.eps_b,
        }
    }

    pub fn samples_mut(&mut self, field: Field) -> &mut [f64] {
        match field {
            Field::Red => &mut self.eps_r,
            Field::Blue => &mut self.eps_b,
        }
    }

    /// Controls at the midpoint of step `n` (linear interpolation of nodes).
    pub fn midpoint(&self, n: usize) -> (f64, f64) {
        (
            0.5 * (self.eps_r[n] + self.eps_r[n + 1]),
            0.5 * (self.eps_b[n] + self.eps_b[n + 1]),
        )
    }

    /// Rabi frequencies used for step `n`.
    pub fn step_rabi(&self, n: usize, params: &SystemParameters) -> (f64, f64) {
        let (er, eb) = self.midpoint(n);
        (
            rabi_from_control(er, params.omega_r0),
            rabi_from_control(eb, params.omega_b0),
        )
    }

    /// Rabi envelope at the nodes.
    pub fn rabi(&self, field: Field, omega0: f64) -> Vec<f64> {
        self.samples(field)
            .iter()
            .map(|&e| rabi_from_control(e, omega0))
            .collect()
    }
}

/// Matrix-free two-atom Hamiltonian for a fixed grid and parameter set.
///
/// Rabi frequencies are supplied per application, so one instance serves the
/// whole time grid.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    pub params: SystemParameters,
    pub mode: DecayMode,
    kinetic: KineticOperator,
    n_r: usize,
    dr: f64,
    /// Per-channel diagonal (offsets, interaction, trap, decay), channel-major.
    diag: Vec<C64>,
}

impl Hamiltonian {
    pub fn new(params: &SystemParameters, grid: &SpatialGrid, mode: DecayMode) -> Result<Self> {
        params.validate()?;
        let kinetic = KineticOperator::new(grid, params.mass_amu)?;
        let n_r = grid.n;
        let hbar_over_m = params.hbar_over_mass();
        let mut diag = vec![C64::new(0.0, 0.0); N_CHANNELS * n_r];
        for c in 0..N_CHANNELS {
            let (a, b) = channel_levels(c);
            let offset = params.level_offset(a) + params.level_offset(b);
            let decay = match mode {
                DecayMode::Hermitian => 0.0,
                DecayMode::WithDecay => -0.5 * (params.level_decay(a) + params.level_decay(b)),
            };
            for j in 0..n_r {
                let r = grid.point(j);
                let mut v = offset;
                if a == Level::R && b == Level::R && params.c3 != 0.0 {
                    v += interaction_potential(r, params.c3)?;
                }
                if params.trap_on_during_gate {
                    let x = r - params.r0;
                    v += 0.5 * params.omega_trap * params.omega_trap * x * x / hbar_over_m;
                }
                diag[c * n_r + j] = C64::new(v, decay);
            }
        }
        Ok(Self {
            params: params.clone(),
            mode,
            kinetic,
            n_r,
            dr: grid.dr,
            diag,
        })
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn dim(&self) -> usize {
        N_CHANNELS * self.n_r
    }

    pub fn kinetic(&self) -> &KineticOperator {
        &self.kinetic
    }

    /// Range of the real part of the diagonal (without kinetic energy).
    pub fn diagonal_range(&self) -> (f64, f64) {
        self.diag
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
                (lo.min(d.re), hi.max(d.re))
            })
    }

    /// Largest decay rate appearing on the diagonal, `max |2 Im H_cc|`.
    pub fn max_decay(&self) -> f64 {
        self.diag.iter().fold(0.0, |m, d| m.max(-2.0 * d.im))
    }

    /// `out = H psi` for the given Rabi frequencies.
    pub fn apply(&self, psi: &[C64], omega_r: f64, omega_b: f64, out: &mut [C64]) {
        debug_assert_eq!(psi.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        for ((o, d), p) in out.iter_mut().zip(&self.diag).zip(psi) {
            *o = d * p;
        }
        self.add_couplings(psi, 0.5 * omega_r, 0.5 * omega_b, out);

        let n = self.n_r;
        let mut buf = vec![C64::new(0.0, 0.0); n];
        let mut scratch = vec![C64::new(0.0, 0.0); self.kinetic.scratch_len()];
        for c in 0..N_CHANNELS {
            let src = &psi[c * n..(c + 1) * n];
            // Channels outside the reachable subspace stay exactly zero.
            if src.iter().all(|a| a.re == 0.0 && a.im == 0.0) {
                continue;
            }
            self.kinetic
                .apply_add(src, &mut out[c * n..(c + 1) * n], &mut buf, &mut scratch);
        }
    }

    /// `out += Σ_atoms [w_red (|0><i| + h.c.) + w_blue (|i><r| + h.c.)] psi`.
    fn add_couplings(&self, psi: &[C64], w_red: f64, w_blue: f64, out: &mut [C64]) {
        let n = self.n_r;
        for (field, w) in [(Field::Red, w_red), (Field::Blue, w_blue)] {
            if w == 0.0 {
                continue;
            }
            let (p, q) = field.levels();
            for x in Level::ALL {
                for (dst, src) in [
                    (channel(p, x), channel(q, x)),
                    (channel(q, x), channel(p, x)),
                    (channel(x, p), channel(x, q)),
                    (channel(x, q), channel(x, p)),
                ] {
                    let (d0, s0) = (dst * n, src * n);
                    for j in 0..n {
                        out[d0 + j] += psi[s0 + j] * w;
                    }
                }
            }
        }
    }

    /// `out = C_field psi` with `C` the bare coupling operator of one field
    /// summed over both atoms, so that `∂H/∂Ω = C/2`.
    pub fn apply_coupling(&self, field: Field, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        match field {
            Field::Red => self.add_couplings(psi, 1.0, 0.0, out),
            Field::Blue => self.add_couplings(psi, 0.0, 1.0, out),
        }
    }

    /// `<chi| C_field |psi>` without forming `C psi`.
    pub fn coupling_element(&self, field: Field, chi: &[C64], psi: &[C64]) -> C64 {
        let n = self.n_r;
        let (p, q) = field.levels();
        let mut acc = C64::new(0.0, 0.0);
        let mut pair = |d: usize, s: usize| {
            let (d0, s0) = (d * n, s * n);
            for j in 0..n {
                acc += chi[d0 + j].conj() * psi[s0 + j];
            }
        };
        for x in Level::ALL {
            pair(channel(p, x), channel(q, x));
            pair(channel(q, x), channel(p, x));
            pair(channel(x, p), channel(x, q));
            pair(channel(x, q), channel(x, p));
        }
        acc * self.dr
    }

    /// Projector onto channels where neither atom is in `|i>`.
    pub fn allowed_channel(c: usize) -> bool {
        let (a, b) = channel_levels(c);
        a != Level::I && b != Level::I
    }

    /// `<psi|P_allow|psi>`.
    pub fn allowed_population(&self, psi: &[C64]) -> f64 {
        let n = self.n_r;
        (0..N_CHANNELS)
            .filter(|&c| Self::allowed_channel(c))
            .map(|c| psi[c * n..(c + 1) * n].iter().map(|a| a.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            * self.dr
    }

    /// `out = P_allow psi`.
    pub fn project_allowed(&self, psi: &[C64], out: &mut [C64]) {
        let n = self.n_r;
        for c in 0..N_CHANNELS {
            let keep = Self::allowed_channel(c);
            for j in 0..n {
                out[c * n + j] = if keep { psi[c * n + j] } else { C64::new(0.0, 0.0) };
            }
        }
    }
}

/// One-shot `H psi`.
pub fn apply_hamiltonian(
    psi: &TwoAtomState,
    params: &SystemParameters,
    omega_r: f64,
    omega_b: f64,
    grid: &SpatialGrid,
    mode: DecayMode,
) -> Result<TwoAtomState> {
    if psi.n_r != grid.n || psi.data.len() != N_CHANNELS * grid.n {
        return invalid(format!(
            "state has {} amplitudes, expected {}",
            psi.data.len(),
            N_CHANNELS * grid.n
        ));
    }
    if !(0.0..=params.omega_r0).contains(&omega_r) || !(0.0..=params.omega_b0).contains(&omega_b) {
        return invalid("Rabi frequencies must lie within [0, cap]");
    }
    let h = Hamiltonian::new(params, grid, mode)?;
    let mut out = TwoAtomState::zeros(grid.n, grid.dr);
    h.apply(&psi.data, omega_r, omega_b, &mut out.data);
    Ok(out)
}

/// Number of atoms of a channel sitting in `level`.
pub fn atoms_in(c: usize, level: Level) -> usize {
    let (a, b) = channel_levels(c);
    usize::from(a == level) + usize::from(b == level)
}


#[cfg(test)]
mod properties {
    use super::*;
    use crate::state::inner;
    use proptest::prelude::*;

    fn small() -> (SystemParameters, SpatialGrid) {
        (SystemParameters::reference(), SpatialGrid::new(3.7, 4.3, 16).unwrap())
    }

    fn state_from(seed: &[(f64, f64)], n_r: usize, dr: f64) -> Vec<C64> {
        (0..N_CHANNELS * n_r)
            .map(|i| {
                let (a, b) = seed[i % seed.len()];
                C64::new(a + 0.1 * (i as f64).sin(), b * (0.3 * i as f64).cos()) * dr.sqrt()
            })
            .collect()
    }

    #[test]
    fn decoupled_state_sees_only_kinetic_energy() {
        let (p, g) = small();
        let ham = Hamiltonian::new(&p, &g, DecayMode::WithDecay).unwrap();
        let motion = crate::grid::harmonic_ground_state(&g, p.omega_trap, p.mass_amu, p.r0).unwrap();
        let psi = TwoAtomState::product(Level::Q1, Level::Q1, &motion);
        let mut out = vec![C64::new(0.0, 0.0); ham.dim()];
        ham.apply(&psi.data, p.omega_r0, p.omega_b0, &mut out);
        let c11 = channel(Level::Q1, Level::Q1);
        let t = ham.kinetic().apply(psi.channel(c11)).unwrap();
        for c in 0..N_CHANNELS {
            for j in 0..g.n {
                let want = if c == c11 { t[j] } else { C64::new(0.0, 0.0) };
                assert!((out[c * g.n + j] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn one_shot_rejects_bad_input() {
        let (p, g) = small();
        let psi = TwoAtomState::zeros(g.n, g.dr);
        assert!(apply_hamiltonian(&psi, &p, 2.0 * p.omega_r0, 0.0, &g, DecayMode::Hermitian).is_err());
        let wrong = TwoAtomState::zeros(8, g.dr);
        assert!(apply_hamiltonian(&wrong, &p, 0.0, 0.0, &g, DecayMode::Hermitian).is_err());
    }

    proptest! {
        #[test]
        fn rabi_round_trip(x in 1e-6f64..(1.0 - 1e-6)) {
            let w0 = 1.7;
            let back = rabi_from_control(control_from_rabi(x * w0, w0), w0);
            prop_assert!((back - x * w0).abs() < 1e-9);
        }

        #[test]
        fn hermitian_mode_is_self_adjoint(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
            b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
            wr in 0.0f64..1.0,
            wb in 0.0f64..1.0,
        ) {
            let (p, g) = small();
            let ham = Hamiltonian::new(&p, &g, DecayMode::Hermitian).unwrap();
            let (wr, wb) = (wr * p.omega_r0, wb * p.omega_b0);
            let x = state_from(&a, g.n, g.dr);
            let y = state_from(&b, g.n, g.dr);
            let mut hx = vec![C64::new(0.0, 0.0); ham.dim()];
            let mut hy = hx.clone();
            ham.apply(&x, wr, wb, &mut hx);
            ham.apply(&y, wr, wb, &mut hy);
            let lhs = inner(&x, &hy, g.dr);
            let rhs = inner(&hx, &y, g.dr);
            prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
        }

        #[test]
        fn decay_lowers_expectation_by_rates(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
            wr in 0.0f64..1.0,
        ) {
            let (mut p, g) = small();
            p.gamma_r = 0.01;
            let herm = Hamiltonian::new(&p, &g, DecayMode::Hermitian).unwrap();
            let lossy = Hamiltonian::new(&p, &g, DecayMode::WithDecay).unwrap();
            let x = state_from(&a, g.n, g.dr);
            let mut h0 = vec![C64::new(0.0, 0.0); herm.dim()];
            let mut h1 = h0.clone();
            herm.apply(&x, wr, 0.3, &mut h0);
            lossy.apply(&x, wr, 0.3, &mut h1);
            let e0 = inner(&x, &h0, g.dr);
            let e1 = inner(&x, &h1, g.dr);
            let mut want = 0.0;
            for c in 0..N_CHANNELS {
                let pop: f64 = x[c * g.n..(c + 1) * g.n].iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dr;
                let rate = atoms_in(c, Level::I) as f64 * p.gamma_i + atoms_in(c, Level::R) as f64 * p.gamma_r;
                want -= 0.5 * rate * pop;
            }
            prop_assert!((e1.re - e0.re).abs() < 1e-10 * (1.0 + e0.norm()));
            prop_assert!((e1.im - e0.im - want).abs() < 1e-10 * (1.0 + want.abs()));
        }

        #[test]
        fn atom_exchange_symmetry(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
            wr in 0.0f64..1.0,
            wb in 0.0f64..1.0,
        ) {
            let (p, g) = small();
            let ham = Hamiltonian::new(&p, &g, DecayMode::WithDecay).unwrap();
            let n = g.n;
            let swap = |v: &[C64]| {
                let mut out = vec![C64::new(0.0, 0.0); v.len()];
                for c in 0..N_CHANNELS {
                    let (x, y) = channel_levels(c);
                    let d = channel(y, x);
                    out[d * n..(d + 1) * n].copy_from_slice(&v[c * n..(c + 1) * n]);
                }
                out
            };
            let x = state_from(&a, n, g.dr);
            let mut hx = vec![C64::new(0.0, 0.0); ham.dim()];
            let mut hsx = hx.clone();
            ham.apply(&x, wr, wb, &mut hx);
            ham.apply(&swap(&x), wr, wb, &mut hsx);
            let diff = swap(&hx).iter().zip(&hsx).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
            prop_assert!(diff < 1e-12);
        }
    }
}
