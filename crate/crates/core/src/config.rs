//! Run configuration in lab units (MHz, kHz, ns, μs, μm, K), read from JSON.
//! Conversion to internal units happens in [`RunConfig::system_parameters`].

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::krotov::{sine_squared_shape, FunctionalVariant, GateTarget, OptimizationConfig, PhasedState};
use crate::noise::NoiseParameters;
use crate::state::Level;
use crate::system::{
    control_from_rabi, stark_detuning, ControlField, DetuningConvention, SystemParameters,
};
use crate::units::{khz_to_rad_per_ns, mhz_to_rad_per_ns, rate_from_lifetime_ns};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Optimize,
    Propagate,
    EvaluateLoss,
    NoiseBudget,
    #[serde(rename = "sweep-T", alias = "sweep-t")]
    #[value(name = "sweep-T", alias = "sweep-t")]
    SweepT,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub omega_r0_mhz: f64,
    pub omega_b0_mhz: f64,
    pub delta_mhz: f64,
    /// Two-photon detuning; when absent the light-shift compensating value
    /// `(Ω_B0² − Ω_R0²)/4Δ` is used.
    pub two_photon_detuning_mhz: Option<f64>,
    pub c3_mhz_um3: f64,
    pub lifetime_i_ns: f64,
    pub lifetime_r_us: f64,
    pub mass_amu: f64,
    pub trap_khz: f64,
    pub r0_um: f64,
    pub trap_on_during_gate: bool,
    pub detuning_convention: DetuningConvention,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            omega_r0_mhz: 260.0,
            omega_b0_mhz: 260.0,
            delta_mhz: 600.0,
            two_photon_detuning_mhz: None,
            c3_mhz_um3: 3230.0,
            lifetime_i_ns: 27.7,
            lifetime_r_us: 210.0,
            mass_amu: crate::constants::RB87_MASS_AMU,
            trap_khz: 276.0,
            r0_um: 4.0,
            trap_on_during_gate: false,
            detuning_convention: DetuningConvention::Half,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GuessKind {
    /// Both envelopes `A Ω0 sin²(πt/T)`.
    #[default]
    Sine,
    /// Red `A Ω0 sin⁴(πt/T)`, blue `A Ω0 sin²(2πt/T)`: transfer to `|r>`
    /// and back with the blue field leading and trailing.
    Stirap,
    /// Both fields (numerically) off.
    Off,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuessConfig {
    pub kind: GuessKind,
    /// Peak of the red envelope relative to its cap.
    pub amplitude_r: f64,
    pub amplitude_b: f64,
}

impl Default for GuessConfig {
    fn default() -> Self {
        Self {
            kind: GuessKind::Sine,
            amplitude_r: 0.5,
            amplitude_b: 0.5,
        }
    }
}

impl GuessConfig {
    pub fn field(&self, duration: f64, n_t: usize) -> Result<ControlField> {
        let x = |n: usize| PI * n as f64 / n_t as f64;
        let (r, b): (Vec<f64>, Vec<f64>) = match self.kind {
            GuessKind::Sine => {
                let s = sine_squared_shape(n_t);
                (
                    s.iter().map(|s| self.amplitude_r * s).collect(),
                    s.iter().map(|s| self.amplitude_b * s).collect(),
                )
            }
            GuessKind::Stirap => (
                (0..=n_t).map(|n| self.amplitude_r * x(n).sin().powi(4)).collect(),
                (0..=n_t).map(|n| self.amplitude_b * (2.0 * x(n)).sin().powi(2)).collect(),
            ),
            GuessKind::Off => (vec![0.0; n_t + 1], vec![0.0; n_t + 1]),
        };
        let to_eps = |v: Vec<f64>| v.into_iter().map(|w| control_from_rabi(w, 1.0)).collect();
        ControlField::from_samples(duration, to_eps(r), to_eps(b))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub r_min_um: f64,
    pub r_max_um: f64,
    pub n_r: usize,
    pub gate_time_ns: f64,
    /// Number of time steps; derived from `dt_ns` when absent.
    pub n_t: Option<usize>,
    pub dt_ns: f64,
    pub max_iterations: usize,
    pub alpha: f64,
    pub lambda_c: f64,
    pub stop_error: f64,
    pub functional_variant: FunctionalVariant,
    pub target_phase: f64,
    pub phased_state: PhasedState,
    pub guess: GuessConfig,
    /// CSV with a `t_ns,eps_R,eps_B` prefix (e.g. a previous `fields.csv`)
    /// used instead of the guess.
    pub fields_file: Option<PathBuf>,
    /// Initial register state for `propagate` and for `populations.csv`.
    pub initial_state: String,
    pub stride: usize,
    pub evaluate_loss: bool,
    pub raw_spectrum: bool,
    pub sweep_t_ns: Vec<f64>,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            r_min_um: 3.7,
            r_max_um: 4.3,
            n_r: 200,
            gate_time_ns: 50.0,
            n_t: None,
            dt_ns: 0.025,
            max_iterations: 5000,
            alpha: 1.0,
            lambda_c: 1.0,
            stop_error: 1e-3,
            functional_variant: FunctionalVariant::Standard,
            target_phase: PI,
            phased_state: PhasedState::Zero,
            guess: GuessConfig::default(),
            fields_file: None,
            initial_state: "00".into(),
            stride: 1,
            evaluate_loss: true,
            raw_spectrum: false,
            sweep_t_ns: vec![30.0, 40.0, 50.0, 60.0, 70.0, 80.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub physics: PhysicsConfig,
    pub numerics: NumericsConfig,
    pub noise: NoiseParameters,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Optimize,
            physics: PhysicsConfig::default(),
            numerics: NumericsConfig::default(),
            noise: NoiseParameters::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.physics;
        let positive = [
            ("physics.omega_r0_mhz", p.omega_r0_mhz),
            ("physics.omega_b0_mhz", p.omega_b0_mhz),
            ("physics.mass_amu", p.mass_amu),
            ("physics.trap_khz", p.trap_khz),
            ("physics.r0_um", p.r0_um),
            ("physics.lifetime_i_ns", p.lifetime_i_ns),
            ("physics.lifetime_r_us", p.lifetime_r_us),
            ("numerics.gate_time_ns", self.numerics.gate_time_ns),
            ("numerics.dt_ns", self.numerics.dt_ns),
            ("numerics.alpha", self.numerics.alpha),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(field_error(name, format!("must be positive, got {v}")));
            }
        }
        if p.delta_mhz == 0.0 || !p.delta_mhz.is_finite() {
            return Err(field_error("physics.delta_mhz", "must be non-zero"));
        }
        if !(p.c3_mhz_um3 >= 0.0) {
            return Err(field_error("physics.c3_mhz_um3", "must be non-negative"));
        }
        let n = &self.numerics;
        if n.n_r < 2 {
            return Err(field_error("numerics.n_r", "need at least 2 grid points"));
        }
        if !(n.r_max_um > n.r_min_um) {
            return Err(field_error("numerics.r_max_um", "must exceed r_min_um"));
        }
        if !(n.r_min_um < p.r0_um && p.r0_um < n.r_max_um) {
            return Err(field_error("physics.r0_um", "must lie inside the grid"));
        }
        if n.n_t == Some(0) {
            return Err(field_error("numerics.n_t", "must be positive"));
        }
        if !(n.lambda_c >= 0.0) {
            return Err(field_error("numerics.lambda_c", "must be non-negative"));
        }
        if !(n.stop_error >= 0.0) {
            return Err(field_error("numerics.stop_error", "must be non-negative"));
        }
        if n.stride == 0 {
            return Err(field_error("numerics.stride", "must be positive"));
        }
        parse_register_state(&n.initial_state).map_err(|e| field_error("numerics.initial_state", e))?;
        for (name, a) in [("numerics.guess.amplitude_r", n.guess.amplitude_r), ("numerics.guess.amplitude_b", n.guess.amplitude_b)] {
            if !(0.0..=1.0).contains(&a) {
                return Err(field_error(name, "must lie in [0, 1]"));
            }
        }
        if self.mode == Mode::SweepT && n.sweep_t_ns.iter().any(|t| !(*t > 0.0)) {
            return Err(field_error("numerics.sweep_t_ns", "gate times must be positive"));
        }
        self.noise.validate().map_err(|e| field_error("noise", e))?;
        Ok(())
    }

    pub fn system_parameters(&self) -> Result<SystemParameters> {
        let p = &self.physics;
        let omega_r0 = mhz_to_rad_per_ns(p.omega_r0_mhz);
        let omega_b0 = mhz_to_rad_per_ns(p.omega_b0_mhz);
        let delta = mhz_to_rad_per_ns(p.delta_mhz);
        let two_photon_detuning = match p.two_photon_detuning_mhz {
            Some(d) => mhz_to_rad_per_ns(d),
            None => stark_detuning(omega_r0, omega_b0, delta)?,
        };
        let params = SystemParameters {
            omega_r0,
            omega_b0,
            delta,
            two_photon_detuning,
            c3: mhz_to_rad_per_ns(p.c3_mhz_um3),
            gamma_i: rate_from_lifetime_ns(p.lifetime_i_ns),
            gamma_r: rate_from_lifetime_ns(p.lifetime_r_us * 1e3),
            mass_amu: p.mass_amu,
            omega_trap: khz_to_rad_per_ns(p.trap_khz),
            r0: p.r0_um,
            trap_on_during_gate: p.trap_on_during_gate,
            detuning_convention: p.detuning_convention,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.numerics.r_min_um, self.numerics.r_max_um, self.numerics.n_r)
    }

    /// Number of time steps for a gate of length `duration`.
    pub fn steps_for(&self, duration: f64) -> usize {
        match self.numerics.n_t {
            Some(n) if (duration - self.numerics.gate_time_ns).abs() < 1e-12 => n,
            Some(n) => ((n as f64) * duration / self.numerics.gate_time_ns).round().max(1.0) as usize,
            None => (duration / self.numerics.dt_ns).round().max(1.0) as usize,
        }
    }

    pub fn target(&self) -> GateTarget {
        GateTarget::new(self.numerics.target_phase, self.numerics.phased_state)
    }

    pub fn optimization_config(&self, n_t: usize) -> OptimizationConfig {
        let n = &self.numerics;
        OptimizationConfig {
            alpha: n.alpha,
            shape: sine_squared_shape(n_t),
            target: self.target(),
            constraint_weight: n.lambda_c,
            max_iterations: n.max_iterations,
            stop_error: n.stop_error,
            variant: n.functional_variant,
            monotonicity_tolerance: 1e-10,
        }
    }
}

/// `"00"`, `"01"`, `"10"` or `"11"` to its index in the register basis.
pub fn parse_register_state(s: &str) -> std::result::Result<(usize, Level, Level), String> {
    match s {
        "00" => Ok((0, Level::Q0, Level::Q0)),
        "01" => Ok((1, Level::Q0, Level::Q1)),
        "10" => Ok((2, Level::Q1, Level::Q0)),
        "11" => Ok((3, Level::Q1, Level::Q1)),
        other => Err(format!("expected one of 00, 01, 10, 11, got {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_reference_values() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let p = c.system_parameters().unwrap();
        let q = SystemParameters::reference();
        assert!((p.omega_r0 - q.omega_r0).abs() < 1e-15);
        assert!((p.delta - q.delta).abs() < 1e-15);
        assert!((p.c3 - q.c3).abs() < 1e-12);
        assert!((p.gamma_i - q.gamma_i).abs() < 1e-15);
        assert!((p.gamma_r - q.gamma_r).abs() < 1e-18);
        assert!((p.omega_trap - q.omega_trap).abs() < 1e-15);
        assert_eq!(p.two_photon_detuning, 0.0);
    }

    #[test]
    fn json_round_trip() {
        let mut c = RunConfig::default();
        c.mode = Mode::SweepT;
        c.numerics.n_t = Some(1234);
        c.numerics.functional_variant = FunctionalVariant::StateConstrained;
        c.numerics.phased_state = PhasedState::One;
        c.numerics.guess.kind = GuessKind::Stirap;
        c.physics.detuning_convention = DetuningConvention::Full;
        let text = c.to_json().unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c = RunConfig::from_json(r#"{"mode": "noise-budget", "numerics": {"n_r": 64}}"#).unwrap();
        assert_eq!(c.mode, Mode::NoiseBudget);
        assert_eq!(c.numerics.n_r, 64);
        assert_eq!(c.numerics.dt_ns, 0.025);
    }

    #[test]
    fn invalid_fields_are_named() {
        let e = RunConfig::from_json(r#"{"numerics": {"n_r": 1}}"#).unwrap_err();
        assert!(e.to_string().contains("numerics.n_r"), "{e}");
        let e = RunConfig::from_json(r#"{"physics": {"delta_mhz": 0}}"#).unwrap_err();
        assert!(e.to_string().contains("physics.delta_mhz"), "{e}");
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
        let e = RunConfig::from_json(r#"{"numerics": {"initial_state": "0i"}}"#).unwrap_err();
        assert!(e.to_string().contains("initial_state"), "{e}");
    }

    #[test]
    fn step_count() {
        let mut c = RunConfig::default();
        assert_eq!(c.steps_for(50.0), 2000);
        c.numerics.n_t = Some(1000);
        assert_eq!(c.steps_for(50.0), 1000);
        assert_eq!(c.steps_for(25.0), 500);
    }

    #[test]
    fn guess_kinds() {
        let g = GuessConfig {
            kind: GuessKind::Stirap,
            amplitude_r: 0.8,
            amplitude_b: 0.6,
        };
        let f = g.field(10.0, 100).unwrap();
        let r = f.rabi(crate::system::Field::Red, 1.0);
        let b = f.rabi(crate::system::Field::Blue, 1.0);
        assert!((r[50] - 0.8).abs() < 1e-10);
        assert!(b[50] < 1e-10);
        assert!((b[25] - 0.6).abs() < 1e-10);
        let off = GuessConfig {
            kind: GuessKind::Off,
            ..GuessConfig::default()
        }
        .field(10.0, 10)
        .unwrap();
        assert!(off.rabi(crate::system::Field::Red, 1.0).iter().all(|w| *w < 1e-11));
    }
}
