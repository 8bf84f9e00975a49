//! Krotov optimization of the red and blue controls for a controlled-phase
//! gate, with an optional reward for population outside `|i>`.
//!
//! The fidelity `F = |τ|/4`, `τ = Σ_k O_kk* <φ0^k|ψ_k(T)>`, is linearized
//! around the previous iterate: the backward states start from
//! `e^{iθ} O_kk |φ0^k>/4` with `θ = arg τ`, so that `Re(e^{-iθ} τ)/4 ≤ F`
//! bounds the improvement from below. The state-dependent term is convex in
//! the states, so its first-order expansion adds the source
//! `-2iλ_c P_allow ψ_old(t)` to the backward equation and keeps the scheme
//! monotonic.
//!
//! Controls live on the `n_t + 1` time nodes; step `n` uses the mean of
//! nodes `n` and `n + 1`. During the forward sweep node `n + 1` is updated
//! from the states at `t_n` before step `n` is taken.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::SpatialGrid;
use crate::metrics::{check_states, RegisterBasis};
use crate::propagator::{check_finite, Propagator};
use crate::state::{TwoAtomState, N_CHANNELS};
use crate::system::{
    control_from_rabi, rabi_derivative, ControlField, DecayMode, Field, Hamiltonian, SystemParameters,
};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalVariant {
    #[default]
    Standard,
    StateConstrained,
}

/// Basis state receiving the phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PhasedState {
    #[default]
    #[serde(rename = "00")]
    Zero,
    #[serde(rename = "11")]
    One,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateTarget {
    pub phase: f64,
    pub phased_state: PhasedState,
}

impl Default for GateTarget {
    fn default() -> Self {
        Self {
            phase: PI,
            phased_state: PhasedState::Zero,
        }
    }
}

impl GateTarget {
    pub fn new(phase: f64, phased_state: PhasedState) -> Self {
        Self {
            phase: wrap_phase(phase),
            phased_state,
        }
    }

    /// Diagonal of the target in the order 00, 01, 10, 11.
    pub fn diagonal(&self) -> [C64; 4] {
        let mut d = [C64::new(1.0, 0.0); 4];
        let idx = match self.phased_state {
            PhasedState::Zero => 0,
            PhasedState::One => 3,
        };
        d[idx] = C64::from_polar(1.0, self.phase);
        d
    }
}

/// Wrap an angle to `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// `τ = Σ_k O_kk* <φ0^k|ψ_k>`.
pub fn register_trace(states: &[TwoAtomState], target: &GateTarget, basis: &RegisterBasis) -> Result<C64> {
    check_states(states, basis)?;
    let d = target.diagonal();
    Ok(states
        .iter()
        .enumerate()
        .map(|(k, psi)| d[k].conj() * basis.overlap(k, psi))
        .sum())
}

pub fn fidelity(states: &[TwoAtomState], target: &GateTarget, basis: &RegisterBasis) -> Result<f64> {
    Ok(register_trace(states, target, basis)?.norm() / 4.0)
}

/// `arg M00 - arg M01 - arg M10 + arg M11` of the diagonal overlaps.
pub fn nonlocal_phase(states: &[TwoAtomState], basis: &RegisterBasis) -> Result<f64> {
    check_states(states, basis)?;
    let mut chi = 0.0;
    for (k, sign) in [1.0, -1.0, -1.0, 1.0].into_iter().enumerate() {
        let m = basis.overlap(k, &states[k]);
        if m.norm() < 1e-6 {
            return Err(Error::UndefinedPhase {
                index: k,
                magnitude: m.norm(),
            });
        }
        chi += sign * m.arg();
    }
    Ok(wrap_phase(chi))
}

/// `sin²(π t/T)` on the nodes.
pub fn sine_squared_shape(n_t: usize) -> Vec<f64> {
    (0..=n_t)
        .map(|n| {
            if n == 0 || n == n_t {
                0.0
            } else {
                (PI * n as f64 / n_t as f64).sin().powi(2)
            }
        })
        .collect()
}

/// Both envelopes follow `Ω0 S(t)/2`, i.e. `ε = atanh(S - 1)`, with the
/// switched-off ends clamped to a finite control.
pub fn guess_field(duration: f64, n_t: usize) -> Result<ControlField> {
    let eps: Vec<f64> = sine_squared_shape(n_t)
        .into_iter()
        .map(|s| control_from_rabi(0.5 * s, 1.0))
        .collect();
    ControlField::from_samples(duration, eps.clone(), eps)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationConfig {
    pub alpha: f64,
    pub shape: Vec<f64>,
    pub target: GateTarget,
    pub constraint_weight: f64,
    pub max_iterations: usize,
    pub stop_error: f64,
    pub variant: FunctionalVariant,
    /// Allowed increase of `J` between iterations before failing.
    pub monotonicity_tolerance: f64,
}

impl OptimizationConfig {
    pub fn new(n_t: usize) -> Self {
        Self {
            alpha: 1.0,
            shape: sine_squared_shape(n_t),
            target: GateTarget::default(),
            constraint_weight: 1.0,
            max_iterations: 5000,
            stop_error: 1e-3,
            variant: FunctionalVariant::Standard,
            monotonicity_tolerance: 1e-10,
        }
    }

    pub fn validate(&self, fields: &ControlField) -> Result<()> {
        if !(self.alpha > 0.0) {
            return invalid("alpha must be positive");
        }
        if self.shape.len() != fields.n_t + 1 {
            return invalid(format!(
                "shape has {} samples, fields have {}",
                self.shape.len(),
                fields.n_t + 1
            ));
        }
        if self.shape.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return invalid("shape must lie in [0, 1]");
        }
        if self.shape[0] != 0.0 || self.shape[fields.n_t] != 0.0 {
            return invalid("shape must vanish at both ends");
        }
        if !(self.constraint_weight >= 0.0) {
            return invalid("constraint weight must be non-negative");
        }
        Ok(())
    }

    fn lambda(&self) -> f64 {
        match self.variant {
            FunctionalVariant::Standard => 0.0,
            FunctionalVariant::StateConstrained => self.constraint_weight,
        }
    }
}

/// `Σ_λ ∫ α/S (ε - ε_ref)² dt` by the trapezoid rule, `S` clamped to 1e-8.
pub fn penalty(fields: &ControlField, reference: &ControlField, config: &OptimizationConfig) -> f64 {
    let n_t = fields.n_t;
    let mut total = 0.0;
    for f in Field::BOTH {
        for (n, (e, r)) in fields.samples(f).iter().zip(reference.samples(f)).enumerate() {
            let w = if n == 0 || n == n_t { 0.5 } else { 1.0 };
            let d = e - r;
            if d != 0.0 {
                total += w * config.alpha / config.shape[n].max(1e-8) * d * d;
            }
        }
    }
    total * fields.dt
}

/// `J = -F + penalty - λ_c Σ_k ∫ <ψ_k|P_allow|ψ_k> dt`; the last term only
/// for the constrained variant.
pub fn functional_j(
    fidelity: f64,
    fields: &ControlField,
    reference: &ControlField,
    allowed_integral: f64,
    config: &OptimizationConfig,
) -> f64 {
    -fidelity + penalty(fields, reference, config) - config.lambda() * allowed_integral
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub j: f64,
    pub fidelity: f64,
    pub gate_error: f64,
    /// Time average of `<P_allow>` per register state.
    pub constraint_avg: f64,
    /// Time average of the population with an atom in `|i>`.
    pub intermediate_avg: f64,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub records: Vec<IterationRecord>,
    pub fields: ControlField,
    pub final_states: Vec<TwoAtomState>,
    pub gate_error: f64,
    pub converged: bool,
}

/// Forward propagation summary.
struct ForwardPass {
    finals: Vec<Vec<C64>>,
    /// `[node][state]`, kept only when the backward source needs it.
    trajectory: Option<Vec<Vec<Vec<C64>>>>,
    allowed: f64,
    intermediate: f64,
}

/// Trapezoid accumulation of `<P_allow>` and of its complement.
struct Occupation<'a> {
    ham: &'a Hamiltonian,
    n_t: usize,
    dt: f64,
    allowed: f64,
    intermediate: f64,
}

impl<'a> Occupation<'a> {
    fn new(ham: &'a Hamiltonian, n_t: usize, dt: f64) -> Self {
        Self {
            ham,
            n_t,
            dt,
            allowed: 0.0,
            intermediate: 0.0,
        }
    }

    fn add(&mut self, n: usize, psi: &[Vec<C64>]) {
        let w = if n == 0 || n == self.n_t { 0.5 } else { 1.0 } * self.dt;
        for p in psi {
            let allowed = self.ham.allowed_population(p);
            let norm = self.ham.dr() * p.iter().map(|a| a.norm_sqr()).sum::<f64>();
            self.allowed += w * allowed;
            self.intermediate += w * (norm - allowed);
        }
    }
}

/// Iteration state of the optimizer; each call to [`Krotov::iterate`]
/// performs one backward and one forward sweep.
pub struct Krotov {
    prop: Propagator,
    basis: RegisterBasis,
    config: OptimizationConfig,
    fields: ControlField,
    last: ForwardPass,
    fidelity: f64,
    j: f64,
    iteration: usize,
}

impl Krotov {
    pub fn new(
        fields: ControlField,
        config: OptimizationConfig,
        params: &SystemParameters,
        grid: &SpatialGrid,
    ) -> Result<Self> {
        config.validate(&fields)?;
        let ham = Hamiltonian::new(params, grid, DecayMode::Hermitian)?;
        let prop = Propagator::new(ham, fields.dt)?;
        let basis = RegisterBasis::trap_ground(params, grid)?;
        Self::with_parts(fields, config, prop, basis)
    }

    pub fn with_parts(
        fields: ControlField,
        config: OptimizationConfig,
        prop: Propagator,
        basis: RegisterBasis,
    ) -> Result<Self> {
        config.validate(&fields)?;
        let store = config.lambda() > 0.0;
        let last = forward(&prop, &basis, &fields, store)?;
        let fidelity = trace_of(&last.finals, &config.target, &basis).norm() / 4.0;
        let j = -fidelity - config.lambda() * last.allowed;
        Ok(Self {
            prop,
            basis,
            config,
            fields,
            last,
            fidelity,
            j,
            iteration: 0,
        })
    }

    pub fn fields(&self) -> &ControlField {
        &self.fields
    }

    pub fn basis(&self) -> &RegisterBasis {
        &self.basis
    }

    pub fn gate_error(&self) -> f64 {
        1.0 - self.fidelity
    }

    pub fn record(&self) -> IterationRecord {
        let norm = 4.0 * self.fields.duration;
        IterationRecord {
            iteration: self.iteration,
            j: self.j,
            fidelity: self.fidelity,
            gate_error: 1.0 - self.fidelity,
            constraint_avg: self.last.allowed / norm,
            intermediate_avg: self.last.intermediate / norm,
        }
    }

    pub fn final_states(&self) -> Vec<TwoAtomState> {
        self.last
            .finals
            .iter()
            .map(|d| TwoAtomState {
                n_r: self.basis.n_r(),
                dr: self.basis.motion.dr,
                data: d.clone(),
            })
            .collect()
    }

    /// One Krotov iteration; fails if `J` increases by more than the
    /// configured tolerance.
    pub fn iterate(&mut self) -> Result<IterationRecord> {
        let cfg = &self.config;
        let lambda = cfg.lambda();
        let old = &self.fields;
        let n_t = old.n_t;
        let params = &self.prop.ham.params;

        let chi = backward(&self.prop, &self.basis, old, &self.last, cfg)?;

        let mut new = old.clone();
        let mut psi: Vec<Vec<C64>> = self.basis.states.iter().map(|s| s.data.clone()).collect();
        let store = lambda > 0.0;
        let mut trajectory = store.then(|| vec![psi.clone()]);
        let mut occ = Occupation::new(&self.prop.ham, n_t, old.dt);
        occ.add(0, &psi);
        for n in 0..n_t {
            let s = cfg.shape[n + 1];
            if s > 0.0 {
                let g = coupling_gradient(&self.prop.ham, &chi[n], &psi);
                for (i, f) in Field::BOTH.into_iter().enumerate() {
                    let e_old = old.samples(f)[n + 1];
                    let d_omega = 0.5 * rabi_derivative(e_old, params.cap(f));
                    new.samples_mut(f)[n + 1] = e_old + s / (2.0 * cfg.alpha) * d_omega * g[i];
                }
            }
            let (wr, wb) = new.step_rabi(n, params);
            for p in psi.iter_mut() {
                *p = self.prop.step(p, wr, wb);
                check_finite(p, n)?;
            }
            occ.add(n + 1, &psi);
            if let Some(t) = trajectory.as_mut() {
                t.push(psi.clone());
            }
        }
        let pass = ForwardPass {
            finals: psi,
            trajectory,
            allowed: occ.allowed,
            intermediate: occ.intermediate,
        };
        let fidelity = trace_of(&pass.finals, &cfg.target, &self.basis).norm() / 4.0;
        let j = functional_j(fidelity, &new, old, pass.allowed, cfg);
        let bound = -self.fidelity - lambda * self.last.allowed;
        if j > bound + cfg.monotonicity_tolerance {
            return Err(Error::Monotonicity {
                iteration: self.iteration + 1,
                previous: bound,
                current: j,
                tolerance: cfg.monotonicity_tolerance,
            });
        }
        self.fields = new;
        self.last = pass;
        self.fidelity = fidelity;
        self.j = j;
        self.iteration += 1;
        Ok(self.record())
    }

    /// Iterate until the gate error reaches the stop value or the iteration
    /// budget is exhausted.
    pub fn run(mut self) -> Result<OptimizationResult> {
        let mut records = vec![self.record()];
        while self.gate_error() > self.config.stop_error && self.iteration < self.config.max_iterations {
            let r = self.iterate()?;
            if r.iteration % 10 == 0 {
                log::info!(
                    "iteration {:5}  J = {:.6e}  error = {:.4e}",
                    r.iteration,
                    r.j,
                    r.gate_error
                );
            }
            records.push(r);
        }
        Ok(self.finish(records))
    }

    pub fn finish(self, records: Vec<IterationRecord>) -> OptimizationResult {
        let gate_error = self.gate_error();
        OptimizationResult {
            records,
            final_states: self.final_states(),
            converged: gate_error <= self.config.stop_error,
            gate_error,
            fields: self.fields,
        }
    }
}

fn trace_of(finals: &[Vec<C64>], target: &GateTarget, basis: &RegisterBasis) -> C64 {
    let d = target.diagonal();
    finals
        .iter()
        .enumerate()
        .map(|(k, data)| {
            let c = crate::state::REGISTER_CHANNELS[k];
            let n = basis.n_r();
            let overlap = crate::state::inner(&basis.motion.amplitudes, &data[c * n..(c + 1) * n], basis.motion.dr);
            d[k].conj() * overlap
        })
        .sum()
}

fn forward(prop: &Propagator, basis: &RegisterBasis, fields: &ControlField, store: bool) -> Result<ForwardPass> {
    let n_t = fields.n_t;
    let mut psi: Vec<Vec<C64>> = basis.states.iter().map(|s| s.data.clone()).collect();
    let mut trajectory = store.then(|| vec![psi.clone()]);
    let mut occ = Occupation::new(&prop.ham, n_t, fields.dt);
    occ.add(0, &psi);
    for n in 0..n_t {
        let (wr, wb) = fields.step_rabi(n, &prop.ham.params);
        for p in psi.iter_mut() {
            *p = prop.step(p, wr, wb);
            check_finite(p, n)?;
        }
        occ.add(n + 1, &psi);
        if let Some(t) = trajectory.as_mut() {
            t.push(psi.clone());
        }
    }
    Ok(ForwardPass {
        finals: psi,
        trajectory,
        allowed: occ.allowed,
        intermediate: occ.intermediate,
    })
}

/// Backward states `[node][state]` under `fields`, starting from the
/// phase-aligned targets.
fn backward(
    prop: &Propagator,
    basis: &RegisterBasis,
    fields: &ControlField,
    last: &ForwardPass,
    cfg: &OptimizationConfig,
) -> Result<Vec<Vec<Vec<C64>>>> {
    let n_t = fields.n_t;
    let tau = trace_of(&last.finals, &cfg.target, basis);
    let theta = if tau.norm() == 0.0 { 0.0 } else { tau.arg() };
    let pre = C64::from_polar(0.25, theta);
    let d = cfg.target.diagonal();
    let mut chi: Vec<Vec<Vec<C64>>> = vec![Vec::new(); n_t + 1];
    chi[n_t] = basis
        .states
        .iter()
        .enumerate()
        .map(|(k, s)| s.data.iter().map(|a| a * pre * d[k]).collect())
        .collect();

    let lambda = cfg.lambda();
    let source = |n: usize, k: usize| -> Vec<C64> {
        let traj = last.trajectory.as_ref().expect("constrained variant stores the trajectory");
        let mut out = vec![C64::new(0.0, 0.0); prop.ham.dim()];
        prop.ham.project_allowed(&traj[n][k], &mut out);
        let f = C64::new(0.0, -2.0 * lambda);
        out.iter_mut().for_each(|a| *a *= f);
        out
    };
    for n in (0..n_t).rev() {
        let (wr, wb) = fields.step_rabi(n, &prop.ham.params);
        let next: Vec<Vec<C64>> = (0..4)
            .map(|k| {
                let c = &chi[n + 1][k];
                if lambda > 0.0 {
                    prop.step_back_inhomogeneous(c, wr, wb, &source(n + 1, k), &source(n, k))
                } else {
                    prop.step_back(c, wr, wb)
                }
            })
            .collect();
        for c in &next {
            check_finite(c, n)?;
        }
        chi[n] = next;
    }
    Ok(chi)
}

/// `Σ_k Im <χ_k|C_λ|ψ_k>` for both fields.
fn coupling_gradient(ham: &Hamiltonian, chi: &[Vec<C64>], psi: &[Vec<C64>]) -> [f64; 2] {
    let mut g = [0.0; 2];
    for (i, f) in Field::BOTH.into_iter().enumerate() {
        g[i] = chi
            .iter()
            .zip(psi)
            .map(|(c, p)| ham.coupling_element(f, c, p).im)
            .sum();
    }
    g
}

/// Derivative density of `F + λ_c Σ∫<P_allow>` with respect to each control
/// node, `Σ_k Im <χ_k(t_n)|∂H/∂ε_λ|ψ_k(t_n)>`, for states propagated under
/// `fields` without updating them. Multiplied by `dt` it approximates the
/// derivative with respect to an interior node.
pub fn gradient(
    fields: &ControlField,
    config: &OptimizationConfig,
    params: &SystemParameters,
    grid: &SpatialGrid,
) -> Result<Vec<[f64; 2]>> {
    config.validate(fields)?;
    let ham = Hamiltonian::new(params, grid, DecayMode::Hermitian)?;
    let prop = Propagator::new(ham, fields.dt)?;
    let basis = RegisterBasis::trap_ground(params, grid)?;
    let last = forward(&prop, &basis, fields, true)?;
    let chi = backward(&prop, &basis, fields, &last, config)?;
    let traj = last.trajectory.as_ref().expect("stored");
    Ok((0..=fields.n_t)
        .map(|n| {
            let g = coupling_gradient(&prop.ham, &chi[n], &traj[n]);
            let mut out = [0.0; 2];
            for (i, f) in Field::BOTH.into_iter().enumerate() {
                out[i] = 0.5 * rabi_derivative(fields.samples(f)[n], params.cap(f)) * g[i];
            }
            out
        })
        .collect())
}

/// Run the optimizer from `initial`.
pub fn optimize(
    initial: ControlField,
    config: OptimizationConfig,
    params: &SystemParameters,
    grid: &SpatialGrid,
) -> Result<OptimizationResult> {
    Krotov::new(initial, config, params, grid)?.run()
}

/// Final register states under `fields` for the given decay mode.
pub fn propagate_register(
    fields: &ControlField,
    params: &SystemParameters,
    grid: &SpatialGrid,
    mode: DecayMode,
) -> Result<(RegisterBasis, Vec<TwoAtomState>)> {
    let ham = Hamiltonian::new(params, grid, mode)?;
    let prop = Propagator::new(ham, fields.dt)?;
    let basis = RegisterBasis::trap_ground(params, grid)?;
    let finals = basis
        .states
        .iter()
        .map(|s| prop.propagate_final(s, fields))
        .collect::<Result<Vec<_>>>()?;
    Ok((basis, finals))
}

/// Gate error with spontaneous decay from `|i>` and `|r>` at the given rates
/// (1/ns). Population lost to decay counts as error.
pub fn evaluate_with_loss(
    fields: &ControlField,
    params: &SystemParameters,
    grid: &SpatialGrid,
    gamma_i: f64,
    gamma_r: f64,
    target: &GateTarget,
) -> Result<f64> {
    let mut p = params.clone();
    p.gamma_i = gamma_i;
    p.gamma_r = gamma_r;
    let (basis, finals) = propagate_register(fields, &p, grid, DecayMode::WithDecay)?;
    Ok(1.0 - fidelity(&finals, target, &basis)?)
}

/// Channel populations of the four register states at the end of `fields`.
pub fn final_populations(states: &[TwoAtomState]) -> Vec<[f64; N_CHANNELS]> {
    states.iter().map(|s| s.populations()).collect()
}
