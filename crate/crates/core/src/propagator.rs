//! Chebychev propagator for piecewise-constant Hamiltonians, with a variant
//! for the inhomogeneous equation `i ∂ψ/∂t = H ψ + s(t)`.
//!
//! For one step of length `h` the operator is rescaled to
//! `Hn = (H - center) / half_width`, whose spectrum lies in `[-1, 1]`, and
//!
//! ```text
//! exp(-i H h) = exp(-i center h) Σ_k (2 - δ_k0) (-i)^k J_k(half_width h) T_k(Hn).
//! ```
//!
//! Source terms sampled at both ends of a step are interpolated linearly and
//! integrated exactly through the functions `φ1(z) = (e^z - 1)/z` and
//! `φ2(z) = (e^z - 1 - z)/z²`, whose Chebychev coefficients are obtained by
//! Gauss–Chebychev quadrature.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::grid::SpatialGrid;
use crate::state::{TwoAtomState, N_CHANNELS};
use crate::system::{ControlField, DecayMode, Hamiltonian, SystemParameters};
use crate::C64;

/// Coefficients below this magnitude terminate the expansion.
pub const DEFAULT_TOLERANCE: f64 = 1e-14;
pub const MAX_ORDER: usize = 10_000;

/// Interval enclosing the real part of the Hamiltonian spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralBounds {
    pub e_min: f64,
    pub e_max: f64,
}

impl SpectralBounds {
    pub fn new(e_min: f64, e_max: f64) -> Result<Self> {
        if !(e_max > e_min) {
            return invalid(format!("empty spectral interval [{e_min}, {e_max}]"));
        }
        Ok(Self { e_min, e_max })
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.e_max + self.e_min)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.e_max - self.e_min)
    }

    pub fn contains(&self, e: f64) -> bool {
        e >= self.e_min && e <= self.e_max
    }
}

/// Gershgorin-type enclosure of the spectrum: kinetic energies are in
/// `[0, ħk_max²/2m]`, diagonal terms are read off the Hamiltonian and the
/// laser couplings shift any eigenvalue by at most `Ω_R0 + Ω_B0`. The
/// interval is padded by 5% of its width.
pub fn spectral_bounds(ham: &Hamiltonian) -> SpectralBounds {
    let (dmin, dmax) = ham.diagonal_range();
    let margin = ham.params.omega_r0 + ham.params.omega_b0;
    let lo = dmin - margin;
    let hi = dmax + ham.kinetic().max_energy() + margin;
    let pad = 0.05 * (hi - lo);
    SpectralBounds {
        e_min: lo - pad,
        e_max: hi + pad,
    }
}

pub fn estimate_spectral_bounds(
    params: &SystemParameters,
    grid: &SpatialGrid,
) -> Result<SpectralBounds> {
    let ham = Hamiltonian::new(params, grid, DecayMode::Hermitian)?;
    Ok(spectral_bounds(&ham))
}

/// Same enclosure without the laser-coupling margin; used when both Rabi
/// caps are irrelevant (e.g. couplings switched off).
pub fn uncoupled_bounds(ham: &Hamiltonian) -> SpectralBounds {
    let (dmin, dmax) = ham.diagonal_range();
    let hi = dmax + ham.kinetic().max_energy();
    let pad = 0.05 * (hi - dmin).max(1e-12);
    SpectralBounds {
        e_min: dmin - pad,
        e_max: hi + pad,
    }
}

/// Anything that can be applied to a state vector.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

/// The Hamiltonian frozen at given Rabi frequencies.
#[derive(Clone, Copy)]
pub struct Snapshot<'a> {
    pub ham: &'a Hamiltonian,
    pub omega_r: f64,
    pub omega_b: f64,
}

impl LinearOperator for Snapshot<'_> {
    fn dim(&self) -> usize {
        self.ham.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.ham.apply(x, self.omega_r, self.omega_b, y);
    }
}

/// Bessel functions `J_0(x) .. J_n(x)` of integer order by Miller's
/// downward recurrence, normalized with `J_0 + 2 Σ J_2k = 1`.
pub fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let mut start = n.max(ax.ceil() as usize) + 30 + (40.0 * (ax + 1.0)).sqrt() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut next = 0.0_f64;
    let mut cur = 1e-300_f64;
    let mut norm = 0.0_f64;
    for k in (0..=start).rev() {
        if k <= n {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += if k == 0 { cur } else { 2.0 * cur };
        }
        if k == 0 {
            break;
        }
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            out.iter_mut().skip(k - 1).for_each(|v| *v *= s);
        }
    }
    for (k, v) in out.iter_mut().enumerate() {
        *v /= norm;
        if x < 0.0 && k % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

/// Chebychev coefficients `c_0..c_{m-1}` of `f` on `[-1, 1]` from `m`
/// Gauss–Chebychev nodes.
fn chebyshev_coefficients(f: impl Fn(f64) -> C64, m: usize) -> Vec<C64> {
    let values: Vec<C64> = (0..m)
        .map(|j| f((PI * (j as f64 + 0.5) / m as f64).cos()))
        .collect();
    (0..m)
        .map(|n| {
            let s: C64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| v * (PI * n as f64 * (j as f64 + 0.5) / m as f64).cos())
                .sum();
            let w = if n == 0 { 1.0 } else { 2.0 };
            s * (w / m as f64)
        })
        .collect()
}

/// `φ_k(z) = Σ_j z^j / (j + k)!` for `k = 1, 2`.
pub fn phi_function(k: u32, z: C64) -> C64 {
    if z.norm() < 0.5 {
        let mut term = C64::new(1.0, 0.0);
        let mut denom = 1.0;
        for i in 1..=k {
            denom *= i as f64;
        }
        term /= denom;
        let mut sum = term;
        for j in 1..30 {
            term = term * z / (j + k) as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        match k {
            1 => (z.exp() - 1.0) / z,
            2 => (z.exp() - 1.0 - z) / (z * z),
            _ => unreachable!("only φ1 and φ2 are needed"),
        }
    }
}

fn truncate(mut coeffs: Vec<C64>, tol: f64) -> Vec<C64> {
    let last = coeffs.iter().rposition(|c| c.norm() >= tol).unwrap_or(0);
    coeffs.truncate(last + 1);
    coeffs
}

/// Expansion coefficients of `exp(-i H h)`, `φ1(-i H h)` and `φ2(-i H h)`
/// for fixed bounds and a fixed (signed) step `h`.
#[derive(Clone, Debug)]
pub struct ChebyshevStep {
    pub bounds: SpectralBounds,
    pub h: f64,
    exp: Vec<C64>,
    phi1: Vec<C64>,
    phi2: Vec<C64>,
}

impl ChebyshevStep {
    pub fn new(bounds: SpectralBounds, h: f64, tol: f64) -> Result<Self> {
        if h == 0.0 || !h.is_finite() {
            return invalid("time step must be finite and non-zero");
        }
        let a = bounds.half_width();
        let b = bounds.center();
        let x = a * h;

        let mut n = (x.abs().ceil() as usize + 16).min(MAX_ORDER + 1);
        let bessel = loop {
            let j = bessel_j_sequence(x, n + 1);
            // first index beyond the turning point whose coefficient is negligible
            let cut = (0..=n + 1).find(|&k| k as f64 > x.abs() && 2.0 * j[k].abs() < tol);
            match cut {
                Some(k) => break j[..k].to_vec(),
                None if n >= MAX_ORDER => {
                    return Err(Error::Numeric {
                        step: 0,
                        message: format!(
                            "Chebychev expansion did not converge within {MAX_ORDER} terms \
                             (spectral radius × dt = {x:.3e}); use a smaller time step"
                        ),
                    })
                }
                None => n = (2 * n).min(MAX_ORDER),
            }
        };
        let phase = C64::new(0.0, -b * h).exp();
        let mut minus_i_pow = C64::new(1.0, 0.0);
        let exp: Vec<C64> = bessel
            .iter()
            .enumerate()
            .map(|(k, jk)| {
                let w = if k == 0 { 1.0 } else { 2.0 };
                let c = phase * minus_i_pow * (w * jk);
                minus_i_pow *= C64::new(0.0, -1.0);
                c
            })
            .collect();

        let m = 2 * exp.len() + 64;
        let z_of = |xn: f64| C64::new(0.0, -(a * xn + b) * h);
        let phi1 = truncate(chebyshev_coefficients(|xn| phi_function(1, z_of(xn)), m), tol);
        let phi2 = truncate(chebyshev_coefficients(|xn| phi_function(2, z_of(xn)), m), tol);
        Ok(Self {
            bounds,
            h,
            exp,
            phi1,
            phi2,
        })
    }

    pub fn order(&self) -> usize {
        self.exp.len()
    }

    /// `Σ_k coeffs[k] T_k(Hn) v`.
    fn series<O: LinearOperator>(&self, op: &O, coeffs: &[C64], scale: C64, v: &[C64]) -> Vec<C64> {
        let dim = v.len();
        let a = self.bounds.half_width();
        let b = self.bounds.center();
        let mut acc: Vec<C64> = v.iter().map(|x| x * coeffs[0] * scale).collect();
        if coeffs.len() == 1 {
            return acc;
        }
        let mut prev = v.to_vec();
        let mut cur = vec![C64::new(0.0, 0.0); dim];
        op.apply(&prev, &mut cur);
        for (c, p) in cur.iter_mut().zip(&prev) {
            *c = (*c - p * b) / a;
        }
        let c1 = coeffs[1] * scale;
        for (s, c) in acc.iter_mut().zip(&cur) {
            *s += c * c1;
        }
        let mut next = vec![C64::new(0.0, 0.0); dim];
        for ck in &coeffs[2..] {
            op.apply(&cur, &mut next);
            for ((nx, c), p) in next.iter_mut().zip(&cur).zip(&prev) {
                *nx = (*nx - c * b) * (2.0 / a) - p;
            }
            let ck = ck * scale;
            for (s, nx) in acc.iter_mut().zip(&next) {
                *s += nx * ck;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        acc
    }

    /// `exp(-i H h) psi`.
    pub fn apply<O: LinearOperator>(&self, op: &O, psi: &[C64]) -> Vec<C64> {
        self.series(op, &self.exp, C64::new(1.0, 0.0), psi)
    }

    /// Solution after one step of `i ∂ψ/∂t = H ψ + s(t)` with `s` linear
    /// between `source_start` (at the beginning of the step) and
    /// `source_end`.
    pub fn apply_inhomogeneous<O: LinearOperator>(
        &self,
        op: &O,
        psi: &[C64],
        source_start: &[C64],
        source_end: &[C64],
    ) -> Vec<C64> {
        let mut out = self.apply(op, psi);
        let is_zero = |v: &[C64]| v.iter().all(|x| x.re == 0.0 && x.im == 0.0);
        if is_zero(source_start) && is_zero(source_end) {
            return out;
        }
        let minus_i_h = C64::new(0.0, -self.h);
        let first = self.series(op, &self.phi1, minus_i_h, source_start);
        for (o, f) in out.iter_mut().zip(&first) {
            *o += f;
        }
        let slope: Vec<C64> = source_end
            .iter()
            .zip(source_start)
            .map(|(e, s)| e - s)
            .collect();
        if !is_zero(&slope) {
            let second = self.series(op, &self.phi2, minus_i_h, &slope);
            for (o, f) in out.iter_mut().zip(&second) {
                *o += f;
            }
        }
        out
    }
}

/// Single Chebychev step `exp(-i H dt) psi` for an arbitrary operator.
pub fn chebychev_step<O: LinearOperator>(
    psi: &[C64],
    op: &O,
    bounds: SpectralBounds,
    dt: f64,
) -> Result<Vec<C64>> {
    let step = ChebyshevStep::new(bounds, dt, DEFAULT_TOLERANCE)?;
    Ok(step.apply(op, psi))
}

pub fn inhomogeneous_step<O: LinearOperator>(
    psi: &[C64],
    source_start: &[C64],
    source_end: &[C64],
    op: &O,
    bounds: SpectralBounds,
    dt: f64,
) -> Result<Vec<C64>> {
    let step = ChebyshevStep::new(bounds, dt, DEFAULT_TOLERANCE)?;
    Ok(step.apply_inhomogeneous(op, psi, source_start, source_end))
}

/// States at the stored times of a propagation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TwoAtomState>,
}

impl Trajectory {
    pub fn last(&self) -> &TwoAtomState {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// A Hamiltonian together with precomputed forward and backward steps for a
/// fixed time step.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub ham: Hamiltonian,
    pub dt: f64,
    forward: ChebyshevStep,
    backward: ChebyshevStep,
}

impl Propagator {
    pub fn new(ham: Hamiltonian, dt: f64) -> Result<Self> {
        let bounds = spectral_bounds(&ham);
        Self::with_bounds(ham, dt, bounds, DEFAULT_TOLERANCE)
    }

    pub fn with_bounds(ham: Hamiltonian, dt: f64, bounds: SpectralBounds, tol: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return invalid("time step must be positive");
        }
        Ok(Self {
            forward: ChebyshevStep::new(bounds, dt, tol)?,
            backward: ChebyshevStep::new(bounds, -dt, tol)?,
            ham,
            dt,
        })
    }

    pub fn bounds(&self) -> SpectralBounds {
        self.forward.bounds
    }

    pub fn order(&self) -> usize {
        self.forward.order()
    }

    pub fn snapshot(&self, omega_r: f64, omega_b: f64) -> Snapshot<'_> {
        Snapshot {
            ham: &self.ham,
            omega_r,
            omega_b,
        }
    }

    pub fn step(&self, psi: &[C64], omega_r: f64, omega_b: f64) -> Vec<C64> {
        self.forward.apply(&self.snapshot(omega_r, omega_b), psi)
    }

    /// `exp(+i H dt) psi`.
    pub fn step_back(&self, psi: &[C64], omega_r: f64, omega_b: f64) -> Vec<C64> {
        self.backward.apply(&self.snapshot(omega_r, omega_b), psi)
    }

    /// Backward step of the inhomogeneous equation from `t` to `t - dt`;
    /// `source_start` is sampled at `t`, `source_end` at `t - dt`.
    pub fn step_back_inhomogeneous(
        &self,
        psi: &[C64],
        omega_r: f64,
        omega_b: f64,
        source_start: &[C64],
        source_end: &[C64],
    ) -> Vec<C64> {
        self.backward.apply_inhomogeneous(
            &self.snapshot(omega_r, omega_b),
            psi,
            source_start,
            source_end,
        )
    }

    /// Propagate `psi0` through all steps of `fields`, storing every
    /// `stride`-th state (the final state is always stored).
    pub fn propagate(
        &self,
        psi0: &TwoAtomState,
        fields: &ControlField,
        stride: usize,
    ) -> Result<Trajectory> {
        self.check_fields(psi0, fields)?;
        let stride = stride.max(1);
        let mut times = vec![0.0];
        let mut states = vec![psi0.clone()];
        let mut psi = psi0.data.clone();
        for n in 0..fields.n_t {
            let (wr, wb) = fields.step_rabi(n, &self.ham.params);
            psi = self.step(&psi, wr, wb);
            check_finite(&psi, n)?;
            if (n + 1) % stride == 0 || n + 1 == fields.n_t {
                times.push(fields.time(n + 1));
                states.push(TwoAtomState {
                    n_r: psi0.n_r,
                    dr: psi0.dr,
                    data: psi.clone(),
                });
            }
        }
        Ok(Trajectory { times, states })
    }

    /// Final state only.
    pub fn propagate_final(&self, psi0: &TwoAtomState, fields: &ControlField) -> Result<TwoAtomState> {
        self.check_fields(psi0, fields)?;
        let mut psi = psi0.data.clone();
        for n in 0..fields.n_t {
            let (wr, wb) = fields.step_rabi(n, &self.ham.params);
            psi = self.step(&psi, wr, wb);
            check_finite(&psi, n)?;
        }
        Ok(TwoAtomState {
            n_r: psi0.n_r,
            dr: psi0.dr,
            data: psi,
        })
    }

    fn check_fields(&self, psi0: &TwoAtomState, fields: &ControlField) -> Result<()> {
        if psi0.data.len() != N_CHANNELS * self.ham.n_r() {
            return invalid("initial state does not match the grid");
        }
        if (fields.dt - self.dt).abs() > 1e-12 * self.dt {
            return invalid(format!(
                "field time step {} differs from propagator step {}",
                fields.dt, self.dt
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_finite(psi: &[C64], step: usize) -> Result<()> {
    if psi.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric {
            step,
            message: "state contains NaN or Inf".into(),
        })
    }
}

/// Propagate with a freshly built Hamiltonian.
pub fn propagate(
    psi0: &TwoAtomState,
    fields: &ControlField,
    params: &SystemParameters,
    grid: &SpatialGrid,
    mode: DecayMode,
    stride: usize,
) -> Result<Trajectory> {
    let ham = Hamiltonian::new(params, grid, mode)?;
    Propagator::new(ham, fields.dt)?.propagate(psi0, fields, stride)
}
