//! Matrix-free operators and propagators against dense references.

mod common;

use common::*;
use nalgebra::DMatrix;
use rydgate::grid::{harmonic_ground_state, KineticOperator};
use rydgate::propagator::{spectral_bounds, ChebyshevStep, Propagator, Snapshot, DEFAULT_TOLERANCE};
use rydgate::state::{channel, Level, TwoAtomState};
use rydgate::system::{ControlField, DecayMode, DetuningConvention, Hamiltonian, SystemParameters};
use rydgate::C64;

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[test]
fn kinetic_matches_dft_sum() {
    let grid = small_grid(12);
    let p = SystemParameters::reference();
    let op = KineticOperator::new(&grid, p.mass_amu).unwrap();
    let dense = dense_kinetic(&grid, p.hbar_over_mass());
    let psi = random_state(12, grid.dr, 3);
    let got = op.apply(&psi).unwrap();
    let want = apply(&dense, &psi);
    let scale = op.max_energy();
    assert!(distance(&got, &want, grid.dr) < 1e-12 * scale);
}

#[test]
fn hamiltonian_matches_kronecker_assembly() {
    let grid = small_grid(8);
    for convention in [DetuningConvention::Half, DetuningConvention::Full] {
        for trap in [false, true] {
            for mode in [DecayMode::Hermitian, DecayMode::WithDecay] {
                let mut p = SystemParameters::reference();
                p.detuning_convention = convention;
                p.trap_on_during_gate = trap;
                p.gamma_r = 1.0 / 500.0;
                let ham = Hamiltonian::new(&p, &grid, mode).unwrap();
                let (wr, wb) = (0.7 * p.omega_r0, 0.3 * p.omega_b0);
                let got = matrix_free(&ham, wr, wb);
                let want = dense_hamiltonian(&p, &grid, wr, wb, mode);
                let err = max_abs(&(&got - &want));
                assert!(err < 1e-10 * max_abs(&want), "{convention:?} {trap} {mode:?}: {err}");
            }
        }
    }
}

#[test]
fn hermitian_mode_is_hermitian_and_bounded() {
    let grid = small_grid(8);
    let p = SystemParameters::reference();
    let ham = Hamiltonian::new(&p, &grid, DecayMode::Hermitian).unwrap();
    let bounds = spectral_bounds(&ham);
    for (wr, wb) in [(0.0, 0.0), (p.omega_r0, p.omega_b0), (0.2, 1.1)] {
        let h = matrix_free(&ham, wr, wb);
        assert!(max_abs(&(&h - h.adjoint())) < 1e-10 * max_abs(&h));
        let eig = h.symmetric_eigen();
        for e in eig.eigenvalues.iter() {
            assert!(bounds.contains(*e), "{e} outside [{}, {}]", bounds.e_min, bounds.e_max);
        }
    }
}

#[test]
fn decay_mode_adds_only_anti_hermitian_diagonal() {
    let grid = small_grid(8);
    let p = SystemParameters::reference();
    let herm = matrix_free(&Hamiltonian::new(&p, &grid, DecayMode::Hermitian).unwrap(), 0.5, 0.9);
    let lossy = matrix_free(&Hamiltonian::new(&p, &grid, DecayMode::WithDecay).unwrap(), 0.5, 0.9);
    let diff = &lossy - &herm;
    let n = grid.n;
    for i in 0..diff.nrows() {
        for j in 0..diff.ncols() {
            if i != j {
                assert!(diff[(i, j)].norm() < 1e-12);
            }
        }
        let c = i / n;
        let (a, b) = rydgate::state::channel_levels(c);
        let rate = |l: Level| match l {
            Level::I => p.gamma_i,
            Level::R => p.gamma_r,
            _ => 0.0,
        };
        let want = -0.5 * (rate(a) + rate(b));
        assert!((diff[(i, i)].im - want).abs() < 1e-15 && diff[(i, i)].re.abs() < 1e-12);
    }
}

#[test]
fn chebychev_step_matches_expm() {
    let grid = small_grid(8);
    let p = SystemParameters::reference();
    let ham = Hamiltonian::new(&p, &grid, DecayMode::Hermitian).unwrap();
    let (wr, wb) = (0.9 * p.omega_r0, 0.6 * p.omega_b0);
    let h = dense_hamiltonian(&p, &grid, wr, wb, DecayMode::Hermitian);
    let prop = Propagator::new(ham, 0.1).unwrap();
    for seed in 0..3 {
        let psi = random_state(h.nrows(), grid.dr, seed);
        let fwd = prop.step(&psi, wr, wb);
        assert!(distance(&fwd, &apply(&expm_hermitian(&h, 0.1), &psi), grid.dr) < 1e-10);
        let back = prop.step_back(&psi, wr, wb);
        assert!(distance(&back, &apply(&expm_hermitian(&h, -0.1), &psi), grid.dr) < 1e-10);
    }
}

#[test]
fn chebychev_step_with_decay_matches_general_expm() {
    let grid = small_grid(8);
    let mut p = SystemParameters::reference();
    p.gamma_i = 0.2;
    p.gamma_r = 0.05;
    let ham = Hamiltonian::new(&p, &grid, DecayMode::WithDecay).unwrap();
    let (wr, wb) = (0.4 * p.omega_r0, p.omega_b0);
    let h = dense_hamiltonian(&p, &grid, wr, wb, DecayMode::WithDecay);
    let u = (h * C64::new(0.0, -0.1)).exp();
    let prop = Propagator::new(ham, 0.1).unwrap();
    let psi = random_state(u.nrows(), grid.dr, 11);
    let got = prop.step(&psi, wr, wb);
    assert!(distance(&got, &apply(&u, &psi), grid.dr) < 1e-9);
}

/// `exp` of the augmented matrix `[[-iH, b1, b0], [0, 0, 1], [0, 0, 0]]`
/// integrates `ψ' = -iHψ + b0 + b1 τ` exactly.
fn inhomogeneous_reference(h: &CMat, psi: &[C64], s0: &[C64], s1: &[C64], dt: f64) -> Vec<C64> {
    let d = h.nrows();
    let mut a = DMatrix::<C64>::zeros(d + 2, d + 2);
    let mi = C64::new(0.0, -1.0);
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] = mi * h[(i, j)];
        }
        a[(i, d)] = mi * (s1[i] - s0[i]) / dt;
        a[(i, d + 1)] = mi * s0[i];
    }
    a[(d, d + 1)] = c(1.0);
    let e = (a * c(dt)).exp();
    let mut y = psi.to_vec();
    y.push(c(0.0));
    y.push(c(1.0));
    apply(&e, &y)[..d].to_vec()
}

#[test]
fn inhomogeneous_step_matches_augmented_expm() {
    let grid = small_grid(8);
    let p = SystemParameters::reference();
    let ham = Hamiltonian::new(&p, &grid, DecayMode::Hermitian).unwrap();
    let (wr, wb) = (0.5 * p.omega_r0, 0.8 * p.omega_b0);
    let h = dense_hamiltonian(&p, &grid, wr, wb, DecayMode::Hermitian);
    let bounds = spectral_bounds(&ham);
    let snap = Snapshot {
        ham: &ham,
        omega_r: wr,
        omega_b: wb,
    };
    let psi = random_state(h.nrows(), grid.dr, 1);
    let s0 = random_state(h.nrows(), grid.dr, 2);
    let s1 = random_state(h.nrows(), grid.dr, 3);
    for dt in [0.05, -0.05] {
        let step = ChebyshevStep::new(bounds, dt, DEFAULT_TOLERANCE).unwrap();
        let got = step.apply_inhomogeneous(&snap, &psi, &s0, &s1);
        let want = inhomogeneous_reference(&h, &psi, &s0, &s1, dt);
        let err = distance(&got, &want, grid.dr);
        assert!(err < 1e-9, "dt {dt}: {err}");
    }
}

#[test]
fn two_level_rabi_flop() {
    // Without Δ, δ and c3 the motion decouples and, with the blue field
    // off, each atom is a resonant two-level system 0 ↔ i.
    let grid = small_grid(8);
    let mut p = SystemParameters::reference();
    p.delta = 1e-300;
    p.two_photon_detuning = 0.0;
    p.c3 = 0.0;
    let ham = Hamiltonian::new(&p, &grid, DecayMode::Hermitian).unwrap();
    let omega = 0.4 * p.omega_r0;
    let duration = std::f64::consts::PI / omega;
    let n_t = 200;
    let prop = Propagator::new(ham, duration / n_t as f64).unwrap();
    let motion = harmonic_ground_state(&grid, p.omega_trap, p.mass_amu, p.r0).unwrap();
    let mut psi = TwoAtomState::product(Level::Q0, Level::Q1, &motion).data;
    for _ in 0..n_t {
        psi = prop.step(&psi, omega, 0.0);
    }
    let s = TwoAtomState {
        n_r: grid.n,
        dr: grid.dr,
        data: psi,
    };
    let pops = s.populations();
    assert!((pops[channel(Level::I, Level::Q1)] - 1.0).abs() < 1e-9);
}

#[test]
fn decay_of_intermediate_population() {
    let grid = small_grid(8);
    let mut p = SystemParameters::reference();
    p.gamma_i = 1.0 / 27.7;
    let ham = Hamiltonian::new(&p, &grid, DecayMode::WithDecay).unwrap();
    let motion = harmonic_ground_state(&grid, p.omega_trap, p.mass_amu, p.r0).unwrap();
    let psi0 = TwoAtomState::product(Level::I, Level::Q1, &motion);
    let fields = ControlField::constant(27.7, 277, -40.0, -40.0).unwrap();
    let prop = Propagator::new(ham, fields.dt).unwrap();
    let mut psi = psi0.data.clone();
    for _ in 0..fields.n_t {
        psi = prop.step(&psi, 0.0, 0.0);
    }
    let norm = rydgate::state::inner(&psi, &psi, grid.dr).re;
    assert!((norm - (-1.0f64).exp()).abs() < 1e-9, "{norm}");
}
