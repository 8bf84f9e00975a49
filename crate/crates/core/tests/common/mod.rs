#![allow(dead_code)]

use nalgebra::DMatrix;
use rydgate::grid::SpatialGrid;
use rydgate::propagator::LinearOperator;
use rydgate::system::{DecayMode, DetuningConvention, Hamiltonian, SystemParameters};
use rydgate::C64;

pub type CMat = DMatrix<C64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Small grid around r0 used by the dense checks.
pub fn small_grid(n: usize) -> SpatialGrid {
    SpatialGrid::new(3.7, 4.3, n).unwrap()
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kinetic matrix from the explicit DFT sum `T_jl = (1/n) Σ_m E_m e^{i k_m (r_j - r_l)}`.
pub fn dense_kinetic(grid: &SpatialGrid, hbar_over_m: f64) -> CMat {
    let n = grid.n;
    CMat::from_fn(n, n, |j, l| {
        let x = (j as f64 - l as f64) * grid.dr;
        grid.k
            .iter()
            .map(|k| C64::new(0.0, k * x).exp() * (0.5 * hbar_over_m * k * k))
            .sum::<C64>()
            / n as f64
    })
}

/// Single-atom operator in the basis 0, 1, i, r.
fn single_atom(p: &SystemParameters, omega_r: f64, omega_b: f64, mode: DecayMode) -> CMat {
    let f = match p.detuning_convention {
        DetuningConvention::Half => 0.5,
        DetuningConvention::Full => 1.0,
    };
    let (gi, gr) = match mode {
        DecayMode::Hermitian => (0.0, 0.0),
        DecayMode::WithDecay => (p.gamma_i, p.gamma_r),
    };
    let mut h = CMat::zeros(4, 4);
    h[(2, 2)] = C64::new(f * p.delta, -0.5 * gi);
    h[(3, 3)] = C64::new(f * p.two_photon_detuning, -0.5 * gr);
    h[(0, 2)] = c(0.5 * omega_r);
    h[(2, 0)] = c(0.5 * omega_r);
    h[(2, 3)] = c(0.5 * omega_b);
    h[(3, 2)] = c(0.5 * omega_b);
    h
}

/// Dense two-atom Hamiltonian assembled from Kronecker products.
pub fn dense_hamiltonian(
    p: &SystemParameters,
    grid: &SpatialGrid,
    omega_r: f64,
    omega_b: f64,
    mode: DecayMode,
) -> CMat {
    let n = grid.n;
    let id4 = CMat::identity(4, 4);
    let h1 = single_atom(p, omega_r, omega_b, mode);
    let h_el = kron(&h1, &id4) + kron(&id4, &h1);
    let mut rr = CMat::zeros(16, 16);
    rr[(15, 15)] = c(1.0);
    let potential = CMat::from_fn(n, n, |j, l| {
        if j == l {
            c(p.c3 / grid.point(j).powi(3))
        } else {
            c(0.0)
        }
    });
    let mut h = kron(&h_el, &CMat::identity(n, n))
        + kron(&CMat::identity(16, 16), &dense_kinetic(grid, p.hbar_over_mass()))
        + kron(&rr, &potential);
    if p.trap_on_during_gate {
        let trap = CMat::from_fn(n, n, |j, l| {
            if j == l {
                let x = grid.point(j) - p.r0;
                c(0.5 * p.omega_trap * p.omega_trap * x * x / p.hbar_over_mass())
            } else {
                c(0.0)
            }
        });
        h += kron(&CMat::identity(16, 16), &trap);
    }
    h
}

/// Matrix of a linear operator, column by column.
pub fn matrix_of<O: LinearOperator>(op: &O) -> CMat {
    let dim = op.dim();
    let mut m = CMat::zeros(dim, dim);
    let mut e = vec![c(0.0); dim];
    let mut col = vec![c(0.0); dim];
    for j in 0..dim {
        e[j] = c(1.0);
        op.apply(&e, &mut col);
        e[j] = c(0.0);
        for i in 0..dim {
            m[(i, j)] = col[i];
        }
    }
    m
}

pub fn matrix_free(ham: &Hamiltonian, omega_r: f64, omega_b: f64) -> CMat {
    matrix_of(&rydgate::propagator::Snapshot {
        ham,
        omega_r,
        omega_b,
    })
}

/// `exp(-i H t)` for Hermitian `H` by eigendecomposition.
pub fn expm_hermitian(h: &CMat, t: f64) -> CMat {
    let eig = h.clone().symmetric_eigen();
    let u = &eig.eigenvectors;
    let d = CMat::from_diagonal(&eig.eigenvalues.map(|e| C64::new(0.0, -e * t).exp()));
    u * d * u.adjoint()
}

pub fn apply(m: &CMat, v: &[C64]) -> Vec<C64> {
    let x = nalgebra::DVector::from_column_slice(v);
    (m * x).as_slice().to_vec()
}

/// L² distance with grid weight `dr`.
pub fn distance(a: &[C64], b: &[C64], dr: f64) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * dr).sqrt()
}

pub fn random_state(dim: usize, dr: f64, seed: u64) -> Vec<C64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = (v.iter().map(|x| x.norm_sqr()).sum::<f64>() * dr).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}
