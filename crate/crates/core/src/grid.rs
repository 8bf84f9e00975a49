//! Equidistant Fourier grid for the interatomic-distance coordinate and
//! spectral application of the kinetic-energy operator.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::units::hbar_over_mass;
use crate::C64;

/// Equidistant grid `r_j = r_min + j dr`, `j = 0..n`, covering `[r_min, r_max)`,
/// together with its conjugate momenta in standard DFT ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub dr: f64,
    /// Conjugate momenta in rad/μm: `0, 1, .., n/2 - 1, -n/2, .., -1` times `2π/(n dr)`.
    pub k: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        if !(r_min.is_finite() && r_max.is_finite()) || r_max <= r_min {
            return invalid(format!("grid extent [{r_min}, {r_max}] is empty"));
        }
        if n < 2 {
            return invalid(format!("grid needs at least two points, got {n}"));
        }
        let dr = (r_max - r_min) / n as f64;
        let dk = 2.0 * PI / (n as f64 * dr);
        let k = (0..n)
            .map(|j| {
                let j = j as i64;
                let signed = if 2 * j < n as i64 { j } else { j - n as i64 };
                signed as f64 * dk
            })
            .collect();
        Ok(Self { r_min, r_max, n, dr, k })
    }

    /// Grid of half-width `half_width` centered on `center`.
    pub fn centered(center: f64, half_width: f64, n: usize) -> Result<Self> {
        Self::new(center - half_width, center + half_width, n)
    }

    pub fn point(&self, j: usize) -> f64 {
        self.r_min + j as f64 * self.dr
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.point(j))
    }

    pub fn extent(&self) -> f64 {
        self.r_max - self.r_min
    }

    pub fn k_max(&self) -> f64 {
        self.k.iter().fold(0.0_f64, |m, k| m.max(k.abs()))
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.r_min && r < self.r_max
    }
}

pub fn build_grid(r_min: f64, r_max: f64, n: usize) -> Result<SpatialGrid> {
    SpatialGrid::new(r_min, r_max, n)
}

/// A single-channel wavefunction, L²-normalized with weight `dr`.
#[derive(Clone, Debug, PartialEq)]
pub struct Wavefunction1D {
    pub amplitudes: Vec<C64>,
    pub dr: f64,
}

impl Wavefunction1D {
    pub fn new(amplitudes: Vec<C64>, dr: f64) -> Self {
        Self { amplitudes, dr }
    }

    pub fn from_fn(grid: &SpatialGrid, f: impl Fn(f64) -> C64) -> Self {
        Self::new(grid.points().map(f).collect(), grid.dr)
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.dr * self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>` with the grid weight.
    pub fn inner(&self, other: &Self) -> C64 {
        let s: C64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.dr
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }
}

/// Kinetic-energy operator `-(ħ²/2m) d²/dr²` applied by FFT.
///
/// Energies are in rad/ns, so with ħ = 1 the diagonal in momentum space is
/// `(ħ/m) k²/2`.
#[derive(Clone)]
pub struct KineticOperator {
    n: usize,
    /// `ħk²/2m`, already divided by `n` for the unnormalized inverse transform.
    scaled_energies: Vec<f64>,
    max_energy: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl fmt::Debug for KineticOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KineticOperator")
            .field("n", &self.n)
            .field("max_energy", &self.max_energy)
            .finish()
    }
}

impl KineticOperator {
    pub fn new(grid: &SpatialGrid, mass_amu: f64) -> Result<Self> {
        if !(mass_amu > 0.0) {
            return invalid(format!("mass must be positive, got {mass_amu}"));
        }
        Ok(Self::with_hbar_over_mass(grid, hbar_over_mass(mass_amu)))
    }

    pub fn with_hbar_over_mass(grid: &SpatialGrid, hbar_over_m: f64) -> Self {
        let n = grid.n;
        let energies: Vec<f64> = grid.k.iter().map(|k| 0.5 * hbar_over_m * k * k).collect();
        let max_energy = energies.iter().cloned().fold(0.0, f64::max);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            scaled_energies: energies.iter().map(|e| e / n as f64).collect(),
            max_energy,
            forward,
            inverse,
            scratch_len,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Largest kinetic energy on the grid, `ħ k_max² / 2m`.
    pub fn max_energy(&self) -> f64 {
        self.max_energy
    }

    pub fn scratch_len(&self) -> usize {
        self.scratch_len
    }

    /// `out += factor * T psi`. `buf` must have length `n`, `scratch` at least
    /// [`Self::scratch_len`].
    pub fn apply_add(
        &self,
        psi: &[C64],
        out: &mut [C64],
        buf: &mut [C64],
        scratch: &mut [C64],
    ) {
        buf.copy_from_slice(psi);
        self.forward.process_with_scratch(buf, scratch);
        for (b, e) in buf.iter_mut().zip(&self.scaled_energies) {
            *b *= *e;
        }
        self.inverse.process_with_scratch(buf, scratch);
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o += *b;
        }
    }

    pub fn apply(&self, psi: &[C64]) -> Result<Vec<C64>> {
        if psi.len() != self.n {
            return invalid(format!(
                "wavefunction has {} points, grid has {}",
                psi.len(),
                self.n
            ));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        let mut buf = vec![C64::new(0.0, 0.0); self.n];
        let mut scratch = vec![C64::new(0.0, 0.0); self.scratch_len];
        self.apply_add(psi, &mut out, &mut buf, &mut scratch);
        Ok(out)
    }

    /// Unnormalized forward DFT.
    pub fn transform(&self, psi: &[C64]) -> Vec<C64> {
        let mut buf = psi.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT including the `1/n` normalization.
    pub fn inverse_transform(&self, phi: &[C64]) -> Vec<C64> {
        let mut buf = phi.to_vec();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|b| *b *= scale);
        buf
    }
}

pub fn apply_kinetic(
    psi: &Wavefunction1D,
    grid: &SpatialGrid,
    mass_amu: f64,
) -> Result<Wavefunction1D> {
    let op = KineticOperator::new(grid, mass_amu)?;
    Ok(Wavefunction1D::new(op.apply(&psi.amplitudes)?, grid.dr))
}

/// Normalized ground state `exp(-m ω (r - r0)² / 2ħ)` of a harmonic trap.
/// `omega` is in rad/ns.
pub fn harmonic_ground_state(
    grid: &SpatialGrid,
    omega: f64,
    mass_amu: f64,
    r0: f64,
) -> Result<Wavefunction1D> {
    if !(omega > 0.0) || !(mass_amu > 0.0) {
        return invalid("trap frequency and mass must be positive");
    }
    if !grid.contains(r0) {
        return invalid(format!(
            "trap center {r0} outside grid [{}, {})",
            grid.r_min, grid.r_max
        ));
    }
    let length_sqr = hbar_over_mass(mass_amu) / omega;
    let sigma = (0.5 * length_sqr).sqrt();
    if sigma > 0.1 * grid.extent() {
        log::warn!(
            "ground-state width {sigma:.4} μm exceeds 10% of the grid extent {:.4} μm; expect truncation",
            grid.extent()
        );
    }
    let mut psi = Wavefunction1D::from_fn(grid, |r| {
        let x = r - r0;
        C64::new((-0.5 * x * x / length_sqr).exp(), 0.0)
    });
    psi.normalize();
    Ok(psi)
}

/// Harmonic length `sqrt(ħ/(m ω))` in μm.
pub fn harmonic_length(omega: f64, mass_amu: f64) -> f64 {
    (hbar_over_mass(mass_amu) / omega).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::RB87_MASS_AMU;
    use crate::units::khz_to_rad_per_ns;

    fn reference_grid() -> SpatialGrid {
        build_grid(3.7, 4.3, 200).unwrap()
    }

    #[test]
    fn reference_grid_spacing() {
        let g = reference_grid();
        assert!((g.dr - 0.003).abs() < 1e-15);
        assert!((g.point(0) - 3.7).abs() < 1e-12);
        assert!((g.point(100) - 4.0).abs() < 1e-12);
        assert!(g.points().all(|r| (3.7..4.3).contains(&r)));
    }

    #[test]
    fn two_point_grid() {
        let g = build_grid(0.0, 1.0, 2).unwrap();
        assert_eq!(g.dr, 0.5);
        assert_eq!(g.k[0], 0.0);
        assert!((g.k[1] + PI / 0.5).abs() < 1e-12);
    }

    #[test]
    fn max_momentum() {
        let g = build_grid(3.7, 4.3, 256).unwrap();
        assert!((g.k_max() - 1340.412_865_531_6).abs() < 1e-6);
        assert!((g.k_max() - PI / g.dr).abs() / (PI / g.dr) < 1e-9);
    }

    #[test]
    fn invalid_grids() {
        assert!(build_grid(1.0, 1.0, 10).is_err());
        assert!(build_grid(2.0, 1.0, 10).is_err());
        assert!(build_grid(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn kinetic_of_constant_is_zero() {
        let g = reference_grid();
        let psi = Wavefunction1D::from_fn(&g, |_| C64::new(1.0, 0.0));
        let t = apply_kinetic(&psi, &g, RB87_MASS_AMU).unwrap();
        assert!(t.amplitudes.iter().all(|a| a.norm() < 1e-14));
    }

    #[test]
    fn kinetic_plane_wave() {
        let g = reference_grid();
        let k0 = g.k[7];
        let psi = Wavefunction1D::from_fn(&g, |r| C64::new(0.0, k0 * (r - g.r_min)).exp());
        let t = apply_kinetic(&psi, &g, RB87_MASS_AMU).unwrap();
        let e = 0.5 * hbar_over_mass(RB87_MASS_AMU) * k0 * k0;
        for (a, b) in t.amplitudes.iter().zip(&psi.amplitudes) {
            assert!((a - b * e).norm() < 1e-12);
        }
    }

    #[test]
    fn kinetic_length_mismatch() {
        let g = reference_grid();
        let op = KineticOperator::new(&g, RB87_MASS_AMU).unwrap();
        assert!(op.apply(&[C64::new(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn ground_state_size_and_norm() {
        let g = reference_grid();
        let w = khz_to_rad_per_ns(276.0);
        let psi = harmonic_ground_state(&g, w, RB87_MASS_AMU, 4.0).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-9);
        let size = harmonic_length(w, RB87_MASS_AMU);
        assert!((size - 0.020).abs() < 0.001, "size {size}");
    }

    #[test]
    fn ground_state_outside_grid() {
        let g = reference_grid();
        let w = khz_to_rad_per_ns(276.0);
        assert!(harmonic_ground_state(&g, w, RB87_MASS_AMU, 5.0).is_err());
        assert!(harmonic_ground_state(&g, -w, RB87_MASS_AMU, 4.0).is_err());
    }
}
