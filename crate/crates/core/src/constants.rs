//! Physical constants in SI units.
//!
//! Values are CODATA 2018 (exact where the SI fixes them). Every physical
//! constant used by the crate lives here.

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_109e-11;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_813e-12;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_150e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649_000e-23;
/// Electron mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_702e-31;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_580e8;
/// Atomic mass constant, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_067e-27;
/// Hartree energy, J.
pub const HARTREE: f64 = 4.359_744_722e-18;
/// Fine-structure constant.
pub const FINE_STRUCTURE: f64 = 7.297_352_569e-3;
/// Mass of ⁸⁷Rb in atomic mass units.
pub const RB87_MASS_AMU: f64 = 86.909_180_53;

/// Atomic unit of electric dipole moment `e a_B`, C m.
pub const ATOMIC_DIPOLE: f64 = ELEMENTARY_CHARGE * BOHR_RADIUS;
