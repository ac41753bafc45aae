//! CODATA 2018 constants in SI units.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Newtonian constant of gravitation, m³ kg⁻¹ s⁻².
pub const NEWTON_G: f64 = 6.674_30e-11;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Cesium-133 in the convention `m = 133 amu`.
pub const CESIUM_MASS: f64 = 133.0 * ATOMIC_MASS_UNIT;
