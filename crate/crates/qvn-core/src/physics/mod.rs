//! Supporting physics calculators: magnet-coil field homogeneity, cryogenic
//! vacuum budget, clock-transition magnetic sensitivity, laser beam power
//! scaling and trap electrode capacitance.

pub mod capacitance;
pub mod coil;
pub mod vacuum;

pub use capacitance::{plate_capacitance, shunt_ratio, CapacitanceModel};
pub use coil::{
    field_at, homogeneous_sphere_radius, required_coil_radius, CoilKind, CoilSystem, Loop,
};
pub use vacuum::{collision_rate, sublimation_pressure, ResidualGas};

/// Second-order Zeeman shift of a clock transition:
/// sensitivity (Hz/mT^2) times the square of the field deviation (mT).
pub fn clock_shift(sensitivity_hz_per_mt2: f64, delta_b_mt: f64) -> f64 {
    sensitivity_hz_per_mt2 * delta_b_mt * delta_b_mt
}

/// Optical power needed for the same peak intensity at a different beam
/// waist: power scales with the focal spot area.
pub fn beam_power_scaling(p_ref_w: f64, w0_ref_m: f64, w0_new_m: f64) -> f64 {
    p_ref_w * (w0_new_m / w0_ref_m).powi(2)
}
