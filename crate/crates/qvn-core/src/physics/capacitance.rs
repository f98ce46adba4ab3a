//! Trap electrode capacitance: parallel-plate estimate through the dielectric
//! and the shunt ratio governing RF pickup on segmented DC electrodes.

use serde::{Deserialize, Serialize};

const EPS0: f64 = 8.854_187_812_8e-12;

/// Parallel-plate capacitance eps0 * eps_r * A / d.
pub fn plate_capacitance(area_m2: f64, thickness_m: f64, eps_r: f64) -> f64 {
    EPS0 * eps_r * area_m2 / thickness_m
}

/// Capacitance network of one DC segment: direct (unprimed) and
/// through-dielectric (primed) paths to the RF rail (seg) and to ground
/// (shunt).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CapacitanceModel {
    pub c_shunt_f: f64,
    pub c_shunt_prime_f: f64,
    pub c_seg_f: f64,
    pub c_seg_prime_f: f64,
    #[serde(default = "default_eps_r")]
    pub eps_r: f64,
}

fn default_eps_r() -> f64 {
    3.8
}

impl CapacitanceModel {
    /// Conventional stack: the primed capacitances follow the unprimed ones
    /// scaled by the dielectric constant.
    pub fn old_geometry(c_shunt_f: f64, c_seg_f: f64, eps_r: f64) -> Self {
        CapacitanceModel {
            c_shunt_f,
            c_shunt_prime_f: eps_r * c_shunt_f,
            c_seg_f,
            c_seg_prime_f: eps_r * c_seg_f,
            eps_r,
        }
    }

    /// Ground plane under the segments: the through-dielectric path to the
    /// RF rail vanishes and the shunt gains the full plate capacitance.
    pub fn new_geometry(c_shunt_f: f64, c_shunt_prime_f: f64, c_seg_f: f64, eps_r: f64) -> Self {
        CapacitanceModel { c_shunt_f, c_shunt_prime_f, c_seg_f, c_seg_prime_f: 0.0, eps_r }
    }
}

/// RF pickup ratio (C_seg + C_seg') / (C_shunt + C_shunt').
pub fn shunt_ratio(model: &CapacitanceModel) -> f64 {
    (model.c_seg_f + model.c_seg_prime_f) / (model.c_shunt_f + model.c_shunt_prime_f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn oxide_plate_capacitance() {
        // 100 um x 100 um pad over 1 um of SiO2.
        let c = plate_capacitance(100e-6 * 100e-6, 1e-6, 3.8);
        assert_relative_eq!(c, 0.3365e-12, max_relative = 2e-3);
        assert!((c * 1e12 - 0.33).abs() < 0.01);
    }

    #[test]
    fn vacuum_plate_is_eps0_a_over_d() {
        assert_relative_eq!(
            plate_capacitance(2e-8, 1e-6, 1.0),
            EPS0 * 2e-8 / 1e-6,
            max_relative = 1e-15
        );
    }

    #[test]
    fn old_geometry_ratio_near_one() {
        let c = 0.33e-12;
        let m = CapacitanceModel::old_geometry(c, c, 3.8);
        assert_relative_eq!(shunt_ratio(&m), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn new_geometry_suppresses_pickup() {
        // Shunt of 0.33 pF plus its dielectric path; direct rail coupling two
        // orders smaller and no through-dielectric rail path.
        let shunt = 0.33e-12;
        let m = CapacitanceModel::new_geometry(shunt, 3.8 * shunt, shunt / 100.0, 3.8);
        assert!(shunt_ratio(&m) <= 1e-2);
    }

    #[test]
    fn ratio_decreases_with_more_shunt() {
        let base = CapacitanceModel::old_geometry(0.33e-12, 0.33e-12, 3.8);
        let more = CapacitanceModel { c_shunt_prime_f: base.c_shunt_prime_f * 2.0, ..base };
        assert!(shunt_ratio(&more) < shunt_ratio(&base));
    }

    #[test]
    fn removing_primed_seg_path_gains_eps_plus_one() {
        // Dropping C_seg' cuts the numerator by eps_r + 1 when
        // C_seg' = eps_r * C_seg.
        let old = CapacitanceModel::old_geometry(0.33e-12, 0.33e-12, 3.8);
        let new = CapacitanceModel { c_seg_prime_f: 0.0, ..old };
        assert_relative_eq!(
            shunt_ratio(&old) / shunt_ratio(&new),
            3.8 + 1.0,
            max_relative = 1e-12
        );
    }
}
