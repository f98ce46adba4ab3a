//! Cryogenic vacuum budget: background-gas collision rate and sublimation
//! equilibrium pressure of the dominant residual gases.

use serde::{Deserialize, Serialize};

use crate::error::{QvnError, Result};

/// Collisions per second across `n_ions` ions. At room temperature
/// (1e-11 mbar) every ion is hit roughly once per hour; the rate scales
/// linearly with pressure.
pub fn collision_rate(n_ions: f64, pressure_mbar: f64) -> f64 {
    n_ions * (1.0 / 3600.0) * (pressure_mbar / 1e-11)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResidualGas {
    H2,
    He4,
    He3,
}

impl std::str::FromStr for ResidualGas {
    type Err = QvnError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h2" => Ok(ResidualGas::H2),
            "he4" | "4he" => Ok(ResidualGas::He4),
            "he3" | "3he" => Ok(ResidualGas::He3),
            other => Err(QvnError::Parse(format!("unknown residual gas: {other}"))),
        }
    }
}

/// Anchor points (T, P): each gas hits 1e-6 mbar and 1e-12 mbar at these
/// temperatures.
fn anchors(gas: ResidualGas) -> [(f64, f64); 2] {
    match gas {
        ResidualGas::H2 => [(2.6, 1e-12), (4.2, 1e-6)],
        ResidualGas::He4 => [(0.24, 1e-12), (0.46, 1e-6)],
        ResidualGas::He3 => [(0.1, 1e-12), (0.22, 1e-6)],
    }
}

/// Sublimation equilibrium pressure, interpolated with log P linear in 1/T
/// through the two anchor points of the gas.
pub fn sublimation_pressure(gas: ResidualGas, temperature_k: f64) -> Result<f64> {
    let [(t_lo, p_lo), (t_hi, p_hi)] = anchors(gas);
    if !(temperature_k >= t_lo && temperature_k <= t_hi) {
        return Err(QvnError::TemperatureOutOfRange { t: temperature_k, lo: t_lo, hi: t_hi });
    }
    let (x, x_lo, x_hi) = (1.0 / temperature_k, 1.0 / t_lo, 1.0 / t_hi);
    let frac = (x - x_lo) / (x_hi - x_lo);
    let log_p = p_lo.log10() + frac * (p_hi.log10() - p_lo.log10());
    Ok(10f64.powf(log_p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn collision_anchors() {
        // 3600 ions at room-temperature pressure: about one hit per second.
        assert_relative_eq!(collision_rate(3600.0, 1e-11), 1.0, epsilon = 1e-12);
        // Cryopumping to 1e-16 mbar buys five orders of magnitude.
        let room = collision_rate(32768.0, 1e-11);
        let cold = collision_rate(32768.0, 1e-16);
        assert_relative_eq!(cold / room, 1e-5, max_relative = 1e-12);
        assert_eq!(collision_rate(0.0, 1e-11), 0.0);
    }

    #[test]
    fn collision_rate_linear() {
        let base = collision_rate(100.0, 3e-12);
        assert_relative_eq!(collision_rate(200.0, 3e-12), 2.0 * base, max_relative = 1e-12);
        assert_relative_eq!(collision_rate(100.0, 6e-12), 2.0 * base, max_relative = 1e-12);
    }

    #[test]
    fn sublimation_anchor_points() {
        assert_relative_eq!(
            sublimation_pressure(ResidualGas::H2, 4.2).unwrap(),
            1e-6,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            sublimation_pressure(ResidualGas::H2, 2.6).unwrap(),
            1e-12,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            sublimation_pressure(ResidualGas::He4, 0.46).unwrap(),
            1e-6,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            sublimation_pressure(ResidualGas::He3, 0.1).unwrap(),
            1e-12,
            max_relative = 1e-9
        );
    }

    #[test]
    fn sublimation_interior_and_monotonic() {
        let p = sublimation_pressure(ResidualGas::H2, 3.2).unwrap();
        assert!(p > 1e-12 && p < 1e-6);
        let mut last = 0.0;
        for i in 0..=50 {
            let t = 2.6 + (4.2 - 2.6) * f64::from(i) / 50.0;
            let p = sublimation_pressure(ResidualGas::H2, t).unwrap();
            assert!(p > last);
            last = p;
        }
    }

    #[test]
    fn sublimation_out_of_range() {
        assert!(matches!(
            sublimation_pressure(ResidualGas::H2, 10.0),
            Err(QvnError::TemperatureOutOfRange { .. })
        ));
        assert!(sublimation_pressure(ResidualGas::He3, 0.05).is_err());
    }
}
