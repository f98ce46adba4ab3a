//! Closed-form architectural models: Rent's rule, the serialization ratio
//! kappa, Shor runtime/qubit scalings, Steane-code QEC throughput, machine
//! throughput, local-oscillator stability and DAC RAM sizing.

use serde::{Deserialize, Serialize};

/// Rent's rule parameters for P = K * B^r.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RentParams {
    /// Rent coefficient, pins per logical element.
    pub k: f64,
    /// Rent exponent; values above 0.75 are outside the empirical range.
    pub r: f64,
    /// Logical element count.
    pub b: f64,
}

/// External pin count P = K * B^r.
pub fn rent_pins(p: &RentParams) -> f64 {
    p.k * p.b.powf(p.r)
}

/// Whether the exponent exceeds the empirical upper bound of 0.75.
pub fn rent_exponent_out_of_range(p: &RentParams) -> bool {
    !(0.0..=0.75).contains(&p.r)
}

/// Inputs for the maximum number of physical qubits per processing zone.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KappaInputs {
    /// Experimentally measured coherence time.
    pub coherence_time_s: f64,
    /// Usable fraction of the measured coherence time, typically 0.01-0.1.
    pub qec_fraction: f64,
    /// Time for a single cycle of QEC per physical qubit.
    pub qec_cycle_per_qubit_s: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KappaResult {
    pub kappa: f64,
    /// Kappa must exceed 1 for fault tolerance.
    pub fault_tolerant: bool,
}

/// kappa = ("QEC coherence time") / (QEC cycle time per physical qubit).
pub fn kappa(k: &KappaInputs) -> KappaResult {
    let value = k.coherence_time_s * k.qec_fraction / k.qec_cycle_per_qubit_s;
    KappaResult { kappa: value, fault_tolerant: value > 1.0 }
}

/// Per-qubit QEC cycle time for the 7-qubit Steane code: 24 entangling
/// gates across 7 qubits plus one correcting operation.
pub fn steane_cycle(t_2q_s: f64, t_correct_s: f64) -> f64 {
    (24.0 / 7.0) * t_2q_s + (1.0 / 7.0) * t_correct_s
}

/// Architectural models for Shor's algorithm runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShorArch {
    /// Beckman-Chari-Devabhaktuni-Preskill: serial, nearest-neighbor.
    Bcdp,
    /// Neighbor-only, two-qubit-gate, concurrent.
    Ntc,
    /// Abstract concurrent: arbitrary-pair interactions.
    Ac,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShorModel {
    pub kind: ShorArch,
    pub logical_clock_hz: f64,
}

/// Logical operation count to factor an n-bit number.
pub fn shor_ops(kind: ShorArch, n_bits: u32) -> f64 {
    let n = f64::from(n_bits);
    match kind {
        ShorArch::Bcdp => 54.0 * n.powi(3),
        ShorArch::Ntc => 20.0 * n * n * n.log2(),
        ShorArch::Ac => 9.0 * n * n.log2().powi(2),
    }
}

pub fn shor_time(model: &ShorModel, n_bits: u32) -> f64 {
    shor_ops(model.kind, n_bits) / model.logical_clock_hz
}

/// Qubit space: 5n+3 for BCDP, 2n^2 for NTC and AC.
pub fn shor_qubits(kind: ShorArch, n_bits: u32) -> u64 {
    let n = u64::from(n_bits);
    match kind {
        ShorArch::Bcdp => 5 * n + 3,
        ShorArch::Ntc | ShorArch::Ac => 2 * n * n,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Throughput {
    pub oneq_per_s: f64,
    pub twoq_per_s: f64,
}

/// Idealized gate throughput: n_parallel_1q simultaneous single-qubit
/// operations every t_1q, one entangling gate every t_2q.
pub fn machine_throughput(t_1q_s: f64, t_2q_s: f64, n_parallel_1q: u32) -> Throughput {
    Throughput {
        oneq_per_s: f64::from(n_parallel_1q) / t_1q_s,
        twoq_per_s: 1.0 / t_2q_s,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SyndromeSweep {
    pub total_2q_gates: f64,
    pub sweep_time_s: f64,
    pub detections: f64,
    pub detection_interval_s: f64,
}

/// Steane-code syndrome sweep over all physical qubits with one QALU:
/// 24/7 entangling gates and 6/7 detections per qubit. Counts stay
/// fractional, matching the published arithmetic; `ceil_mode` rounds
/// them up per 7-qubit block instead.
pub fn syndrome_sweep(n_physical_qubits: u64, t_2q_s: f64, ceil_mode: bool) -> SyndromeSweep {
    let n = n_physical_qubits as f64;
    let (gates, detections) = if ceil_mode {
        let blocks = (n / 7.0).ceil();
        (blocks * 24.0, blocks * 6.0)
    } else {
        (n * 24.0 / 7.0, n * 6.0 / 7.0)
    };
    let sweep = gates * t_2q_s;
    SyndromeSweep {
        total_2q_gates: gates,
        sweep_time_s: sweep,
        detections,
        detection_interval_s: sweep / detections,
    }
}

/// Fractional frequency stability needed from the local oscillator to hold
/// phase over the coherence target: 1 / (transition frequency * time).
pub fn lo_stability_required(transition_hz: f64, coherence_target_s: f64) -> f64 {
    1.0 / (transition_hz * coherence_target_s)
}

/// RAM bytes to store DAC waveforms: one sample per period over the ramp,
/// for each stored waveform.
pub fn dac_ram_requirement(
    ramp_duration_s: f64,
    sample_period_s: f64,
    bits_per_sample: u32,
    n_waveforms: u32,
) -> u64 {
    let ratio = ramp_duration_s / sample_period_s;
    // Tolerate float rounding when the ramp is an exact multiple of the period.
    let samples = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
        ratio.round() as u64
    } else {
        ratio.ceil() as u64
    };
    samples * u64::from(bits_per_sample) / 8 * u64::from(n_waveforms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rent_identity_and_growth() {
        let p = RentParams { k: 3.0, r: 0.5, b: 1.0 };
        assert_relative_eq!(rent_pins(&p), 3.0);
        // SRAM exponent: x1024 elements grows pins by 1024^0.12.
        let base = RentParams { k: 1.0, r: 0.12, b: 1.0 };
        let grown = RentParams { k: 1.0, r: 0.12, b: 1024.0 };
        let factor = rent_pins(&grown) / rent_pins(&base);
        assert_relative_eq!(factor, 1024f64.powf(0.12), epsilon = 1e-12);
        assert!((factor - 2.30).abs() < 0.01);
        assert_relative_eq!(
            rent_pins(&RentParams { k: 2.0, r: 0.5, b: 100.0 }),
            20.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn kappa_ranges() {
        // Superconducting: 100 us coherence, cycle of 10 x 100 ns.
        let sc = |frac| {
            kappa(&KappaInputs {
                coherence_time_s: 100e-6,
                qec_fraction: frac,
                qec_cycle_per_qubit_s: 10.0 * 100e-9,
            })
            .kappa
        };
        assert_relative_eq!(sc(0.01), 1.0, epsilon = 1e-12);
        assert_relative_eq!(sc(0.1), 10.0, epsilon = 1e-12);
        // Trapped ion: 100 s coherence, cycle of 10 x 100 us.
        let ti = |frac| {
            kappa(&KappaInputs {
                coherence_time_s: 100.0,
                qec_fraction: frac,
                qec_cycle_per_qubit_s: 10.0 * 100e-6,
            })
            .kappa
        };
        assert_relative_eq!(ti(0.01), 1000.0, epsilon = 1e-9);
        assert_relative_eq!(ti(0.1), 10000.0, epsilon = 1e-9);
        // Boundary: fraction 1, coherence equal to cycle.
        let b = kappa(&KappaInputs {
            coherence_time_s: 1.0,
            qec_fraction: 1.0,
            qec_cycle_per_qubit_s: 1.0,
        });
        assert_relative_eq!(b.kappa, 1.0);
        assert!(!b.fault_tolerant);
    }

    #[test]
    fn steane_cycle_values() {
        assert_relative_eq!(steane_cycle(20e-6, 10e-6), 70e-6, epsilon = 1e-12);
        assert_relative_eq!(steane_cycle(20e-6, 0.0), 24.0 / 7.0 * 20e-6, epsilon = 1e-15);
        assert_relative_eq!(steane_cycle(100e-6, 0.0), 342.857e-6, epsilon = 1e-9);
    }

    #[test]
    fn shor_examples() {
        let bcdp = ShorModel { kind: ShorArch::Bcdp, logical_clock_hz: 1e6 };
        assert_relative_eq!(shor_time(&bcdp, 10), 0.054, epsilon = 1e-12);
        assert_eq!(shor_qubits(ShorArch::Bcdp, 1), 8);
        assert_eq!(shor_qubits(ShorArch::Ntc, 50), 5000);
        assert_eq!(shor_qubits(ShorArch::Ac, 50), 5000);
    }

    #[test]
    fn shor_crossover_ac_beats_ntc() {
        // Independent root-finding oracle: bisect
        // f(n) = 20 n^2 log2(n) * 1e-6 - 9 n log2(n)^2 * 1e-3 for the
        // crossover where AC at 1 kHz beats NTC at 1 MHz.
        let f = |n: f64| 20.0 * n * n * n.log2() * 1e-6 - 9.0 * n * n.log2().powi(2) * 1e-3;
        let (mut lo, mut hi) = (100.0f64, 1e6f64);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!((root - 5.5e3).abs() < 0.5e3, "crossover at {root}");
        // The analytic crossover condition matches: 20 n * 1e-6 = 9 log2(n) * 1e-3.
        assert_relative_eq!(20.0 * root * 1e-6, 9.0 * root.log2() * 1e-3, epsilon = 1e-6);
    }

    #[test]
    fn shor_ordering_small_and_large_n() {
        let clocks = [
            ShorModel { kind: ShorArch::Bcdp, logical_clock_hz: 1e6 },
            ShorModel { kind: ShorArch::Ntc, logical_clock_hz: 1e6 },
            ShorModel { kind: ShorArch::Ac, logical_clock_hz: 1e3 },
        ];
        let t = |i: usize, n| shor_time(&clocks[i], n);
        // n = 50: NTC < BCDP < AC.
        assert!(t(1, 50) < t(0, 50) && t(0, 50) < t(2, 50));
        // n = 10^4: AC < NTC < BCDP.
        assert!(t(2, 10_000) < t(1, 10_000) && t(1, 10_000) < t(0, 10_000));
    }

    #[test]
    fn throughput_defaults() {
        let t = machine_throughput(10e-6, 20e-6, 8);
        assert_relative_eq!(t.oneq_per_s, 800_000.0);
        assert_relative_eq!(t.twoq_per_s, 50_000.0);
        assert_relative_eq!(machine_throughput(10e-6, 20e-6, 1).oneq_per_s, 100_000.0);
        assert_relative_eq!(machine_throughput(10e-6, 100e-6, 8).twoq_per_s, 10_000.0);
    }

    #[test]
    fn syndrome_sweep_values() {
        let s = syndrome_sweep(16384, 20e-6, false);
        assert_relative_eq!(s.sweep_time_s, 16384.0 * 24.0 / 7.0 * 20e-6, epsilon = 1e-12);
        assert!((s.sweep_time_s - 1.1235).abs() < 0.001);
        assert!((s.detections - 14043.0).abs() < 1.0);
        assert_relative_eq!(s.detection_interval_s, 80e-6, epsilon = 1e-12);
        // Exactness: detections x interval = sweep time.
        assert_relative_eq!(
            s.detections * s.detection_interval_s,
            s.sweep_time_s,
            max_relative = 1e-12
        );

        let s7 = syndrome_sweep(7, 20e-6, false);
        assert_relative_eq!(s7.total_2q_gates, 24.0);
        assert_relative_eq!(s7.detections, 6.0);

        let s14 = syndrome_sweep(14, 20e-6, false);
        assert_relative_eq!(s14.total_2q_gates, 48.0);
        assert_relative_eq!(s14.sweep_time_s, 0.96e-3, epsilon = 1e-12);
    }

    #[test]
    fn lo_stability_values() {
        let day = lo_stability_required(10e9, 86400.0);
        assert!((day - 1.16e-15).abs() < 0.01e-15);
        assert_relative_eq!(lo_stability_required(1.0, 1.0), 1.0);
        let sr = lo_stability_required(5.00e9, 86400.0);
        assert!((sr - 2.3e-15).abs() < 0.05e-15);
    }

    #[test]
    fn dac_ram_values() {
        assert_eq!(dac_ram_requirement(1e-3, 1e-6, 16, 1), 2000);
        assert_eq!(dac_ram_requirement(0.0, 1e-6, 16, 1), 0);
        assert_eq!(dac_ram_requirement(1e-3, 100e-9, 16, 8), 160_000);
    }
}
