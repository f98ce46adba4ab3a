//! QALU pipeline and detection/initialization pipeline models: cycle time,
//! latency, GHZ detection budgets and the required number of detection zones.

use serde::{Deserialize, Serialize};

use crate::error::{QvnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Combine,
    DopplerCool,
    EitCool,
    Decode,
    MapToProcessing,
    Qip,
    MapBack,
    Encode,
    Split,
}

/// Pipeline shape: whether strings are combined before cooling or cooled
/// separately and combined just before QIP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineVariant {
    CombinedString,
    SeparateCooling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub kind: StageKind,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub variant: PipelineVariant,
    pub stages: Vec<Stage>,
}

/// Stage order for each variant; Doppler cooling may repeat.
fn stage_template(variant: PipelineVariant) -> &'static [StageKind] {
    use StageKind::*;
    match variant {
        PipelineVariant::CombinedString => &[
            Combine, DopplerCool, EitCool, Decode, MapToProcessing, Qip, MapBack, Encode, Split,
        ],
        PipelineVariant::SeparateCooling => &[
            DopplerCool, EitCool, Decode, Combine, MapToProcessing, Qip, MapBack, Encode, Split,
        ],
    }
}

impl PipelineConfig {
    /// Build the standard stage list, splitting Doppler cooling into enough
    /// sub-stages that no stage exceeds the beat of the remaining stages.
    pub fn standard(
        variant: PipelineVariant,
        t_doppler_s: f64,
        t_eit_s: f64,
        t_combine_s: f64,
        t_codec_s: f64,
        t_map_s: f64,
        t_qip_s: f64,
        t_split_s: f64,
    ) -> Self {
        let beat = t_eit_s
            .max(t_combine_s)
            .max(t_codec_s)
            .max(t_map_s)
            .max(t_qip_s)
            .max(t_split_s);
        let n_doppler = doppler_stage_count(t_doppler_s, beat);
        let doppler_each = t_doppler_s / n_doppler as f64;
        let mut stages = Vec::new();
        for kind in stage_template(variant) {
            match kind {
                StageKind::DopplerCool => {
                    for _ in 0..n_doppler {
                        stages.push(Stage { kind: StageKind::DopplerCool, duration_s: doppler_each });
                    }
                }
                StageKind::Combine => stages.push(Stage { kind: *kind, duration_s: t_combine_s }),
                StageKind::EitCool => stages.push(Stage { kind: *kind, duration_s: t_eit_s }),
                StageKind::Decode | StageKind::Encode => {
                    stages.push(Stage { kind: *kind, duration_s: t_codec_s })
                }
                StageKind::MapToProcessing | StageKind::MapBack => {
                    stages.push(Stage { kind: *kind, duration_s: t_map_s })
                }
                StageKind::Qip => stages.push(Stage { kind: *kind, duration_s: t_qip_s }),
                StageKind::Split => stages.push(Stage { kind: *kind, duration_s: t_split_s }),
            }
        }
        PipelineConfig { variant, stages }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(QvnError::Validation("pipeline has no stages".into()));
        }
        for s in &self.stages {
            if !(s.duration_s > 0.0) {
                return Err(QvnError::Validation(format!(
                    "stage {:?} has non-positive duration",
                    s.kind
                )));
            }
        }
        // Collapse repeated Doppler sub-stages and compare with the template.
        let mut collapsed = Vec::new();
        for s in &self.stages {
            if collapsed.last() == Some(&s.kind) && s.kind == StageKind::DopplerCool {
                continue;
            }
            collapsed.push(s.kind);
        }
        if collapsed != stage_template(self.variant) {
            return Err(QvnError::Validation(format!(
                "stage order {:?} does not match the {:?} variant",
                collapsed, self.variant
            )));
        }
        Ok(())
    }

    pub fn qip_index(&self) -> Option<usize> {
        self.stages.iter().position(|s| s.kind == StageKind::Qip)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PipelineMetrics {
    /// The pipeline beat: the longest stage duration.
    pub cycle_time_s: f64,
    /// Time one string spends in the pipeline: the sum of stage durations.
    pub latency_s: f64,
    pub depth: usize,
    /// Strings per second once the pipeline is filled.
    pub throughput_per_s: f64,
}

pub fn pipeline_metrics(config: &PipelineConfig) -> PipelineMetrics {
    let cycle = config.stages.iter().map(|s| s.duration_s).fold(0.0, f64::max);
    let latency = config.stages.iter().map(|s| s.duration_s).sum();
    PipelineMetrics {
        cycle_time_s: cycle,
        latency_s: latency,
        depth: config.stages.len(),
        throughput_per_s: 1.0 / cycle,
    }
}

/// Number of Doppler sub-stages so that none exceeds the pipeline beat.
pub fn doppler_stage_count(t_doppler_s: f64, beat_s: f64) -> u32 {
    let ratio = t_doppler_s / beat_s;
    let n = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
        ratio.round()
    } else {
        ratio.ceil()
    };
    (n as u32).max(1)
}

/// Time to map one qubit onto an N-ancilla GHZ state of the detection
/// species: an inter-species swap of 3 entangling gates plus N-1 fan-out
/// CNOT gates.
pub fn ghz_generation_time(n_ancillas: u32, t_2q_s: f64) -> f64 {
    f64::from(3 + (n_ancillas - 1)) * t_2q_s
}

/// Detection zones needed so that pipelined detection keeps up with the
/// required detection interval while GHZ generation dominates.
pub fn required_detection_zones(ghz_time_s: f64, required_interval_s: f64) -> u32 {
    let ratio = ghz_time_s / required_interval_s;
    let n = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
        ratio.round()
    } else {
        ratio.ceil()
    };
    (n as u32).max(1)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectionBudget {
    pub scatter_rate_hz: f64,
    pub detection_time_s: f64,
    pub collection_efficiency: f64,
    pub detector_efficiency: f64,
    pub clicks_required: f64,
    pub d_state_lifetime_s: f64,
    pub n_ghz_ancillas: u32,
}

impl DetectionBudget {
    /// Single Ca+ ion at the published working point: 10 MHz scatter rate,
    /// 10 us detection, 1 s D-state lifetime, 50 % detector efficiency,
    /// 5 clicks required.
    pub fn calcium_defaults() -> Self {
        DetectionBudget {
            scatter_rate_hz: 10e6,
            detection_time_s: 10e-6,
            collection_efficiency: 0.10,
            detector_efficiency: 0.5,
            clicks_required: 5.0,
            d_state_lifetime_s: 1.0,
            n_ghz_ancillas: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DetectionReport {
    pub photons_emitted: f64,
    pub expected_clicks: f64,
    /// Per-ancilla spontaneous-decay infidelity 1 - exp(-t/tau).
    pub shelving_infidelity: f64,
    pub min_collection_for_clicks: f64,
    pub min_na: f64,
    /// Decays needed to flip an N-ancilla majority vote.
    pub decays_to_flip: u32,
    /// p^m, the simple power-law estimate of the vote error.
    pub majority_vote_error_approx: f64,
    /// Exact binomial tail P(#decays >= m).
    pub majority_vote_error_exact: f64,
}

/// Binomial tail P(X >= m) for X ~ Bin(n, p).
fn binomial_tail(n: u32, m: u32, p: f64) -> f64 {
    let mut total = 0.0;
    for k in m..=n {
        let mut c = 1.0;
        for i in 0..k {
            c *= f64::from(n - i) / f64::from(i + 1);
        }
        total += c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
    }
    total
}

pub fn detection_budget(b: &DetectionBudget) -> Result<DetectionReport> {
    let n = f64::from(b.n_ghz_ancillas);
    let photons = b.scatter_rate_hz * b.detection_time_s * n;
    let clicks = photons * b.collection_efficiency * b.detector_efficiency;
    let shelving = 1.0 - (-b.detection_time_s / b.d_state_lifetime_s).exp();
    let min_collection =
        b.clicks_required / (b.scatter_rate_hz * b.detection_time_s * b.detector_efficiency * n);
    if min_collection > 1.0 {
        return Err(QvnError::InfeasibleCollection(min_collection));
    }
    // Collection over a cone: eta = (1 - cos(theta)) / 2, NA = sin(theta).
    let cos_theta = 1.0 - 2.0 * min_collection;
    let min_na = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let m = b.n_ghz_ancillas / 2 + 1;
    Ok(DetectionReport {
        photons_emitted: photons,
        expected_clicks: clicks,
        shelving_infidelity: shelving,
        min_collection_for_clicks: min_collection,
        min_na,
        decays_to_flip: m,
        majority_vote_error_approx: shelving.powi(m as i32),
        majority_vote_error_exact: binomial_tail(b.n_ghz_ancillas, m, shelving),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn equal_stage_config(n: usize, t: f64) -> PipelineConfig {
        PipelineConfig {
            variant: PipelineVariant::CombinedString,
            stages: (0..n).map(|_| Stage { kind: StageKind::Qip, duration_s: t }).collect(),
        }
    }

    #[test]
    fn metrics_equal_stages() {
        let m = pipeline_metrics(&equal_stage_config(4, 1e-4));
        assert_relative_eq!(m.latency_s, 4e-4, epsilon = 1e-15);
        assert_relative_eq!(m.cycle_time_s, 1e-4, epsilon = 1e-15);
        // Speed-up equals the number of stages.
        assert_relative_eq!(m.latency_s / m.cycle_time_s, 4.0, epsilon = 1e-12);
        let single = pipeline_metrics(&equal_stage_config(1, 1e-4));
        assert_relative_eq!(single.latency_s, single.cycle_time_s);
    }

    #[test]
    fn metrics_unequal_stages() {
        let config = PipelineConfig {
            variant: PipelineVariant::CombinedString,
            stages: [100e-6, 1000e-6, 50e-6]
                .iter()
                .map(|&t| Stage { kind: StageKind::Qip, duration_s: t })
                .collect(),
        };
        let m = pipeline_metrics(&config);
        assert_relative_eq!(m.cycle_time_s, 1000e-6, epsilon = 1e-15);
        assert_relative_eq!(m.latency_s, 1150e-6, epsilon = 1e-15);
    }

    #[test]
    fn doppler_counts() {
        assert_eq!(doppler_stage_count(1e-3, 100e-6), 10);
        assert_eq!(doppler_stage_count(50e-6, 100e-6), 1);
        assert_eq!(doppler_stage_count(250e-6, 100e-6), 3);
    }

    #[test]
    fn ghz_times() {
        assert_relative_eq!(ghz_generation_time(7, 20e-6), 180e-6, epsilon = 1e-15);
        assert_relative_eq!(ghz_generation_time(1, 20e-6), 60e-6, epsilon = 1e-15);
        assert_relative_eq!(ghz_generation_time(5, 20e-6), 140e-6, epsilon = 1e-15);
    }

    #[test]
    fn ghz_is_affine_in_n() {
        let t2q = 20e-6;
        for n in 1..20u32 {
            let d = ghz_generation_time(n + 1, t2q) - ghz_generation_time(n, t2q);
            assert_relative_eq!(d, t2q, epsilon = 1e-15);
        }
    }

    #[test]
    fn detection_zone_counts() {
        assert_eq!(required_detection_zones(180e-6, 80e-6), 3);
        assert_eq!(required_detection_zones(50e-6, 80e-6), 1);
        assert_eq!(required_detection_zones(180e-6, 90e-6), 2);
        // zones x interval always covers the GHZ time.
        for (g, i) in [(180e-6, 80e-6), (180e-6, 90e-6), (1e-3, 80e-6)] {
            let z = required_detection_zones(g, i);
            assert!(f64::from(z) * i >= g - 1e-12);
        }
    }

    #[test]
    fn calcium_detection_budget() {
        let r = detection_budget(&DetectionBudget::calcium_defaults()).unwrap();
        assert_relative_eq!(r.photons_emitted, 100.0, epsilon = 1e-9);
        assert_relative_eq!(r.min_collection_for_clicks, 0.10, epsilon = 1e-12);
        assert!((r.min_na - 0.6).abs() < 1e-12);
        assert!((r.shelving_infidelity - 1e-5).abs() < 1e-7);
    }

    #[test]
    fn majority_vote_error_modes() {
        // 100 us detection on a 1 s lifetime: p about 1e-4; with 5 ancillas
        // 3 decays flip the vote.
        let b = DetectionBudget {
            detection_time_s: 100e-6,
            n_ghz_ancillas: 5,
            ..DetectionBudget::calcium_defaults()
        };
        let r = detection_budget(&b).unwrap();
        assert!((r.shelving_infidelity - 1e-4).abs() < 1e-6);
        assert_eq!(r.decays_to_flip, 3);
        assert!((r.majority_vote_error_approx - 1e-12).abs() < 5e-14);
        // Exact binomial tail carries the C(5,3) = 10 factor.
        assert!((r.majority_vote_error_exact - 1.0e-11).abs() < 5e-13);
    }

    #[test]
    fn infeasible_collection_is_reported() {
        let b = DetectionBudget {
            clicks_required: 1e6,
            ..DetectionBudget::calcium_defaults()
        };
        assert!(matches!(
            detection_budget(&b),
            Err(QvnError::InfeasibleCollection(_))
        ));
    }

    #[test]
    fn budget_monotonicity() {
        let base = DetectionBudget::calcium_defaults();
        let clicks = |b: &DetectionBudget| detection_budget(b).unwrap().expected_clicks;
        let more_n = DetectionBudget { n_ghz_ancillas: 3, ..base };
        let more_t = DetectionBudget { detection_time_s: 20e-6, ..base };
        let more_c = DetectionBudget { collection_efficiency: 0.2, ..base };
        assert!(clicks(&more_n) > clicks(&base));
        assert!(clicks(&more_t) > clicks(&base));
        assert!(clicks(&more_c) > clicks(&base));
        let na = |b: &DetectionBudget| detection_budget(b).unwrap().min_na;
        assert!(na(&more_n) < na(&base));
    }

    #[test]
    fn standard_config_validates() {
        for variant in [PipelineVariant::CombinedString, PipelineVariant::SeparateCooling] {
            let c = PipelineConfig::standard(
                variant, 1e-3, 200e-6, 50e-6, 80e-6, 10e-6, 20e-6, 50e-6,
            );
            c.validate().unwrap();
            let m = pipeline_metrics(&c);
            assert_relative_eq!(m.cycle_time_s, 200e-6, epsilon = 1e-15);
            assert!(c.qip_index().is_some());
        }
    }

    #[test]
    fn out_of_order_stages_rejected() {
        let c = PipelineConfig {
            variant: PipelineVariant::CombinedString,
            stages: vec![
                Stage { kind: StageKind::Split, duration_s: 1e-5 },
                Stage { kind: StageKind::Combine, duration_s: 1e-5 },
            ],
        };
        assert!(c.validate().is_err());
    }
}
