//! Ion-species database and selection of (qubit, detection, cooling) triples
//! under surface-material wavelength limits and sympathetic-cooling mass-ratio
//! constraints.
//!
//! Roles are assigned per element: the isotope with non-zero nuclear spin
//! carries the hyperfine qubit, while the spin-zero isotope of an element is
//! used for cooling and detection (its level structure is simpler). Beryllium
//! has no stable spin-zero isotope, so 9Be+ doubles as a cooling ion.
//!
//! The element with the longest D5/2 lifetime among the usable detection
//! candidates (barium, on both gold and aluminum) is set aside for detection
//! only, and each qubit species is paired with the longest-lived detection
//! ion it can be co-trapped with.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{QvnError, Result};

/// Atomic constants of one ion species. Zeros mark absent entries
/// (no hyperfine splitting, no D5/2 data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesRecord {
    pub name: String,
    pub mass_amu: f64,
    #[serde(rename = "nuclear_spin_I")]
    pub nuclear_spin_i: f64,
    #[serde(rename = "omega0_GHz")]
    pub omega0_ghz: f64,
    pub lambda_half_nm: f64,
    #[serde(rename = "gamma_half_MHz")]
    pub gamma_half_mhz: f64,
    pub lambda_threehalf_nm: f64,
    pub lambda_fivehalf_nm: f64,
    pub tau_fivehalf_s: f64,
}

impl SpeciesRecord {
    /// Element symbol: the alphabetic part of the name ("87Sr+" -> "Sr").
    pub fn element(&self) -> &str {
        let start = self.name.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(0);
        let rest = &self.name[start..];
        let end = rest.find('+').unwrap_or(rest.len());
        &rest[..end]
    }

    pub fn has_d_state(&self) -> bool {
        self.tau_fivehalf_s > 0.0
    }

    /// All listed driving wavelengths clear the material's photoelectric
    /// cutoff.
    pub fn usable_on(&self, material: SurfaceMaterial) -> bool {
        let cutoff = material.cutoff_wavelength_nm();
        self.lambda_half_nm >= cutoff && self.lambda_threehalf_nm >= cutoff
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceMaterial {
    Gold,
    Aluminum,
}

impl SurfaceMaterial {
    pub fn work_function_ev(self) -> f64 {
        match self {
            SurfaceMaterial::Gold => 5.3,
            SurfaceMaterial::Aluminum => 4.08,
        }
    }

    /// Photoelectric cutoff: photons shorter than this eject electrons from
    /// the trap surface.
    pub fn cutoff_wavelength_nm(self) -> f64 {
        match self {
            SurfaceMaterial::Gold => 234.0,
            SurfaceMaterial::Aluminum => 304.0,
        }
    }
}

impl std::str::FromStr for SurfaceMaterial {
    type Err = QvnError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gold" | "au" => Ok(SurfaceMaterial::Gold),
            "aluminum" | "aluminium" | "al" => Ok(SurfaceMaterial::Aluminum),
            other => Err(QvnError::Parse(format!("unknown surface material: {other}"))),
        }
    }
}

pub const BUNDLED_SPECIES_JSON: &str = include_str!("../data/species.json");

#[derive(Debug, Clone)]
pub struct SpeciesDb {
    pub records: Vec<SpeciesRecord>,
}

impl SpeciesDb {
    pub fn bundled() -> Self {
        serde_json::from_str::<Vec<SpeciesRecord>>(BUNDLED_SPECIES_JSON)
            .map(|records| SpeciesDb { records })
            .expect("bundled species database is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let records: Vec<SpeciesRecord> = serde_json::from_str(&text)?;
        let db = SpeciesDb { records };
        db.validate()?;
        Ok(db)
    }

    pub fn validate(&self) -> Result<()> {
        for r in &self.records {
            if r.lambda_half_nm <= 0.0 || r.lambda_threehalf_nm <= 0.0 {
                return Err(QvnError::Validation(format!(
                    "{}: driving wavelengths must be positive",
                    r.name
                )));
            }
            if r.mass_amu <= 0.0 {
                return Err(QvnError::Validation(format!("{}: non-positive mass", r.name)));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&SpeciesRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    /// Species whose every driving wavelength is at or above the material's
    /// photoelectric cutoff.
    pub fn allowed_species(&self, material: SurfaceMaterial) -> Vec<&SpeciesRecord> {
        self.records.iter().filter(|r| r.usable_on(material)).collect()
    }
}

/// How a qubit species is matched with detection candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetectionPolicy {
    /// Pair each qubit with the longest-lived detection ion it can be
    /// co-trapped with (the published working points).
    #[default]
    BestTau,
    /// Pair each qubit with every co-trappable detection ion. The result set
    /// grows monotonically with the mass-ratio bound.
    AllEligible,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TripleOptions {
    pub policy: DetectionPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesTriple {
    pub qubit: String,
    pub detection: String,
    pub cooling: String,
    pub detection_tau_s: f64,
    pub qubit_detection_ratio: f64,
    pub qubit_cooling_ratio: f64,
}

fn ratio_ok(a: f64, b: f64, max_ratio: f64) -> bool {
    let r = a / b;
    r <= max_ratio + 1e-12 && r >= 1.0 / max_ratio - 1e-12
}

/// Enumerate valid (qubit, detection, cooling) triples for a surface material
/// and a sympathetic-cooling mass-ratio bound, ranked by detection D5/2
/// lifetime descending.
pub fn enumerate_triples(
    db: &SpeciesDb,
    material: SurfaceMaterial,
    max_mass_ratio: f64,
    options: TripleOptions,
) -> Result<Vec<SpeciesTriple>> {
    if max_mass_ratio < 1.0 {
        return Err(QvnError::Validation(format!(
            "max mass ratio must be >= 1, got {max_mass_ratio}"
        )));
    }
    let allowed = db.allowed_species(material);

    let qubit_pool: Vec<&SpeciesRecord> =
        allowed.iter().copied().filter(|r| r.nuclear_spin_i != 0.0).collect();
    let spin_zero: Vec<&SpeciesRecord> =
        allowed.iter().copied().filter(|r| r.nuclear_spin_i == 0.0).collect();

    let detection_pool: Vec<&SpeciesRecord> =
        spin_zero.iter().copied().filter(|r| r.has_d_state()).collect();
    // The longest-lived detection element is reserved for detection duty.
    let reserved_element = detection_pool
        .iter()
        .max_by(|a, b| a.tau_fivehalf_s.total_cmp(&b.tau_fivehalf_s))
        .map(|r| r.element().to_string());
    let reserved = |r: &SpeciesRecord| Some(r.element()) == reserved_element.as_deref();

    // Cooling ions: spin-zero isotopes, plus 9Be+ standing in for elements
    // with no stable spin-zero isotope.
    let mut cooling_pool: Vec<&SpeciesRecord> =
        spin_zero.iter().copied().filter(|r| !reserved(r)).collect();
    for r in &allowed {
        if r.nuclear_spin_i != 0.0
            && !reserved(r)
            && !spin_zero.iter().any(|s| s.element() == r.element())
        {
            cooling_pool.push(r);
        }
    }

    let mut triples = Vec::new();
    for qubit in qubit_pool.iter().filter(|r| !reserved(r)) {
        let mut detections: Vec<&SpeciesRecord> = detection_pool
            .iter()
            .copied()
            .filter(|d| {
                d.element() != qubit.element() && ratio_ok(qubit.mass_amu, d.mass_amu, max_mass_ratio)
            })
            .collect();
        detections.sort_by(|a, b| b.tau_fivehalf_s.total_cmp(&a.tau_fivehalf_s));
        if options.policy == DetectionPolicy::BestTau {
            detections.truncate(1);
        }
        for detection in detections {
            for cooling in &cooling_pool {
                if cooling.element() == qubit.element()
                    || cooling.element() == detection.element()
                    || !ratio_ok(qubit.mass_amu, cooling.mass_amu, max_mass_ratio)
                {
                    continue;
                }
                triples.push(SpeciesTriple {
                    qubit: qubit.name.clone(),
                    detection: detection.name.clone(),
                    cooling: cooling.name.clone(),
                    detection_tau_s: detection.tau_fivehalf_s,
                    qubit_detection_ratio: qubit.mass_amu / detection.mass_amu,
                    qubit_cooling_ratio: qubit.mass_amu / cooling.mass_amu,
                });
            }
        }
    }
    // Rank by lifetime, then lighter qubit and lighter cooling ion first.
    let mass = |name: &str| db.get(name).map(|r| r.mass_amu).unwrap_or(f64::MAX);
    triples.sort_by(|a, b| {
        b.detection_tau_s
            .total_cmp(&a.detection_tau_s)
            .then_with(|| mass(&a.qubit).total_cmp(&mass(&b.qubit)))
            .then_with(|| mass(&a.cooling).total_cmp(&mass(&b.cooling)))
    });
    if triples.is_empty() {
        return Err(QvnError::EmptyResult);
    }
    Ok(triples)
}

/// True iff Be+ appears in no role of any triple under the constraints.
pub fn be_exclusion_check(db: &SpeciesDb, material: SurfaceMaterial, max_mass_ratio: f64) -> bool {
    match enumerate_triples(db, material, max_mass_ratio, TripleOptions::default()) {
        Ok(triples) => !triples.iter().any(|t| {
            t.qubit.contains("Be") || t.detection.contains("Be") || t.cooling.contains("Be")
        }),
        Err(_) => true,
    }
}
