//! Trap-layout graph model: zones, tracks, junctions and segment pairs,
//! layout validation, and the Quantum 4004 preset with its resource table.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{QvnError, Result};

pub type ZoneId = u32;
pub type TrackId = u32;
pub type JunctionId = u32;
pub type SegmentPairId = u64;
pub type DacPairId = u32;
pub type BankId = u32;
pub type StringId = u64;

/// Control source of one segment pair at a given instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairControl {
    /// Shared multiplexed static voltage set confining stored strings.
    StaticSet(u32),
    /// Routed to a demultiplexed DAC bank.
    MuxBank(BankId),
    /// Hard-wired to a single DAC pair.
    Dedicated(DacPairId),
}

/// The two opposing DC electrodes at one axial position of a track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentPair {
    pub id: SegmentPairId,
    pub track_id: TrackId,
    pub index_on_track: u32,
    pub control: PairControl,
}

/// A linear RF rail along which ion strings can be moved.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Track {
    pub id: TrackId,
    pub zone_id: ZoneId,
    /// Number of segment pairs; at least 3 are needed to confine one well.
    pub segment_pairs: u32,
    pub storage_allowed: bool,
    pub cooling_beam_axis: bool,
    /// Grid column this storage track serves, for memory-zone tracks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_column: Option<u32>,
    /// First global segment-pair id on this track (assigned at build time).
    #[serde(skip)]
    pub pair_base: SegmentPairId,
}

impl Track {
    pub fn pair_id(&self, index: u32) -> SegmentPairId {
        self.pair_base + u64::from(index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JunctionKind {
    X,
    Y,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Junction {
    pub id: JunctionId,
    pub kind: JunctionKind,
    pub arm_track_ids: Vec<TrackId>,
    /// Extra segment pairs beyond the linear budget of 4, used to block
    /// the non-exit arms during a traversal.
    #[serde(default = "default_extra_pair_budget")]
    pub extra_pair_budget: u32,
}

fn default_extra_pair_budget() -> u32 {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZoneKind {
    Memory,
    #[serde(rename = "QALU")]
    Qalu,
    Detection,
    #[serde(rename = "Storage/Loading")]
    StorageLoading,
    ConnectingTrack,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Zone {
    pub id: ZoneId,
    pub kind: ZoneKind,
    /// Region size in unit lengths; connecting tracks carry no footprint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_ul: Option<(u32, u32)>,
    pub segments: u64,
    pub dacs: u64,
    /// Memory zones only: rectangular cell grid (cols, rows).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<(u32, u32)>,
    /// Memory zones only: qubit ions one cell can hold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_capacity: Option<u32>,
}

impl Zone {
    pub fn cell_count(&self) -> u64 {
        self.grid
            .map(|(c, r)| u64::from(c) * u64::from(r))
            .unwrap_or(0)
    }

    pub fn qubit_ion_capacity(&self) -> u64 {
        self.cell_count() * u64::from(self.cell_capacity.unwrap_or(0))
    }
}

pub const DEFAULT_UNIT_LENGTH_M: f64 = 8.0e-5;

/// The whole trap: a connected graph of zones, tracks and junctions with
/// per-region DAC banks. Immutable after load; safe to share read-only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrapLayout {
    #[serde(default = "default_unit_length")]
    pub unit_length_m: f64,
    pub zones: Vec<Zone>,
    pub tracks: Vec<Track>,
    pub junctions: Vec<Junction>,
    /// (bank id, number of independently controlled DAC pairs).
    #[serde(default)]
    pub dac_banks: Vec<(BankId, u32)>,
    #[serde(default)]
    pub static_voltage_sets: Vec<u32>,
    /// Overall trap footprint in unit lengths. Not derivable from the zone
    /// records alone (zones carry no placement), so it is stored data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_ul: Option<(u32, u32)>,
}

fn default_unit_length() -> f64 {
    DEFAULT_UNIT_LENGTH_M
}

/// A memory-cell coordinate within a memory zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellRef {
    pub zone: ZoneId,
    pub col: u32,
    pub row: u32,
}

/// Segment pairs one cell occupies along its storage track: 3 confining
/// pairs plus one spacer pair between neighboring cells.
pub const PAIRS_PER_CELL: u32 = 4;

impl TrapLayout {
    pub fn zone(&self, id: ZoneId) -> Option<&Zone> {
        self.zones.iter().find(|z| z.id == id)
    }

    pub fn track(&self, id: TrackId) -> Option<&Track> {
        self.tracks.iter().find(|t| t.id == id)
    }

    pub fn junction(&self, id: JunctionId) -> Option<&Junction> {
        self.junctions.iter().find(|j| j.id == id)
    }

    pub fn total_segments(&self) -> u64 {
        self.zones.iter().map(|z| z.segments).sum()
    }

    pub fn total_dacs(&self) -> u64 {
        self.zones.iter().map(|z| z.dacs).sum()
    }

    /// Total qubit-ion capacity of all memory zones.
    pub fn qubit_ion_capacity(&self) -> u64 {
        self.zones.iter().map(|z| z.qubit_ion_capacity()).sum()
    }

    pub fn memory_zones(&self) -> impl Iterator<Item = &Zone> {
        self.zones.iter().filter(|z| z.kind == ZoneKind::Memory)
    }

    pub fn detection_zones(&self) -> impl Iterator<Item = &Zone> {
        self.zones.iter().filter(|z| z.kind == ZoneKind::Detection)
    }

    /// The storage track serving one memory-grid column.
    pub fn storage_track(&self, zone: ZoneId, col: u32) -> Option<&Track> {
        self.tracks
            .iter()
            .find(|t| t.zone_id == zone && t.grid_column == Some(col))
    }

    /// Track index of the first confining pair of a cell on its storage track.
    /// Index 0 is the junction end, so cell `row` starts at `row * 4 + 1`.
    pub fn cell_base_index(&self, cell: CellRef) -> Option<u32> {
        let zone = self.zone(cell.zone)?;
        let (cols, rows) = zone.grid?;
        if cell.col >= cols || cell.row >= rows {
            return None;
        }
        Some(cell.row * PAIRS_PER_CELL + 1)
    }

    /// DAC bank of a zone. By convention bank ids equal zone ids.
    pub fn bank_of_zone(&self, zone: ZoneId) -> BankId {
        zone
    }

    /// Per-step DAC-pair budget of a bank: the number of independent DAC
    /// pairs wired to it, capped at the 4-pair multiplexing scheme.
    pub fn bank_budget(&self, bank: BankId) -> u32 {
        self.dac_banks
            .iter()
            .find(|(id, _)| *id == bank)
            .map(|&(_, n)| n.min(4))
            .unwrap_or(4)
    }

    /// Segment pairs of a track as typed records. Storage tracks default to
    /// the first static voltage set, transport tracks to their zone's bank.
    pub fn segment_pairs(&self, track: &Track) -> Vec<SegmentPair> {
        let control = if track.storage_allowed {
            PairControl::StaticSet(*self.static_voltage_sets.first().unwrap_or(&0))
        } else {
            PairControl::MuxBank(self.bank_of_zone(track.zone_id))
        };
        (0..track.segment_pairs)
            .map(|i| SegmentPair {
                id: track.pair_id(i),
                track_id: track.id,
                index_on_track: i,
                control,
            })
            .collect()
    }

    /// The transport track of the QALU zone.
    pub fn qalu_track(&self) -> Option<&Track> {
        let qalu = self.zones.iter().find(|z| z.kind == ZoneKind::Qalu)?;
        self.tracks.iter().find(|t| t.zone_id == qalu.id)
    }

    fn assign_pair_bases(&mut self) {
        let mut base = 0u64;
        for t in &mut self.tracks {
            t.pair_base = base;
            base += u64::from(t.segment_pairs);
        }
    }

    /// Track adjacency induced by the junctions.
    pub fn adjacency(&self) -> BTreeMap<TrackId, Vec<TrackId>> {
        let mut adj: BTreeMap<TrackId, Vec<TrackId>> = BTreeMap::new();
        for t in &self.tracks {
            adj.entry(t.id).or_default();
        }
        for j in &self.junctions {
            for a in &j.arm_track_ids {
                for b in &j.arm_track_ids {
                    if a != b {
                        adj.entry(*a).or_default().push(*b);
                    }
                }
            }
        }
        adj
    }

    pub fn validate(&self) -> Result<()> {
        if self.unit_length_m <= 0.0 {
            return Err(QvnError::Validation("unit_length_m must be positive".into()));
        }
        let zone_ids: BTreeSet<_> = self.zones.iter().map(|z| z.id).collect();
        if zone_ids.len() != self.zones.len() {
            return Err(QvnError::Validation("duplicate zone id".into()));
        }
        for z in &self.zones {
            if z.kind == ZoneKind::Memory && z.grid.is_none() {
                return Err(QvnError::Validation(format!(
                    "memory zone {} has no cell grid",
                    z.id
                )));
            }
        }
        let track_ids: BTreeSet<_> = self.tracks.iter().map(|t| t.id).collect();
        if track_ids.len() != self.tracks.len() {
            return Err(QvnError::Validation("duplicate track id".into()));
        }
        for t in &self.tracks {
            if t.segment_pairs < 3 {
                return Err(QvnError::Validation(format!(
                    "track {} has fewer than 3 segment pairs",
                    t.id
                )));
            }
            if !zone_ids.contains(&t.zone_id) {
                return Err(QvnError::Validation(format!(
                    "track {} references unknown zone {}",
                    t.id, t.zone_id
                )));
            }
            // Storage tracks in memory grids run perpendicular to the
            // cooling-beam axis.
            if t.storage_allowed
                && t.cooling_beam_axis
                && self.zone(t.zone_id).map(|z| z.kind) == Some(ZoneKind::Memory)
            {
                return Err(QvnError::Validation(format!(
                    "storage track {} lies on the cooling-beam axis",
                    t.id
                )));
            }
        }
        for j in &self.junctions {
            let arms = match j.kind {
                JunctionKind::Y => 3,
                JunctionKind::X => 4,
            };
            if j.arm_track_ids.len() != arms {
                return Err(QvnError::Validation(format!(
                    "junction {} arm count {} does not match kind",
                    j.id,
                    j.arm_track_ids.len()
                )));
            }
            for a in &j.arm_track_ids {
                if !track_ids.contains(a) {
                    return Err(QvnError::Validation(format!(
                        "junction {} references unknown track {}",
                        j.id, a
                    )));
                }
            }
        }
        // Graph connectivity: every memory storage track (and hence every
        // cell) must be reachable from the QALU transport track.
        if let Some(qalu) = self.qalu_track() {
            let adj = self.adjacency();
            let mut seen = BTreeSet::new();
            let mut queue = VecDeque::from([qalu.id]);
            seen.insert(qalu.id);
            while let Some(t) = queue.pop_front() {
                for &n in adj.get(&t).into_iter().flatten() {
                    if seen.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
            for t in &self.tracks {
                let in_memory =
                    self.zone(t.zone_id).map(|z| z.kind) == Some(ZoneKind::Memory);
                if in_memory && t.storage_allowed && !seen.contains(&t.id) {
                    return Err(QvnError::Validation(format!(
                        "unreachable cell: storage track {} has no path to the QALU",
                        t.id
                    )));
                }
            }
            if seen.len() != self.tracks.len() {
                return Err(QvnError::Validation("layout graph is not connected".into()));
            }
        }
        Ok(())
    }
}

/// Load a layout from its JSON schema file and validate it.
pub fn load_layout<P: AsRef<Path>>(path: P) -> Result<TrapLayout> {
    let text = std::fs::read_to_string(path)?;
    load_layout_str(&text)
}

pub fn load_layout_str(text: &str) -> Result<TrapLayout> {
    let mut layout: TrapLayout =
        serde_json::from_str(text).map_err(|e| QvnError::Parse(e.to_string()))?;
    layout.assign_pair_bases();
    layout.validate()?;
    Ok(layout)
}

/// Role of one ion within a string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IonRole {
    Qubit,
    Cooling,
    Detection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ion {
    pub species_id: u32,
    pub role: IonRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Forward,
    Reversed,
}

impl Orientation {
    pub fn toggled(self) -> Self {
        match self {
            Orientation::Forward => Orientation::Reversed,
            Orientation::Reversed => Orientation::Forward,
        }
    }
}

/// Where a string currently sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StringLocation {
    OnTrack { track: TrackId, index: i64 },
    InZoneStage { zone: ZoneId, slot: u32 },
}

/// An ordered sequence of ions with a position and an orientation flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IonString {
    pub id: StringId,
    pub ions: Vec<Ion>,
    pub location: StringLocation,
    pub orientation: Orientation,
}

impl IonString {
    /// A DFS-encoded memory string: 8 qubit ions plus cooling ions.
    pub fn memory_string(id: StringId, location: StringLocation, cooling_ions: u32) -> Self {
        let mut ions = vec![Ion { species_id: 0, role: IonRole::Cooling }];
        ions.extend(
            std::iter::repeat(Ion { species_id: 1, role: IonRole::Qubit }).take(8),
        );
        ions.extend(
            std::iter::repeat(Ion { species_id: 0, role: IonRole::Cooling })
                .take(cooling_ions.saturating_sub(1) as usize),
        );
        IonString { id, ions, location, orientation: Orientation::Forward }
    }

    pub fn qubit_ion_count(&self) -> usize {
        self.ions.iter().filter(|i| i.role == IonRole::Qubit).count()
    }
}

/// Overall footprint of the Quantum 4004 in unit lengths.
pub const QUANTUM4004_SIZE_UL: (u32, u32) = (486, 534);

/// Build the Quantum 4004 layout: one storage/loading zone, one QALU,
/// three detection zones, two 16x24 and one 32x40 memory zone, and the
/// connecting tracks, with the published per-region segment and DAC counts.
pub fn quantum4004_preset() -> TrapLayout {
    let zones = vec![
        Zone {
            id: 0,
            kind: ZoneKind::StorageLoading,
            size_ul: Some((35, 168)),
            segments: 2734,
            dacs: 10,
            grid: None,
            cell_capacity: None,
        },
        Zone {
            id: 1,
            kind: ZoneKind::Qalu,
            size_ul: Some((47, 70)),
            segments: 298,
            dacs: 150,
            grid: None,
            cell_capacity: None,
        },
        Zone {
            id: 2,
            kind: ZoneKind::Detection,
            size_ul: Some((57, 41)),
            segments: 200,
            dacs: 12,
            grid: None,
            cell_capacity: None,
        },
        Zone {
            id: 3,
            kind: ZoneKind::Detection,
            size_ul: Some((57, 41)),
            segments: 200,
            dacs: 12,
            grid: None,
            cell_capacity: None,
        },
        Zone {
            id: 4,
            kind: ZoneKind::Detection,
            size_ul: Some((57, 41)),
            segments: 200,
            dacs: 12,
            grid: None,
            cell_capacity: None,
        },
        Zone {
            id: 5,
            kind: ZoneKind::Memory,
            size_ul: Some((238, 534)),
            segments: 9820,
            dacs: 10,
            grid: Some((16, 24)),
            cell_capacity: Some(16),
        },
        Zone {
            id: 6,
            kind: ZoneKind::Memory,
            size_ul: Some((238, 534)),
            segments: 9820,
            dacs: 10,
            grid: Some((16, 24)),
            cell_capacity: Some(16),
        },
        Zone {
            id: 7,
            kind: ZoneKind::Memory,
            size_ul: Some((222, 175)),
            segments: 31486,
            dacs: 30,
            grid: Some((32, 40)),
            cell_capacity: Some(16),
        },
        Zone {
            id: 8,
            kind: ZoneKind::ConnectingTrack,
            size_ul: None,
            segments: 1972,
            dacs: 30,
            grid: None,
            cell_capacity: None,
        },
    ];

    let mut tracks = Vec::new();
    let mut junctions = Vec::new();
    let mut next_track: TrackId = 0;
    let mut next_junction: JunctionId = 0;

    let mut push_track = |tracks: &mut Vec<Track>,
                          zone_id: ZoneId,
                          segment_pairs: u32,
                          storage_allowed: bool,
                          cooling_beam_axis: bool,
                          grid_column: Option<u32>|
     -> TrackId {
        let id = next_track;
        next_track += 1;
        tracks.push(Track {
            id,
            zone_id,
            segment_pairs,
            storage_allowed,
            cooling_beam_axis,
            grid_column,
            pair_base: 0,
        });
        id
    };

    // Zone entry tracks.
    let qalu = push_track(&mut tracks, 1, 32, false, false, None);
    let storage = push_track(&mut tracks, 0, 24, true, false, None);
    let det: Vec<TrackId> = (2..=4)
        .map(|z| push_track(&mut tracks, z, 12, false, false, None))
        .collect();

    // Memory grids: one spine segment between consecutive column junctions,
    // one storage track per grid column.
    let mut mem_entry = Vec::new();
    for zone in [5u32, 6, 7] {
        let (cols, rows) = match zone {
            7 => (32u32, 40u32),
            _ => (16, 24),
        };
        let spine: Vec<TrackId> = (0..=cols)
            .map(|_| push_track(&mut tracks, zone, 6, false, true, None))
            .collect();
        for c in 0..cols {
            let col_track = push_track(
                &mut tracks,
                zone,
                rows * PAIRS_PER_CELL + 2,
                true,
                false,
                Some(c),
            );
            junctions.push(Junction {
                id: next_junction,
                kind: JunctionKind::Y,
                arm_track_ids: vec![spine[c as usize], col_track, spine[c as usize + 1]],
                extra_pair_budget: 2,
            });
            next_junction += 1;
        }
        mem_entry.push(spine[0]);
    }

    // Connecting-track hub: a chain of short tracks, one Y junction per
    // attached zone entry, and one X junction at the QALU crossing.
    let attach: Vec<TrackId> =
        vec![storage, det[0], det[1], det[2], mem_entry[0], mem_entry[1], mem_entry[2]];
    let chain: Vec<TrackId> = (0..=attach.len())
        .map(|_| push_track(&mut tracks, 8, 8, false, false, None))
        .collect();
    junctions.push(Junction {
        id: next_junction,
        kind: JunctionKind::X,
        arm_track_ids: vec![chain[0], qalu, chain[1], storage],
        extra_pair_budget: 2,
    });
    next_junction += 1;
    for (i, &t) in attach.iter().enumerate() {
        if t == storage {
            continue; // already on the X junction
        }
        junctions.push(Junction {
            id: next_junction,
            kind: JunctionKind::Y,
            arm_track_ids: vec![chain[i], t, chain[i + 1]],
            extra_pair_budget: 2,
        });
        next_junction += 1;
    }

    let dac_banks = zones.iter().map(|z| (z.id, (z.dacs / 2).max(4) as u32)).collect();

    let mut layout = TrapLayout {
        unit_length_m: DEFAULT_UNIT_LENGTH_M,
        zones,
        tracks,
        junctions,
        dac_banks,
        static_voltage_sets: vec![0, 1, 2],
        size_ul: Some(QUANTUM4004_SIZE_UL),
    };
    layout.assign_pair_bases();
    debug_assert!(layout.validate().is_ok());
    layout
}

/// Per-zone and total hardware resources plus physical trap dimensions.
#[derive(Debug, Clone, Serialize)]
pub struct ResourceReport {
    pub per_zone: Vec<ZoneResources>,
    pub total_segments: u64,
    pub total_dacs: u64,
    pub size_ul: Option<(u32, u32)>,
    pub width_m: f64,
    pub height_m: f64,
    pub diagonal_m: f64,
    pub qubit_ion_capacity: u64,
    pub segments_per_qubit_ion: f64,
    pub qubit_ions_per_dac: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZoneResources {
    pub zone_id: ZoneId,
    pub kind: ZoneKind,
    pub segments: u64,
    pub dacs: u64,
    pub size_ul: Option<(u32, u32)>,
}

/// Summarize a layout's hardware demand. Physical dimensions are the UL
/// footprint scaled by the unit length, exactly.
pub fn resource_table(layout: &TrapLayout) -> ResourceReport {
    let per_zone = layout
        .zones
        .iter()
        .map(|z| ZoneResources {
            zone_id: z.id,
            kind: z.kind,
            segments: z.segments,
            dacs: z.dacs,
            size_ul: z.size_ul,
        })
        .collect();
    let total_segments = layout.total_segments();
    let total_dacs = layout.total_dacs();
    let capacity = layout.qubit_ion_capacity();
    let (width_m, height_m) = match layout.size_ul {
        Some((w, h)) => (
            f64::from(w) * layout.unit_length_m,
            f64::from(h) * layout.unit_length_m,
        ),
        None => (0.0, 0.0),
    };
    ResourceReport {
        per_zone,
        total_segments,
        total_dacs,
        size_ul: layout.size_ul,
        width_m,
        height_m,
        diagonal_m: width_m.hypot(height_m),
        qubit_ion_capacity: capacity,
        segments_per_qubit_ion: if capacity > 0 {
            total_segments as f64 / capacity as f64
        } else {
            f64::NAN
        },
        qubit_ions_per_dac: if total_dacs > 0 {
            capacity as f64 / total_dacs as f64
        } else {
            f64::NAN
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_matches_published_totals() {
        let layout = quantum4004_preset();
        assert_eq!(layout.total_segments(), 56730);
        assert_eq!(layout.total_dacs(), 276);
        assert_eq!(layout.qubit_ion_capacity(), 32768);
        assert_eq!(layout.zones.len(), 9);
        // 2048 cells of 16 qubit ions each.
        let cells: u64 = layout.memory_zones().map(|z| z.cell_count()).sum();
        assert_eq!(cells, 2048);
    }

    #[test]
    fn preset_per_zone_values() {
        let layout = quantum4004_preset();
        let seg: Vec<u64> = layout.zones.iter().map(|z| z.segments).collect();
        assert_eq!(seg, vec![2734, 298, 200, 200, 200, 9820, 9820, 31486, 1972]);
        let dacs: Vec<u64> = layout.zones.iter().map(|z| z.dacs).collect();
        assert_eq!(dacs, vec![10, 150, 12, 12, 12, 10, 10, 30, 30]);
    }

    #[test]
    fn preset_dimensions() {
        let report = resource_table(&quantum4004_preset());
        assert!((report.width_m - 38.9e-3).abs() < 0.1e-3);
        assert!((report.height_m - 42.7e-3).abs() < 0.1e-3);
        assert!((report.diagonal_m - 57.8e-3).abs() < 0.1e-3);
        assert!(report.segments_per_qubit_ion < 2.0);
        assert!((report.segments_per_qubit_ion - 56730.0 / 32768.0).abs() < 1e-12);
        assert!((report.qubit_ions_per_dac - 32768.0 / 276.0).abs() < 1e-12);
    }

    #[test]
    fn minimal_layout_is_valid() {
        let text = r#"{
            "unit_length_m": 8.0e-5,
            "zones": [{"id":0,"kind":"Memory","size_ul":[3,3],"segments":6,"dacs":4,
                       "grid":[1,1],"cell_capacity":16}],
            "tracks": [{"id":0,"zone_id":0,"segment_pairs":3,
                        "storage_allowed":true,"cooling_beam_axis":false,"grid_column":0}],
            "junctions": []
        }"#;
        let layout = load_layout_str(text).unwrap();
        assert_eq!(layout.tracks[0].segment_pairs, 3);
    }

    #[test]
    fn unreachable_cell_is_rejected() {
        // One QALU track and one disconnected memory storage track.
        let text = r#"{
            "zones": [
                {"id":0,"kind":"QALU","size_ul":[4,4],"segments":8,"dacs":8},
                {"id":1,"kind":"Memory","size_ul":[3,3],"segments":6,"dacs":4,
                 "grid":[1,1],"cell_capacity":16}
            ],
            "tracks": [
                {"id":0,"zone_id":0,"segment_pairs":4,"storage_allowed":false,"cooling_beam_axis":false},
                {"id":1,"zone_id":1,"segment_pairs":6,"storage_allowed":true,"cooling_beam_axis":false,"grid_column":0}
            ],
            "junctions": []
        }"#;
        let err = load_layout_str(text).unwrap_err();
        match err {
            QvnError::Validation(msg) => assert!(msg.contains("unreachable cell"), "{msg}"),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn preset_round_trips_through_json() {
        let layout = quantum4004_preset();
        let text = serde_json::to_string(&layout).unwrap();
        let reloaded = load_layout_str(&text).unwrap();
        assert_eq!(reloaded.total_segments(), layout.total_segments());
        assert_eq!(reloaded.tracks.len(), layout.tracks.len());
        assert_eq!(reloaded.size_ul, layout.size_ul);
    }

    #[test]
    fn orientation_toggle_is_involutive() {
        assert_eq!(Orientation::Forward.toggled().toggled(), Orientation::Forward);
    }
}
