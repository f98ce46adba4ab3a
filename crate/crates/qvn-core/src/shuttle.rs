//! Transport planning under the multiplexed-DAC control scheme: linear moves
//! with at most four active segment pairs per bank, lockstep multi-string
//! moves through a demultiplexer, memory-cell access switching, junction
//! traversal with arm blocking, and Y-junction string rotation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{QvnError, Result};
use crate::layout::{
    DacPairId, JunctionId, SegmentPairId, StringId, Track, TrackId, TrapLayout, ZoneId,
};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShuttleParams {
    /// Time to advance a well by one segment pair.
    pub shuttle_step_s: f64,
    /// Time to retarget analog multiplexers during a handoff.
    pub mux_switch_s: f64,
}

impl Default for ShuttleParams {
    fn default() -> Self {
        // One segment (80 um) in a few microseconds; mux settling ~1 us.
        ShuttleParams { shuttle_step_s: 5e-6, mux_switch_s: 1e-6 }
    }
}

/// Where a potential well currently sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WellPos {
    pub track: TrackId,
    pub index: i64,
}

/// Mutable transport state: well positions per string and which segment
/// pairs are currently held by a DAC instead of a static set.
#[derive(Debug, Clone, Default)]
pub struct Occupancy {
    pub strings: BTreeMap<StringId, WellPos>,
    pub control: BTreeMap<SegmentPairId, DacPairId>,
}

impl Occupancy {
    pub fn occupied_by_other(&self, exclude: &[StringId], pos: WellPos) -> Option<StringId> {
        self.strings
            .iter()
            .find(|(id, p)| !exclude.contains(id) && **p == pos)
            .map(|(id, _)| *id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveStep {
    pub time_offset_s: f64,
    /// DAC pair -> segment pair acquired at the start of this step.
    pub assignments: Vec<(DacPairId, SegmentPairId)>,
    /// Segment pairs reverting to their static set at the end of this step.
    pub releases: Vec<SegmentPairId>,
    pub wells: BTreeMap<StringId, WellPos>,
}

/// A planned transport. `steps[0]` is the setup (mux acquisition only);
/// later steps move wells one index at a time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MovePlan {
    pub steps: Vec<MoveStep>,
    pub duration_s: f64,
    /// Bank whose DAC pairs drive the move.
    pub bank: ZoneId,
    /// Lockstep multi-string move: one waveform fans out to every string, so
    /// per-string stray-field compensation is unavailable.
    pub shared_waveform: bool,
    /// Demux fan-out: segment-pair stride between lockstep wells.
    pub demux_spacing: Option<i64>,
    pub demux_count: usize,
    /// Junction plans may hold more than 4 pairs (blocking); this is their
    /// audited ceiling.
    pub budget_override: Option<usize>,
    /// Strings whose ion order reverses when this plan is applied.
    pub orientation_toggles: Vec<StringId>,
}

impl MovePlan {
    fn empty(bank: ZoneId) -> Self {
        MovePlan {
            steps: Vec::new(),
            duration_s: 0.0,
            bank,
            shared_waveform: false,
            demux_spacing: None,
            demux_count: 1,
            budget_override: None,
            orientation_toggles: Vec::new(),
        }
    }

    /// Steps in which at least one well changes position.
    pub fn motion_steps(&self) -> usize {
        let mut last: BTreeMap<StringId, WellPos> = BTreeMap::new();
        let mut n = 0;
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 && s.wells.iter().any(|(id, p)| last.get(id) != Some(p)) {
                n += 1;
            }
            last.extend(s.wells.iter().map(|(id, p)| (*id, *p)));
        }
        n
    }

    pub fn distinct_dacs(&self) -> usize {
        let mut ids: Vec<DacPairId> =
            self.steps.iter().flat_map(|s| s.assignments.iter().map(|(d, _)| *d)).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// One JSON object per step: {"t","assign","release","wells"}.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let wells: serde_json::Map<String, serde_json::Value> = s
                .wells
                .iter()
                .map(|(id, p)| (id.to_string(), json!(p.index)))
                .collect();
            let line = json!({
                "t": s.time_offset_s,
                "assign": s.assignments.iter().map(|(d, p)| json!([d, p])).collect::<Vec<_>>(),
                "release": s.releases,
                "wells": wells,
            });
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

/// Incremental plan builder tracking held pairs, the DAC free list and time.
struct Builder<'a> {
    plan: MovePlan,
    held: BTreeMap<SegmentPairId, DacPairId>,
    free_dacs: Vec<DacPairId>,
    params: &'a ShuttleParams,
    t: f64,
}

impl<'a> Builder<'a> {
    fn new(bank: ZoneId, budget: u32, params: &'a ShuttleParams) -> Self {
        Builder {
            plan: MovePlan::empty(bank),
            held: BTreeMap::new(),
            // Lowest ids are taken first.
            free_dacs: (0..budget).rev().collect(),
            params,
            t: 0.0,
        }
    }

    fn push_step(
        &mut self,
        acquires: Vec<SegmentPairId>,
        releases: Vec<SegmentPairId>,
        wells: BTreeMap<StringId, WellPos>,
        moved: bool,
    ) {
        let mut assignments = Vec::new();
        for pair in acquires {
            if self.held.contains_key(&pair) {
                continue;
            }
            let dac = self.free_dacs.pop().expect("DAC budget exhausted");
            self.held.insert(pair, dac);
            assignments.push((dac, pair));
        }
        let mut releases_kept = Vec::new();
        let handoff = !assignments.is_empty() || !releases.is_empty();
        self.plan.steps.push(MoveStep {
            time_offset_s: self.t,
            assignments,
            releases: releases.clone(),
            wells,
        });
        for pair in releases {
            if let Some(dac) = self.held.remove(&pair) {
                self.free_dacs.push(dac);
                releases_kept.push(pair);
            }
        }
        if moved {
            self.t += self.params.shuttle_step_s;
        }
        if handoff {
            self.t += self.params.mux_switch_s;
        }
        self.plan.duration_s = self.t;
    }
}

fn track_pair(track: &Track, index: i64) -> Option<SegmentPairId> {
    if index < 0 || index >= i64::from(track.segment_pairs) {
        None
    } else {
        Some(track.pair_id(index as u32))
    }
}

/// Pairs a confined well needs under DAC control: its index and both
/// in-range neighbors.
fn well_support(track: &Track, index: i64) -> Vec<SegmentPairId> {
    [index - 1, index, index + 1]
        .iter()
        .filter_map(|&i| track_pair(track, i))
        .collect()
}

fn check_path(
    occ: &Occupancy,
    moving: &[StringId],
    track: &Track,
    from: i64,
    to: i64,
) -> Result<()> {
    let dir = (to - from).signum();
    let mut i = from;
    while i != to {
        i += dir;
        if occ.occupied_by_other(moving, WellPos { track: track.id, index: i }).is_some() {
            return Err(QvnError::Obstructed { track: track.id, index: i });
        }
    }
    Ok(())
}

/// Append the motion steps for one well going from `from` to `to`,
/// exchanging the trailing pair for the next leading pair at each step.
fn emit_linear_motion(
    b: &mut Builder,
    track: &Track,
    from: i64,
    to: i64,
    wells_at: &dyn Fn(i64) -> BTreeMap<StringId, WellPos>,
) {
    let dir = (to - from).signum();
    let mut pos = from;
    while pos != to {
        let next = pos + dir;
        let acquires: Vec<_> = track_pair(track, next + dir).into_iter().collect();
        // Everything behind the new support is handed back.
        let support = well_support(track, next);
        let releases: Vec<_> = b
            .held
            .keys()
            .copied()
            .filter(|p| {
                *p >= track.pair_base
                    && *p < track.pair_base + u64::from(track.segment_pairs)
                    && !support.contains(p)
                    && !acquires.contains(p)
            })
            .collect();
        b.push_step(acquires, releases, wells_at(next), true);
        pos = next;
    }
}

/// Plan a single-string move along one track.
pub fn plan_linear_move(
    layout: &TrapLayout,
    occ: &Occupancy,
    string: StringId,
    track_id: TrackId,
    from: i64,
    to: i64,
    params: &ShuttleParams,
) -> Result<MovePlan> {
    let track = layout
        .track(track_id)
        .ok_or(QvnError::Validation(format!("no track {track_id}")))?;
    for idx in [from, to] {
        if idx < 0 || idx >= i64::from(track.segment_pairs) {
            return Err(QvnError::OutOfRange { track: track_id, index: idx });
        }
    }
    if let Some(p) = occ.strings.get(&string) {
        if *p != (WellPos { track: track_id, index: from }) {
            return Err(QvnError::Validation(format!(
                "string {string} is not at track {track_id} index {from}"
            )));
        }
    }
    let bank = layout.bank_of_zone(track.zone_id);
    if from == to {
        return Ok(MovePlan::empty(bank));
    }
    check_path(occ, &[string], track, from, to)?;

    let mut b = Builder::new(bank, layout.bank_budget(bank), params);
    let at = |i: i64| BTreeMap::from([(string, WellPos { track: track_id, index: i })]);
    b.push_step(well_support(track, from), Vec::new(), at(from), false);
    emit_linear_motion(&mut b, track, from, to, &at);
    Ok(b.plan)
}

/// Plan a lockstep move of several equally spaced strings on one track.
/// The DAC waveform is the single-string plan of the lowest string; the
/// demultiplexer fans it out at the common stride.
pub fn plan_multi_string_move(
    layout: &TrapLayout,
    occ: &Occupancy,
    moves: &[(StringId, i64)],
    params: &ShuttleParams,
) -> Result<MovePlan> {
    let Some(&(first_string, displacement)) = moves.first() else {
        return Err(QvnError::Validation("no strings to move".into()));
    };
    for &(_, d) in moves {
        if d != displacement {
            return Err(QvnError::MismatchedDisplacement(displacement, d));
        }
    }
    let mut positions = Vec::new();
    for &(s, _) in moves {
        let p = occ
            .strings
            .get(&s)
            .ok_or(QvnError::Validation(format!("string {s} has no position")))?;
        positions.push((s, *p));
    }
    let track_id = positions[0].1.track;
    if positions.iter().any(|(_, p)| p.track != track_id) {
        return Err(QvnError::SpacingViolation("strings on different tracks".into()));
    }
    positions.sort_by_key(|(_, p)| p.index);
    let spacing = if positions.len() > 1 {
        let s = positions[1].1.index - positions[0].1.index;
        for w in positions.windows(2) {
            if w[1].1.index - w[0].1.index != s {
                return Err(QvnError::SpacingViolation(format!(
                    "gaps {} and {} differ",
                    s,
                    w[1].1.index - w[0].1.index
                )));
            }
        }
        Some(s)
    } else {
        None
    };
    let track = layout.track(track_id).unwrap();
    let moving: Vec<StringId> = positions.iter().map(|(s, _)| *s).collect();
    for (s, p) in &positions {
        let to = p.index + displacement;
        if to < 0 || to >= i64::from(track.segment_pairs) {
            return Err(QvnError::OutOfRange { track: track_id, index: to });
        }
        check_path(occ, &moving, track, p.index, to)?;
        debug_assert!(occ.strings.contains_key(s));
    }

    let leader = positions[0];
    if moves.len() == 1 {
        return plan_linear_move(
            layout,
            occ,
            first_string,
            track_id,
            leader.1.index,
            leader.1.index + displacement,
            params,
        );
    }
    // The shared waveform is the leader's; a leader well at the track end
    // has a clamped (two-pair) support whose demuxed copies cannot confine
    // the mid-track images, so lockstep paths must stay off the ends.
    let leader_lo = leader.1.index.min(leader.1.index + displacement);
    let top = positions.last().unwrap().1.index;
    let image_hi = top.max(top + displacement);
    if leader_lo < 1 || image_hi > i64::from(track.segment_pairs) - 2 {
        let index = if leader_lo < 1 { leader_lo } else { image_hi };
        return Err(QvnError::OutOfRange { track: track_id, index });
    }
    let bank = layout.bank_of_zone(track.zone_id);
    let mut b = Builder::new(bank, layout.bank_budget(bank), params);
    let offsets: Vec<(StringId, i64)> =
        positions.iter().map(|(s, p)| (*s, p.index - leader.1.index)).collect();
    let wells_at = |i: i64| -> BTreeMap<StringId, WellPos> {
        offsets
            .iter()
            .map(|(s, off)| (*s, WellPos { track: track_id, index: i + off }))
            .collect()
    };
    if displacement != 0 {
        b.push_step(well_support(track, leader.1.index), Vec::new(), wells_at(leader.1.index), false);
        emit_linear_motion(&mut b, track, leader.1.index, leader.1.index + displacement, &wells_at);
    }
    b.plan.shared_waveform = true;
    b.plan.demux_spacing = spacing;
    b.plan.demux_count = moves.len();
    Ok(b.plan)
}

/// Plan the access of one memory cell: switch its segment pairs from the
/// shared static set to the four independent DACs of the zone bank, then
/// extract the resident string to the junction wait position (index 1) of
/// its storage track, ready for a traversal onto the zone spine.
pub fn access_memory_cell(
    layout: &TrapLayout,
    occ: &Occupancy,
    cell: crate::layout::CellRef,
    params: &ShuttleParams,
) -> Result<MovePlan> {
    use crate::layout::PAIRS_PER_CELL;
    let base = layout
        .cell_base_index(cell)
        .ok_or(QvnError::Validation(format!("no cell {cell:?}")))?;
    let track = layout
        .storage_track(cell.zone, cell.col)
        .ok_or(QvnError::Validation(format!("no storage track for column {}", cell.col)))?;
    let cell_pairs: Vec<SegmentPairId> =
        (base..base + PAIRS_PER_CELL).map(|i| track.pair_id(i)).collect();
    for p in &cell_pairs {
        if occ.control.contains_key(p) {
            return Err(QvnError::CellNotOnStaticSet {
                zone: cell.zone,
                col: cell.col,
                row: cell.row,
            });
        }
    }
    // The resident string is parked on the middle confining pair.
    let home = i64::from(base) + 1;
    let string = occ
        .strings
        .iter()
        .find(|(_, p)| p.track == track.id && (p.index - home).abs() <= 1)
        .map(|(s, _)| *s)
        .ok_or(QvnError::CellEmpty { zone: cell.zone, col: cell.col, row: cell.row })?;
    let start = occ.strings[&string].index;
    check_path(occ, &[string], track, start, 1)?;

    let bank = layout.bank_of_zone(cell.zone);
    let mut b = Builder::new(bank, layout.bank_budget(bank), params);
    let at = |i: i64| BTreeMap::from([(string, WellPos { track: track.id, index: i })]);
    // One mux switch puts the whole cell on DACs 0-3.
    b.push_step(cell_pairs.clone(), Vec::new(), at(start), false);
    // The spacer pair is not part of the well support; hand it back before
    // the extraction needs a free DAC for its leading edge.
    let support = well_support(track, start);
    let spare: Vec<SegmentPairId> =
        cell_pairs.into_iter().filter(|p| !support.contains(p)).collect();
    if !spare.is_empty() {
        b.push_step(Vec::new(), spare, at(start), false);
    }
    emit_linear_motion(&mut b, track, start, 1, &at);
    Ok(b.plan)
}

/// Plan a traversal through a junction from one arm to another. The string
/// must sit at index 1 of the in-arm track (the junction end is index 0 by
/// convention for arm tracks). Non-exit arms are blocked throughout.
pub fn traverse_junction(
    layout: &TrapLayout,
    occ: &Occupancy,
    string: StringId,
    junction_id: JunctionId,
    in_arm: u32,
    out_arm: u32,
    params: &ShuttleParams,
) -> Result<MovePlan> {
    let junction = layout
        .junction(junction_id)
        .ok_or(QvnError::Validation(format!("no junction {junction_id}")))?;
    let arms = junction.arm_track_ids.len() as u32;
    for arm in [in_arm, out_arm] {
        if arm >= arms {
            return Err(QvnError::InvalidArm { junction: junction_id, arm });
        }
    }
    if in_arm == out_arm {
        return Err(QvnError::InvalidArm { junction: junction_id, arm: out_arm });
    }
    let tin = layout.track(junction.arm_track_ids[in_arm as usize]).unwrap();
    let tout = layout.track(junction.arm_track_ids[out_arm as usize]).unwrap();
    if let Some(p) = occ.strings.get(&string) {
        if *p != (WellPos { track: tin.id, index: 1 }) {
            return Err(QvnError::Validation(format!(
                "string {string} must wait at index 1 of arm track {}",
                tin.id
            )));
        }
    }
    if occ.occupied_by_other(&[string], WellPos { track: tout.id, index: 0 }).is_some()
        || occ.occupied_by_other(&[string], WellPos { track: tout.id, index: 1 }).is_some()
    {
        return Err(QvnError::Obstructed { track: tout.id, index: 0 });
    }

    let bank = layout.bank_of_zone(tin.zone_id);
    let mut b = Builder::new(bank, 4 + junction.extra_pair_budget, params);
    b.plan.budget_override = Some((4 + junction.extra_pair_budget) as usize);
    let at_in = |i: i64| BTreeMap::from([(string, WellPos { track: tin.id, index: i })]);
    let at_out = |i: i64| BTreeMap::from([(string, WellPos { track: tout.id, index: i })]);

    // Block every non-exit arm at its junction-end pair and take the in-arm
    // support.
    let mut blocking = Vec::new();
    for (i, tid) in junction.arm_track_ids.iter().enumerate() {
        if i as u32 != in_arm && i as u32 != out_arm {
            blocking.push(layout.track(*tid).unwrap().pair_id(0));
        }
    }
    let mut setup = blocking.clone();
    setup.extend(well_support(tin, 1));
    b.push_step(setup, Vec::new(), at_in(1), false);
    // Step to the junction mouth, dropping the rear pair.
    b.push_step(
        Vec::new(),
        track_pair(tin, 2).into_iter().collect(),
        at_in(0),
        true,
    );
    // Hop through the junction core onto the out arm.
    b.push_step(
        vec![tout.pair_id(0), tout.pair_id(1)],
        vec![tin.pair_id(0), tin.pair_id(1)],
        at_out(0),
        true,
    );
    // Settle one index into the out arm and release the blocks.
    let mut rel = blocking;
    let acq: Vec<_> = track_pair(tout, 2).into_iter().collect();
    b.push_step(acq, std::mem::take(&mut rel), at_out(1), true);
    Ok(b.plan)
}

/// Rotate a string parked at arm `start_arm` of a Y junction: three
/// traversals bring it back to its start with the ion order reversed
/// relative to the track axis.
pub fn rotate_string(
    layout: &TrapLayout,
    occ: &Occupancy,
    string: StringId,
    junction_id: JunctionId,
    start_arm: u32,
    params: &ShuttleParams,
) -> Result<MovePlan> {
    let junction = layout
        .junction(junction_id)
        .ok_or(QvnError::Validation(format!("no junction {junction_id}")))?;
    if junction.arm_track_ids.len() != 3 {
        return Err(QvnError::Validation(format!(
            "junction {junction_id} is not a Y junction"
        )));
    }
    let arms = [start_arm, (start_arm + 1) % 3, (start_arm + 2) % 3];
    let mut scratch = occ.clone();
    let mut combined = MovePlan::empty(layout.bank_of_zone(
        layout.track(junction.arm_track_ids[start_arm as usize]).unwrap().zone_id,
    ));
    combined.budget_override = Some((4 + junction.extra_pair_budget) as usize);
    let mut t0 = 0.0;
    for (i, w) in [[arms[0], arms[1]], [arms[1], arms[2]], [arms[2], arms[0]]]
        .into_iter()
        .enumerate()
    {
        let leg = traverse_junction(layout, &scratch, string, junction_id, w[0], w[1], params)?;
        apply_plan(&mut scratch, &leg);
        for mut step in leg.steps {
            step.time_offset_s += t0;
            combined.steps.push(step);
        }
        t0 += leg.duration_s;
        // Hand the arrival support back to the static sets between legs so
        // the next traversal starts from a clean control state.
        if i < 2 {
            let held: Vec<SegmentPairId> = scratch.control.keys().copied().collect();
            if !held.is_empty() {
                combined.steps.push(MoveStep {
                    time_offset_s: t0,
                    assignments: Vec::new(),
                    releases: held.clone(),
                    wells: BTreeMap::new(),
                });
                for p in held {
                    scratch.control.remove(&p);
                }
                t0 += params.mux_switch_s;
            }
        }
    }
    combined.duration_s = t0;
    combined.orientation_toggles.push(string);
    Ok(combined)
}

/// Apply a plan to an occupancy state: track well positions and the
/// DAC-held pair set.
pub fn apply_plan(occ: &mut Occupancy, plan: &MovePlan) {
    for step in &plan.steps {
        for (dac, pair) in &step.assignments {
            occ.control.insert(*pair, *dac);
        }
        for pair in &step.releases {
            occ.control.remove(pair);
        }
        for (s, p) in &step.wells {
            occ.strings.insert(*s, *p);
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AuditReport {
    pub peak_active_pairs: usize,
    pub distinct_dacs: usize,
    pub steps: usize,
}

/// Independent replay of a plan, checking the control invariants from
/// scratch:
/// - a segment pair is held by at most one DAC at a time;
/// - active pairs never exceed the budget (4, or the junction override);
/// - every well's index and in-range neighbors are DAC-controlled whenever
///   the well moves (demux images count for lockstep moves).
pub fn audit_plan(layout: &TrapLayout, plan: &MovePlan) -> Result<AuditReport> {
    let budget = plan.budget_override.unwrap_or(4);
    let mut held: BTreeMap<SegmentPairId, DacPairId> = BTreeMap::new();
    let mut dacs_seen = Vec::new();
    let mut peak = 0usize;
    let mut last_wells: BTreeMap<StringId, WellPos> = BTreeMap::new();
    for (i, step) in plan.steps.iter().enumerate() {
        for (dac, pair) in &step.assignments {
            if held.contains_key(pair) {
                return Err(QvnError::Validation(format!(
                    "step {i}: pair {pair} acquired twice"
                )));
            }
            if held.values().any(|d| d == dac) {
                return Err(QvnError::Validation(format!(
                    "step {i}: DAC {dac} drives two pairs"
                )));
            }
            held.insert(*pair, *dac);
            dacs_seen.push(*dac);
        }
        peak = peak.max(held.len());
        if held.len() > budget {
            return Err(QvnError::Validation(format!(
                "step {i}: {} active pairs exceed budget {budget}",
                held.len()
            )));
        }
        // Continuity check for wells that moved in this step.
        for (s, pos) in &step.wells {
            let moved = last_wells.get(s).map(|p| p != pos).unwrap_or(true);
            if !moved && i > 0 {
                continue;
            }
            let track = layout
                .track(pos.track)
                .ok_or(QvnError::Validation(format!("step {i}: unknown track")))?;
            for p in well_support(track, pos.index) {
                let controlled = held.contains_key(&p)
                    || plan.demux_spacing.is_some_and(|sp| {
                        held.keys().any(|h| {
                            let d = p as i64 - *h as i64;
                            d % sp == 0 && d.unsigned_abs() / sp.unsigned_abs() < plan.demux_count as u64
                        })
                    });
                if !controlled {
                    return Err(QvnError::Validation(format!(
                        "step {i}: well of string {s} at index {} lacks control of pair {p}",
                        pos.index
                    )));
                }
            }
            last_wells.insert(*s, *pos);
        }
        for pair in &step.releases {
            held.remove(pair);
        }
    }
    dacs_seen.sort_unstable();
    dacs_seen.dedup();
    Ok(AuditReport {
        peak_active_pairs: peak,
        distinct_dacs: dacs_seen.len(),
        steps: plan.steps.len(),
    })
}
