use criterion::{black_box, criterion_group, criterion_main, Criterion};

use qvn_core::layout::CellRef;
use qvn_core::physics::coil::{field_at, CoilSystem};
use qvn_core::physics::homogeneous_sphere_radius;
use qvn_core::quantum4004_preset;
use qvn_core::shuttle::{
    access_memory_cell, plan_linear_move, Occupancy, ShuttleParams, WellPos,
};
use qvn_core::sim::{Circuit, CircuitOp, MachineParams};

fn bench_coil(c: &mut Criterion) {
    let system = CoilSystem::helmholtz(0.1, 100.0);
    c.bench_function("coil_field_at", |b| {
        b.iter(|| field_at(&system, black_box([0.01, 0.005, 0.002])))
    });
    c.bench_function("coil_homogeneous_sphere_radius", |b| {
        b.iter(|| homogeneous_sphere_radius(&system, black_box(1e-6)).unwrap())
    });
}

fn bench_shuttle(c: &mut Criterion) {
    let layout = quantum4004_preset();
    let params = ShuttleParams::default();
    let zone = layout.memory_zones().next().unwrap().id;
    let track_id = layout
        .tracks
        .iter()
        .find(|t| t.zone_id == zone)
        .map(|t| t.id)
        .unwrap();
    let pairs = layout.tracks.iter().find(|t| t.id == track_id).unwrap().segment_pairs;
    let to = i64::from(pairs) - 2;

    c.bench_function("shuttle_linear_move", |b| {
        b.iter(|| {
            let mut occ = Occupancy::default();
            occ.strings.insert(0, WellPos { track: track_id, index: 1 });
            plan_linear_move(&layout, &occ, 0, track_id, 1, black_box(to), &params).unwrap()
        })
    });
    c.bench_function("shuttle_access_memory_cell", |b| {
        let cell = CellRef { zone, col: 3, row: 2 };
        let storage = layout.storage_track(zone, cell.col).unwrap();
        let home = i64::from(layout.cell_base_index(cell).unwrap()) + 1;
        let mut occ = Occupancy::default();
        occ.strings.insert(0, WellPos { track: storage.id, index: home });
        b.iter(|| access_memory_cell(&layout, &occ, black_box(cell), &params).unwrap())
    });
}

fn bench_sim(c: &mut Criterion) {
    let layout = quantum4004_preset();
    let params = MachineParams::default();
    let ops: Vec<CircuitOp> = (0..64)
        .map(|i| CircuitOp::TwoQubitGate((2 * i) % 24, (2 * i + 1) % 24))
        .collect();
    let circuit = Circuit::with_default_placement(ops, &layout).unwrap();
    c.bench_function("sim_run_64_gates", |b| {
        b.iter(|| qvn_core::sim::run(&layout, black_box(&circuit), &params, 0).unwrap())
    });
}

criterion_group!(benches, bench_coil, bench_shuttle, bench_sim);
criterion_main!(benches);
