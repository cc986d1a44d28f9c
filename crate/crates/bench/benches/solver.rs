use criterion::{black_box, criterion_group, criterion_main, Criterion};

use conflow::geometry::{diagnostics, MeasureWindow};
use conflow::metric::{build_initial_with, GridSpec, InitialDataSpec, PlanarGrid, RadialGrid};
use conflow::soliton::{fit_cigar, rescaled_profile};
use conflow::solver::{step, BoundaryKind, Scheme, StepController};

fn radial_steps(c: &mut Criterion) {
    let grid = GridSpec::Radial(RadialGrid::uniform(40.0, 2000));
    let state =
        build_initial_with(&InitialDataSpec::Cigar, &grid, BoundaryKind::ExactCigar).unwrap();
    let ctrl = StepController::default();
    c.bench_function("radial implicit step, 2000 nodes", |b| {
        b.iter(|| step(black_box(&state), 1e-3, Scheme::Implicit, &ctrl).unwrap())
    });
    c.bench_function("radial implicit v-form step, 2000 nodes", |b| {
        b.iter(|| step(black_box(&state), 1e-3, Scheme::ImplicitVForm, &ctrl).unwrap())
    });
    c.bench_function("diagnostics row, 2000 nodes", |b| {
        b.iter(|| diagnostics(black_box(&state), MeasureWindow::GridEdge, 1e-3).unwrap())
    });
    c.bench_function("rescale and fit cigar", |b| {
        b.iter(|| fit_cigar(&rescaled_profile(black_box(&state), 10.0, 512).unwrap()).unwrap())
    });
}

fn planar_step(c: &mut Criterion) {
    let grid = GridSpec::Cartesian(PlanarGrid {
        half_width: 5.0,
        nodes_per_axis: 201,
    });
    let state = build_initial_with(
        &InitialDataSpec::Cigar,
        &grid,
        BoundaryKind::DirichletInitial,
    )
    .unwrap();
    let ctrl = StepController::default();
    c.bench_function("planar explicit step, 201x201", |b| {
        b.iter(|| step(black_box(&state), 1e-6, Scheme::Explicit, &ctrl).unwrap())
    });
}

criterion_group!(benches, radial_steps, planar_step);
criterion_main!(benches);
