use std::hint::black_box;

use apc_core::kinematics::structure_matrix_with;
use apc_core::preload::{optimize_preload, Eta, PreloadProblem};
use apc_core::presets;
use apc_core::redundancy::{advanced_structure_matrix, nullspace_basis, Wrench};
use apc_core::types::{KinematicsMode, Pose, PoseVector};
use criterion::{criterion_group, criterion_main, Criterion};

fn setup() -> (apc_core::types::RobotGeometry, Pose, Wrench) {
    let geom = presets::desk_spatial_pulley();
    let pose = Pose::from_vector(&PoseVector::new(0.1, -0.05, 0.45, 0.05, -0.03, 0.08));
    let load = (presets::PLATFORM_MASS + presets::PAYLOAD_MASS) * presets::GRAVITY;
    (
        geom,
        pose,
        Wrench::from_slice(&[0.0, 0.0, load, 0.0, 0.0, 0.0]),
    )
}

fn preload(c: &mut Criterion) {
    let (geom, pose, wrench) = setup();
    let limits = presets::desk_limits(8);
    let eta = Eta::new(0.35).unwrap();

    c.bench_function("assemble_and_solve_m8", |b| {
        b.iter(|| {
            let problem = PreloadProblem::at_pose(
                &geom,
                black_box(&pose),
                KinematicsMode::Pulley,
                None,
                wrench.clone(),
                eta,
                limits.clone(),
            )
            .unwrap();
            black_box(optimize_preload(&problem).unwrap())
        })
    });

    c.bench_function("assemble_m8", |b| {
        b.iter(|| {
            let at =
                structure_matrix_with(&geom, black_box(&pose), KinematicsMode::Pulley).unwrap();
            let basis = nullspace_basis(&at, None).unwrap();
            black_box(advanced_structure_matrix(&at, &basis).unwrap())
        })
    });

    let problem = PreloadProblem::at_pose(
        &geom,
        &pose,
        KinematicsMode::Pulley,
        None,
        wrench.clone(),
        eta,
        limits.clone(),
    )
    .unwrap();
    let warm = optimize_preload(&problem).unwrap().warm_start;
    c.bench_function("solve_cold_m8", |b| {
        b.iter(|| black_box(optimize_preload(black_box(&problem)).unwrap()))
    });
    let warm_problem = problem.clone().with_warm_start(warm);
    c.bench_function("solve_warm_m8", |b| {
        b.iter(|| black_box(optimize_preload(black_box(&warm_problem)).unwrap()))
    });
}

criterion_group!(benches, preload);
criterion_main!(benches);
