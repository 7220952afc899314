use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ctsdr_core::calibration::{hand_eye_calibrate, pivot_calibrate};
use ctsdr_core::ctsdr::DrillPlan;
use ctsdr_core::kinematics::{forward_kinematics, solve_ik, space_jacobian, IkOptions, JointVector};
use ctsdr_core::se3::Transform;
use ctsdr_core::sim::{
    handeye_joint_configs, run_trial_with, synth_handeye_dataset, synth_pivot_dataset,
    GroundTruth, NoiseModel, SimConfig,
};

fn kinematics(c: &mut Criterion) {
    let cfg = SimConfig::default_arm();
    let q = JointVector::from_degrees([10.0, 30.0, -20.0, -70.0, 15.0, 40.0, -5.0]);
    c.bench_function("forward_kinematics", |b| {
        b.iter(|| forward_kinematics(&cfg.model, black_box(&q)))
    });
    c.bench_function("space_jacobian", |b| b.iter(|| space_jacobian(&cfg.model, black_box(&q))));
    let target = forward_kinematics(&cfg.model, &q);
    c.bench_function("solve_ik_from_home", |b| {
        b.iter(|| solve_ik(&cfg.model, black_box(&target), &cfg.home_config, &IkOptions::default()))
    });
}

fn calibration(c: &mut Criterion) {
    let cfg = SimConfig::default_arm();
    let gt = GroundTruth::new(30.0).unwrap();
    let noise = NoiseModel::default();
    let samples = synth_pivot_dataset(&gt, 30, &noise);
    c.bench_function("pivot_calibrate_30", |b| b.iter(|| pivot_calibrate(black_box(&samples))));
    let configs = handeye_joint_configs(&cfg.model, &cfg.home_config, 15, 0);
    let pairs = synth_handeye_dataset(&gt, &configs, &cfg.model, &noise);
    c.bench_function("hand_eye_calibrate_15", |b| b.iter(|| hand_eye_calibrate(black_box(&pairs))));
}

fn trial(c: &mut Criterion) {
    let cfg = SimConfig::default_arm();
    let gt = GroundTruth::new(60.0).unwrap();
    let plan = DrillPlan::new(Transform::identity());
    c.bench_function("run_trial", |b| {
        b.iter(|| run_trial_with(&gt, black_box(&NoiseModel::default()), &plan, &cfg))
    });
}

criterion_group!(benches, kinematics, calibration, trial);
criterion_main!(benches);
