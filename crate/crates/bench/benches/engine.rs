//! Criterion benchmarks for the scheduling and repair hot paths.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use jobshop_core::dispatch::{schedule_with_rule, Rule};
use jobshop_core::harness::synthetic_instance;
use jobshop_core::improve::improve;
use jobshop_core::lrcp::{repair, Breakdown};
use jobshop_core::model::{demo_5x3, demo_5x3_baseline, RepairConfig};
use jobshop_core::simulate::{generate_scenario, run_scenario};
use jobshop_core::validate::validate_schedule;

fn bench_dispatch(c: &mut Criterion) {
    let mut group = c.benchmark_group("dispatch");
    for &(jobs, machines) in &[(10usize, 5usize), (20, 15), (30, 20)] {
        let instance = synthetic_instance(jobs, machines, 1);
        group.bench_with_input(
            BenchmarkId::new("spt", format!("{jobs}x{machines}")),
            &instance,
            |b, inst| b.iter(|| schedule_with_rule(inst, Rule::Spt)),
        );
    }
    group.finish();
}

fn bench_improve(c: &mut Criterion) {
    let instance = synthetic_instance(15, 10, 2);
    let initial = schedule_with_rule(&instance, Rule::Lpt);
    c.bench_function("improve/15x10/50-iters", |b| {
        b.iter(|| improve(&instance, &initial, 50, 0).unwrap())
    });
}

fn bench_repair(c: &mut Criterion) {
    let mut group = c.benchmark_group("repair");
    group.bench_function("demo-golden", |b| {
        let instance = demo_5x3();
        let schedule = demo_5x3_baseline();
        let breakdown = Breakdown::new(1, 5, 3).unwrap();
        b.iter(|| repair(&instance, &schedule, breakdown, RepairConfig::default()).unwrap())
    });
    for &(jobs, machines) in &[(10usize, 5usize), (20, 15)] {
        let instance = synthetic_instance(jobs, machines, 3);
        let schedule = schedule_with_rule(&instance, Rule::Spt);
        let breakdown = Breakdown::new(0, schedule.makespan() / 3, 10).unwrap();
        group.bench_with_input(
            BenchmarkId::new("mid-horizon", format!("{jobs}x{machines}")),
            &(&instance, &schedule),
            |b, (inst, sched)| {
                b.iter(|| repair(inst, sched, breakdown, RepairConfig::default()).unwrap())
            },
        );
    }
    group.finish();
}

fn bench_validate(c: &mut Criterion) {
    let instance = synthetic_instance(20, 15, 4);
    let schedule = schedule_with_rule(&instance, Rule::Spt);
    c.bench_function("validate/20x15", |b| {
        b.iter(|| validate_schedule(&instance, &schedule, &[]))
    });
}

fn bench_scenario(c: &mut Criterion) {
    let instance = synthetic_instance(10, 5, 5);
    let schedule = schedule_with_rule(&instance, Rule::Spt);
    let scenario = generate_scenario(&instance, 5, 8, 1).unwrap();
    c.bench_function("simulate/10x5/5-failures", |b| {
        b.iter(|| {
            run_scenario(&instance, &schedule, &scenario, RepairConfig::default(), None).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_dispatch,
    bench_improve,
    bench_repair,
    bench_validate,
    bench_scenario
);
criterion_main!(benches);
