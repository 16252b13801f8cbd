use criterion::{black_box, criterion_group, criterion_main, Criterion};
use ecoheat_bench::cold_long_stop;
use ecoheat_core::harness::{run_scenario, Scenario, Setup};
use ecoheat_core::traffic::{plan_eco_trajectory, plan_normal_trajectory};
use ecoheat_core::{Driving, Heating};

fn closed_loop(c: &mut Criterion) {
    let setup = Setup::default();

    c.bench_function("plan_eco", |b| {
        b.iter(|| plan_eco_trajectory(black_box(&setup.corridor), 0.0, 0.0, &setup.limits).unwrap())
    });
    c.bench_function("plan_normal", |b| {
        b.iter(|| plan_normal_trajectory(black_box(&setup.corridor), 0.0, 0.0, &setup.limits).unwrap())
    });

    let constant = Scenario::new("bench", Driving::Normal, Heating::Constant, -5.0);
    c.bench_function("run_normal_constant", |b| b.iter(|| run_scenario(black_box(&constant), &setup).unwrap()));

    let eco = cold_long_stop();
    c.bench_function("run_eco_eco_long_stop", |b| b.iter(|| run_scenario(black_box(&eco), &setup).unwrap()));
}

criterion_group!(benches, closed_loop);
criterion_main!(benches);
