use std::collections::BTreeMap;

use besovlab_core::limits::{epsilon_sweep, EpsilonGrid, Model};
use besovlab_core::parallel::force_sequential;
use besovlab_core::seminorms::{besov_constant_at, default_method, gagliardo_constant_at, FunctionalParams};
use besovlab_core::{Field, MollifierSpec, QuadBudget, RadialKernelFamily, Region};
use criterion::{criterion_group, criterion_main, Criterion};

fn disk_besov_sweep() {
    let f = Field::ball_indicator(&[0.0, 0.0], 0.5, 1.0).unwrap();
    let p = FunctionalParams::jump_regime(2.0, Region::ball(&[0.0, 0.0], 1.0)).unwrap();
    let k = RadialKernelFamily::trivial(2).unwrap();
    let b = QuadBudget::new(20_000, 1e-5, 1).unwrap();
    epsilon_sweep("besov_constant", BTreeMap::new(), &EpsilonGrid::default_variation(), Model::ConstantTail, |e| {
        Ok(besov_constant_at(&f, &p, &k, e, &b, default_method(2))?.quad())
    })
    .unwrap();
}

fn step_gagliardo_sweep() {
    let f = Field::step(0.0, 1.0, 1.0).unwrap();
    let p = FunctionalParams::jump_regime(2.0, Region::interval(-1.0, 2.0)).unwrap();
    let m = MollifierSpec::tent(1).unwrap();
    let b = QuadBudget::new(4_000, 1e-7, 1).unwrap();
    epsilon_sweep("gagliardo_constant", BTreeMap::new(), &EpsilonGrid::default_gagliardo(), Model::InverseLog, |e| {
        Ok(gagliardo_constant_at(&f, &m, &p, e.value(), &b, default_method(1))?.quad())
    })
    .unwrap();
}

fn bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("sweeps");
    g.sample_size(10);
    for (name, run) in [("disk_besov", disk_besov_sweep as fn()), ("step_gagliardo", step_gagliardo_sweep)] {
        force_sequential(true);
        g.bench_function(format!("{name}/sequential"), |b| b.iter(run));
        force_sequential(false);
        g.bench_function(format!("{name}/parallel"), |b| b.iter(run));
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
