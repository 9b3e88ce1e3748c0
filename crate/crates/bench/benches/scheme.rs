use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use infheat::barriers::{certify, BarrierForm, Side};
use infheat::lattice::Lattice;
use infheat::operator::{march, march_lattice, SchemeConfig};
use infheat::Region;
use infheat_bench::{disk, heat_line};

fn march_1d(c: &mut Criterion) {
    let (region, g) = heat_line(0.1);
    let mut group = c.benchmark_group("march_1d");
    for h in [0.02, 0.01] {
        let cfg = SchemeConfig::dpp(h);
        group.bench_with_input(BenchmarkId::from_parameter(h), &h, |b, &h| {
            b.iter(|| march(&region, &g, &cfg, h, 1, 2).unwrap())
        });
    }
    group.finish();
}

fn march_2d(c: &mut Criterion) {
    let (region, g) = disk(0.02);
    let mut group = c.benchmark_group("march_2d");
    group.sample_size(10);
    for dirs in [8, 32] {
        let h = 0.02;
        let cfg = SchemeConfig::dpp(2.0 * h);
        group.bench_with_input(BenchmarkId::new("dirs", dirs), &dirs, |b, &dirs| {
            b.iter(|| march(&region, &g, &cfg, h, 2, dirs).unwrap())
        });
    }
    group.finish();
}

fn sphere_values(c: &mut Criterion) {
    let (region, g) = disk(0.01);
    let lattice = std::sync::Arc::new(Lattice::build(&region, 0.02, 2, 8e-4, 32).unwrap());
    let field = march_lattice(lattice, &g).unwrap();
    c.bench_function("sphere_values_2d_32dirs", |b| {
        b.iter(|| field.sphere_values(1, black_box(&[0.1, -0.2])))
    });
}

fn certify_petrovsky(c: &mut Criterion) {
    let region = Region::petrovsky(1, 4.0, 0.1);
    let form = BarrierForm::petrovsky_barrier(0.25).unwrap();
    let mut group = c.benchmark_group("certify");
    group.sample_size(20);
    group.bench_function("petrovsky_2000", |b| {
        b.iter(|| certify(&form, &region, Side::Super, 2000, 0, 1e-9).unwrap())
    });
    let probe = BarrierForm::quadratic_probe(vec![0.0], 0.0, 1.0).unwrap();
    let cyl = heat_line(0.5).0;
    group.bench_function("probe_2000", |b| {
        b.iter(|| certify(&probe, &cyl, Side::Sub, 2000, 0, 1e-9).unwrap())
    });
    group.finish();
}

criterion_group!(benches, march_1d, march_2d, sphere_values, certify_petrovsky);
criterion_main!(benches);
