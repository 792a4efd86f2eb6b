use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use omega_green::relax::{solve_envelope, SolveOptions};
use omega_green::sections::build_section_envelope;
use omega_green::weights::{CompactSet, Weight};
use omega_green::{OmegaSpec, SphereGrid};

fn envelope(c: &mut Criterion) {
    let k = CompactSet::unit_circle();
    let q = Weight::zero();
    let omega = OmegaSpec::fubini_study();
    let mut group = c.benchmark_group("solve_envelope");
    group.sample_size(10);
    for n in [101, 201] {
        let grid = SphereGrid::new(1.25, n).unwrap();
        for parallel in [false, true] {
            let opts = SolveOptions { parallel, ..SolveOptions::default() };
            let id = BenchmarkId::new(if parallel { "parallel" } else { "sequential" }, n);
            group.bench_with_input(id, &grid, |b, g| {
                b.iter(|| black_box(solve_envelope(&k, &q, &omega, g, &opts).unwrap().iterations))
            });
        }
    }
    group.finish();
}

fn section_values(c: &mut Criterion) {
    let k = CompactSet::unit_circle();
    let env = build_section_envelope(&k, &Weight::zero(), 20, None).unwrap();
    let grid = SphereGrid::new(1.25, 101).unwrap();
    let mut group = c.benchmark_group("section_value_field");
    group.sample_size(10);
    for parallel in [false, true] {
        let name = if parallel { "parallel" } else { "sequential" };
        group.bench_function(name, |b| b.iter(|| black_box(env.value_field(&grid, parallel).max_value())));
    }
    group.finish();
}

criterion_group!(benches, envelope, section_values);
criterion_main!(benches);
