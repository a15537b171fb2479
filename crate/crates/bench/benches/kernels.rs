use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use weylab_core::operators::{build_multiplier, quantized_derivative};
use weylab_core::spectra::{singular_values, singular_values_with, weyl_estimate, SvdOptions};
use weylab_core::{
    make_gammas, LatticeBasis, SingularSpectrum, SphereFunction, TorusFunction, WindowPolicy,
};

fn lattice(c: &mut Criterion) {
    let mut group = c.benchmark_group("lattice_enumerate");
    for (d, r) in [(2, 24.0), (2, 120.0), (3, 40.0)] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("d{d}_R{r}")),
            &(d, r),
            |b, &(d, r)| {
                b.iter(|| LatticeBasis::enumerate_with_budget(d, black_box(r), 1_000_000).unwrap())
            },
        );
    }
    group.finish();
}

fn assembly(c: &mut Criterion) {
    let basis = Arc::new(LatticeBasis::enumerate(2, 24.0).unwrap());
    let rep = make_gammas(2).unwrap();
    let f = TorusFunction::cosine(2, 0, 2.0);
    c.bench_function("dbar_assemble_R24", |b| {
        b.iter(|| quantized_derivative(&basis, &rep, black_box(&f)).unwrap())
    });
    let g = SphereFunction::coordinate_power(2, 0, 2);
    c.bench_function("multiplier_assemble_R24", |b| {
        b.iter(|| build_multiplier(&basis, black_box(&g), -1.0).unwrap())
    });
}

fn svd(c: &mut Criterion) {
    let mut group = c.benchmark_group("singular_values");
    group.sample_size(10);
    let rep = make_gammas(2).unwrap();
    let f = TorusFunction::cosine(2, 0, 2.0);
    for r in [8.0, 12.0] {
        let basis = Arc::new(LatticeBasis::enumerate(2, r).unwrap());
        let op = quantized_derivative(&basis, &rep, &f).unwrap();
        group.bench_function(format!("dbar_blocks_R{r}"), |b| {
            b.iter(|| singular_values(black_box(&op)).unwrap())
        });
        let dense = SvdOptions {
            split_blocks: false,
            use_hermitian: false,
        };
        group.bench_function(format!("dbar_dense_svd_R{r}"), |b| {
            b.iter(|| singular_values_with(black_box(&op), dense).unwrap())
        });
    }
    group.finish();
}

fn estimate(c: &mut Criterion) {
    let s = SingularSpectrum::from_fn(100_000, "power law", |k| k.powf(-0.5));
    let policy = WindowPolicy::default();
    c.bench_function("weyl_estimate_100k", |b| {
        b.iter(|| weyl_estimate(black_box(&s), 2.0, &policy).unwrap())
    });
}

criterion_group!(benches, lattice, assembly, svd, estimate);
criterion_main!(benches);
