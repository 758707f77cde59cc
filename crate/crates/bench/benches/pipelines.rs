use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use compactkit_bench::{bump_family_1d, bump_family_2d, noise_function};
use compactkit_core::fourier::dft;
use compactkit_core::kolmogorov::{greedy_cover, kr_certify};
use compactkit_core::moduli::{default_r_grid, family_moduli};

fn bench_lp_norm(c: &mut Criterion) {
    let f = noise_function(64, 0.125);
    c.bench_function("lp_norm 64x64 p=2", |b| {
        b.iter(|| black_box(&f).lp_norm(2.0).unwrap())
    });
    c.bench_function("lp_norm 64x64 p=1.7", |b| {
        b.iter(|| black_box(&f).lp_norm(1.7).unwrap())
    });
}

fn bench_family_moduli(c: &mut Criterion) {
    let family = bump_family_2d(8, 24, 0.2);
    let r_grid = default_r_grid(family.grid());
    let rho_grid = [0.4, 0.8, 1.2];
    c.bench_function("family_moduli 8x24x24", |b| {
        b.iter(|| family_moduli(black_box(&family), 1.0, 0.8, &r_grid, &rho_grid).unwrap())
    });
}

fn bench_kr_certify(c: &mut Criterion) {
    let family = bump_family_1d(6, 128, 0.0625);
    let p = 1.0;
    let eps = 0.6;
    let r_grid = default_r_grid(family.grid());
    let rho_grid = [0.0625, 0.125, 0.25, 0.5];
    let report = family_moduli(&family, p, eps, &r_grid, &rho_grid).unwrap();
    c.bench_function("kr_certify 6x128", |b| {
        b.iter(|| kr_certify(black_box(&family), p, eps, &report).unwrap())
    });
}

fn bench_greedy_cover(c: &mut Criterion) {
    let family = bump_family_1d(24, 96, 0.0625);
    c.bench_function("greedy_cover 24x96", |b| {
        b.iter(|| greedy_cover(black_box(&family), 2.0, 0.15).unwrap())
    });
}

fn bench_dft(c: &mut Criterion) {
    let f1 = bump_family_1d(1, 256, 0.03125).member(0).clone();
    c.bench_function("dft 1d 256", |b| b.iter(|| dft(black_box(&f1))));
    let f2 = bump_family_2d(1, 32, 0.125).member(0).clone();
    c.bench_function("dft 2d 32x32", |b| b.iter(|| dft(black_box(&f2))));
}

criterion_group!(
    benches,
    bench_lp_norm,
    bench_family_moduli,
    bench_kr_certify,
    bench_greedy_cover,
    bench_dft
);
criterion_main!(benches);
