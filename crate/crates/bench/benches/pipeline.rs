use std::f64::consts::PI;
use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tmcert_core::certificates::{kappa, tripode_constants};
use tmcert_core::eigensolve::smallest_eigenpairs;
use tmcert_core::fem2d::assemble;
use tmcert_core::geometry::{preset_domain, triangulate, PresetParams};
use tmcert_core::modes::{rayleigh_quotient, testfield, QuadratureGrid, TestFieldKind};
use tmcert_core::{BoundaryCondition, Preset};

fn l_shape() -> tmcert_core::RectilinearDomain2D {
    preset_domain(Preset::LShape, &PresetParams::from([("T".into(), 4.0)])).unwrap()
}

fn bench_mesh(c: &mut Criterion) {
    let dom = l_shape();
    let mut g = c.benchmark_group("triangulate");
    for n in [16u32, 32, 64] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| triangulate(&dom, 1.0 / n as f64).unwrap()));
    }
    g.finish();
}

fn bench_assemble(c: &mut Criterion) {
    let mesh = triangulate(&l_shape(), 1.0 / 32.0).unwrap();
    c.bench_function("assemble/l_shape/32", |b| b.iter(|| assemble(black_box(&mesh), BoundaryCondition::Dirichlet).unwrap()));
}

fn bench_eigs(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigensolve");
    g.sample_size(10);
    for n in [16u32, 32] {
        let mesh = Arc::new(triangulate(&l_shape(), 1.0 / n as f64).unwrap());
        let (k, m, _) = assemble(&mesh, BoundaryCondition::Dirichlet).unwrap();
        g.bench_with_input(BenchmarkId::new("l_shape", n), &n, |b, _| {
            b.iter(|| smallest_eigenpairs(&k, &m, 4, 1e-10, false).unwrap())
        });
    }
    g.finish();
}

fn bench_scalars(c: &mut Criterion) {
    c.bench_function("kappa/pi", |b| b.iter(|| kappa(black_box(PI)).unwrap()));
    c.bench_function("tripode_constants/4000", |b| b.iter(|| tripode_constants(black_box(9.1722), 4000).unwrap()));
    let e = testfield(&TestFieldKind::CuboidTe { a: 1.0, b: 1.0, l: 2.0 }).unwrap();
    let grid = QuadratureGrid::for_support(&e.support, [16, 2, 16]).unwrap();
    c.bench_function("rayleigh_quotient/cuboid", |b| b.iter(|| rayleigh_quotient(&e, &grid, 1e-4).unwrap()));
}

criterion_group!(benches, bench_mesh, bench_assemble, bench_eigs, bench_scalars);
criterion_main!(benches);
