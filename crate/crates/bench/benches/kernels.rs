use criterion::{criterion_group, criterion_main, Criterion};
use gradlab_core::coefficients::{piecewise_contrast_field, scaled_identity, IDENTITY};
use gradlab_core::experiments::cylinder_family;
use gradlab_core::geometry::{build_mesh, disk_pair};
use gradlab_core::solver::{assemble, conjugate_gradient, CgOptions};
use std::hint::black_box;

fn mesh(c: &mut Criterion) {
    let l = disk_pair(0.15, 0.0).unwrap();
    c.bench_function("mesh touching pair h=1/64", |b| b.iter(|| build_mesh(black_box(&l), 1.0 / 64.0).unwrap()));
}

fn assembly_and_cg(c: &mut Criterion) {
    let l = disk_pair(0.15, 0.05).unwrap();
    let m = build_mesh(&l, 1.0 / 64.0).unwrap();
    let field = piecewise_contrast_field(&l, &[scaled_identity(10.0), scaled_identity(10.0), IDENTITY]).unwrap();
    c.bench_function("assemble h=1/64", |b| b.iter(|| assemble(black_box(&m), &field).unwrap()));

    let (k, mass) = assemble(&m, &field).unwrap();
    let free: Vec<usize> = (0..m.n_vertices()).filter(|&i| !m.is_boundary(i)).collect();
    let a = mass.combine(1.0, &k, 0.01).submatrix(&free);
    let rhs = vec![1.0; free.len()];
    c.bench_function("jacobi cg h=1/64", |b| {
        b.iter(|| conjugate_gradient(black_box(&a), &rhs, None, CgOptions::default()).unwrap())
    });
}

fn line_kernel(c: &mut Criterion) {
    c.bench_function("1d cylinder family", |b| b.iter(|| cylinder_family().unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = mesh, assembly_and_cg, line_kernel
}
criterion_main!(benches);
