//! Parallel vs sequential kernels: C0-IP assembly, error norms and the
//! residual estimator on a moderately fine mesh.
//!
//! Run with `cargo bench`; under `cargo test` criterion executes each
//! benchmark once as a smoke test.

use criterion::{criterion_group, criterion_main, Criterion};

use c0ip::assembly::{assemble_ah, assemble_ah_seq, PenaltyConfig};
use c0ip::cases::example1;
use c0ip::estimator::{compute_estimator, compute_estimator_seq};
use c0ip::fe::DofMap;
use c0ip::kkt::{build_kkt, solve_kkt};
use c0ip::mesh::Mesh;
use c0ip::norms::{error_norms, error_norms_seq};
use c0ip::study::default_rules;

fn bench_assembly(c: &mut Criterion) {
    let mesh = Mesh::unit_square(48);
    let dofs = DofMap::build(&mesh);
    let cfg = PenaltyConfig::default();
    let mut group = c.benchmark_group("assemble_ah_n48");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| assemble_ah(&mesh, &dofs, &cfg)));
    group.bench_function("sequential", |b| b.iter(|| assemble_ah_seq(&mesh, &dofs, &cfg)));
    group.finish();
}

fn bench_norms_and_estimator(c: &mut Criterion) {
    let case = example1();
    let mesh = Mesh::unit_square(32);
    let dofs = DofMap::build(&mesh);
    let cfg = PenaltyConfig::default();
    let sys = build_kkt(&mesh, &dofs, &cfg, &case);
    let sol = solve_kkt(&sys, &dofs).expect("solve");
    let (tri, edge) = default_rules();

    let mut group = c.benchmark_group("error_norms_n32");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| error_norms(&case.exact_u, &sol.u, &mesh, &dofs, &cfg, &tri, &edge))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| error_norms_seq(&case.exact_u, &sol.u, &mesh, &dofs, &cfg, &tri, &edge))
    });
    group.finish();

    let mut group = c.benchmark_group("estimator_n32");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| compute_estimator(&sol, &case, &mesh, &dofs, &cfg, &tri, &edge))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| compute_estimator_seq(&sol, &case, &mesh, &dofs, &cfg, &tri, &edge))
    });
    group.finish();
}

criterion_group!(benches, bench_assembly, bench_norms_and_estimator);
criterion_main!(benches);
