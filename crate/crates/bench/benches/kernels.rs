use aniso_bench::{adapted_solution, uniform_solution};
use aniso_core::adapt::{AdaptConfig, LocalAdapter};
use aniso_core::estimate::{compute_estimates, element_geometry, EstimatorOptions};
use aniso_core::fem::{assemble_and_solve, integrate_subdivided, SolverOptions};
use aniso_core::metric::{residual_metric, Combine, MetricClamp, MetricScaling};
use aniso_core::recovery::{recover_gradient, RecoveryMethod};
use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

fn solver(c: &mut Criterion) {
    let (case, mesh, _) = uniform_solution(64);
    let problem = case.problem();
    c.bench_function("assemble_and_solve 64x64", |b| {
        b.iter(|| assemble_and_solve(&mesh, &problem, &SolverOptions::default(), None).unwrap())
    });
}

fn estimation(c: &mut Criterion) {
    let (case, mesh, u) = uniform_solution(64);
    let problem = case.problem();
    c.bench_function("zhang-naga recovery 64x64", |b| b.iter(|| recover_gradient(&mesh, &u, RecoveryMethod::ZhangNaga)));
    let rec = recover_gradient(&mesh, &u, RecoveryMethod::ZhangNaga);
    c.bench_function("residual estimates 64x64", |b| {
        b.iter(|| compute_estimates(&mesh, &u, &rec, &problem, &EstimatorOptions::default()).unwrap())
    });
    let p = [[0.0, 0.0], [1.0, 0.1], [0.2, 0.9]];
    c.bench_function("element geometry", |b| b.iter(|| element_geometry(black_box(&p)).unwrap()));
    let f = case.problem().f;
    let q = [[0.0, 0.0], [0.02, 0.0], [0.0, 0.02]];
    c.bench_function("subdivided residual integral", |b| {
        b.iter(|| integrate_subdivided(black_box(&q), 0.05, |x| f(x).powi(2)).unwrap())
    });
}

fn adaptation(c: &mut Criterion) {
    let (case, mesh, u) = adapted_solution(0.5, 4);
    let problem = case.problem();
    let cfg = AdaptConfig { tol: 0.5, ..Default::default() };
    c.bench_function("swap pass on adapted mesh", |b| {
        b.iter_batched(
            || LocalAdapter::from_solution(mesh.clone(), u.clone(), &problem, &cfg).unwrap(),
            |mut a| a.swap_pass(),
            BatchSize::LargeInput,
        )
    });
    let rec = recover_gradient(&mesh, &u, RecoveryMethod::ZhangNaga);
    let est = compute_estimates(&mesh, &u, &rec, &problem, &EstimatorOptions::default()).unwrap();
    c.bench_function("residual metric on adapted mesh", |b| {
        b.iter(|| {
            residual_metric(&mesh, &est, 0.5, false, MetricScaling::default(), Combine::Intersect, &MetricClamp::default())
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = solver, estimation, adaptation
}
criterion_main!(benches);
