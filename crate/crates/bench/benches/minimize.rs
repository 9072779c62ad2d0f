use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use griffith_bench::{affine_datum, boxed_grid, model};
use griffith_core::energy::hessian_q;
use griffith_core::fields::{FacetSet, Segment};
use griffith_core::minimize::{solve_fixed_crack_linear, solve_fixed_crack_nonlinear, LinearSystem, SolverOptions};

fn fixed_crack(c: &mut Criterion) {
    let eps = 0.05;
    let m = model(eps);
    let q = hessian_q(&m, 2).unwrap();
    let opts = SolverOptions { starts: 1, ..Default::default() };
    let mut group = c.benchmark_group("fixed_crack");
    group.sample_size(10);
    for cells in [8, 16] {
        let grid = boxed_grid(cells);
        let datum = affine_datum(&grid, eps);
        let crack: FacetSet = Segment { axis: 0, at: 0.5, span: vec![[0.25, 0.75]] }.facets(&grid).unwrap();
        group.bench_function(BenchmarkId::new("linear_pcg", cells), |b| {
            b.iter(|| solve_fixed_crack_linear(&m, &q, &datum, &crack, &opts).unwrap())
        });
        let sys = LinearSystem::new(&q, &datum, &crack).unwrap();
        group.bench_function(BenchmarkId::new("linear_dense", cells), |b| b.iter(|| sys.solve_dense().unwrap()));
        group.bench_function(BenchmarkId::new("nonlinear", cells), |b| {
            b.iter(|| solve_fixed_crack_nonlinear(&m, &q, &datum, &crack, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, fixed_crack);
criterion_main!(benches);
