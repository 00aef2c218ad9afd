use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use crgeom::field::ScalarField;
use crgeom::invariants::mu_pseudohermitian;
use crgeom::manifold::{Backend, SampleManifold};
use crgeom::pseudohermitian::{build_coframe, solve_ph};
use crgeom::sampling;

struct Workload {
    field: ScalarField,
    u: ScalarField,
    e: ScalarField,
}

fn workload(n: usize) -> Workload {
    let m = SampleManifold::sphere(Backend::grid(n, n, n)).unwrap();
    let mut rng = sampling::rng(7);
    Workload {
        field: sampling::random_field(&mut rng, &m, 0, 4, 1.0),
        u: sampling::random_positive(&mut rng, &m, 2, 0.2),
        e: sampling::random_field(&mut rng, &m, 0, 1, 0.1),
    }
}

fn run(c: &mut Criterion, label: &str, install: &(dyn Fn(&(dyn Fn() + Sync)) + Sync)) {
    for n in [24, 48] {
        let w = workload(n);
        let mut g = c.benchmark_group(format!("grid{n}"));
        g.sample_size(10);
        g.bench_function(BenchmarkId::new("frame_derivatives", label), |b| {
            b.iter(|| install(&|| drop(black_box(w.field.frame_derivatives()))))
        });
        g.bench_function(BenchmarkId::new("solve_ph_mu", label), |b| {
            b.iter(|| {
                install(&|| {
                    let cf = build_coframe(&w.u, &w.e).unwrap();
                    let ph = solve_ph(&cf).unwrap();
                    black_box(mu_pseudohermitian(&ph, &cf).unwrap().mu);
                })
            })
        });
        g.finish();
    }
}

#[cfg(feature = "parallel")]
fn backends(c: &mut Criterion) {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    run(c, "sequential", &|f| single.install(f));
    run(c, &format!("rayon-{}", rayon::current_num_threads()), &|f| f());
}

#[cfg(not(feature = "parallel"))]
fn backends(c: &mut Criterion) {
    run(c, "sequential", &|f| f());
}

criterion_group!(benches, backends);
criterion_main!(benches);
