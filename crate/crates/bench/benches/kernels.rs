use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use varifold_bench::{circle, sphere};
use varifold_core::maximal::superlevel_mass;
use varifold_core::variation::{first_variation, TestVectorField};
use varifold_core::{CenterStrategy, MaximalParams, Point, Tolerances};

fn ball_query(c: &mut Criterion) {
    let mut group = c.benchmark_group("ball_query");
    for h in [0.05, 0.02] {
        let v = sphere(h);
        let index = v.index();
        let queries: Vec<Vec<f64>> = v
            .atoms()
            .iter()
            .step_by(37)
            .map(|a| a.position.iter().copied().collect())
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(v.len()), &queries, |b, qs| {
            b.iter(|| {
                qs.iter()
                    .map(|q| index.ball_query(black_box(q), 0.1).len())
                    .sum::<usize>()
            })
        });
    }
    group.finish();
}

fn maximal_superlevel(c: &mut Criterion) {
    let v = circle(0.01);
    let params = MaximalParams::new(0.05, 4.0, CenterStrategy::AtomsAndQuery, 16).unwrap();
    let tol = Tolerances::default();
    c.bench_function("superlevel_mass/circle", |b| {
        b.iter(|| superlevel_mass(&v, black_box(std::f64::consts::PI), &params, &tol).unwrap())
    });
}

fn variation(c: &mut Criterion) {
    let v = sphere(0.02);
    let theta = TestVectorField::Radial {
        center: Point::zeros(3),
        r0: 1.0,
        halfwidth: 0.5,
    };
    c.bench_function("first_variation/sphere", |b| {
        b.iter(|| first_variation(&v, black_box(&theta)))
    });
}

criterion_group!(kernels, ball_query, maximal_superlevel, variation);
criterion_main!(kernels);
