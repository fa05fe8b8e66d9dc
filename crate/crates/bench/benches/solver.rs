use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use packclass_bench::{fixture_layout, LABELS};
use packclass_core::{
    compute_bounds, defragment, min_strip_width, solve_opp, Container, ModuleSpec, SearchLimits,
};

fn defrag(c: &mut Criterion) {
    let mut group = c.benchmark_group("defragment");
    for label in LABELS {
        let layout = fixture_layout(label);
        group.bench_with_input(BenchmarkId::from_parameter(label), &layout, |b, l| {
            b.iter(|| defragment(black_box(l), &SearchLimits::unlimited()).unwrap())
        });
    }
    group.finish();
}

fn strip(c: &mut Criterion) {
    let layout = fixture_layout("A");
    let modules = layout.placed_modules();
    c.bench_function("min_strip_width/A", |b| {
        b.iter(|| min_strip_width(black_box(&modules), 11, &SearchLimits::unlimited()).unwrap())
    });
    c.bench_function("compute_bounds/A", |b| {
        b.iter(|| compute_bounds(black_box(&modules), 11).unwrap())
    });
}

fn opp(c: &mut Criterion) {
    let squares: Vec<ModuleSpec> = (0..5).map(|i| ModuleSpec::new(format!("s{i}"), 2, 2)).collect();
    // Zero waste but infeasible; refuted before search.
    c.bench_function("solve_opp/five_squares_4x5", |b| {
        b.iter(|| {
            solve_opp(
                black_box(&squares),
                Container::new(4, 5),
                &SearchLimits::unlimited(),
            )
            .unwrap()
        })
    });
    let modules = fixture_layout("A").placed_modules();
    for width in [10, 11] {
        c.bench_function(&format!("solve_opp/A_{width}x11"), |b| {
            b.iter(|| {
                solve_opp(
                    black_box(&modules),
                    Container::new(width, 11),
                    &SearchLimits::unlimited(),
                )
                .unwrap()
            })
        });
    }
}

criterion_group!(benches, defrag, strip, opp);
criterion_main!(benches);
