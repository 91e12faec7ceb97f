use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use delaymap::topology::geometric_scales;
use delaymap::{box_counting, compatibility_margin, delay_matrix, perturb_to_compatible, ObservableSpec};
use delaymap_bench::{henon, henon_pairs, henon_trajectory, square_points, trig_observable};

fn bench_delay_matrix(c: &mut Criterion) {
    let traj = henon_trajectory(10_000);
    let h = trig_observable();
    let mut g = c.benchmark_group("delay_matrix");
    for m in [1usize, 3, 5] {
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| delay_matrix(&h, black_box(&traj), m).unwrap())
        });
    }
    g.finish();
}

fn bench_margin(c: &mut Criterion) {
    let sys = henon();
    let h = trig_observable();
    let mut g = c.benchmark_group("compatibility_margin");
    for count in [200usize, 2000] {
        let k = henon_pairs(count, 1);
        g.bench_with_input(BenchmarkId::from_parameter(count), &k, |b, k| {
            b.iter(|| compatibility_margin(&h, &sys, black_box(k), 3).unwrap())
        });
    }
    g.finish();
}

fn bench_box_counting(c: &mut Criterion) {
    let pts = square_points(20_000);
    let scales = geometric_scales(0.25, 6);
    c.bench_function("box_counting/20000", |b| b.iter(|| box_counting(black_box(&pts), &scales).unwrap()));
}

fn bench_perturb(c: &mut Criterion) {
    let sys = henon();
    let k = henon_pairs(200, 3);
    let h = ObservableSpec::constant(0.5);
    let mut g = c.benchmark_group("perturb_to_compatible");
    g.sample_size(10);
    g.bench_function("henon_200_pairs", |b| b.iter(|| perturb_to_compatible(&h, 0.05, black_box(&k), &sys, 1, 3).unwrap()));
    g.finish();
}

criterion_group!(benches, bench_delay_matrix, bench_margin, bench_box_counting, bench_perturb);
criterion_main!(benches);
