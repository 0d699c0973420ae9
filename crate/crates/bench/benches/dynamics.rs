use coarsen::harris::{run, run_coupled};
use coarsen::observables::{cluster_labels, cluster_size_at, FixationTracker};
use coarsen::LatticeKind;
use coarsen_bench::{random_start, torus};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};

fn engine(c: &mut Criterion) {
    let mut g = c.benchmark_group("engine");
    for kind in [LatticeKind::Square, LatticeKind::Hexagonal, LatticeKind::Triangular] {
        let w = torus(kind, 64);
        let (init, s) = random_start(&w, 1);
        g.throughput(Throughput::Elements((w.len() * 10) as u64));
        g.bench_function(format!("{}_64_t10", kind.name()), |b| {
            b.iter(|| run(&w, &init, s, 10.0, &mut []).unwrap())
        });
    }
    let w = torus(LatticeKind::Square, 64);
    let (init, s) = random_start(&w, 2);
    g.bench_function("square_64_t10_fixation_tracker", |b| {
        b.iter_batched(
            || FixationTracker::new(w.len()),
            |mut t| run(&w, &init, s, 10.0, &mut [&mut t]).unwrap(),
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

fn coupling(c: &mut Criterion) {
    let w = torus(LatticeKind::Square, 32);
    let (lower, s) = random_start(&w, 3);
    let upper = coarsen::SpinConfiguration { spins: vec![1; w.len()], time: 0.0 };
    c.bench_function("coupled_square_32_t10", |b| b.iter(|| run_coupled(&w, &lower, &upper, s, 10.0).unwrap()));
}

fn clusters(c: &mut Criterion) {
    let w = torus(LatticeKind::Square, 128);
    let (init, _) = random_start(&w, 4);
    let o = w.origin_vertex();
    c.bench_function("cluster_labels_128", |b| b.iter(|| cluster_labels(&w, &init.spins)));
    c.bench_function("cluster_at_origin_128", |b| b.iter(|| cluster_size_at(&w, &init.spins, o).unwrap()));
}

criterion_group!(benches, engine, coupling, clusters);
criterion_main!(benches);
