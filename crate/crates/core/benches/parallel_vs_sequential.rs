//! Rayon fan-out against the plain loop on the three data-parallel sweeps.
//! Both paths return identical results; only wall time differs.

use std::hint::black_box;
use std::time::Duration;

use corank::classgroup;
use corank::ffmat::{corank_hist_with, EnsembleKind, EnsembleSpec, FieldSpec};
use corank::padic::{cokernel_hist, PadicSpec};
use corank::par::Exec;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn corank_histograms(c: &mut Criterion) {
    let mut g = c.benchmark_group("corank_hist");
    let trials = 50_000u64;
    g.throughput(Throughput::Elements(trials));
    let cases = [
        ("uniform8_F2", EnsembleKind::Uniform { n: 8, m: 0 }, 2),
        ("hermitian6_F4", EnsembleKind::Hermitian { n: 6 }, 4),
        ("scs8_F3", EnsembleKind::SkewCentrosymmetric { n: 8 }, 3),
    ];
    for (name, kind, q) in cases {
        let spec = EnsembleSpec::new(kind, FieldSpec::of_order(q).unwrap()).unwrap();
        for (mode, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(mode, name), &spec, |b, s| {
                b.iter(|| corank_hist_with(black_box(s), trials, 1, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn snf_histogram(c: &mut Criterion) {
    let mut g = c.benchmark_group("cokernel_hist");
    let trials = 20_000u64;
    g.throughput(Throughput::Elements(trials));
    let spec = PadicSpec::new(2, 4, 0, 24).unwrap();
    for (mode, exec) in MODES {
        g.bench_function(mode, |b| {
            b.iter(|| cokernel_hist(black_box(spec), trials, 3, exec).unwrap())
        });
    }
    g.finish();
}

fn class_group_sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("class_group_sweep");
    g.sample_size(10).measurement_time(Duration::from_secs(10));
    for x in [50_000u64, 200_000] {
        g.throughput(Throughput::Elements(x));
        for (mode, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(mode, x), &x, |b, &x| {
                b.iter(|| classgroup::sylow_types(3, black_box(x), None, exec).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, corank_histograms, snf_histogram, class_group_sweep);
criterion_main!(benches);
