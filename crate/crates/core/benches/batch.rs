use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use zstab::exec::Execution;
use zstab::harness::{generate_scene, kempf_ness_verify, InstanceSpec};
use zstab::moment::DEFAULT_TOL;
use zstab::stability::brute_force_classify;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn verify(c: &mut Criterion) {
    let mut g = c.benchmark_group("kempf_ness_verify");
    g.sample_size(10);
    let spec = InstanceSpec::new(7, 48);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::new(name, spec.count), &mode, |b, &mode| {
            b.iter(|| kempf_ness_verify(&spec, DEFAULT_TOL, mode).unwrap())
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("brute_force_classify");
    g.sample_size(10);
    let spec = InstanceSpec { rank_range: (3, 3), ..InstanceSpec::new(11, 1) };
    let (scene, charge) = generate_scene(&spec, 0).unwrap();
    let bound = 1 + scene.weight_spread();
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::new(name, bound), &mode, |b, &mode| {
            b.iter(|| brute_force_classify(&scene, &charge, bound, mode).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, verify, oracle);
criterion_main!(benches);
