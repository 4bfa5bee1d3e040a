use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use critpass::ensemble::{self, EnsembleConfig};
use critpass::model::ModelParams;
use critpass::par::Execution;
use critpass::pathintegrate::SegmentSettings;

fn small_ensemble() -> EnsembleConfig {
    let params = ModelParams::new(1.0, vec![-0.5, 0.5]).unwrap();
    let mut cfg = EnsembleConfig::new(params, vec![1e-3, 1e-3]);
    cfg.n_traj = 32;
    cfg.t_start = -60.0;
    cfg.t_end = 150.0;
    cfg.window = 30.0;
    cfg.integrator = SegmentSettings::splitting4(0.005);
    cfg
}

fn bench_execution(c: &mut Criterion) {
    let cfg = small_ensemble();
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for (name, exec) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
        group.bench_with_input(BenchmarkId::new(name, cfg.n_traj), &exec, |b, &exec| {
            b.iter(|| ensemble::run_ensemble_with(&cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_execution);
criterion_main!(benches);
