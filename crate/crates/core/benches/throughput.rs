//! Throughput of the data-parallel stages, with the default rayon pool
//! against a single-thread pool. Build with `--no-default-features` to
//! bench the plain sequential fallback instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use evcoord_core::baselines::offline_optimum;
use evcoord_core::fqi::{collect_experience, fitted_q_iteration};
use evcoord_core::regressor::{AnyRegressor, ExactTable};
use evcoord_core::{generate_synthetic, ArrivalProfile, EpisodeDay, FleetConfig};

fn bench_cfg() -> FleetConfig {
    FleetConfig::new(10, 12 * 60, 2 * 60).unwrap()
}

fn bench_days(cfg: &FleetConfig, days: u32) -> Vec<EpisodeDay> {
    let profile = ArrivalProfile::two_peak(cfg, 14.0);
    generate_synthetic(days, cfg, &profile, 2024).unwrap()
}

/// Runs `f` on a rayon pool of the given size when the parallel feature is
/// on; otherwise runs it directly (the library code is sequential then).
fn on_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

fn pool_labels() -> Vec<(&'static str, usize)> {
    #[cfg(feature = "parallel")]
    {
        vec![("rayon-all-cores", 0), ("rayon-1-thread", 1)]
    }
    #[cfg(not(feature = "parallel"))]
    {
        vec![("sequential", 1)]
    }
}

fn bench_collect(c: &mut Criterion) {
    let cfg = bench_cfg();
    let days = bench_days(&cfg, 4);
    let mut group = c.benchmark_group("collect_experience");
    group.sample_size(10);
    for (label, threads) in pool_labels() {
        group.bench_with_input(BenchmarkId::new(label, "4d x 100traj"), &days, |b, days| {
            b.iter(|| {
                on_pool(threads, || {
                    collect_experience(days, &cfg, 100, 7, 96).unwrap().tuples.len()
                })
            });
        });
    }
    group.finish();
}

fn bench_fqi(c: &mut Criterion) {
    let cfg = bench_cfg();
    let days = bench_days(&cfg, 2);
    let experience = collect_experience(&days, &cfg, 150, 7, 64).unwrap();
    let mut group = c.benchmark_group("fitted_q_iteration_exact");
    group.sample_size(10);
    for (label, threads) in pool_labels() {
        group.bench_with_input(
            BenchmarkId::new(label, "2d x 150traj"),
            &experience,
            |b, experience| {
                b.iter(|| {
                    on_pool(threads, || {
                        fitted_q_iteration(
                            experience,
                            AnyRegressor::Exact(ExactTable::new()),
                            cfg.s_max() as u32,
                        )
                        .unwrap()
                        .action_cap
                    })
                });
            },
        );
    }
    group.finish();
}

fn bench_offline_optimum(c: &mut Criterion) {
    let cfg = bench_cfg();
    let days = bench_days(&cfg, 30);
    let mut group = c.benchmark_group("offline_optimum");
    group.sample_size(10);
    group.bench_function("30 days", |b| {
        b.iter(|| {
            days.iter()
                .map(|d| offline_optimum(d, &cfg).unwrap().cost)
                .sum::<f64>()
        });
    });
    group.finish();
}

criterion_group!(benches, bench_collect, bench_fqi, bench_offline_optimum);
criterion_main!(benches);
