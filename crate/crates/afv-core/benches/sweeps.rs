//! Parallel against sequential execution of the main sweeps.

use afv_core::hyperfields::{check_hypergroup_axioms, HyperCtx, DEFAULT_THETA_L};
use afv_core::par::Exec;
use afv_core::primes::Prime;
use afv_core::sweeps::{check_hyper_add_sampling, check_theta_kras};
use afv_core::value_monoid::{check_stalk_lemma, Version};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

const EXECS: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn ctx(p: u64, level: u32) -> HyperCtx {
    HyperCtx::new(Prime::new(p).unwrap(), level).unwrap()
}

fn sweeps(c: &mut Criterion) {
    let axioms_ctx = ctx(5, 2);
    let theta_ctx = ctx(7, 3);
    let sampling_ctx = ctx(3, 2);
    let mut g = c.benchmark_group("sweeps");
    g.sample_size(10);
    for (name, exec) in EXECS {
        g.bench_function(format!("hypergroup_axioms/{name}"), |b| b.iter(|| black_box(check_hypergroup_axioms(&axioms_ctx, 4, 1000, 1, exec))));
        g.bench_function(format!("theta_definition/{name}"), |b| b.iter(|| black_box(check_theta_kras(&theta_ctx, 6, DEFAULT_THETA_L, exec))));
        g.bench_function(format!("hypersum_sampling/{name}"), |b| b.iter(|| black_box(check_hyper_add_sampling(&sampling_ctx, 1, 50, 2000, 1000, 1, exec))));
        g.bench_function(format!("stalk_lemma/{name}"), |b| b.iter(|| black_box(check_stalk_lemma(Version::Idelic, 1000, 1, exec))));
    }
    g.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
