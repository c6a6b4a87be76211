use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mpsched_core::harness::{preset, run_simulation, RunOptions};
use mpsched_core::scheduler::find_shortest_fd_path;
use mpsched_core::sim::RngStream;
use mpsched_core::{compute_rbd, compute_rd, ArrivalRecord, DelayDiffMatrix, FdEstimator, PathSample, SimDelta, SimTime};

fn shortest_path(c: &mut Criterion) {
    for n in [2usize, 4, 8] {
        let mut m = DelayDiffMatrix::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                m.update_pair(i, j, SimDelta::from_millis(j as i64 - i as i64 * 3));
            }
        }
        let mut rng = RngStream::new(0, 1);
        c.bench_function(&format!("find_shortest_fd_path/{n}"), |b| {
            b.iter(|| find_shortest_fd_path(black_box(&m), &mut rng))
        });
    }
}

fn estimator_ingest(c: &mut Criterion) {
    c.bench_function("estimator_ingest/3", |b| {
        let mut est = FdEstimator::new(3);
        let mut t = 0i64;
        b.iter(|| {
            t += 1_000_000;
            let path = (t / 1_000_000 % 3) as usize;
            let s = PathSample {
                path_id: path,
                ts_sent: SimDelta(t),
                ts_received: SimDelta(t + 10_000_000 * (path as i64 + 1)),
            };
            est.ingest_sample(black_box(s), SimTime(t as u64));
        })
    });
}

fn reorder_metrics(c: &mut Criterion) {
    let mut rng = RngStream::new(9, 0);
    let mut record = ArrivalRecord::new();
    // Swap neighbours at random to get a mildly reordered stream.
    let mut seqs: Vec<u64> = (0..100_000).collect();
    for i in 1..seqs.len() {
        if rng.chance(0.2) {
            seqs.swap(i - 1, i);
        }
    }
    for (k, s) in seqs.into_iter().enumerate() {
        record.push(s, (k % 5) as u64);
    }
    c.bench_function("compute_rbd/100k", |b| b.iter(|| compute_rbd(black_box(&record))));
    c.bench_function("compute_rd/100k", |b| b.iter(|| compute_rd(black_box(&record))));
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    for name in ["a2", "three-path"] {
        let mut cfg = preset(name).unwrap();
        cfg.sim_seconds = 5.0;
        group.bench_function(name, |b| {
            b.iter_batched(|| cfg.clone(), |cfg| run_simulation(&cfg, 0, 1, RunOptions::default()), BatchSize::SmallInput)
        });
    }
    group.finish();
}

criterion_group!(benches, shortest_path, estimator_ingest, reorder_metrics, simulation);
criterion_main!(benches);
