use std::panic::{self, AssertUnwindSafe};

use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::world::{run_simulation, RunOptions, RunResult};
use crate::metrics::{compute_rbd, compute_rd, occupancy_stats, HistogramKind, OccupancyStats, ReorderHistogram};
use crate::scheduler::SchedulerKind;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("run {run_index} (seed {seed}) panicked: {message}")]
pub struct RunPanic {
    pub run_index: u32,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub result: RunResult,
    pub rbd: ReorderHistogram,
    /// Over the in-order-delivered prefix, which is a complete permutation.
    pub rd: ReorderHistogram,
    pub mean_occupancy: f64,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub scenario: String,
    pub scheduler: SchedulerKind,
    pub runs: Vec<RunMetrics>,
    /// Bin-wise mean over runs.
    pub rbd: ReorderHistogram,
    pub rd: ReorderHistogram,
    pub occupancy: OccupancyStats,
}

impl BatchResult {
    pub fn all_sane(&self) -> bool {
        self.runs.iter().all(|r| r.result.sanity.ok())
    }
}

pub fn seed_for(cfg: &ScenarioConfig, run_index: u32) -> u64 {
    cfg.base_seed.wrapping_add(run_index as u64)
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

/// Runs `cfg.runs` independent seeded simulations in parallel.
pub fn run_batch(cfg: &ScenarioConfig, opts: RunOptions) -> Result<BatchResult, RunPanic> {
    let outcomes: Vec<Result<RunResult, RunPanic>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run_index| {
            let seed = seed_for(cfg, run_index);
            panic::catch_unwind(AssertUnwindSafe(|| run_simulation(cfg, run_index, seed, opts))).map_err(|p| RunPanic {
                run_index,
                seed,
                message: panic_message(p),
            })
        })
        .collect();
    let results = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(cfg, results))
}

fn aggregate(cfg: &ScenarioConfig, results: Vec<RunResult>) -> BatchResult {
    let runs: Vec<RunMetrics> = results
        .into_iter()
        .map(|result| {
            let rbd = compute_rbd(&result.record);
            let rd = compute_rd(&result.record.prefix_below(result.next_expected));
            let mean_occupancy = result.record.mean_occupancy();
            RunMetrics {
                result,
                rbd,
                rd,
                mean_occupancy,
            }
        })
        .collect();
    let rbds: Vec<ReorderHistogram> = runs.iter().map(|r| r.rbd.clone()).collect();
    let rds: Vec<ReorderHistogram> = runs.iter().map(|r| r.rd.clone()).collect();
    let occupancy = occupancy_stats(runs.iter().map(|r| &r.result.record));
    BatchResult {
        scenario: cfg.name.clone(),
        scheduler: cfg.scheduler,
        rbd: ReorderHistogram::average(HistogramKind::Rbd, &rbds),
        rd: ReorderHistogram::average(HistogramKind::Rd, &rds),
        occupancy,
        runs,
    }
}

/// One batch per scheduler, in the order given.
pub fn run_compare(cfg: &ScenarioConfig, schedulers: &[SchedulerKind], opts: RunOptions) -> Result<Vec<BatchResult>, RunPanic> {
    schedulers
        .iter()
        .map(|&s| run_batch(&cfg.clone().with_scheduler(s), opts))
        .collect()
}
