//! Pull-based packet schedulers.
//!
//! A scheduler is consulted only when a subflow has window room; it answers
//! with an index into the shared send buffer and never initiates a send.

mod shortest_path;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::estimator::DelayDiffMatrix;
use crate::sim::RngStream;
use crate::time::{SimDelta, SimTime};

pub use shortest_path::{fdps_pick_index, find_shortest_fd_path, tally_neg_counts, NegCountTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchedulerQuery {
    pub requesting_path: usize,
    pub buffer_len: usize,
    pub now: SimTime,
}

/// Sender-side state of one path, as seen by a scheduler.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PathView {
    pub srtt: Option<SimTime>,
    /// Payload bytes per second.
    pub avg_throughput: f64,
}

pub struct SchedulerContext<'a> {
    pub paths: &'a [PathView],
    pub estimates: &'a DelayDiffMatrix,
    pub mss: u32,
    /// Pairs involving a path silent for longer than this have no estimate.
    pub stale_horizon: Option<SimTime>,
}

impl SchedulerContext<'_> {
    fn min_srtt(&self) -> Option<SimTime> {
        self.paths.iter().filter_map(|p| p.srtt).min()
    }
}

pub trait PacketScheduler: Send {
    fn kind(&self) -> SchedulerKind;

    /// Picks a buffer index in `[0, query.buffer_len)`.
    fn schedule(&mut self, query: &SchedulerQuery, ctx: &SchedulerContext<'_>) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    Fifo,
    RttHalf,
    Fdps,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] = [SchedulerKind::Fifo, SchedulerKind::RttHalf, SchedulerKind::Fdps];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Fifo => "fifo",
            SchedulerKind::RttHalf => "rtt-half",
            SchedulerKind::Fdps => "fdps",
        }
    }

    pub fn build(self, rng: RngStream) -> Box<dyn PacketScheduler> {
        match self {
            SchedulerKind::Fifo => Box::new(FifoScheduler),
            SchedulerKind::RttHalf => Box::new(RttHalfScheduler::new(HalfRtt, rng)),
            SchedulerKind::Fdps => Box::new(FdpsScheduler::new(ForwardEstimates, rng)),
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scheduler {0:?} (expected fifo, fdps or rtt-half)")]
pub struct UnknownScheduler(pub String);

impl FromStr for SchedulerKind {
    type Err = UnknownScheduler;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fifo" => Ok(SchedulerKind::Fifo),
            "fdps" => Ok(SchedulerKind::Fdps),
            "rtt-half" => Ok(SchedulerKind::RttHalf),
            other => Err(UnknownScheduler(other.to_string())),
        }
    }
}

/// Always sends the head of the buffer.
#[derive(Debug, Clone, Copy, Default)]
pub struct FifoScheduler;

impl PacketScheduler for FifoScheduler {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Fifo
    }

    fn schedule(&mut self, _query: &SchedulerQuery, _ctx: &SchedulerContext<'_>) -> usize {
        0
    }
}

/// Source of pairwise forward-delay differences `T_i - T_j`.
pub trait DelayDiffSource: Send {
    const KIND: SchedulerKind;

    fn delta(&self, i: usize, j: usize, now: SimTime, ctx: &SchedulerContext<'_>) -> Option<SimDelta>;
}

/// Differences estimated from echoed timestamps.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForwardEstimates;

impl DelayDiffSource for ForwardEstimates {
    const KIND: SchedulerKind = SchedulerKind::Fdps;

    fn delta(&self, i: usize, j: usize, now: SimTime, ctx: &SchedulerContext<'_>) -> Option<SimDelta> {
        match ctx.stale_horizon {
            Some(h) => ctx.estimates.fresh_delta(i, j, now, h).ok(),
            None => ctx.estimates.delta_between(i, j).ok(),
        }
    }
}

/// Half the difference in smoothed RTT as a stand-in for the forward delay.
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfRtt;

impl DelayDiffSource for HalfRtt {
    const KIND: SchedulerKind = SchedulerKind::RttHalf;

    fn delta(&self, i: usize, j: usize, _now: SimTime, ctx: &SchedulerContext<'_>) -> Option<SimDelta> {
        if i == j {
            return Some(SimDelta::ZERO);
        }
        let a = ctx.paths.get(i)?.srtt?;
        let b = ctx.paths.get(j)?.srtt?;
        Some(SimDelta(a.delta_since(b).0 / 2))
    }
}

/// Shortest-forward-delay-path selection plus delay-gap buffer indexing,
/// parameterized over where the delay differences come from.
///
/// The best path is recomputed at most once per smallest smoothed RTT across
/// paths and cached in between.
#[derive(Debug, Clone)]
pub struct DelayDiffScheduler<D> {
    source: D,
    rng: RngStream,
    best: Option<usize>,
    last_refresh: SimTime,
    refreshes: u64,
}

pub type FdpsScheduler = DelayDiffScheduler<ForwardEstimates>;
pub type RttHalfScheduler = DelayDiffScheduler<HalfRtt>;

impl<D: DelayDiffSource> DelayDiffScheduler<D> {
    pub fn new(source: D, rng: RngStream) -> Self {
        DelayDiffScheduler {
            source,
            rng,
            best: None,
            last_refresh: SimTime::ZERO,
            refreshes: 0,
        }
    }

    pub fn best_path(&self) -> Option<usize> {
        self.best
    }

    pub fn refreshes(&self) -> u64 {
        self.refreshes
    }

    fn refresh_due(&self, now: SimTime, ctx: &SchedulerContext<'_>) -> bool {
        match (self.best, ctx.min_srtt()) {
            (None, _) | (_, None) => true,
            (Some(_), Some(interval)) => now.saturating_sub(self.last_refresh) >= interval,
        }
    }

    fn refresh(&mut self, now: SimTime, ctx: &SchedulerContext<'_>) -> usize {
        let source = &self.source;
        let table = tally_neg_counts(ctx.paths.len(), |i, j| source.delta(i, j, now, ctx), &mut self.rng);
        let best = table.argmax();
        self.best = Some(best);
        self.last_refresh = now;
        self.refreshes += 1;
        best
    }
}

impl<D: DelayDiffSource> PacketScheduler for DelayDiffScheduler<D> {
    fn kind(&self) -> SchedulerKind {
        D::KIND
    }

    fn schedule(&mut self, query: &SchedulerQuery, ctx: &SchedulerContext<'_>) -> usize {
        let best = match self.best {
            Some(b) if !self.refresh_due(query.now, ctx) => b,
            _ => self.refresh(query.now, ctx),
        };
        let delta = self.source.delta(query.requesting_path, best, query.now, ctx);
        let x_star = ctx.paths.get(best).map_or(0.0, |p| p.avg_throughput);
        fdps_pick_index(query, best, delta, x_star, ctx.mss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx<'a>(paths: &'a [PathView], m: &'a DelayDiffMatrix) -> SchedulerContext<'a> {
        SchedulerContext {
            paths,
            estimates: m,
            mss: 934,
            stale_horizon: None,
        }
    }

    fn q(path: usize, len: usize, now_ms: u64) -> SchedulerQuery {
        SchedulerQuery {
            requesting_path: path,
            buffer_len: len,
            now: SimTime::from_millis(now_ms),
        }
    }

    #[test]
    fn names_round_trip() {
        for k in SchedulerKind::ALL {
            assert_eq!(k.name().parse::<SchedulerKind>(), Ok(k));
        }
        assert!("mtcs".parse::<SchedulerKind>().is_err());
    }

    #[test]
    fn fifo_is_always_head() {
        let m = DelayDiffMatrix::new(2);
        let paths = [PathView::default(); 2];
        let mut s = FifoScheduler;
        for len in [1, 2, 50] {
            assert_eq!(s.schedule(&q(1, len, 0), &ctx(&paths, &m)), 0);
        }
    }

    #[test]
    fn fdps_cold_start_is_fifo() {
        let m = DelayDiffMatrix::new(2);
        let paths = [PathView::default(); 2];
        let mut s = FdpsScheduler::new(ForwardEstimates, RngStream::new(1, 1));
        for k in 0..10 {
            assert_eq!(s.schedule(&q(k % 2, 100, k as u64), &ctx(&paths, &m)), 0);
        }
    }

    #[test]
    fn fdps_slow_path_skips_ahead_fast_path_takes_head() {
        let mut m = DelayDiffMatrix::new(2);
        m.update_pair(0, 1, SimDelta::from_millis(-20));
        let view = PathView {
            srtt: Some(SimTime::from_millis(24)),
            avg_throughput: 500_000.0,
        };
        let paths = [view, PathView { srtt: Some(SimTime::from_millis(64)), ..view }];
        let mut s = FdpsScheduler::new(ForwardEstimates, RngStream::new(1, 1));
        assert_eq!(s.schedule(&q(0, 100, 0), &ctx(&paths, &m)), 0);
        assert_eq!(s.best_path(), Some(0));
        assert_eq!(s.schedule(&q(1, 100, 1), &ctx(&paths, &m)), 10);
    }

    #[test]
    fn best_path_is_cached_for_one_min_rtt() {
        let mut m = DelayDiffMatrix::new(2);
        m.update_pair(0, 1, SimDelta::from_millis(-20));
        let view = PathView {
            srtt: Some(SimTime::from_millis(24)),
            avg_throughput: 500_000.0,
        };
        let paths = [view; 2];
        let mut s = FdpsScheduler::new(ForwardEstimates, RngStream::new(1, 1));
        s.schedule(&q(0, 10, 0), &ctx(&paths, &m));
        // Reverse the ordering; the cached choice survives until 24 ms elapse.
        m.update_pair(0, 1, SimDelta::from_millis(200));
        m.update_pair(0, 1, SimDelta::from_millis(200));
        s.schedule(&q(0, 10, 23), &ctx(&paths, &m));
        assert_eq!(s.best_path(), Some(0));
        assert_eq!(s.refreshes(), 1);
        s.schedule(&q(0, 10, 24), &ctx(&paths, &m));
        assert_eq!(s.best_path(), Some(1));
    }

    #[test]
    fn rtt_half_symmetric_paths_send_head() {
        let m = DelayDiffMatrix::new(2);
        let view = PathView {
            srtt: Some(SimTime::from_millis(30)),
            avg_throughput: 500_000.0,
        };
        let paths = [view; 2];
        let mut s = RttHalfScheduler::new(HalfRtt, RngStream::new(3, 3));
        for k in 0..20 {
            assert_eq!(s.schedule(&q(k % 2, 100, k as u64), &ctx(&paths, &m)), 0);
        }
    }

    #[test]
    fn rtt_half_index_from_half_rtt_gap() {
        let m = DelayDiffMatrix::new(2);
        let paths = [
            PathView {
                srtt: Some(SimTime::from_millis(24)),
                avg_throughput: 500_000.0,
            },
            PathView {
                srtt: Some(SimTime::from_millis(64)),
                avg_throughput: 500_000.0,
            },
        ];
        let mut s = RttHalfScheduler::new(HalfRtt, RngStream::new(3, 3));
        // (64 - 24) / 2 = 20 ms; floor(0.020 * 500000 / 934) = 10.
        assert_eq!(s.schedule(&q(1, 100, 0), &ctx(&paths, &m)), 10);
        assert_eq!(s.schedule(&q(0, 100, 0), &ctx(&paths, &m)), 0);
    }

    #[test]
    fn rtt_half_without_rtt_sends_head() {
        let m = DelayDiffMatrix::new(2);
        let paths = [PathView::default(); 2];
        let mut s = RttHalfScheduler::new(HalfRtt, RngStream::new(3, 3));
        assert_eq!(s.schedule(&q(1, 100, 0), &ctx(&paths, &m)), 0);
    }
}
