//! Forward-delay-difference estimation from ACK-echoed timestamp pairs.
//!
//! Each sample pairs the sender-clock send time of a data packet with the
//! receiver-clock arrival time of that packet. For two packets `a` (path i)
//! and `b` (path j):
//!
//! ```text
//! Δs = b.sent - a.sent          Δr = b.received - a.received
//! Δ(i,j) = Δs - Δr = (a.received - a.sent) - (b.received - b.sent)
//! ```
//!
//! Any constant offset between the two clocks appears in both `received`
//! values and cancels exactly, so no clock synchronization is needed. All
//! arithmetic is integer nanoseconds, which makes that cancellation
//! bit-exact.

use std::collections::VecDeque;

use crate::time::{SimDelta, SimTime};

/// Samples retained per path.
pub const HISTORY_LEN: usize = 8;

/// One timestamp pair: sender-clock send time, receiver-clock arrival time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathSample {
    pub path_id: usize,
    pub ts_sent: SimDelta,
    pub ts_received: SimDelta,
}

/// Returned when a pair has no usable estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no forward-delay estimate available")]
pub struct NoEstimate;

/// Forward-delay difference `T_a - T_b` between the packets of two samples.
///
/// Negative means the path of `a` was faster.
pub fn raw_delta(a: &PathSample, b: &PathSample) -> SimDelta {
    let sent_diff = b.ts_sent - a.ts_sent;
    let recv_diff = b.ts_received - a.ts_received;
    sent_diff - recv_diff
}

/// Smoothed pairwise differences. Only the upper triangle is stored, so
/// `delta(i, j) == -delta(j, i)` and `delta(i, i) == 0` hold by construction.
#[derive(Debug, Clone)]
pub struct DelayDiffMatrix {
    n_paths: usize,
    upper: Vec<Option<i64>>,
    freshness: Vec<Option<SimTime>>,
}

impl DelayDiffMatrix {
    pub fn new(n_paths: usize) -> Self {
        DelayDiffMatrix {
            n_paths,
            upper: vec![None; n_paths * n_paths.saturating_sub(1) / 2],
            freshness: vec![None; n_paths],
        }
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n_paths);
        // Row-major index into the strict upper triangle.
        i * (2 * self.n_paths - i - 1) / 2 + (j - i - 1)
    }

    /// Folds a raw `Δ(i,j)` into the smoothed estimate with gain 1/4.
    /// The first sample for a pair is taken as is.
    pub fn update_pair(&mut self, i: usize, j: usize, raw: SimDelta) {
        assert_ne!(i, j, "update_pair needs two distinct paths");
        let (lo, hi, raw) = if i < j { (i, j, raw.0) } else { (j, i, -raw.0) };
        let slot = self.slot(lo, hi);
        self.upper[slot] = Some(match self.upper[slot] {
            None => raw,
            // Truncating division is odd-symmetric, so the stored orientation
            // does not affect the mirrored value.
            Some(prev) => ((3 * prev as i128 + raw as i128) / 4) as i64,
        });
    }

    /// Smoothed `Δ(i,j)`; `NoEstimate` until both paths have been paired.
    pub fn delta_between(&self, i: usize, j: usize) -> Result<SimDelta, NoEstimate> {
        if i == j {
            return Ok(SimDelta::ZERO);
        }
        if i >= self.n_paths || j >= self.n_paths {
            return Err(NoEstimate);
        }
        let (lo, hi, sign) = if i < j { (i, j, 1) } else { (j, i, -1) };
        self.upper[self.slot(lo, hi)]
            .map(|v| SimDelta(sign * v))
            .ok_or(NoEstimate)
    }

    pub fn last_sample_at(&self, path: usize) -> Option<SimTime> {
        self.freshness.get(path).copied().flatten()
    }

    /// Suppresses pairs involving a path silent for longer than `horizon`.
    pub fn fresh_delta(&self, i: usize, j: usize, now: SimTime, horizon: SimTime) -> Result<SimDelta, NoEstimate> {
        if i == j {
            return Ok(SimDelta::ZERO);
        }
        for p in [i, j] {
            match self.last_sample_at(p) {
                Some(t) if now.saturating_sub(t) <= horizon => {}
                _ => return Err(NoEstimate),
            }
        }
        self.delta_between(i, j)
    }
}

/// Sender-side estimator: keeps the latest sample per path and updates every
/// pair on each new sample.
#[derive(Debug, Clone)]
pub struct FdEstimator {
    matrix: DelayDiffMatrix,
    history: Vec<VecDeque<PathSample>>,
    trace: Option<Vec<(u8, u8, i64)>>,
    samples: u64,
}

impl FdEstimator {
    pub fn new(n_paths: usize) -> Self {
        FdEstimator {
            matrix: DelayDiffMatrix::new(n_paths),
            history: vec![VecDeque::with_capacity(HISTORY_LEN); n_paths],
            trace: None,
            samples: 0,
        }
    }

    /// Records every smoothed value written by subsequent updates.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn matrix(&self) -> &DelayDiffMatrix {
        &self.matrix
    }

    pub fn n_paths(&self) -> usize {
        self.matrix.n_paths
    }

    pub fn samples_ingested(&self) -> u64 {
        self.samples
    }

    pub fn latest(&self, path: usize) -> Option<&PathSample> {
        self.history.get(path).and_then(|h| h.back())
    }

    pub fn history(&self, path: usize) -> impl Iterator<Item = &PathSample> {
        self.history[path].iter()
    }

    /// `(i, j, smoothed Δ(i,j))` in update order, if tracing was enabled.
    pub fn trace(&self) -> Option<&[(u8, u8, i64)]> {
        self.trace.as_deref()
    }

    /// Stores `s` (observed at sender time `now`) and pairs it with the
    /// latest sample of every other path.
    pub fn ingest_sample(&mut self, s: PathSample, now: SimTime) {
        assert!(s.path_id < self.n_paths(), "sample for unknown path {}", s.path_id);
        self.samples += 1;
        for other in 0..self.n_paths() {
            if other == s.path_id {
                continue;
            }
            let Some(b) = self.history[other].back().copied() else {
                continue;
            };
            self.matrix.update_pair(s.path_id, other, raw_delta(&s, &b));
            if let Some(trace) = self.trace.as_mut() {
                let v = self.matrix.delta_between(s.path_id, other).expect("just updated");
                trace.push((s.path_id as u8, other as u8, v.0));
            }
        }
        let h = &mut self.history[s.path_id];
        if h.len() == HISTORY_LEN {
            h.pop_front();
        }
        h.push_back(s);
        self.matrix.freshness[s.path_id] = Some(now);
    }

    pub fn delta_between(&self, i: usize, j: usize) -> Result<SimDelta, NoEstimate> {
        self.matrix.delta_between(i, j)
    }
}
