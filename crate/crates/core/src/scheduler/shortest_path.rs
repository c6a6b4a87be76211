use crate::estimator::DelayDiffMatrix;
use crate::sim::RngStream;
use crate::time::SimDelta;

use super::SchedulerQuery;

/// Per-path tally of pairwise "this path is faster" outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NegCountTable {
    pub counts: Vec<u32>,
}

impl NegCountTable {
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Index of the largest count; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }
}

/// Tallies every unordered pair `(i, j)`, `i < j`, in lexicographic order.
///
/// `delta(i, j)` is the forward-delay difference `T_i - T_j`, or `None` when
/// no estimate exists; such pairs count for neither path. Exact ties are
/// settled by a fair coin drawn from `rng`.
pub fn tally_neg_counts<F>(n_paths: usize, mut delta: F, rng: &mut RngStream) -> NegCountTable
where
    F: FnMut(usize, usize) -> Option<SimDelta>,
{
    let mut counts = vec![0u32; n_paths];
    for i in 0..n_paths {
        for j in (i + 1)..n_paths {
            let Some(d) = delta(i, j) else { continue };
            let winner = match d.0.signum() {
                -1 => i,
                1 => j,
                _ => {
                    if rng.bernoulli() {
                        j
                    } else {
                        i
                    }
                }
            };
            counts[winner] += 1;
        }
    }
    NegCountTable { counts }
}

/// Path with the shortest estimated forward delay. Returns path 0 when the
/// matrix has no estimates at all.
pub fn find_shortest_fd_path(matrix: &DelayDiffMatrix, rng: &mut RngStream) -> usize {
    tally_neg_counts(matrix.n_paths(), |i, j| matrix.delta_between(i, j).ok(), rng).argmax()
}

/// Send-buffer index for a query from `query.requesting_path`.
///
/// `delta_to_best` is `Δ(requesting, best)`; `x_star` is the average
/// throughput of `best` in payload bytes per second. The index is the number
/// of MSS-sized packets the best path can deliver during the forward-delay
/// gap, floored and clamped into the buffer.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // a NaN throughput means index 0
pub fn fdps_pick_index(
    query: &SchedulerQuery,
    best: usize,
    delta_to_best: Option<SimDelta>,
    x_star: f64,
    mss: u32,
) -> usize {
    debug_assert!(query.buffer_len >= 1);
    if query.requesting_path == best {
        return 0;
    }
    let Some(delta) = delta_to_best else { return 0 };
    if delta.0 <= 0 || !(x_star > 0.0) || mss == 0 {
        return 0;
    }
    let packets = delta.as_secs_f64() * x_star / mss as f64;
    let last = query.buffer_len.saturating_sub(1);
    if !packets.is_finite() || packets >= last as f64 {
        return last;
    }
    (packets.floor() as usize).min(last)
}
