//! Receiver-side reordering metrics.
//!
//! * RBD (reorder buffer-occupancy density): normalized histogram of the
//!   hypothetical re-sort buffer occupancy, sampled once per unique arrival
//!   after in-order delivery has been processed. `RBD[0]` is the fraction of
//!   arrivals that could be handed to the application immediately.
//! * RD (reorder density): normalized histogram of displacements
//!   `arrival position - sequence position`, both 1-based.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub data_seq: u64,
    pub occupancy_after: u64,
}

/// Unique data arrivals at the receiver, in arrival order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArrivalRecord {
    arrivals: Vec<Arrival>,
}

impl ArrivalRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, data_seq: u64, occupancy_after: u64) {
        self.arrivals.push(Arrival {
            data_seq,
            occupancy_after,
        });
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arrival> {
        self.arrivals.iter()
    }

    /// Arrivals with `data_seq < bound`, in order. Truncating a run at the
    /// receiver's next-expected sequence leaves a complete permutation.
    pub fn prefix_below(&self, bound: u64) -> ArrivalRecord {
        ArrivalRecord {
            arrivals: self.arrivals.iter().filter(|a| a.data_seq < bound).copied().collect(),
        }
    }

    pub fn mean_occupancy(&self) -> f64 {
        if self.arrivals.is_empty() {
            return 0.0;
        }
        let total: u64 = self.arrivals.iter().map(|a| a.occupancy_after).sum();
        total as f64 / self.arrivals.len() as f64
    }
}

impl FromIterator<(u64, u64)> for ArrivalRecord {
    fn from_iter<T: IntoIterator<Item = (u64, u64)>>(iter: T) -> Self {
        ArrivalRecord {
            arrivals: iter
                .into_iter()
                .map(|(data_seq, occupancy_after)| Arrival {
                    data_seq,
                    occupancy_after,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistogramKind {
    Rbd,
    Rd,
}

/// Sparse normalized histogram, bins sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct ReorderHistogram {
    pub kind: HistogramKind,
    bins: BTreeMap<i64, f64>,
}

impl ReorderHistogram {
    fn from_counts(kind: HistogramKind, counts: BTreeMap<i64, u64>, total: usize) -> Self {
        let bins = counts
            .into_iter()
            .map(|(k, c)| (k, c as f64 / total as f64))
            .collect();
        ReorderHistogram { kind, bins }
    }

    pub fn density(&self, index: i64) -> f64 {
        self.bins.get(&index).copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.bins.values().sum()
    }

    /// Total density over `lo..=hi`.
    pub fn mass_between(&self, lo: i64, hi: i64) -> f64 {
        self.bins.range(lo..=hi).map(|(_, d)| d).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.bins.iter().map(|(&k, &d)| (k, d))
    }

    /// Bin-wise mean of several histograms of the same kind.
    pub fn average(kind: HistogramKind, hists: &[ReorderHistogram]) -> ReorderHistogram {
        let mut bins: BTreeMap<i64, f64> = BTreeMap::new();
        let non_empty: Vec<&ReorderHistogram> = hists.iter().filter(|h| !h.is_empty()).collect();
        for h in &non_empty {
            debug_assert_eq!(h.kind, kind);
            for (k, d) in h.iter() {
                *bins.entry(k).or_default() += d;
            }
        }
        let n = non_empty.len().max(1) as f64;
        for d in bins.values_mut() {
            *d /= n;
        }
        ReorderHistogram { kind, bins }
    }

    /// `index,density` CSV, one row per non-empty bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,density\n");
        for (k, d) in self.iter() {
            // `{:?}` is the shortest representation that round-trips.
            let _ = writeln!(out, "{k},{d:?}");
        }
        out
    }
}

pub fn compute_rbd(record: &ArrivalRecord) -> ReorderHistogram {
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for a in record.iter() {
        *counts.entry(a.occupancy_after as i64).or_default() += 1;
    }
    ReorderHistogram::from_counts(HistogramKind::Rbd, counts, record.len())
}

/// Displacement of each packet is its 1-based arrival position minus the
/// 1-based rank of its sequence number within the record.
pub fn compute_rd(record: &ArrivalRecord) -> ReorderHistogram {
    let mut by_seq: Vec<(u64, usize)> = record
        .iter()
        .enumerate()
        .map(|(pos, a)| (a.data_seq, pos + 1))
        .collect();
    by_seq.sort_unstable();
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for (rank0, &(_, position)) in by_seq.iter().enumerate() {
        let d = position as i64 - (rank0 as i64 + 1);
        *counts.entry(d).or_default() += 1;
    }
    ReorderHistogram::from_counts(HistogramKind::Rd, counts, record.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyStats {
    pub per_run: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation across runs; 0 for a single run.
    pub std: f64,
}

pub fn occupancy_stats<'a, I>(records: I) -> OccupancyStats
where
    I: IntoIterator<Item = &'a ArrivalRecord>,
{
    let per_run: Vec<f64> = records.into_iter().map(ArrivalRecord::mean_occupancy).collect();
    let (mean, std) = mean_and_sample_std(&per_run);
    OccupancyStats { per_run, mean, std }
}

pub fn mean_and_sample_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
