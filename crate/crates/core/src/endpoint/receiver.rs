use std::collections::BTreeSet;

use super::packet::{AckPacket, DataPacket};
use crate::metrics::ArrivalRecord;
use crate::time::{SimDelta, SimTime};

/// SACK blocks carried per ACK.
pub const MAX_SACK_BLOCKS: usize = 3;

/// Connection-level in-order delivery with an unbounded reorder buffer.
#[derive(Debug, Clone)]
pub struct ReceiverState {
    next_expected: u64,
    reorder_buffer: BTreeSet<u64>,
    /// Receiver clock = global clock + offset.
    pub clock_offset: SimDelta,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataOutcome {
    pub delivered: Vec<u64>,
    /// Reorder-buffer occupancy in packets, after delivery.
    pub occupancy_after: u64,
    pub duplicate: bool,
}

impl ReceiverState {
    pub fn new(first_seq: u64, clock_offset: SimDelta) -> Self {
        ReceiverState {
            next_expected: first_seq,
            reorder_buffer: BTreeSet::new(),
            clock_offset,
        }
    }

    pub fn next_expected(&self) -> u64 {
        self.next_expected
    }

    pub fn occupancy(&self) -> u64 {
        self.reorder_buffer.len() as u64
    }

    pub fn buffered(&self) -> impl Iterator<Item = u64> + '_ {
        self.reorder_buffer.iter().copied()
    }

    /// Reading of the receiver clock at global time `now`.
    pub fn clock(&self, now: SimTime) -> SimDelta {
        now.as_stamp() + self.clock_offset
    }

    pub fn on_data(&mut self, data_seq: u64) -> DataOutcome {
        if data_seq < self.next_expected || self.reorder_buffer.contains(&data_seq) {
            return DataOutcome {
                delivered: Vec::new(),
                occupancy_after: self.occupancy(),
                duplicate: true,
            };
        }
        let mut delivered = Vec::new();
        if data_seq == self.next_expected {
            delivered.push(data_seq);
            self.next_expected += 1;
            while self.reorder_buffer.first() == Some(&self.next_expected) {
                self.reorder_buffer.pop_first();
                delivered.push(self.next_expected);
                self.next_expected += 1;
            }
        } else {
            self.reorder_buffer.insert(data_seq);
        }
        DataOutcome {
            delivered,
            occupancy_after: self.occupancy(),
            duplicate: false,
        }
    }

    /// The lowest `max_blocks` contiguous runs in the reorder buffer.
    pub fn sack_ranges(&self, max_blocks: usize) -> Vec<(u64, u64)> {
        let mut ranges: Vec<(u64, u64)> = Vec::new();
        for s in self.reorder_buffer.iter().copied() {
            match ranges.last_mut() {
                Some((_, hi)) if *hi + 1 == s => *hi = s,
                _ => {
                    if ranges.len() == max_blocks {
                        break;
                    }
                    ranges.push((s, s));
                }
            }
        }
        ranges
    }
}

/// Per-path cumulative subflow sequence tracking.
#[derive(Debug, Clone, Default)]
pub struct SubflowReceiver {
    next_expected: u64,
    above: BTreeSet<u64>,
}

impl SubflowReceiver {
    pub fn on_segment(&mut self, subflow_seq: u64) -> u64 {
        if subflow_seq == self.next_expected {
            self.next_expected += 1;
            while self.above.first() == Some(&self.next_expected) {
                self.above.pop_first();
                self.next_expected += 1;
            }
        } else if subflow_seq > self.next_expected {
            self.above.insert(subflow_seq);
        }
        self.next_expected
    }

    pub fn cum_ack(&self) -> u64 {
        self.next_expected
    }
}

/// Receiving MPTCP endpoint: one ACK per data packet, arrival record for
/// the reordering metrics.
#[derive(Debug, Clone)]
pub struct MptcpReceiver {
    state: ReceiverState,
    subflows: Vec<SubflowReceiver>,
    record: ArrivalRecord,
    delivered: Vec<u64>,
    duplicates: u64,
}

impl MptcpReceiver {
    pub fn new(n_paths: usize, clock_offset: SimDelta) -> Self {
        MptcpReceiver {
            state: ReceiverState::new(0, clock_offset),
            subflows: vec![SubflowReceiver::default(); n_paths],
            record: ArrivalRecord::new(),
            delivered: Vec::new(),
            duplicates: 0,
        }
    }

    pub fn state(&self) -> &ReceiverState {
        &self.state
    }

    pub fn record(&self) -> &ArrivalRecord {
        &self.record
    }

    pub fn into_record(self) -> ArrivalRecord {
        self.record
    }

    /// Data sequences handed to the application, in delivery order.
    pub fn delivered(&self) -> &[u64] {
        &self.delivered
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    /// Handles a data packet arriving at global time `now`.
    pub fn on_data(&mut self, pkt: &DataPacket, now: SimTime) -> (AckPacket, DataOutcome) {
        let cum_subflow_ack = self.subflows[pkt.path_id].on_segment(pkt.subflow_seq);
        let outcome = self.state.on_data(pkt.data_seq);
        if outcome.duplicate {
            self.duplicates += 1;
        } else {
            self.record.push(pkt.data_seq, outcome.occupancy_after);
            self.delivered.extend_from_slice(&outcome.delivered);
        }
        let ack = AckPacket {
            path_id: pkt.path_id,
            cum_subflow_ack,
            echo_subflow_seq: pkt.subflow_seq,
            cum_data_ack: self.state.next_expected(),
            sack_ranges: self.state.sack_ranges(MAX_SACK_BLOCKS),
            echo_ts_sent: pkt.ts_sent,
            ts_received: self.state.clock(now),
        };
        (ack, outcome)
    }
}
