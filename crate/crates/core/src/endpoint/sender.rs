use super::packet::{AckPacket, DataPacket};
use super::send_buffer::SendBuffer;
use super::subflow::{AckOutcome, RecoveryAction, Subflow, SubflowAck, SubflowConfig};
use crate::estimator::{FdEstimator, PathSample};
use crate::scheduler::{PacketScheduler, PathView, SchedulerContext, SchedulerQuery};
use crate::time::SimTime;

/// Silence longer than this many max-srtt intervals invalidates a path's
/// delay estimates.
pub const STALE_RTT_MULTIPLE: u64 = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SenderStats {
    pub window_opens: u64,
    pub scheduler_queries: u64,
    pub new_transmissions: u64,
    pub retransmissions: u64,
    pub estimator_samples: u64,
}

/// Sending MPTCP endpoint. Segments leave the shared buffer only when a
/// subflow with window room pulls them through the scheduler.
pub struct MptcpSender {
    subflows: Vec<Subflow>,
    buffer: SendBuffer,
    scheduler: Box<dyn PacketScheduler>,
    estimator: FdEstimator,
    packet_size: u32,
    stats: SenderStats,
}

impl MptcpSender {
    pub fn new(
        n_paths: usize,
        cfg: SubflowConfig,
        buffer: SendBuffer,
        scheduler: Box<dyn PacketScheduler>,
        packet_size: u32,
    ) -> Self {
        assert!(n_paths >= 1);
        MptcpSender {
            subflows: (0..n_paths).map(|p| Subflow::new(p, cfg)).collect(),
            buffer,
            scheduler,
            estimator: FdEstimator::new(n_paths),
            packet_size,
            stats: SenderStats::default(),
        }
    }

    /// Records every delay-difference update for later comparison.
    pub fn with_estimator_trace(mut self) -> Self {
        self.estimator = self.estimator.with_trace();
        self
    }

    pub fn n_paths(&self) -> usize {
        self.subflows.len()
    }

    pub fn subflow(&self, path: usize) -> &Subflow {
        &self.subflows[path]
    }

    pub fn subflows(&self) -> &[Subflow] {
        &self.subflows
    }

    pub fn estimator(&self) -> &FdEstimator {
        &self.estimator
    }

    pub fn buffer(&self) -> &SendBuffer {
        &self.buffer
    }

    pub fn stats(&self) -> SenderStats {
        self.stats
    }

    fn path_views(&self) -> Vec<PathView> {
        self.subflows
            .iter()
            .map(|s| PathView {
                srtt: s.srtt(),
                avg_throughput: s.avg_throughput(),
            })
            .collect()
    }

    fn stale_horizon(&self) -> Option<SimTime> {
        self.subflows
            .iter()
            .filter_map(Subflow::srtt)
            .max()
            .map(|s| SimTime(s.0 * STALE_RTT_MULTIPLE))
    }

    /// Fills the window of `path`: pending retransmissions first, then one
    /// scheduler query per free MSS slot.
    pub fn on_window_open(&mut self, path: usize, now: SimTime) -> Vec<DataPacket> {
        self.stats.window_opens += 1;
        let mut out = Vec::new();
        let stamp = now.as_stamp();
        while self.subflows[path].can_send() {
            if let Some((seq, data_seq)) = self.subflows[path].pop_retransmission() {
                self.subflows[path].send_retransmission(seq, now);
                self.stats.retransmissions += 1;
                out.push(DataPacket {
                    data_seq,
                    subflow_seq: seq,
                    path_id: path,
                    size: self.packet_size,
                    ts_sent: stamp,
                    is_retransmission: true,
                });
                continue;
            }
            self.buffer.refill();
            if self.buffer.is_empty() {
                break;
            }
            let views = self.path_views();
            let ctx = SchedulerContext {
                paths: &views,
                estimates: self.estimator.matrix(),
                mss: self.subflows[path].mss(),
                stale_horizon: self.stale_horizon(),
            };
            let query = SchedulerQuery {
                requesting_path: path,
                buffer_len: self.buffer.len(),
                now,
            };
            let index = self.scheduler.schedule(&query, &ctx);
            self.stats.scheduler_queries += 1;
            assert!(index < query.buffer_len, "scheduler index {index} out of range");
            let data_seq = self.buffer.take(index).expect("index in range");
            self.buffer.refill();
            let seq = self.subflows[path].send_new(data_seq, now);
            self.stats.new_transmissions += 1;
            out.push(DataPacket {
                data_seq,
                subflow_seq: seq,
                path_id: path,
                size: self.packet_size,
                ts_sent: stamp,
                is_retransmission: false,
            });
        }
        out
    }

    /// Processes an ACK; clean echoes feed the delay-difference estimator.
    pub fn on_ack(&mut self, ack: &AckPacket, now: SimTime) -> AckOutcome {
        let path = ack.path_id;
        let outcome = self.subflows[path].on_ack(
            SubflowAck {
                cum_ack: ack.cum_subflow_ack,
                echo_seq: ack.echo_subflow_seq,
            },
            now,
        );
        if outcome.clean_echo {
            self.estimator.ingest_sample(
                PathSample {
                    path_id: path,
                    ts_sent: ack.echo_ts_sent,
                    ts_received: ack.ts_received,
                },
                now,
            );
            self.stats.estimator_samples += 1;
        }
        outcome
    }

    pub fn on_timer(&mut self, path: usize, generation: u64, now: SimTime) -> RecoveryAction {
        self.subflows[path].on_timer(generation, now)
    }

    /// Retransmission timers that need scheduling, as `(path, deadline, generation)`.
    pub fn take_timer_requests(&mut self) -> Vec<(usize, SimTime, u64)> {
        self.subflows
            .iter_mut()
            .filter_map(|s| s.take_timer_request().map(|(d, g)| (s.path_id, d, g)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::{FifoScheduler, SchedulerKind};
    use std::sync::{Arc, Mutex};

    /// Records each query and answers with the head.
    struct Probe(Arc<Mutex<Vec<SchedulerQuery>>>);

    impl PacketScheduler for Probe {
        fn kind(&self) -> SchedulerKind {
            SchedulerKind::Fifo
        }

        fn schedule(&mut self, query: &SchedulerQuery, _ctx: &SchedulerContext<'_>) -> usize {
            self.0.lock().unwrap().push(*query);
            0
        }
    }

    fn cfg(initial: u32) -> SubflowConfig {
        SubflowConfig {
            initial_cwnd_segments: initial,
            ..SubflowConfig::default()
        }
    }

    #[test]
    fn one_query_per_free_slot() {
        let log = Arc::new(Mutex::new(vec![]));
        let mut s = MptcpSender::new(2, cfg(3), SendBuffer::finite(10, 10), Box::new(Probe(log.clone())), 1000);
        let sent = s.on_window_open(0, SimTime::ZERO);
        assert_eq!(sent.len(), 3);
        assert_eq!(log.lock().unwrap().len(), 3);
        assert!(log.lock().unwrap().iter().all(|q| q.requesting_path == 0));
        assert_eq!(s.buffer().len(), 7);
    }

    #[test]
    fn empty_buffer_sends_nothing() {
        let mut s = MptcpSender::new(1, cfg(3), SendBuffer::finite(4, 0), Box::new(FifoScheduler), 1000);
        assert!(s.on_window_open(0, SimTime::ZERO).is_empty());
        assert_eq!(s.stats().scheduler_queries, 0);
    }

    #[test]
    fn fifo_dispatches_in_sequence_across_paths() {
        let mut s = MptcpSender::new(2, cfg(1), SendBuffer::finite(10, 10), Box::new(FifoScheduler), 1000);
        let mut seqs = vec![];
        seqs.extend(s.on_window_open(0, SimTime::ZERO).iter().map(|p| p.data_seq));
        seqs.extend(s.on_window_open(1, SimTime::ZERO).iter().map(|p| p.data_seq));
        assert_eq!(seqs, vec![0, 1]);
        let ack = AckPacket {
            path_id: 0,
            cum_subflow_ack: 1,
            echo_subflow_seq: 0,
            cum_data_ack: 1,
            sack_ranges: vec![],
            echo_ts_sent: SimTime::ZERO.as_stamp(),
            ts_received: SimTime::from_millis(12).as_stamp(),
        };
        s.on_ack(&ack, SimTime::from_millis(24));
        let next = s.on_window_open(0, SimTime::from_millis(24));
        assert_eq!(next.iter().map(|p| p.data_seq).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(s.stats().estimator_samples, 1);
    }

    #[test]
    fn stale_ack_feeds_no_sample() {
        let mut s = MptcpSender::new(1, cfg(1), SendBuffer::finite(4, 4), Box::new(FifoScheduler), 1000);
        s.on_window_open(0, SimTime::ZERO);
        let ack = AckPacket {
            path_id: 0,
            cum_subflow_ack: 1,
            echo_subflow_seq: 0,
            cum_data_ack: 1,
            sack_ranges: vec![],
            echo_ts_sent: SimTime::ZERO.as_stamp(),
            ts_received: SimTime::from_millis(12).as_stamp(),
        };
        s.on_ack(&ack, SimTime::from_millis(24));
        s.on_ack(&ack, SimTime::from_millis(25));
        assert_eq!(s.stats().estimator_samples, 1);
    }

    #[test]
    fn retransmission_goes_before_new_data() {
        let mut s = MptcpSender::new(1, cfg(1), SendBuffer::finite(4, 4), Box::new(FifoScheduler), 1000);
        s.on_window_open(0, SimTime::ZERO);
        let (_, deadline, generation) = s.take_timer_requests()[0];
        assert_eq!(s.on_timer(0, generation, deadline), RecoveryAction::Timeout);
        let sent = s.on_window_open(0, deadline);
        assert_eq!(sent.len(), 1);
        assert!(sent[0].is_retransmission);
        assert_eq!(sent[0].data_seq, 0);
        assert_eq!(sent[0].ts_sent, deadline.as_stamp());
    }
}
