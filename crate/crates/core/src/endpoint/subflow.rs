//! Single-path sender state: uncoupled NewReno-style AIMD with SACK-driven
//! loss detection, RFC 6298 RTO, and an EWMA delivery-rate estimate.
//!
//! Byte counters (`cwnd`, `ssthresh`, `inflight`) are in payload bytes; every
//! segment carries exactly one MSS.

use std::collections::{BTreeMap, VecDeque};

use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubflowConfig {
    pub mss: u32,
    pub initial_cwnd_segments: u32,
    pub initial_ssthresh: u64,
    pub initial_rto: SimTime,
    pub min_rto: SimTime,
    pub max_rto: SimTime,
    pub dupack_threshold: u32,
}

impl Default for SubflowConfig {
    fn default() -> Self {
        SubflowConfig {
            mss: 934,
            initial_cwnd_segments: 2,
            initial_ssthresh: 64 * 1024,
            initial_rto: SimTime::from_millis(1_000),
            min_rto: SimTime::from_millis(200),
            max_rto: SimTime::from_millis(60_000),
            dupack_threshold: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Segment {
    data_seq: u64,
    sent_at: SimTime,
    retransmitted: bool,
    sacked: bool,
    lost: bool,
    in_pipe: bool,
}

/// What an ACK carries for this subflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubflowAck {
    pub cum_ack: u64,
    pub echo_seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckKind {
    /// Advanced the cumulative ACK point.
    New,
    /// Cumulative point unchanged but the echoed segment was newly acked.
    Duplicate,
    /// Acknowledged nothing new.
    Stale,
}

/// Loss response chosen while processing an ACK or timer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryAction {
    None,
    /// Window halved; lost segments queued for retransmission.
    FastRetransmit,
    /// Window collapsed to one MSS; everything outstanding queued.
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AckOutcome {
    pub kind: AckKind,
    pub newly_acked_bytes: u64,
    pub rtt_sample: Option<SimTime>,
    /// The echoed segment was newly acked and was never retransmitted, so its
    /// timestamps describe a clean one-way trip.
    pub clean_echo: bool,
    pub action: RecoveryAction,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SubflowStats {
    pub sent: u64,
    pub retransmissions: u64,
    pub fast_retransmits: u64,
    pub timeouts: u64,
    pub dup_acks: u64,
    pub stale_acks: u64,
}

#[derive(Debug, Clone)]
pub struct Subflow {
    pub path_id: usize,
    cfg: SubflowConfig,
    cwnd: u64,
    ssthresh: u64,
    srtt: Option<SimTime>,
    rttvar: SimTime,
    rto: SimTime,
    inflight: u64,
    next_seq: u64,
    cum_acked: u64,
    segments: BTreeMap<u64, Segment>,
    retx_queue: VecDeque<u64>,
    fast_recovery: bool,
    recovery_point: u64,
    /// Losses of segments below this were caused by an already-handled
    /// congestion event and do not reduce the window again.
    reduction_point: u64,
    dup_acks: u32,
    avg_throughput: f64,
    last_ack_at: Option<SimTime>,
    timer_deadline: Option<SimTime>,
    timer_generation: u64,
    timer_request: Option<(SimTime, u64)>,
    stats: SubflowStats,
}

impl Subflow {
    pub fn new(path_id: usize, cfg: SubflowConfig) -> Self {
        Subflow {
            path_id,
            cfg,
            cwnd: cfg.initial_cwnd_segments as u64 * cfg.mss as u64,
            ssthresh: cfg.initial_ssthresh,
            srtt: None,
            rttvar: SimTime::ZERO,
            rto: cfg.initial_rto,
            inflight: 0,
            next_seq: 0,
            cum_acked: 0,
            segments: BTreeMap::new(),
            retx_queue: VecDeque::new(),
            fast_recovery: false,
            recovery_point: 0,
            reduction_point: 0,
            dup_acks: 0,
            avg_throughput: 0.0,
            last_ack_at: None,
            timer_deadline: None,
            timer_generation: 0,
            timer_request: None,
            stats: SubflowStats::default(),
        }
    }

    pub fn mss(&self) -> u32 {
        self.cfg.mss
    }

    pub fn cwnd(&self) -> u64 {
        self.cwnd
    }

    pub fn ssthresh(&self) -> u64 {
        self.ssthresh
    }

    pub fn srtt(&self) -> Option<SimTime> {
        self.srtt
    }

    pub fn rttvar(&self) -> SimTime {
        self.rttvar
    }

    pub fn rto(&self) -> SimTime {
        self.rto
    }

    pub fn inflight(&self) -> u64 {
        self.inflight
    }

    pub fn avg_throughput(&self) -> f64 {
        self.avg_throughput
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn cum_acked(&self) -> u64 {
        self.cum_acked
    }

    pub fn in_fast_recovery(&self) -> bool {
        self.fast_recovery
    }

    pub fn stats(&self) -> SubflowStats {
        self.stats
    }

    pub fn has_pending_retransmission(&self) -> bool {
        !self.retx_queue.is_empty()
    }

    /// Room for at least one more segment.
    pub fn can_send(&self) -> bool {
        self.cwnd.saturating_sub(self.inflight) >= self.cfg.mss as u64
    }

    fn outstanding(&self) -> bool {
        self.segments.values().any(|s| !s.sacked)
    }

    /// Data sequence carried by an outstanding subflow segment.
    pub fn data_seq_of(&self, subflow_seq: u64) -> Option<u64> {
        self.segments.get(&subflow_seq).map(|s| s.data_seq)
    }

    /// Next segment waiting for retransmission, as `(subflow_seq, data_seq)`.
    pub fn pop_retransmission(&mut self) -> Option<(u64, u64)> {
        while let Some(seq) = self.retx_queue.pop_front() {
            if let Some(seg) = self.segments.get(&seq) {
                if seg.lost && !seg.sacked {
                    return Some((seq, seg.data_seq));
                }
            }
        }
        None
    }

    /// Records a first transmission and returns its subflow sequence.
    pub fn send_new(&mut self, data_seq: u64, now: SimTime) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.segments.insert(
            seq,
            Segment {
                data_seq,
                sent_at: now,
                retransmitted: false,
                sacked: false,
                lost: false,
                in_pipe: true,
            },
        );
        self.inflight += self.cfg.mss as u64;
        self.stats.sent += 1;
        self.ensure_timer(now);
        seq
    }

    /// Records the retransmission of `seq` previously returned by
    /// [`Subflow::pop_retransmission`].
    pub fn send_retransmission(&mut self, seq: u64, now: SimTime) {
        let mss = self.cfg.mss as u64;
        let seg = self.segments.get_mut(&seq).expect("retransmitting unknown segment");
        debug_assert!(seg.lost && !seg.in_pipe);
        seg.lost = false;
        seg.retransmitted = true;
        seg.in_pipe = true;
        seg.sent_at = now;
        self.inflight += mss;
        self.stats.sent += 1;
        self.stats.retransmissions += 1;
        self.ensure_timer(now);
    }

    fn take_out_of_pipe(inflight: &mut u64, seg: &mut Segment, mss: u64) {
        if seg.in_pipe {
            seg.in_pipe = false;
            *inflight -= mss;
        }
    }

    pub fn on_ack(&mut self, ack: SubflowAck, now: SimTime) -> AckOutcome {
        let mss = self.cfg.mss as u64;
        let mut newly = 0u64;
        let mut rtt_sample = None;
        let mut clean_echo = false;

        if let Some(seg) = self.segments.get_mut(&ack.echo_seq) {
            if !seg.sacked {
                seg.sacked = true;
                Self::take_out_of_pipe(&mut self.inflight, seg, mss);
                newly += mss;
                if !seg.retransmitted {
                    clean_echo = true;
                    rtt_sample = Some(now - seg.sent_at);
                }
            }
        }

        let advanced = ack.cum_ack > self.cum_acked;
        if advanced {
            let acked: Vec<u64> = self.segments.range(..ack.cum_ack).map(|(&k, _)| k).collect();
            for k in acked {
                let mut seg = self.segments.remove(&k).expect("present");
                if !seg.sacked {
                    Self::take_out_of_pipe(&mut self.inflight, &mut seg, mss);
                    newly += mss;
                }
            }
            self.cum_acked = ack.cum_ack;
        }

        if newly == 0 {
            self.stats.stale_acks += 1;
            return AckOutcome {
                kind: AckKind::Stale,
                newly_acked_bytes: 0,
                rtt_sample: None,
                clean_echo: false,
                action: RecoveryAction::None,
            };
        }

        if let Some(r) = rtt_sample {
            self.update_rtt(r);
        }
        self.update_throughput(newly, now);

        let kind = if advanced {
            self.dup_acks = 0;
            if self.fast_recovery && self.cum_acked > self.recovery_point {
                self.fast_recovery = false;
                self.cwnd = self.ssthresh;
            }
            AckKind::New
        } else {
            self.dup_acks += 1;
            self.stats.dup_acks += 1;
            AckKind::Duplicate
        };

        // Duplicate ACKs signal reordering or loss, not an open pipe.
        if kind == AckKind::New && !self.fast_recovery {
            if self.cwnd < self.ssthresh {
                self.cwnd += newly.min(mss);
            } else {
                self.cwnd += (mss * mss / self.cwnd).max(1);
            }
        }

        let action = self.detect_losses();

        if advanced {
            if self.outstanding() {
                self.restart_timer(now);
            } else {
                self.stop_timer();
            }
        }

        AckOutcome {
            kind,
            newly_acked_bytes: newly,
            rtt_sample,
            clean_echo,
            action,
        }
    }

    /// Marks segments with at least `dupack_threshold` SACKed segments above
    /// them as lost, plus the first hole once enough duplicate ACKs arrived.
    fn detect_losses(&mut self) -> RecoveryAction {
        let mss = self.cfg.mss as u64;
        let thresh = self.cfg.dupack_threshold as usize;
        let mut newly_lost: Vec<u64> = Vec::new();
        let mut sacked_above = 0usize;
        for (&seq, seg) in self.segments.iter().rev() {
            if seg.sacked {
                sacked_above += 1;
            } else if sacked_above >= thresh && !seg.lost && !seg.retransmitted {
                newly_lost.push(seq);
            }
        }
        if self.dup_acks >= self.cfg.dupack_threshold {
            if let Some((&seq, seg)) = self.segments.iter().next() {
                if !seg.sacked && !seg.lost && !seg.retransmitted && !newly_lost.contains(&seq) {
                    newly_lost.push(seq);
                }
            }
        }
        if newly_lost.is_empty() {
            return RecoveryAction::None;
        }
        newly_lost.sort_unstable();
        let mut new_event = false;
        for &seq in &newly_lost {
            let seg = self.segments.get_mut(&seq).expect("present");
            seg.lost = true;
            Self::take_out_of_pipe(&mut self.inflight, seg, mss);
            self.retx_queue.push_back(seq);
            if seq >= self.reduction_point {
                new_event = true;
            }
        }
        if new_event && !self.fast_recovery {
            self.ssthresh = (self.cwnd / 2).max(2 * mss);
            self.cwnd = self.ssthresh;
            self.fast_recovery = true;
            self.recovery_point = self.next_seq.saturating_sub(1);
            self.reduction_point = self.next_seq;
            self.stats.fast_retransmits += 1;
            RecoveryAction::FastRetransmit
        } else {
            RecoveryAction::None
        }
    }

    fn update_rtt(&mut self, r: SimTime) {
        match self.srtt {
            None => {
                self.srtt = Some(r);
                self.rttvar = SimTime(r.0 / 2);
                // Rate is seeded from the first RTT.
                self.avg_throughput = self.cwnd as f64 / r.as_secs_f64().max(1e-9);
            }
            Some(s) => {
                let err = s.0.abs_diff(r.0);
                self.rttvar = SimTime((3 * self.rttvar.0 + err) / 4);
                self.srtt = Some(SimTime((7 * s.0 + r.0) / 8));
            }
        }
        let s = self.srtt.expect("set above");
        self.rto = SimTime(s.0 + 4 * self.rttvar.0).max(self.cfg.min_rto).min(self.cfg.max_rto);
    }

    fn update_throughput(&mut self, newly: u64, now: SimTime) {
        if let Some(prev) = self.last_ack_at {
            let gap = now.saturating_sub(prev);
            if gap.0 > 0 && self.srtt.is_some() {
                let rate = newly as f64 / gap.as_secs_f64();
                self.avg_throughput += (rate - self.avg_throughput) / 8.0;
            }
        }
        self.last_ack_at = Some(now);
    }

    fn ensure_timer(&mut self, now: SimTime) {
        if self.timer_deadline.is_none() {
            self.restart_timer(now);
        }
    }

    fn restart_timer(&mut self, now: SimTime) {
        self.timer_generation += 1;
        let deadline = now + self.rto;
        self.timer_deadline = Some(deadline);
        self.timer_request = Some((deadline, self.timer_generation));
    }

    fn stop_timer(&mut self) {
        self.timer_generation += 1;
        self.timer_deadline = None;
        self.timer_request = None;
    }

    /// A timer `(deadline, generation)` the owner must schedule, if any.
    pub fn take_timer_request(&mut self) -> Option<(SimTime, u64)> {
        self.timer_request.take()
    }

    /// Handles a timer event; returns `Timeout` only if `generation` is the
    /// live timer and data is outstanding.
    pub fn on_timer(&mut self, generation: u64, now: SimTime) -> RecoveryAction {
        if generation != self.timer_generation || self.timer_deadline.is_none() {
            return RecoveryAction::None;
        }
        self.timer_deadline = None;
        if !self.outstanding() {
            return RecoveryAction::None;
        }
        let mss = self.cfg.mss as u64;
        self.ssthresh = (self.cwnd / 2).max(2 * mss);
        self.cwnd = mss;
        self.fast_recovery = false;
        self.dup_acks = 0;
        self.reduction_point = self.next_seq;
        self.retx_queue.clear();
        for (&seq, seg) in self.segments.iter_mut() {
            if seg.sacked {
                continue;
            }
            Self::take_out_of_pipe(&mut self.inflight, seg, mss);
            seg.lost = true;
            self.retx_queue.push_back(seq);
        }
        self.rto = SimTime(self.rto.0 * 2).min(self.cfg.max_rto);
        self.stats.timeouts += 1;
        self.restart_timer(now);
        RecoveryAction::Timeout
    }
}
