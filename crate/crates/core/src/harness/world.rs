//! Topology construction and a single simulation run.
//!
//! Every path is `sender - side link - bottleneck - side link - receiver` in
//! each direction. Background flows get their own side links and share the
//! path's bottleneck in the direction they send data.

use sha2::{Digest, Sha256};

use super::config::{PathSpec, ScenarioConfig};
use crate::endpoint::{
    AckPacket, DataPacket, MptcpReceiver, MptcpSender, SendBuffer, SenderStats, Subflow, SubflowAck, SubflowConfig,
    SubflowReceiver, SubflowStats,
};
use crate::metrics::ArrivalRecord;
use crate::sim::{streams, Direction, EventQueue, Handler, Link, LinkId, LinkStats, QueueDiscipline, RngStream, TransmitOutcome};
use crate::time::SimTime;

pub const ACK_SIZE: u32 = 40;
pub const SEND_BUFFER_SEGMENTS: usize = 256;
pub const SIDE_QUEUE_BYTES: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep every delay-difference update the sender's estimator makes.
    pub trace_estimates: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Packet {
    Data(DataPacket),
    Ack(AckPacket),
    BgData { flow: usize, seq: u64 },
    BgAck { flow: usize, cum: u64, echo: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FlowRef {
    Mptcp(usize),
    Background(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum SimEvent {
    Start,
    /// `packet` finished crossing `routes[route][hop]`.
    Hop { packet: Packet, route: usize, hop: usize },
    Timer(FlowRef),
}

/// One wake-up event per flow stands in for the sequence of timer restarts
/// the transport requests.
#[derive(Debug, Clone, Copy, Default)]
struct TimerSlot {
    wake_at: Option<SimTime>,
    armed: Option<(SimTime, u64)>,
}

struct BackgroundFlow {
    sender: Subflow,
    receiver: SubflowReceiver,
    data_route: usize,
    ack_route: usize,
    timer: TimerSlot,
}

/// Conservation and bound checks for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SanityReport {
    /// MPTCP data packets put on the wire, retransmissions included.
    pub injected: u64,
    /// MPTCP data packets that reached the receiver, duplicates included.
    pub arrived: u64,
    pub dropped: u64,
    pub in_flight: u64,
    /// Delivered sequence is exactly `0, 1, 2, ...`.
    pub gap_free: bool,
    /// Links whose queue ever held more than its capacity.
    pub queue_violations: Vec<LinkId>,
}

impl SanityReport {
    pub fn conserved(&self) -> bool {
        self.injected == self.arrived + self.dropped + self.in_flight
    }

    pub fn ok(&self) -> bool {
        self.conserved() && self.gap_free && self.queue_violations.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub run_index: u32,
    pub seed: u64,
    pub record: ArrivalRecord,
    /// First data sequence not yet delivered in order when the run ended.
    pub next_expected: u64,
    pub events: u64,
    /// SHA-256 over the dispatched events (receiver timestamps excluded).
    pub trace_hash: String,
    pub estimator_trace: Option<Vec<(u8, u8, i64)>>,
    pub sender: SenderStats,
    pub subflows: Vec<SubflowStats>,
    /// Per-path `(srtt, avg_throughput)` when the run ended.
    pub final_paths: Vec<(Option<SimTime>, f64)>,
    pub links: Vec<LinkStats>,
    pub sanity: SanityReport,
}

struct World {
    links: Vec<Link>,
    routes: Vec<Vec<LinkId>>,
    data_routes: Vec<usize>,
    ack_routes: Vec<usize>,
    sender: MptcpSender,
    receiver: MptcpReceiver,
    mptcp_timers: Vec<TimerSlot>,
    background: Vec<BackgroundFlow>,
    packet_size: u32,
    dropped_data: u64,
    arrived_data: u64,
    hasher: Sha256,
}

struct Builder {
    links: Vec<Link>,
    routes: Vec<Vec<LinkId>>,
    seed: u64,
}

impl Builder {
    fn link(&mut self, bandwidth: u64, delay: SimTime, queue: QueueDiscipline, direction: Direction) -> LinkId {
        let id = self.links.len();
        let rng = RngStream::new(self.seed, streams::LINK_BASE + id as u64);
        self.links.push(Link::new(bandwidth.max(1), delay, queue, direction).with_rng(rng));
        id
    }

    fn side(&mut self, spec: &PathSpec, bottleneck_bw: u64, direction: Direction) -> LinkId {
        let bw = (bottleneck_bw as f64 * spec.side_bandwidth_factor).round() as u64;
        self.link(bw, spec.side_delay(), QueueDiscipline::drop_tail(SIDE_QUEUE_BYTES), direction)
    }

    fn route(&mut self, hops: Vec<LinkId>) -> usize {
        self.routes.push(hops);
        self.routes.len() - 1
    }
}

/// Bottleneck queue size: bandwidth times the path's round-trip propagation
/// delay, never less than two full packets.
pub fn bottleneck_capacity(bandwidth: u64, spec: &PathSpec, packet_size: u32) -> u64 {
    let bdp = (bandwidth as u128 * spec.propagation_rtt().as_nanos() as u128 / 1_000_000_000u128) as u64;
    bdp.max(2 * packet_size as u64)
}

impl World {
    fn build(cfg: &ScenarioConfig, seed: u64, opts: RunOptions) -> World {
        let mut b = Builder {
            links: Vec::new(),
            routes: Vec::new(),
            seed,
        };
        let mut data_routes = Vec::new();
        let mut ack_routes = Vec::new();
        let mut bg_specs: Vec<(usize, usize)> = Vec::new();
        for spec in &cfg.paths {
            let (fwd, bwd) = (spec.forward, spec.backward_link());
            let (fbw, bbw) = (fwd.bandwidth_bytes(), bwd.bandwidth_bytes());
            let fq = spec.queue.discipline(bottleneck_capacity(fbw, spec, cfg.packet_size));
            let bq = spec.queue.discipline(bottleneck_capacity(bbw, spec, cfg.packet_size));
            let bott_f = b.link(fbw, fwd.delay(), fq, Direction::Forward);
            let bott_b = b.link(bbw, bwd.delay(), bq, Direction::Backward);

            let s_f = b.side(spec, fbw, Direction::Forward);
            let d_f = b.side(spec, fbw, Direction::Forward);
            let d_b = b.side(spec, bbw, Direction::Backward);
            let s_b = b.side(spec, bbw, Direction::Backward);
            data_routes.push(b.route(vec![s_f, bott_f, d_f]));
            ack_routes.push(b.route(vec![d_b, bott_b, s_b]));

            for _ in 0..spec.background_flows_fwd {
                let (a, c) = (b.side(spec, fbw, Direction::Forward), b.side(spec, fbw, Direction::Forward));
                let (e, g) = (b.side(spec, bbw, Direction::Backward), b.side(spec, bbw, Direction::Backward));
                let data = b.route(vec![a, bott_f, c]);
                let ack = b.route(vec![e, bott_b, g]);
                bg_specs.push((data, ack));
            }
            for _ in 0..spec.background_flows_bwd {
                let (a, c) = (b.side(spec, bbw, Direction::Backward), b.side(spec, bbw, Direction::Backward));
                let (e, g) = (b.side(spec, fbw, Direction::Forward), b.side(spec, fbw, Direction::Forward));
                let data = b.route(vec![a, bott_b, c]);
                let ack = b.route(vec![e, bott_f, g]);
                bg_specs.push((data, ack));
            }
        }

        let sub_cfg = SubflowConfig {
            mss: cfg.mss,
            ..SubflowConfig::default()
        };
        let n = cfg.paths.len();
        let scheduler = cfg.scheduler.build(RngStream::new(seed, streams::SCHEDULER));
        let mut sender = MptcpSender::new(n, sub_cfg, SendBuffer::greedy(SEND_BUFFER_SEGMENTS), scheduler, cfg.packet_size);
        if opts.trace_estimates {
            sender = sender.with_estimator_trace();
        }
        let background = bg_specs
            .into_iter()
            .enumerate()
            .map(|(k, (data_route, ack_route))| BackgroundFlow {
                sender: Subflow::new(k, sub_cfg),
                receiver: SubflowReceiver::default(),
                data_route,
                ack_route,
                timer: TimerSlot::default(),
            })
            .collect();
        World {
            links: b.links,
            routes: b.routes,
            data_routes,
            ack_routes,
            sender,
            receiver: MptcpReceiver::new(n, cfg.clock_offset),
            mptcp_timers: vec![TimerSlot::default(); n],
            background,
            packet_size: cfg.packet_size,
            dropped_data: 0,
            arrived_data: 0,
            hasher: Sha256::new(),
        }
    }

    fn packet_size(&self, p: &Packet) -> u32 {
        match p {
            Packet::Data(d) => d.size,
            Packet::BgData { .. } => self.packet_size,
            Packet::Ack(_) | Packet::BgAck { .. } => ACK_SIZE,
        }
    }

    fn forward(&mut self, packet: Packet, route: usize, hop: usize, now: SimTime, q: &mut EventQueue<SimEvent>) {
        let link = self.routes[route][hop];
        let size = self.packet_size(&packet);
        match self.links[link].transmit(size, now) {
            TransmitOutcome::Arrival(at) => {
                q.schedule(at, SimEvent::Hop { packet, route, hop });
            }
            TransmitOutcome::Dropped => {
                if matches!(packet, Packet::Data(_)) {
                    self.dropped_data += 1;
                }
            }
        }
    }

    fn open_mptcp(&mut self, path: usize, now: SimTime, q: &mut EventQueue<SimEvent>) {
        let route = self.data_routes[path];
        for pkt in self.sender.on_window_open(path, now) {
            self.forward(Packet::Data(pkt), route, 0, now, q);
        }
        for (p, deadline, generation) in self.sender.take_timer_requests() {
            Self::arm(&mut self.mptcp_timers[p], deadline, generation, FlowRef::Mptcp(p), q);
        }
    }

    fn open_background(&mut self, k: usize, now: SimTime, q: &mut EventQueue<SimEvent>) {
        let mut out = Vec::new();
        let flow = &mut self.background[k];
        while flow.sender.can_send() {
            let seq = match flow.sender.pop_retransmission() {
                Some((seq, _)) => {
                    flow.sender.send_retransmission(seq, now);
                    seq
                }
                None => {
                    let next = flow.sender.next_seq();
                    flow.sender.send_new(next, now)
                }
            };
            out.push(seq);
        }
        let route = flow.data_route;
        let request = flow.sender.take_timer_request();
        for seq in out {
            self.forward(Packet::BgData { flow: k, seq }, route, 0, now, q);
        }
        if let Some((deadline, generation)) = request {
            Self::arm(&mut self.background[k].timer, deadline, generation, FlowRef::Background(k), q);
        }
    }

    fn arm(slot: &mut TimerSlot, deadline: SimTime, generation: u64, flow: FlowRef, q: &mut EventQueue<SimEvent>) {
        slot.armed = Some((deadline, generation));
        if slot.wake_at.is_none_or(|w| w > deadline) {
            slot.wake_at = Some(deadline);
            q.schedule(deadline, SimEvent::Timer(flow));
        }
    }

    /// Decides what a wake-up means: `Some(generation)` if the armed timer
    /// has expired, otherwise a later wake-up is rescheduled.
    fn wake(slot: &mut TimerSlot, flow: FlowRef, now: SimTime, q: &mut EventQueue<SimEvent>) -> Option<u64> {
        if slot.wake_at != Some(now) {
            // Superseded by an earlier wake-up that already ran.
            return None;
        }
        slot.wake_at = None;
        let (deadline, generation) = slot.armed?;
        if deadline <= now {
            slot.armed = None;
            Some(generation)
        } else {
            slot.wake_at = Some(deadline);
            q.schedule(deadline, SimEvent::Timer(flow));
            None
        }
    }

    fn deliver(&mut self, packet: Packet, now: SimTime, q: &mut EventQueue<SimEvent>) {
        match packet {
            Packet::Data(pkt) => {
                self.arrived_data += 1;
                let (ack, _) = self.receiver.on_data(&pkt, now);
                let route = self.ack_routes[pkt.path_id];
                self.forward(Packet::Ack(ack), route, 0, now, q);
            }
            Packet::Ack(ack) => {
                let path = ack.path_id;
                self.sender.on_ack(&ack, now);
                self.open_mptcp(path, now, q);
            }
            Packet::BgData { flow, seq } => {
                let cum = self.background[flow].receiver.on_segment(seq);
                let route = self.background[flow].ack_route;
                self.forward(Packet::BgAck { flow, cum, echo: seq }, route, 0, now, q);
            }
            Packet::BgAck { flow, cum, echo } => {
                self.background[flow].sender.on_ack(SubflowAck { cum_ack: cum, echo_seq: echo }, now);
                self.open_background(flow, now, q);
            }
        }
    }

    fn hash_event(&mut self, now: SimTime, event: &SimEvent) {
        let h = &mut self.hasher;
        h.update(now.as_nanos().to_le_bytes());
        match event {
            SimEvent::Start => h.update([0u8]),
            SimEvent::Hop { packet, route, hop } => {
                h.update([1u8]);
                h.update((*route as u32).to_le_bytes());
                h.update((*hop as u32).to_le_bytes());
                match packet {
                    Packet::Data(d) => {
                        h.update([0u8, d.is_retransmission as u8]);
                        for v in [d.data_seq, d.subflow_seq, d.path_id as u64, d.ts_sent.as_nanos() as u64] {
                            h.update(v.to_le_bytes());
                        }
                    }
                    // ts_received is a receiver-clock reading and is left out.
                    Packet::Ack(a) => {
                        h.update([1u8]);
                        for v in [
                            a.path_id as u64,
                            a.cum_subflow_ack,
                            a.echo_subflow_seq,
                            a.cum_data_ack,
                            a.echo_ts_sent.as_nanos() as u64,
                        ] {
                            h.update(v.to_le_bytes());
                        }
                        for &(lo, hi) in &a.sack_ranges {
                            h.update(lo.to_le_bytes());
                            h.update(hi.to_le_bytes());
                        }
                    }
                    Packet::BgData { flow, seq } => {
                        h.update([2u8]);
                        h.update((*flow as u64).to_le_bytes());
                        h.update(seq.to_le_bytes());
                    }
                    Packet::BgAck { flow, cum, echo } => {
                        h.update([3u8]);
                        for v in [*flow as u64, *cum, *echo] {
                            h.update(v.to_le_bytes());
                        }
                    }
                }
            }
            SimEvent::Timer(flow) => {
                let (tag, k) = match flow {
                    FlowRef::Mptcp(p) => (2u8, *p),
                    FlowRef::Background(k) => (3u8, *k),
                };
                h.update([tag]);
                h.update((k as u64).to_le_bytes());
            }
        }
    }
}

impl Handler for World {
    type Event = SimEvent;

    fn handle(&mut self, now: SimTime, event: SimEvent, q: &mut EventQueue<SimEvent>) {
        self.hash_event(now, &event);
        match event {
            SimEvent::Start => {
                for p in 0..self.sender.n_paths() {
                    self.open_mptcp(p, now, q);
                }
                for k in 0..self.background.len() {
                    self.open_background(k, now, q);
                }
            }
            SimEvent::Hop { packet, route, hop } => {
                if hop + 1 < self.routes[route].len() {
                    self.forward(packet, route, hop + 1, now, q);
                } else {
                    self.deliver(packet, now, q);
                }
            }
            SimEvent::Timer(FlowRef::Mptcp(p)) => {
                if let Some(generation) = Self::wake(&mut self.mptcp_timers[p], FlowRef::Mptcp(p), now, q) {
                    self.sender.on_timer(p, generation, now);
                    self.open_mptcp(p, now, q);
                }
            }
            SimEvent::Timer(FlowRef::Background(k)) => {
                if let Some(generation) = Self::wake(&mut self.background[k].timer, FlowRef::Background(k), now, q) {
                    self.background[k].sender.on_timer(generation, now);
                    self.open_background(k, now, q);
                }
            }
        }
    }
}

/// Runs one seeded simulation of `cfg`.
pub fn run_simulation(cfg: &ScenarioConfig, run_index: u32, seed: u64, opts: RunOptions) -> RunResult {
    let mut world = World::build(cfg, seed, opts);
    let mut queue = EventQueue::new();
    queue.schedule(SimTime::ZERO, SimEvent::Start);
    let events = queue.run_until(&mut world, cfg.sim_duration());

    let in_flight = queue
        .pending()
        .filter(|e| matches!(e.kind, SimEvent::Hop { packet: Packet::Data(_), .. }))
        .count() as u64;
    let stats = world.sender.stats();
    let gap_free = world.receiver.delivered().iter().enumerate().all(|(i, &s)| s == i as u64);
    let queue_violations = world
        .links
        .iter()
        .enumerate()
        .filter(|(_, l)| l.stats().peak_occupancy > l.queue.capacity_bytes)
        .map(|(id, _)| id)
        .collect();
    let sanity = SanityReport {
        injected: stats.new_transmissions + stats.retransmissions,
        arrived: world.arrived_data,
        dropped: world.dropped_data,
        in_flight,
        gap_free,
        queue_violations,
    };
    let digest = world.hasher.clone().finalize();
    let trace_hash = digest.iter().map(|b| format!("{b:02x}")).collect();
    RunResult {
        run_index,
        seed,
        next_expected: world.receiver.state().next_expected(),
        events,
        trace_hash,
        estimator_trace: world.sender.estimator().trace().map(<[_]>::to_vec),
        sender: stats,
        subflows: world.sender.subflows().iter().map(Subflow::stats).collect(),
        final_paths: world.sender.subflows().iter().map(|s| (s.srtt(), s.avg_throughput())).collect(),
        links: world.links.iter().map(Link::stats).collect(),
        sanity,
        record: world.receiver.into_record(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::preset;
    use crate::scheduler::SchedulerKind;

    fn short(name: &str, scheduler: SchedulerKind, secs: f64) -> ScenarioConfig {
        let mut cfg = preset(name).unwrap().with_scheduler(scheduler);
        cfg.sim_seconds = secs;
        cfg
    }

    #[test]
    fn bdp_queue_for_four_mbps_ten_ms() {
        let spec = PathSpec::symmetric(4.0, 10.0);
        assert_eq!(bottleneck_capacity(500_000, &spec, 1000), 12_000);
        assert_eq!(bottleneck_capacity(10, &spec, 1000), 2_000);
    }

    #[test]
    fn short_run_is_sane_and_deterministic() {
        let cfg = short("a2", SchedulerKind::Fdps, 3.0);
        let a = run_simulation(&cfg, 0, 11, RunOptions::default());
        let b = run_simulation(&cfg, 0, 11, RunOptions::default());
        assert!(a.sanity.ok(), "{:?}", a.sanity);
        assert!(a.record.len() > 1000);
        assert_eq!(a.trace_hash, b.trace_hash);
        assert_eq!(a.record, b.record);
        let c = run_simulation(&cfg, 0, 12, RunOptions::default());
        assert_ne!(a.trace_hash, c.trace_hash);
    }

    #[test]
    fn clock_offset_only_moves_receiver_stamps() {
        let mut cfg = short("a4", SchedulerKind::Fdps, 2.0);
        let opts = RunOptions { trace_estimates: true };
        let base = run_simulation(&cfg, 0, 5, opts);
        cfg.clock_offset = crate::time::SimDelta::from_millis(3_700);
        let shifted = run_simulation(&cfg, 0, 5, opts);
        assert_eq!(base.trace_hash, shifted.trace_hash);
        assert_eq!(base.estimator_trace, shifted.estimator_trace);
        assert!(!base.estimator_trace.unwrap().is_empty());
    }

    #[test]
    fn background_flows_run_without_breaking_conservation() {
        let cfg = short("three-path", SchedulerKind::Fifo, 3.0);
        let r = run_simulation(&cfg, 0, 3, RunOptions::default());
        assert!(r.sanity.ok(), "{:?}", r.sanity);
    }
}
