use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::rng::RngStream;
use crate::time::SimTime;

pub type LinkId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum QueuePolicy {
    DropTail,
    /// RED on the instantaneous queue length, gentle mode off.
    SimpleRed {
        min_frac: f64,
        max_frac: f64,
        max_drop_prob: f64,
    },
}

impl QueuePolicy {
    pub const fn default_red() -> Self {
        QueuePolicy::SimpleRed {
            min_frac: 0.25,
            max_frac: 0.75,
            max_drop_prob: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueDiscipline {
    pub capacity_bytes: u64,
    pub policy: QueuePolicy,
}

impl QueueDiscipline {
    pub fn drop_tail(capacity_bytes: u64) -> Self {
        QueueDiscipline {
            capacity_bytes,
            policy: QueuePolicy::DropTail,
        }
    }

    pub fn red(capacity_bytes: u64) -> Self {
        QueueDiscipline {
            capacity_bytes,
            policy: QueuePolicy::default_red(),
        }
    }

    /// Early-drop probability for an arrival that finds `occupancy` bytes queued.
    /// Overflow drops are handled separately.
    pub fn drop_probability(&self, occupancy: u64) -> f64 {
        match self.policy {
            QueuePolicy::DropTail => 0.0,
            QueuePolicy::SimpleRed {
                min_frac,
                max_frac,
                max_drop_prob,
            } => {
                let cap = self.capacity_bytes as f64;
                let lo = min_frac * cap;
                let hi = max_frac * cap;
                let q = occupancy as f64;
                if q < lo {
                    0.0
                } else if q > hi {
                    1.0
                } else if hi <= lo {
                    max_drop_prob
                } else {
                    max_drop_prob * (q - lo) / (hi - lo)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmitOutcome {
    /// Time the last bit reaches the far end of the link.
    Arrival(SimTime),
    Dropped,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkStats {
    pub accepted: u64,
    pub dropped: u64,
    pub peak_occupancy: u64,
}

/// A unidirectional FIFO link: a byte-limited queue feeding a serializer of
/// fixed bandwidth, followed by a fixed propagation delay.
#[derive(Debug, Clone)]
pub struct Link {
    pub bandwidth: u64,
    pub prop_delay: SimTime,
    pub queue: QueueDiscipline,
    pub direction: Direction,
    /// (departure time, size) of packets still queued or being serialized.
    backlog: VecDeque<(SimTime, u32)>,
    occupancy: u64,
    last_departure: SimTime,
    rng: Option<RngStream>,
    stats: LinkStats,
}

impl Link {
    /// `bandwidth` is in bytes per second and must be positive.
    pub fn new(bandwidth: u64, prop_delay: SimTime, queue: QueueDiscipline, direction: Direction) -> Self {
        assert!(bandwidth > 0, "link bandwidth must be positive");
        Link {
            bandwidth,
            prop_delay,
            queue,
            direction,
            backlog: VecDeque::new(),
            occupancy: 0,
            last_departure: SimTime::ZERO,
            rng: None,
            stats: LinkStats::default(),
        }
    }

    /// Attaches the random stream used for early drops.
    pub fn with_rng(mut self, rng: RngStream) -> Self {
        self.rng = Some(rng);
        self
    }

    /// `ceil(size / bandwidth)` in nanoseconds.
    pub fn serialization_time(&self, size: u32) -> SimTime {
        let num = size as u128 * 1_000_000_000u128;
        let bw = self.bandwidth as u128;
        SimTime(num.div_ceil(bw) as u64)
    }

    /// Bytes queued or in serialization at `now`.
    pub fn occupancy_at(&mut self, now: SimTime) -> u64 {
        while let Some(&(departure, size)) = self.backlog.front() {
            if departure > now {
                break;
            }
            self.backlog.pop_front();
            self.occupancy -= size as u64;
        }
        self.occupancy
    }

    pub fn stats(&self) -> LinkStats {
        self.stats
    }

    /// Offers a packet to the link at `now`.
    pub fn transmit(&mut self, size: u32, now: SimTime) -> TransmitOutcome {
        assert!(size > 0, "packet size must be positive");
        let occupancy = self.occupancy_at(now);
        if occupancy + size as u64 > self.queue.capacity_bytes {
            self.stats.dropped += 1;
            return TransmitOutcome::Dropped;
        }
        let p = self.queue.drop_probability(occupancy);
        if p > 0.0 {
            let drop = match self.rng.as_mut() {
                Some(rng) => rng.chance(p),
                None => p >= 1.0,
            };
            if drop {
                self.stats.dropped += 1;
                return TransmitOutcome::Dropped;
            }
        }
        let start = self.last_departure.max(now);
        let departure = start + self.serialization_time(size);
        self.last_departure = departure;
        self.backlog.push_back((departure, size));
        self.occupancy += size as u64;
        self.stats.accepted += 1;
        self.stats.peak_occupancy = self.stats.peak_occupancy.max(self.occupancy);
        TransmitOutcome::Arrival(departure + self.prop_delay)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_mbps(queue: QueueDiscipline) -> Link {
        Link::new(500_000, SimTime::from_millis(10), queue, Direction::Forward)
    }

    #[test]
    fn single_packet_arrival_is_serialization_plus_propagation() {
        let mut link = four_mbps(QueueDiscipline::drop_tail(100_000));
        // 1000 B / 500000 B/s = 2 ms.
        assert_eq!(link.transmit(1000, SimTime::ZERO), TransmitOutcome::Arrival(SimTime::from_millis(12)));
    }

    #[test]
    fn back_to_back_packets_are_one_serialization_apart() {
        let mut link = four_mbps(QueueDiscipline::drop_tail(100_000));
        let a = link.transmit(1000, SimTime::ZERO);
        let b = link.transmit(1000, SimTime::ZERO);
        match (a, b) {
            (TransmitOutcome::Arrival(a), TransmitOutcome::Arrival(b)) => {
                assert_eq!(b - a, link.serialization_time(1000));
            }
            _ => panic!("unexpected drop"),
        }
    }

    #[test]
    fn serialization_rounds_up() {
        let link = Link::new(3, SimTime::ZERO, QueueDiscipline::drop_tail(10), Direction::Forward);
        // 1 byte at 3 B/s = 333_333_333.33 ns.
        assert_eq!(link.serialization_time(1), SimTime(333_333_334));
    }

    #[test]
    fn drop_tail_rejects_when_full() {
        let mut link = four_mbps(QueueDiscipline::drop_tail(2000));
        assert!(matches!(link.transmit(1000, SimTime::ZERO), TransmitOutcome::Arrival(_)));
        assert!(matches!(link.transmit(1000, SimTime::ZERO), TransmitOutcome::Arrival(_)));
        assert_eq!(link.occupancy_at(SimTime::ZERO), 2000);
        assert_eq!(link.transmit(1000, SimTime::ZERO), TransmitOutcome::Dropped);
        assert_eq!(link.stats().dropped, 1);
        // After the first packet finishes serializing there is room again.
        assert!(matches!(link.transmit(1000, SimTime::from_millis(2)), TransmitOutcome::Arrival(_)));
    }

    #[test]
    fn departure_never_precedes_enqueue() {
        let mut link = four_mbps(QueueDiscipline::drop_tail(100_000));
        link.transmit(1000, SimTime::ZERO);
        let t = SimTime::from_millis(50);
        match link.transmit(1000, t) {
            TransmitOutcome::Arrival(a) => assert_eq!(a, t + SimTime::from_millis(12)),
            TransmitOutcome::Dropped => panic!(),
        }
    }

    #[test]
    fn red_curve() {
        let q = QueueDiscipline::red(10_000);
        assert_eq!(q.drop_probability(0), 0.0);
        assert_eq!(q.drop_probability(2_499), 0.0);
        assert_eq!(q.drop_probability(2_500), 0.0);
        assert!((q.drop_probability(5_000) - 0.05).abs() < 1e-12);
        assert!((q.drop_probability(7_500) - 0.1).abs() < 1e-12);
        assert_eq!(q.drop_probability(7_501), 1.0);
    }

    #[test]
    fn red_drops_everything_above_max_threshold() {
        let mut link = four_mbps(QueueDiscipline::red(10_000)).with_rng(RngStream::new(1, 1));
        for _ in 0..8 {
            let _ = link.transmit(1000, SimTime::ZERO);
        }
        // An arrival finding more than 7500 B queued is always dropped.
        assert!(link.occupancy_at(SimTime::ZERO) <= 8_000);
        assert!(link.stats().peak_occupancy <= 10_000);
    }
}
