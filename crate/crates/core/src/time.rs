//! Integer-nanosecond time base shared by every module.
//!
//! `SimTime` is an absolute instant on the simulator-global clock. `SimDelta`
//! is a signed difference, also used for readings of endpoint clocks that are
//! offset from the global clock (a receiver clock may read negative values).

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

pub const NANOS_PER_MILLI: i64 = 1_000_000;
pub const NANOS_PER_SEC: i64 = 1_000_000_000;

/// Nanoseconds since the simulation epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_nanos(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * NANOS_PER_MILLI as u64)
    }

    pub fn from_secs_f64(s: f64) -> Self {
        SimTime((s * NANOS_PER_SEC as f64).round() as u64)
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / NANOS_PER_SEC as f64
    }

    /// Signed reading of this instant, for clocks that may be offset.
    pub fn as_stamp(self) -> SimDelta {
        SimDelta(self.0 as i64)
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }

    /// Signed difference `self - other`.
    pub fn delta_since(self, other: SimTime) -> SimDelta {
        SimDelta(self.0 as i64 - other.0 as i64)
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}s", self.as_secs_f64())
    }
}

/// Signed nanosecond difference (or a reading of an offset clock).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimDelta(pub i64);

impl SimDelta {
    pub const ZERO: SimDelta = SimDelta(0);

    pub const fn from_nanos(ns: i64) -> Self {
        SimDelta(ns)
    }

    pub const fn from_millis(ms: i64) -> Self {
        SimDelta(ms * NANOS_PER_MILLI)
    }

    pub fn from_secs_f64(s: f64) -> Self {
        SimDelta((s * NANOS_PER_SEC as f64).round() as i64)
    }

    pub const fn as_nanos(self) -> i64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / NANOS_PER_SEC as f64
    }

    pub fn abs(self) -> SimDelta {
        SimDelta(self.0.abs())
    }

    /// Converts a non-negative delta to a duration; negative values clamp to zero.
    pub fn to_duration(self) -> SimTime {
        SimTime(self.0.max(0) as u64)
    }
}

impl Add for SimDelta {
    type Output = SimDelta;
    fn add(self, rhs: SimDelta) -> SimDelta {
        SimDelta(self.0 + rhs.0)
    }
}

impl Sub for SimDelta {
    type Output = SimDelta;
    fn sub(self, rhs: SimDelta) -> SimDelta {
        SimDelta(self.0 - rhs.0)
    }
}

impl Neg for SimDelta {
    type Output = SimDelta;
    fn neg(self) -> SimDelta {
        SimDelta(-self.0)
    }
}

impl fmt::Display for SimDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}s", self.as_secs_f64())
    }
}
