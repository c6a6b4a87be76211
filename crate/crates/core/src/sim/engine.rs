use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::time::SimTime;

/// A pending event. Events with equal `fire_at` dispatch in `seq_no` order,
/// which is the order they were scheduled in.
#[derive(Debug, Clone)]
pub struct Event<E> {
    pub fire_at: SimTime,
    pub seq_no: u64,
    pub kind: E,
}

impl<E> PartialEq for Event<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq_no == other.seq_no
    }
}

impl<E> Eq for Event<E> {}

impl<E> PartialOrd for Event<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Event<E> {
    // BinaryHeap is a max-heap; invert so the earliest (fire_at, seq_no) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_at
            .cmp(&self.fire_at)
            .then_with(|| other.seq_no.cmp(&self.seq_no))
    }
}

/// Implemented by the world an [`EventQueue`] drives.
pub trait Handler {
    type Event;

    fn handle(&mut self, now: SimTime, event: Self::Event, queue: &mut EventQueue<Self::Event>);
}

/// Deterministic pending-event set with a monotone clock.
#[derive(Debug)]
pub struct EventQueue<E> {
    heap: BinaryHeap<Event<E>>,
    next_seq: u64,
    now: SimTime,
    dispatched: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: SimTime::ZERO,
            dispatched: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Total events popped so far.
    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Adds an event to the pending set and returns its sequence number.
    ///
    /// Scheduling before the current time is a simulator bug and panics.
    pub fn schedule(&mut self, fire_at: SimTime, kind: E) -> u64 {
        assert!(
            fire_at >= self.now,
            "event scheduled into the past: {fire_at} < now {}",
            self.now
        );
        let seq_no = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { fire_at, seq_no, kind });
        seq_no
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.fire_at)
    }

    /// Removes the next event and advances the clock to its firing time.
    pub fn pop(&mut self) -> Option<Event<E>> {
        let ev = self.heap.pop()?;
        debug_assert!(ev.fire_at >= self.now);
        self.now = ev.fire_at;
        self.dispatched += 1;
        Some(ev)
    }

    /// Iterates the pending events in no particular order.
    pub fn pending(&self) -> impl Iterator<Item = &Event<E>> {
        self.heap.iter()
    }

    /// Dispatches every event with `fire_at <= end` and returns how many ran.
    pub fn run_until<H>(&mut self, world: &mut H, end: SimTime) -> u64
    where
        H: Handler<Event = E>,
    {
        let mut count = 0;
        while let Some(t) = self.peek_time() {
            if t > end {
                break;
            }
            let ev = self.pop().expect("peeked event");
            world.handle(ev.fire_at, ev.kind, self);
            count += 1;
        }
        count
    }
}
