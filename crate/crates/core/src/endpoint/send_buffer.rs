use std::collections::VecDeque;

/// Shared send buffer of unsent MSS-sized segments.
///
/// Taking the segment at index `k` closes the gap, so later segments shift
/// down by one and keep their relative order.
#[derive(Debug, Clone)]
pub struct SendBuffer {
    segments: VecDeque<u64>,
    next_new_seq: u64,
    capacity: usize,
    /// Segments the application still has to hand over; `None` is unbounded.
    remaining: Option<u64>,
}

impl SendBuffer {
    /// An application that always has data: the buffer is kept at `capacity`.
    pub fn greedy(capacity: usize) -> Self {
        assert!(capacity >= 1);
        let mut b = SendBuffer {
            segments: VecDeque::with_capacity(capacity),
            next_new_seq: 0,
            capacity,
            remaining: None,
        };
        b.refill();
        b
    }

    /// An application with exactly `total` segments to send.
    pub fn finite(capacity: usize, total: u64) -> Self {
        let mut b = SendBuffer {
            segments: VecDeque::with_capacity(capacity),
            next_new_seq: 0,
            capacity,
            remaining: Some(total),
        };
        b.refill();
        b
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn head_data_seq(&self) -> Option<u64> {
        self.segments.front().copied()
    }

    pub fn get(&self, index: usize) -> Option<u64> {
        self.segments.get(index).copied()
    }

    /// Removes and returns the data sequence at `index`.
    pub fn take(&mut self, index: usize) -> Option<u64> {
        self.segments.remove(index)
    }

    /// Tops the buffer up from the application.
    pub fn refill(&mut self) {
        while self.segments.len() < self.capacity {
            match &mut self.remaining {
                Some(0) => break,
                Some(n) => *n -= 1,
                None => {}
            }
            self.segments.push_back(self.next_new_seq);
            self.next_new_seq += 1;
        }
    }

    /// Sequences handed over by the application so far.
    pub fn produced(&self) -> u64 {
        self.next_new_seq
    }
}
