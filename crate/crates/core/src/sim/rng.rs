use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent, reproducible random stream keyed by `(seed, stream_id)`.
///
/// ChaCha is platform independent, and each stream id selects a distinct
/// ChaCha stream, so two streams never share state.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Fair coin: `true` with probability 1/2.
    pub fn bernoulli(&mut self) -> bool {
        self.inner.next_u32() & 1 == 1
    }

    /// `true` with probability `p` (clamped to [0, 1]).
    pub fn chance(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.inner.random::<f64>() < p
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform_u64(&mut self, upper_exclusive: u64) -> u64 {
        self.inner.random_range(0..upper_exclusive)
    }
}

/// Stream-id namespaces so that flows, queues and schedulers never collide.
pub mod streams {
    pub const SCHEDULER: u64 = 1;
    pub const LINK_BASE: u64 = 1 << 20;
    pub const FLOW_BASE: u64 = 2 << 20;
}
