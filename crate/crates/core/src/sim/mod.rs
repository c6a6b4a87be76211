//! Deterministic discrete-event core: the event queue, the link/queue model,
//! and seeded random streams.

mod engine;
mod link;
mod rng;

pub use engine::{Event, EventQueue, Handler};
pub use link::{Direction, Link, LinkId, LinkStats, QueueDiscipline, QueuePolicy, TransmitOutcome};
pub use rng::{streams, RngStream};
