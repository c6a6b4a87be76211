//! Discrete-event multipath transport simulator with pluggable pull-based
//! packet schedulers and receiver-side reordering metrics.

pub mod endpoint;
pub mod estimator;
pub mod harness;
pub mod metrics;
pub mod scheduler;
pub mod sim;
pub mod time;

pub use estimator::{DelayDiffMatrix, FdEstimator, NoEstimate, PathSample};
pub use metrics::{compute_rbd, compute_rd, occupancy_stats, ArrivalRecord, HistogramKind, OccupancyStats, ReorderHistogram};
pub use scheduler::{PacketScheduler, SchedulerKind};
pub use time::{SimDelta, SimTime};
pub use harness::{load_scenario, run_batch, BatchResult, ScenarioConfig};
