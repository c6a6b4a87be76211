//! Scenario description and its TOML file format.
//!
//! ```toml
//! name = "custom"
//! scheduler = "fdps"          # fifo | fdps | rtt-half
//! sim_seconds = 50.0
//! runs = 20
//! base_seed = 1
//! clock_offset_ms = 0.0
//! packet_size = 1000
//! mss = 934
//!
//! [[path]]
//! forward = { bandwidth_mbps = 4.0, delay_ms = 10.0 }
//! backward = { bandwidth_mbps = 0.5, delay_ms = 15.0 }   # optional, mirrors forward
//! side_delay_ms = 1.0
//! side_bandwidth_factor = 2.0
//! queue = { policy = "red", min_frac = 0.25, max_frac = 0.75, max_drop_prob = 0.1 }
//! background_flows_fwd = 0
//! background_flows_bwd = 0
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scheduler::SchedulerKind;
use crate::sim::{QueueDiscipline, QueuePolicy};
use crate::time::{SimDelta, SimTime};

pub const MAX_PATHS: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("unknown scenario {0:?}: not a preset and no such file")]
    UnknownScenario(String),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub bandwidth_mbps: f64,
    pub delay_ms: f64,
}

impl LinkSpec {
    pub const fn new(bandwidth_mbps: f64, delay_ms: f64) -> Self {
        LinkSpec {
            bandwidth_mbps,
            delay_ms,
        }
    }

    /// Bytes per second.
    pub fn bandwidth_bytes(&self) -> u64 {
        (self.bandwidth_mbps * 1e6 / 8.0).round() as u64
    }

    pub fn delay(&self) -> SimTime {
        SimTime::from_secs_f64(self.delay_ms / 1e3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QueueSpec {
    DropTail {
        #[serde(default)]
        capacity_bytes: Option<u64>,
    },
    Red {
        #[serde(default = "default_min_frac")]
        min_frac: f64,
        #[serde(default = "default_max_frac")]
        max_frac: f64,
        #[serde(default = "default_max_drop_prob")]
        max_drop_prob: f64,
        #[serde(default)]
        capacity_bytes: Option<u64>,
    },
}

fn default_min_frac() -> f64 {
    0.25
}
fn default_max_frac() -> f64 {
    0.75
}
fn default_max_drop_prob() -> f64 {
    0.1
}

impl Default for QueueSpec {
    fn default() -> Self {
        QueueSpec::Red {
            min_frac: default_min_frac(),
            max_frac: default_max_frac(),
            max_drop_prob: default_max_drop_prob(),
            capacity_bytes: None,
        }
    }
}

impl QueueSpec {
    /// Queue for a bottleneck whose default size is `bdp_bytes`.
    pub fn discipline(&self, bdp_bytes: u64) -> QueueDiscipline {
        match *self {
            QueueSpec::DropTail { capacity_bytes } => QueueDiscipline::drop_tail(capacity_bytes.unwrap_or(bdp_bytes)),
            QueueSpec::Red {
                min_frac,
                max_frac,
                max_drop_prob,
                capacity_bytes,
            } => QueueDiscipline {
                capacity_bytes: capacity_bytes.unwrap_or(bdp_bytes),
                policy: QueuePolicy::SimpleRed {
                    min_frac,
                    max_frac,
                    max_drop_prob,
                },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub forward: LinkSpec,
    #[serde(default)]
    pub backward: Option<LinkSpec>,
    #[serde(default = "default_side_delay_ms")]
    pub side_delay_ms: f64,
    #[serde(default = "default_side_factor")]
    pub side_bandwidth_factor: f64,
    #[serde(default)]
    pub queue: QueueSpec,
    #[serde(default)]
    pub background_flows_fwd: u32,
    #[serde(default)]
    pub background_flows_bwd: u32,
}

fn default_side_delay_ms() -> f64 {
    1.0
}
fn default_side_factor() -> f64 {
    2.0
}

impl PathSpec {
    pub fn symmetric(bandwidth_mbps: f64, delay_ms: f64) -> Self {
        PathSpec {
            forward: LinkSpec::new(bandwidth_mbps, delay_ms),
            backward: None,
            side_delay_ms: default_side_delay_ms(),
            side_bandwidth_factor: default_side_factor(),
            queue: QueueSpec::default(),
            background_flows_fwd: 0,
            background_flows_bwd: 0,
        }
    }

    pub fn backward_link(&self) -> LinkSpec {
        self.backward.unwrap_or(self.forward)
    }

    pub fn side_delay(&self) -> SimTime {
        SimTime::from_secs_f64(self.side_delay_ms / 1e3)
    }

    /// Round-trip propagation delay through both side links in each direction.
    pub fn propagation_rtt(&self) -> SimTime {
        let side = self.side_delay();
        self.forward.delay() + self.backward_link().delay() + SimTime(4 * side.0)
    }
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub paths: Vec<PathSpec>,
    pub scheduler: SchedulerKind,
    pub sim_seconds: f64,
    pub runs: u32,
    pub base_seed: u64,
    pub clock_offset: SimDelta,
    pub packet_size: u32,
    pub mss: u32,
}

impl ScenarioConfig {
    pub fn sim_duration(&self) -> SimTime {
        SimTime::from_secs_f64(self.sim_seconds)
    }

    pub fn with_scheduler(mut self, scheduler: SchedulerKind) -> Self {
        self.scheduler = scheduler;
        self
    }

    // Negated comparisons so that NaN fails every check.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if self.paths.is_empty() || self.paths.len() > MAX_PATHS {
            return Err(invalid("path", format!("need between 1 and {MAX_PATHS} paths, got {}", self.paths.len())));
        }
        if !(self.sim_seconds > 0.0 && self.sim_seconds <= 1e4) {
            return Err(invalid("sim_seconds", "must be in (0, 10000]"));
        }
        if self.runs < 1 {
            return Err(invalid("runs", "must be at least 1"));
        }
        if self.packet_size == 0 {
            return Err(invalid("packet_size", "must be positive"));
        }
        if self.mss == 0 || self.mss > self.packet_size {
            return Err(invalid("mss", "must be positive and no larger than packet_size"));
        }
        for (k, p) in self.paths.iter().enumerate() {
            let links = [("forward", Some(p.forward)), ("backward", p.backward)];
            for (dir, link) in links {
                let Some(l) = link else { continue };
                if !(l.bandwidth_mbps > 0.0) || l.bandwidth_bytes() == 0 {
                    return Err(invalid(format!("path[{k}].{dir}.bandwidth_mbps"), "must be positive"));
                }
                if !(l.delay_ms >= 0.0) {
                    return Err(invalid(format!("path[{k}].{dir}.delay_ms"), "must be non-negative"));
                }
            }
            if !(p.side_delay_ms >= 0.0) {
                return Err(invalid(format!("path[{k}].side_delay_ms"), "must be non-negative"));
            }
            if !(p.side_bandwidth_factor > 0.0) {
                return Err(invalid(format!("path[{k}].side_bandwidth_factor"), "must be positive"));
            }
            if let QueueSpec::Red {
                min_frac,
                max_frac,
                max_drop_prob,
                ..
            } = p.queue
            {
                if !(0.0 <= min_frac && min_frac < max_frac && max_frac <= 1.0) {
                    return Err(invalid(format!("path[{k}].queue"), "need 0 <= min_frac < max_frac <= 1"));
                }
                if !(0.0..=1.0).contains(&max_drop_prob) {
                    return Err(invalid(format!("path[{k}].queue.max_drop_prob"), "must be in [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    #[serde(default)]
    scheduler: Option<SchedulerKind>,
    #[serde(default = "default_sim_seconds")]
    sim_seconds: f64,
    #[serde(default = "default_runs")]
    runs: u32,
    #[serde(default = "default_base_seed")]
    base_seed: u64,
    #[serde(default)]
    clock_offset_ms: f64,
    #[serde(default = "default_packet_size")]
    packet_size: u32,
    #[serde(default = "default_mss")]
    mss: u32,
    #[serde(default, rename = "path")]
    paths: Vec<PathSpec>,
}

fn default_sim_seconds() -> f64 {
    50.0
}
fn default_runs() -> u32 {
    20
}
fn default_base_seed() -> u64 {
    1
}
fn default_packet_size() -> u32 {
    1000
}
fn default_mss() -> u32 {
    934
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Parses and validates a scenario from TOML text.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let scheduler = raw.scheduler.ok_or_else(|| invalid("scheduler", "missing (expected fifo, fdps or rtt-half)"))?;
    if !raw.clock_offset_ms.is_finite() {
        return Err(invalid("clock_offset_ms", "must be finite"));
    }
    let cfg = ScenarioConfig {
        name: raw.name,
        paths: raw.paths,
        scheduler,
        sim_seconds: raw.sim_seconds,
        runs: raw.runs,
        base_seed: raw.base_seed,
        clock_offset: SimDelta::from_secs_f64(raw.clock_offset_ms / 1e3),
        packet_size: raw.packet_size,
        mss: raw.mss,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Resolves a preset name or reads a scenario file.
pub fn load_scenario(name_or_path: &str) -> Result<ScenarioConfig, ConfigError> {
    if let Some(cfg) = super::presets::preset(name_or_path) {
        return Ok(cfg);
    }
    let path = Path::new(name_or_path);
    if !path.is_file() {
        return Err(ConfigError::UnknownScenario(name_or_path.to_string()));
    }
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}
