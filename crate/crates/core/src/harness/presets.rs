//! Built-in scenarios.

use super::config::{LinkSpec, PathSpec, ScenarioConfig};
use crate::scheduler::SchedulerKind;
use crate::time::SimDelta;

pub const PRESET_NAMES: [&str; 6] = ["a1", "a2", "a3", "a4", "a5", "three-path"];

fn scenario(name: &str, paths: Vec<PathSpec>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        paths,
        scheduler: SchedulerKind::Fdps,
        sim_seconds: 50.0,
        runs: 20,
        base_seed: 1,
        clock_offset: SimDelta::ZERO,
        packet_size: 1000,
        mss: 934,
    }
}

fn with_background(mut p: PathSpec, fwd: u32, bwd: u32) -> PathSpec {
    p.background_flows_fwd = fwd;
    p.background_flows_bwd = bwd;
    p
}

/// Looks up a built-in scenario; the scheduler defaults to `fdps`.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let sym = PathSpec::symmetric;
    let cfg = match name {
        "a1" => scenario(name, vec![sym(4.0, 10.0), sym(4.0, 10.0)]),
        "a2" => scenario(name, vec![sym(4.0, 10.0), sym(4.0, 30.0)]),
        "a3" => scenario(name, vec![sym(2.0, 10.0), sym(8.0, 30.0)]),
        "a4" => scenario(
            name,
            vec![with_background(sym(4.0, 10.0), 1, 0), with_background(sym(4.0, 30.0), 1, 0)],
        ),
        "a5" => {
            let mut p1 = with_background(sym(4.0, 10.0), 1, 1);
            p1.backward = Some(LinkSpec::new(0.5, 15.0));
            let mut p2 = with_background(sym(8.0, 30.0), 1, 1);
            p2.backward = Some(LinkSpec::new(1.0, 35.0));
            scenario(name, vec![p1, p2])
        }
        "three-path" => scenario(
            name,
            vec![
                with_background(sym(2.0, 10.0), 1, 0),
                with_background(sym(4.0, 30.0), 1, 0),
                with_background(sym(8.0, 50.0), 1, 0),
            ],
        ),
        _ => return None,
    };
    Some(cfg)
}

pub fn all_presets() -> Vec<ScenarioConfig> {
    PRESET_NAMES.iter().filter_map(|n| preset(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn links(name: &str) -> Vec<(LinkSpec, LinkSpec, u32, u32)> {
        preset(name)
            .unwrap()
            .paths
            .iter()
            .map(|p| (p.forward, p.backward_link(), p.background_flows_fwd, p.background_flows_bwd))
            .collect()
    }

    fn l(bw: f64, d: f64) -> LinkSpec {
        LinkSpec::new(bw, d)
    }

    #[test]
    fn table_values_field_by_field() {
        assert_eq!(links("a1"), vec![(l(4.0, 10.0), l(4.0, 10.0), 0, 0), (l(4.0, 10.0), l(4.0, 10.0), 0, 0)]);
        assert_eq!(links("a2"), vec![(l(4.0, 10.0), l(4.0, 10.0), 0, 0), (l(4.0, 30.0), l(4.0, 30.0), 0, 0)]);
        assert_eq!(links("a3"), vec![(l(2.0, 10.0), l(2.0, 10.0), 0, 0), (l(8.0, 30.0), l(8.0, 30.0), 0, 0)]);
        assert_eq!(links("a4"), vec![(l(4.0, 10.0), l(4.0, 10.0), 1, 0), (l(4.0, 30.0), l(4.0, 30.0), 1, 0)]);
        assert_eq!(links("a5"), vec![(l(4.0, 10.0), l(0.5, 15.0), 1, 1), (l(8.0, 30.0), l(1.0, 35.0), 1, 1)]);
        assert_eq!(
            links("three-path"),
            vec![(l(2.0, 10.0), l(2.0, 10.0), 1, 0), (l(4.0, 30.0), l(4.0, 30.0), 1, 0), (l(8.0, 50.0), l(8.0, 50.0), 1, 0)]
        );
    }

    #[test]
    fn shared_defaults() {
        for cfg in all_presets() {
            cfg.validate().unwrap();
            assert_eq!((cfg.sim_seconds, cfg.runs, cfg.packet_size, cfg.mss), (50.0, 20, 1000, 934));
            for p in &cfg.paths {
                assert_eq!((p.side_delay_ms, p.side_bandwidth_factor), (1.0, 2.0));
            }
        }
        assert_eq!(all_presets().len(), PRESET_NAMES.len());
        assert!(preset("nosuch").is_none());
    }

    #[test]
    fn four_mbps_is_half_a_megabyte_per_second() {
        assert_eq!(l(4.0, 10.0).bandwidth_bytes(), 500_000);
    }
}
