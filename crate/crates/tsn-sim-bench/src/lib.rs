//! Benchmark scenarios shared by the criterion targets.

use tsn_sim::presets;
use tsn_sim::ScenarioConfig;

/// A loaded strict-priority scenario trimmed to the given horizon.
pub fn exp2_trimmed(duration_ns: u64) -> ScenarioConfig {
    let mut cfg = presets::preset("exp2_1g").expect("preset exists");
    cfg.duration_ns = duration_ns;
    cfg
}

/// A gated scenario trimmed to the given horizon.
pub fn exp3_trimmed(duration_ns: u64) -> ScenarioConfig {
    let mut cfg = presets::preset("exp3_1g").expect("preset exists");
    cfg.duration_ns = duration_ns;
    cfg
}
