//! Traffic sources: periodic control flows and rate-limited bulk load.

use crate::frame::Priority;
use crate::time::{Duration, SimTime};
use serde::{Deserialize, Serialize};

/// Fixed-period flow, released at local times `phase + k * period`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicFlowSpec {
    pub payload_bytes: u64,
    pub period: Duration,
    #[serde(default)]
    pub phase: Duration,
    pub priority: Priority,
    /// Optional hard cap on the number of frames emitted.
    #[serde(default)]
    pub count_limit: Option<u64>,
}

/// Token-bucket flow with bucket depth of one frame: frame `k` is released
/// the instant the bucket has accumulated `k+1` frames' worth of bytes, so
/// long-run throughput tracks `rate_bps` exactly and frames go back to back
/// whenever tokens allow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaturatingFlowSpec {
    pub payload_bytes: u64,
    pub rate_bps: u64,
    #[serde(default)]
    pub phase: Duration,
    pub priority: Priority,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrafficPattern {
    Periodic(PeriodicFlowSpec),
    Saturating(SaturatingFlowSpec),
}

impl TrafficPattern {
    pub fn payload_bytes(&self) -> u64 {
        match self {
            TrafficPattern::Periodic(p) => p.payload_bytes,
            TrafficPattern::Saturating(s) => s.payload_bytes,
        }
    }

    pub fn priority(&self) -> Priority {
        match self {
            TrafficPattern::Periodic(p) => p.priority,
            TrafficPattern::Saturating(s) => s.priority,
        }
    }

    /// Local release time of frame `k`, or `None` when the flow emits no
    /// such frame (count limit reached, or zero target rate).
    pub fn release_local(&self, k: u64, wire_len: u64) -> Option<SimTime> {
        match self {
            TrafficPattern::Periodic(p) => {
                if let Some(limit) = p.count_limit {
                    if k >= limit {
                        return None;
                    }
                }
                Some(SimTime::ZERO + p.phase + p.period * k)
            }
            TrafficPattern::Saturating(s) => {
                if s.rate_bps == 0 {
                    return None;
                }
                // Instant at which k full frames have accumulated.
                let bits = u128::from(k) * u128::from(wire_len) * 8;
                let ns = (bits * 1_000_000_000).div_ceil(u128::from(s.rate_bps));
                Some(SimTime::ZERO + s.phase + Duration::from_ns(ns as u64))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic(period_ns: u64, phase_ns: u64) -> TrafficPattern {
        TrafficPattern::Periodic(PeriodicFlowSpec {
            payload_bytes: 256,
            period: Duration::from_ns(period_ns),
            phase: Duration::from_ns(phase_ns),
            priority: Priority::SCHEDULED,
            count_limit: None,
        })
    }

    #[test]
    fn ten_seconds_of_one_ms_frames_is_ten_thousand() {
        let p = periodic(1_000_000, 0);
        let horizon = 10_000_000_000u64;
        let released = (0..)
            .map_while(|k| p.release_local(k, 256))
            .take_while(|t| t.as_ns() < horizon)
            .count();
        assert_eq!(released, 10_000);
    }

    #[test]
    fn phase_offsets_first_release() {
        let p = periodic(1_000_000, 250_000);
        assert_eq!(p.release_local(0, 256), Some(SimTime::from_ns(250_000)));
        assert_eq!(p.release_local(1, 256), Some(SimTime::from_ns(1_250_000)));
    }

    #[test]
    fn count_limit_stops_emission() {
        let p = TrafficPattern::Periodic(PeriodicFlowSpec {
            payload_bytes: 256,
            period: Duration::from_millis(1),
            phase: Duration::ZERO,
            priority: Priority::SCHEDULED,
            count_limit: Some(3),
        });
        assert!(p.release_local(2, 256).is_some());
        assert!(p.release_local(3, 256).is_none());
    }

    #[test]
    fn saturating_rate_arithmetic() {
        // 900 Mbps of 1500 B frames: 750_000 frames in 10 s.
        let s = TrafficPattern::Saturating(SaturatingFlowSpec {
            payload_bytes: 1_500,
            rate_bps: 900_000_000,
            phase: Duration::ZERO,
            priority: Priority::BEST_EFFORT,
        });
        let horizon = 10_000_000_000u64;
        let released = (0..)
            .map_while(|k| s.release_local(k, 1_500))
            .take_while(|t| t.as_ns() < horizon)
            .count() as i64;
        assert!((released - 750_000).abs() <= 750, "released {released}");
    }

    #[test]
    fn saturating_mean_gap_matches_rate() {
        // 90 Mbps of 1500 B frames: inter-frame gap 133.33 us on average.
        let s = TrafficPattern::Saturating(SaturatingFlowSpec {
            payload_bytes: 1_500,
            rate_bps: 90_000_000,
            phase: Duration::ZERO,
            priority: Priority::BEST_EFFORT,
        });
        let t0 = s.release_local(0, 1_500).unwrap();
        let t_n = s.release_local(1_000, 1_500).unwrap();
        let mean_gap = (t_n.as_ns() - t0.as_ns()) as f64 / 1_000.0;
        assert!((mean_gap - 133_333.3).abs() < 1.0, "mean gap {mean_gap}");
    }

    #[test]
    fn saturating_never_exceeds_rate_over_long_windows() {
        let s = TrafficPattern::Saturating(SaturatingFlowSpec {
            payload_bytes: 1_500,
            rate_bps: 90_000_000,
            phase: Duration::ZERO,
            priority: Priority::BEST_EFFORT,
        });
        // Over any window of >= 100 frame-times, the released byte volume
        // stays within the target rate.
        let frame_time_ns = 1_500u64 * 8 * 1_000_000_000 / 90_000_000;
        let window = 100 * frame_time_ns;
        let releases: Vec<u64> = (0..3_000)
            .map(|k| s.release_local(k, 1_500).unwrap().as_ns())
            .collect();
        for (i, &start) in releases.iter().enumerate().step_by(17) {
            let end = start + window;
            let inside = releases[i..].iter().take_while(|&&t| t < end).count() as u64;
            let bits = inside * 1_500 * 8;
            let allowed = (window as u128 * 90_000_000 / 1_000_000_000) as u64 + 1_500 * 8;
            assert!(bits <= allowed, "window at {start} carried {bits} bits");
        }
    }

    #[test]
    fn zero_rate_emits_nothing() {
        let s = TrafficPattern::Saturating(SaturatingFlowSpec {
            payload_bytes: 1_500,
            rate_bps: 0,
            phase: Duration::ZERO,
            priority: Priority::BEST_EFFORT,
        });
        assert_eq!(s.release_local(0, 1_500), None);
    }
}
