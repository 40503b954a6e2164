//! Property tests for the pure pieces: event ordering, gate lookups,
//! transmission arithmetic and the statistics pipeline.

use proptest::prelude::*;
use tsn_sim::analytics::summarize_delays_ns;
use tsn_sim::engine::Engine;
use tsn_sim::gcl::{GateControlList, GclEntry};
use tsn_sim::time::{Duration, SimTime};
use tsn_sim::transmission_delay;

proptest! {
    #[test]
    fn events_process_in_time_then_insertion_order(times in prop::collection::vec(0u64..1_000, 1..200)) {
        let mut eng: Engine<usize> = Engine::new();
        for (i, &t) in times.iter().enumerate() {
            eng.schedule(SimTime::from_ns(t), i).unwrap();
        }
        let mut seen: Vec<(u64, usize)> = Vec::new();
        eng.run_until(SimTime::from_ns(1_000), |_, at, i| seen.push((at.as_ns(), i)));
        prop_assert_eq!(seen.len(), times.len());
        for w in seen.windows(2) {
            prop_assert!(w[0].0 <= w[1].0);
            if w[0].0 == w[1].0 {
                prop_assert!(w[0].1 < w[1].1, "tie broken out of insertion order");
            }
        }
    }

    #[test]
    fn transmission_delay_is_exact_ceiling(len in 0u64..10_000, cap in 1u64..10_000_000_000) {
        let d = transmission_delay(len, std::num::NonZeroU64::new(cap).unwrap()).as_ns();
        let bits = u128::from(len) * 8 * 1_000_000_000;
        prop_assert!(u128::from(d) * u128::from(cap) >= bits);
        if d > 0 {
            prop_assert!(u128::from(d - 1) * u128::from(cap) < bits);
        }
    }

    #[test]
    fn gate_lookup_matches_linear_scan(
        durations in prop::collection::vec(1u64..5_000, 1..8),
        masks in prop::collection::vec(0u8..=255, 8),
        probe in 0u64..100_000,
    ) {
        let cycle: u64 = durations.iter().sum();
        let entries: Vec<GclEntry> = durations
            .iter()
            .zip(&masks)
            .map(|(&d, &m)| GclEntry { duration: Duration::from_ns(d), gate_mask: m })
            .collect();
        let gcl = GateControlList::new(SimTime::ZERO, Duration::from_ns(cycle), entries.clone()).unwrap();
        // Reference: walk the schedule linearly.
        let phase = probe % cycle;
        let mut at = 0u64;
        let mut expect = entries[0].gate_mask;
        for e in &entries {
            if phase >= at && phase < at + e.duration.as_ns() {
                expect = e.gate_mask;
                break;
            }
            at += e.duration.as_ns();
        }
        prop_assert_eq!(gcl.gate_state(SimTime::from_ns(probe)), expect);
    }

    #[test]
    fn summaries_are_permutation_invariant(mut delays in prop::collection::vec(-1_000_000i64..10_000_000, 1..300)) {
        let a = summarize_delays_ns(delays.iter().copied()).unwrap();
        delays.reverse();
        let third = delays.len() / 3;
        delays.rotate_left(third);
        let b = summarize_delays_ns(delays.iter().copied()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn summary_respects_order_relations(delays in prop::collection::vec(0i64..10_000_000, 1..300)) {
        let s = summarize_delays_ns(delays.iter().copied()).unwrap();
        prop_assert!(s.min_ns as f64 <= s.mean_ns + 1e-9);
        prop_assert!(s.mean_ns <= s.max_ns as f64 + 1e-9);
        prop_assert_eq!(s.max_minus_min_ns(), s.max_ns - s.min_ns);
        prop_assert!(s.std_ns >= 0.0);
    }
}
