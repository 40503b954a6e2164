//! Integer-nanosecond simulation time.
//!
//! All timestamps and delays in the simulator are exact integer nanosecond
//! counts; there is no floating-point time anywhere in the event path. One
//! nanosecond resolves every delay the model produces at the supported link
//! speeds, so link, switch and gate arithmetic stays exact end to end.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub, SubAssign};

/// An instant on the simulation timeline, in nanoseconds since the epoch.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(u64);

/// A non-negative span of simulated time, in nanoseconds.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Duration(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn as_ns(self) -> u64 {
        self.0
    }

    /// Elapsed time since `earlier`. Panics if `earlier` is in the future.
    pub fn since(self, earlier: SimTime) -> Duration {
        Duration(
            self.0
                .checked_sub(earlier.0)
                .expect("SimTime::since called with a later instant"),
        )
    }

    pub fn checked_since(self, earlier: SimTime) -> Option<Duration> {
        self.0.checked_sub(earlier.0).map(Duration)
    }

    /// Shifts this instant by a signed nanosecond offset, saturating at zero.
    pub fn offset_by(self, offset_ns: i64) -> SimTime {
        SimTime(self.0.saturating_add_signed(offset_ns))
    }

    /// Signed difference `self - other` in nanoseconds.
    pub fn signed_delta_ns(self, other: SimTime) -> i64 {
        self.0 as i64 - other.0 as i64
    }
}

impl Duration {
    pub const ZERO: Duration = Duration(0);
    /// Sentinel for "never": longer than any representable schedule.
    pub const MAX: Duration = Duration(u64::MAX);

    pub const fn from_ns(ns: u64) -> Self {
        Duration(ns)
    }

    pub const fn from_micros(us: u64) -> Self {
        Duration(us * 1_000)
    }

    pub const fn from_millis(ms: u64) -> Self {
        Duration(ms * 1_000_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        Duration(s * 1_000_000_000)
    }

    pub const fn as_ns(self) -> u64 {
        self.0
    }

    pub fn as_micros_f64(self) -> f64 {
        self.0 as f64 / 1_000.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_sub(self, rhs: Duration) -> Option<Duration> {
        self.0.checked_sub(rhs.0).map(Duration)
    }
}

impl Add<Duration> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: Duration) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign<Duration> for SimTime {
    fn add_assign(&mut self, rhs: Duration) {
        self.0 += rhs.0;
    }
}

impl Sub<Duration> for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: Duration) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl Add for Duration {
    type Output = Duration;
    fn add(self, rhs: Duration) -> Duration {
        Duration(self.0 + rhs.0)
    }
}

impl AddAssign for Duration {
    fn add_assign(&mut self, rhs: Duration) {
        self.0 += rhs.0;
    }
}

impl Sub for Duration {
    type Output = Duration;
    fn sub(self, rhs: Duration) -> Duration {
        Duration(self.0 - rhs.0)
    }
}

impl SubAssign for Duration {
    fn sub_assign(&mut self, rhs: Duration) {
        self.0 -= rhs.0;
    }
}

impl Mul<u64> for Duration {
    type Output = Duration;
    fn mul(self, rhs: u64) -> Duration {
        Duration(self.0 * rhs)
    }
}

impl Sum for Duration {
    fn sum<I: Iterator<Item = Duration>>(iter: I) -> Duration {
        iter.fold(Duration::ZERO, Add::add)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.0)
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_is_exact() {
        let t = SimTime::from_ns(1_000);
        assert_eq!(t + Duration::from_micros(1), SimTime::from_ns(2_000));
        assert_eq!(SimTime::from_ns(2_000).since(t), Duration::from_ns(1_000));
        assert_eq!(Duration::from_millis(1).as_ns(), 1_000_000);
        assert_eq!(Duration::from_secs(10).as_ns(), 10_000_000_000);
    }

    #[test]
    fn offset_by_saturates_at_zero() {
        assert_eq!(SimTime::from_ns(100).offset_by(-500), SimTime::ZERO);
        assert_eq!(SimTime::from_ns(100).offset_by(500), SimTime::from_ns(600));
    }

    #[test]
    #[should_panic(expected = "later instant")]
    fn since_panics_backward() {
        let _ = SimTime::from_ns(1).since(SimTime::from_ns(2));
    }
}
