use core::fmt;

use crate::math;

const TICKS_PER_SECOND: u64 = 1_000_000_000_000;

/// Simulation time in integer picoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_ticks(ticks: u64) -> Self {
        SimTime(ticks)
    }

    /// Nearest picosecond; `None` for negative, non-finite or overflowing input.
    pub fn from_secs(s: f64) -> Option<Self> {
        let t = math::round(s * TICKS_PER_SECOND as f64);
        if !(t >= 0.0 && t < u64::MAX as f64) {
            return None;
        }
        Some(SimTime(t as u64))
    }

    pub const fn ticks(self) -> u64 {
        self.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / TICKS_PER_SECOND as f64
    }

    pub fn saturating_add(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(other.0))
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }

    pub fn mul(self, n: u64) -> SimTime {
        SimTime(self.0.saturating_mul(n))
    }

    /// Smallest `k` with `k * step >= self`.
    pub fn div_ceil(self, step: SimTime) -> u64 {
        self.0.div_ceil(step.0)
    }
}

/// Exact decimal seconds with twelve fractional digits.
impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{:012}",
            self.0 / TICKS_PER_SECOND,
            self.0 % TICKS_PER_SECOND
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn round_trip() {
        let t = SimTime::from_secs(1e-3).unwrap();
        assert_eq!(t.ticks(), 1_000_000_000);
        assert_eq!(t.to_string(), "0.001000000000");
        assert_eq!(SimTime::from_secs(2.5).unwrap().to_string(), "2.500000000000");
        assert!(SimTime::from_secs(-1.0).is_none());
        assert!(SimTime::from_secs(f64::NAN).is_none());
    }

    #[test]
    fn ceil_division() {
        let dt = SimTime::from_ticks(10);
        assert_eq!(SimTime::from_ticks(0).div_ceil(dt), 0);
        assert_eq!(SimTime::from_ticks(10).div_ceil(dt), 1);
        assert_eq!(SimTime::from_ticks(11).div_ceil(dt), 2);
    }
}
