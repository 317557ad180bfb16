use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;

use super::{LogEntry, SimTime};
use crate::bench::{BenchError, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortKind {
    /// Latest-value signal.
    Continuous,
    /// Every message is processed in timestamp order.
    Message,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortSpec {
    pub name: &'static str,
    pub kind: PortKind,
}

impl PortSpec {
    pub const fn continuous(name: &'static str) -> Self {
        Self {
            name,
            kind: PortKind::Continuous,
        }
    }

    pub const fn message(name: &'static str) -> Self {
        Self {
            name,
            kind: PortKind::Message,
        }
    }
}

/// A value leaving an output port, effective at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission {
    pub port: usize,
    pub time: SimTime,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UnitError {
    #[error("cannot move back from {committed} to {requested}")]
    TimeRegression {
        committed: SimTime,
        requested: SimTime,
    },
    #[error("non-finite value on {port} at {time}")]
    NonFinite { port: &'static str, time: SimTime },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Bench(#[from] BenchError),
}

/// Co-simulation unit contract.
///
/// A unit has processed everything strictly before its committed time. When
/// advanced to `to` it executes its internal steps with `t < to`, reading
/// for each step the inputs timestamped `<= t`, and emits outputs stamped no
/// earlier than its committed time before the advance plus its lookahead.
pub trait SimUnit {
    fn id(&self) -> &str;
    fn inputs(&self) -> &[PortSpec];
    fn outputs(&self) -> &[PortSpec];
    fn lookahead(&self) -> SimTime;
    fn committed(&self) -> SimTime;

    /// Fixed internal step, `None` for event-driven units.
    fn step_size(&self) -> Option<SimTime>;

    /// Outputs valid from time zero, exchanged before the first step.
    fn initial_outputs(&mut self) -> Vec<Emission> {
        Vec::new()
    }

    fn receive(&mut self, port: usize, time: SimTime, value: f64);

    fn advance(&mut self, to: SimTime, out: &mut Vec<Emission>) -> Result<(), UnitError>;

    fn trace(&self) -> Option<Trace> {
        None
    }

    /// Unit-specific log lines produced since the last call.
    fn drain_log(&mut self, _log: &mut Vec<LogEntry>) {}
}

/// Timestamped input buffer.
#[derive(Debug, Clone, Default)]
pub struct InputPort {
    pending: VecDeque<(SimTime, f64)>,
    current: f64,
}

impl InputPort {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: SimTime, value: f64) {
        let at = self.pending.partition_point(|&(t, _)| t <= time);
        self.pending.insert(at, (time, value));
    }

    /// Latest value timestamped `<= t`; holds the previous value otherwise.
    pub fn latest_at(&mut self, t: SimTime) -> f64 {
        while let Some(&(ts, v)) = self.pending.front() {
            if ts > t {
                break;
            }
            self.current = v;
            self.pending.pop_front();
        }
        self.current
    }

    /// Next queued message timestamped `< t`.
    pub fn pop_before(&mut self, t: SimTime) -> Option<(SimTime, f64)> {
        match self.pending.front() {
            Some(&(ts, _)) if ts < t => self.pending.pop_front(),
            _ => None,
        }
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }
}

/// Fixed-step bookkeeping shared by stepped units.
#[derive(Debug, Clone)]
pub struct StepClock {
    dt: SimTime,
    dt_s: f64,
    next: u64,
    committed: SimTime,
}

impl StepClock {
    pub fn new(dt_s: f64) -> Result<Self, UnitError> {
        let dt = SimTime::from_secs(dt_s)
            .filter(|d| d.ticks() > 0)
            .ok_or_else(|| UnitError::Config(alloc::format!("invalid step {dt_s} s")))?;
        if (dt.as_secs() - dt_s).abs() > 1e-9 * dt_s {
            return Err(UnitError::Config(alloc::format!(
                "step {dt_s} s is not a whole number of picoseconds"
            )));
        }
        Ok(Self {
            dt,
            dt_s,
            next: 0,
            committed: SimTime::ZERO,
        })
    }

    pub fn dt(&self) -> SimTime {
        self.dt
    }

    pub fn committed(&self) -> SimTime {
        self.committed
    }

    /// Index of the next step to execute.
    pub fn next_index(&self) -> u64 {
        self.next
    }

    /// Exact sample time of step `k`.
    pub fn time(&self, k: u64) -> SimTime {
        self.dt.mul(k)
    }

    /// Floating-point time of step `k`, as the monolithic runner computes it.
    pub fn time_s(&self, k: u64) -> f64 {
        k as f64 * self.dt_s
    }

    /// Steps to run for an advance to `to`, as a half-open index range.
    pub fn begin(&mut self, to: SimTime) -> Result<core::ops::Range<u64>, UnitError> {
        if to < self.committed {
            return Err(UnitError::TimeRegression {
                committed: self.committed,
                requested: to,
            });
        }
        let end = to.div_ceil(self.dt).max(self.next);
        let r = self.next..end;
        self.next = end;
        self.committed = to;
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latest_value_semantics() {
        let mut p = InputPort::new();
        p.push(SimTime::from_ticks(20), 2.0);
        p.push(SimTime::from_ticks(10), 1.0);
        assert_eq!(p.latest_at(SimTime::from_ticks(5)), 0.0);
        assert_eq!(p.latest_at(SimTime::from_ticks(10)), 1.0);
        assert_eq!(p.latest_at(SimTime::from_ticks(15)), 1.0);
        assert_eq!(p.latest_at(SimTime::from_ticks(30)), 2.0);
    }

    #[test]
    fn message_order() {
        let mut p = InputPort::new();
        p.push(SimTime::from_ticks(20), 2.0);
        p.push(SimTime::from_ticks(10), 1.0);
        p.push(SimTime::from_ticks(10), 1.5);
        let t = SimTime::from_ticks(20);
        assert_eq!(p.pop_before(t).map(|m| m.1), Some(1.0));
        assert_eq!(p.pop_before(t).map(|m| m.1), Some(1.5));
        assert_eq!(p.pop_before(t), None);
        assert_eq!(p.pending(), 1);
    }

    #[test]
    fn clock_ranges() {
        let mut c = StepClock::new(1e-3).unwrap();
        let ms = |n: u64| SimTime::from_ticks(n * 1_000_000_000);
        assert_eq!(c.begin(ms(3)).unwrap(), 0..3);
        assert_eq!(c.begin(ms(3)).unwrap(), 3..3);
        assert_eq!(c.begin(SimTime::from_ticks(3_500_000_000)).unwrap(), 3..4);
        assert_eq!(c.begin(ms(4)).unwrap(), 4..4);
        assert!(c.begin(ms(1)).is_err());
    }
}
