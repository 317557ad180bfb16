//! Small utility units.

use alloc::string::String;
use alloc::vec::Vec;

use super::unit::{Emission, InputPort, PortSpec, SimUnit, StepClock, UnitError};
use super::SimTime;
use crate::bench::Trace;
use crate::math::{self, TAU};

const OUT: [PortSpec; 1] = [PortSpec::continuous("out")];
const IN: [PortSpec; 1] = [PortSpec::continuous("in")];

/// Publishes one value at time zero and never changes it.
pub struct ConstantUnit {
    id: String,
    value: f64,
    committed: SimTime,
}

impl ConstantUnit {
    pub fn new(id: impl Into<String>, value: f64) -> Self {
        Self {
            id: id.into(),
            value,
            committed: SimTime::ZERO,
        }
    }
}

impl SimUnit for ConstantUnit {
    fn id(&self) -> &str {
        &self.id
    }

    fn inputs(&self) -> &[PortSpec] {
        &[]
    }

    fn outputs(&self) -> &[PortSpec] {
        &OUT
    }

    fn lookahead(&self) -> SimTime {
        SimTime::MAX
    }

    fn committed(&self) -> SimTime {
        self.committed
    }

    fn step_size(&self) -> Option<SimTime> {
        None
    }

    fn initial_outputs(&mut self) -> Vec<Emission> {
        alloc::vec![Emission {
            port: 0,
            time: SimTime::ZERO,
            value: self.value,
        }]
    }

    fn receive(&mut self, _port: usize, _time: SimTime, _value: f64) {}

    fn advance(&mut self, to: SimTime, _out: &mut Vec<Emission>) -> Result<(), UnitError> {
        if to < self.committed {
            return Err(UnitError::TimeRegression {
                committed: self.committed,
                requested: to,
            });
        }
        self.committed = to;
        Ok(())
    }
}

/// `out = gain * in` each step, with an optional output latency.
pub struct GainUnit {
    id: String,
    gain: f64,
    latency: SimTime,
    clock: StepClock,
    input: InputPort,
    trace: Trace,
}

impl GainUnit {
    pub fn new(id: impl Into<String>, gain: f64, dt_s: f64) -> Result<Self, UnitError> {
        Ok(Self {
            id: id.into(),
            gain,
            latency: SimTime::ZERO,
            clock: StepClock::new(dt_s)?,
            input: InputPort::new(),
            trace: Trace::new(dt_s, &["out"]),
        })
    }

    /// Output latency in whole steps.
    pub fn with_latency_steps(mut self, steps: u64) -> Self {
        self.latency = self.clock.dt().mul(steps);
        self
    }
}

impl SimUnit for GainUnit {
    fn id(&self) -> &str {
        &self.id
    }

    fn inputs(&self) -> &[PortSpec] {
        &IN
    }

    fn outputs(&self) -> &[PortSpec] {
        &OUT
    }

    fn lookahead(&self) -> SimTime {
        self.latency
    }

    fn committed(&self) -> SimTime {
        self.clock.committed()
    }

    fn step_size(&self) -> Option<SimTime> {
        Some(self.clock.dt())
    }

    fn receive(&mut self, _port: usize, time: SimTime, value: f64) {
        self.input.push(time, value);
    }

    fn advance(&mut self, to: SimTime, out: &mut Vec<Emission>) -> Result<(), UnitError> {
        for k in self.clock.begin(to)? {
            let t = self.clock.time(k);
            let y = self.gain * self.input.latest_at(t);
            self.trace.push_row(&[y]);
            out.push(Emission {
                port: 0,
                time: t.saturating_add(self.latency),
                value: y,
            });
        }
        Ok(())
    }

    fn trace(&self) -> Option<Trace> {
        Some(self.trace.clone())
    }
}

/// `amplitude * sin(2 pi f t)` sampled each step.
pub struct SineSourceUnit {
    id: String,
    amplitude: f64,
    frequency_hz: f64,
    latency: SimTime,
    clock: StepClock,
    trace: Trace,
}

impl SineSourceUnit {
    pub fn new(
        id: impl Into<String>,
        amplitude: f64,
        frequency_hz: f64,
        dt_s: f64,
    ) -> Result<Self, UnitError> {
        let clock = StepClock::new(dt_s)?;
        Ok(Self {
            id: id.into(),
            amplitude,
            frequency_hz,
            latency: clock.dt(),
            clock,
            trace: Trace::new(dt_s, &["out"]),
        })
    }
}

impl SineSourceUnit {
    fn value_at(&self, k: u64) -> f64 {
        self.amplitude * math::sin(TAU * self.frequency_hz * self.clock.time_s(k))
    }
}

impl SimUnit for SineSourceUnit {
    fn id(&self) -> &str {
        &self.id
    }

    fn inputs(&self) -> &[PortSpec] {
        &[]
    }

    fn outputs(&self) -> &[PortSpec] {
        &OUT
    }

    fn lookahead(&self) -> SimTime {
        self.latency
    }

    fn committed(&self) -> SimTime {
        self.clock.committed()
    }

    fn step_size(&self) -> Option<SimTime> {
        Some(self.clock.dt())
    }

    fn initial_outputs(&mut self) -> Vec<Emission> {
        alloc::vec![Emission {
            port: 0,
            time: SimTime::ZERO,
            value: self.value_at(0),
        }]
    }

    fn receive(&mut self, _port: usize, _time: SimTime, _value: f64) {}

    /// Records the sample of step `k` and publishes the one of step `k + 1`.
    fn advance(&mut self, to: SimTime, out: &mut Vec<Emission>) -> Result<(), UnitError> {
        for k in self.clock.begin(to)? {
            self.trace.push_row(&[self.value_at(k)]);
            out.push(Emission {
                port: 0,
                time: self.clock.time(k + 1),
                value: self.value_at(k + 1),
            });
        }
        Ok(())
    }

    fn trace(&self) -> Option<Trace> {
        Some(self.trace.clone())
    }
}
