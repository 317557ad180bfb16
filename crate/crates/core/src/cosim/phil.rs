//! PHIL loop pieces as co-simulation units.
//!
//! Splitting at the amplifier boundary gives a [`SimulatorUnit`] whose
//! `v_cmd` output carries the amplifier transport delay as latency, and a
//! [`HardwareUnit`] whose `i_hut` output carries the sensor delay. With both
//! delays at least one step the split reproduces the monolithic runner
//! exactly under lockstep and conservative masters; a zero-delay boundary
//! picks up one exchange step.

use alloc::string::String;
use alloc::vec::Vec;

use super::unit::{Emission, InputPort, PortSpec, SimUnit, StepClock, UnitError};
use super::SimTime;
use crate::bench::stages::{HardwareStage, SimulatedStage};
use crate::bench::{channel, LoopRunner, PhilLoop, Trace};

fn latency(clock: &StepClock, samples: usize) -> SimTime {
    clock.dt().mul(samples as u64)
}

fn finite(v: f64, port: &'static str, time: SimTime) -> Result<f64, UnitError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(UnitError::NonFinite { port, time })
    }
}

const SIM_IN: [PortSpec; 1] = [PortSpec::continuous("i_meas")];
const SIM_OUT: [PortSpec; 1] = [PortSpec::continuous("v_cmd")];
const HW_IN: [PortSpec; 1] = [PortSpec::continuous("v_cmd")];
const HW_OUT: [PortSpec; 1] = [PortSpec::continuous("i_hut")];
const LOOP_IN: [PortSpec; 1] = [PortSpec::continuous("extra_v")];
const LOOP_OUT: [PortSpec; 2] = [
    PortSpec::continuous("v_pcc"),
    PortSpec::continuous("i_hut"),
];

/// Simulated side: reads `i_meas`, writes `v_cmd`. Trace channels `v_cmd`,
/// `i_fb`.
pub struct SimulatorUnit {
    id: String,
    stage: SimulatedStage,
    clock: StepClock,
    latency: SimTime,
    input: InputPort,
    trace: Trace,
}

impl SimulatorUnit {
    pub fn new(id: impl Into<String>, lp: &PhilLoop, dt_s: f64) -> Result<Self, UnitError> {
        let (na, _) = lp.check_step(dt_s)?;
        let clock = StepClock::new(dt_s)?;
        Ok(Self {
            id: id.into(),
            stage: SimulatedStage::new(lp, dt_s)?,
            latency: latency(&clock, na),
            clock,
            input: InputPort::new(),
            trace: Trace::new(dt_s, &[channel::V_CMD, channel::I_FB]),
        })
    }
}

impl SimUnit for SimulatorUnit {
    fn id(&self) -> &str {
        &self.id
    }

    fn inputs(&self) -> &[PortSpec] {
        &SIM_IN
    }

    fn outputs(&self) -> &[PortSpec] {
        &SIM_OUT
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
            let i_meas = self.input.latest_at(t);
            let (i_fb, v_cmd) = self.stage.step(self.clock.time_s(k), i_meas);
            let v_cmd = finite(v_cmd, "v_cmd", t)?;
            self.trace.push_row(&[v_cmd, i_fb]);
            out.push(Emission {
                port: 0,
                time: t.saturating_add(self.latency),
                value: v_cmd,
            });
        }
        Ok(())
    }

    fn trace(&self) -> Option<Trace> {
        Some(self.trace.clone())
    }
}

/// Amplifier and HUT: reads `v_cmd`, writes `i_hut`. Trace channels
/// `v_pcc`, `i_hut`.
pub struct HardwareUnit {
    id: String,
    stage: HardwareStage,
    clock: StepClock,
    latency: SimTime,
    input: InputPort,
    trace: Trace,
}

impl HardwareUnit {
    pub fn new(id: impl Into<String>, lp: &PhilLoop, dt_s: f64) -> Result<Self, UnitError> {
        let (_, ns) = lp.check_step(dt_s)?;
        let clock = StepClock::new(dt_s)?;
        Ok(Self {
            id: id.into(),
            stage: HardwareStage::new(lp, dt_s)?,
            latency: latency(&clock, ns),
            clock,
            input: InputPort::new(),
            trace: Trace::new(dt_s, &[channel::V_PCC, channel::I_HUT]),
        })
    }
}

impl SimUnit for HardwareUnit {
    fn id(&self) -> &str {
        &self.id
    }

    fn inputs(&self) -> &[PortSpec] {
        &HW_IN
    }

    fn outputs(&self) -> &[PortSpec] {
        &HW_OUT
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
            let cmd = self.input.latest_at(t);
            let (v_pcc, i_hut) = self.stage.step(k as usize, self.clock.time_s(k), cmd, 0.0);
            let i_hut = finite(i_hut, "i_hut", t)?;
            self.trace.push_row(&[v_pcc, i_hut]);
            out.push(Emission {
                port: 0,
                time: t.saturating_add(self.latency),
                value: i_hut,
            });
        }
        Ok(())
    }

    fn trace(&self) -> Option<Trace> {
        Some(self.trace.clone())
    }
}

/// The whole loop as one unit; `extra_v` is added at the amplifier output.
pub struct PhilLoopUnit {
    id: String,
    runner: LoopRunner,
    clock: StepClock,
    input: InputPort,
    trace: Trace,
}

impl PhilLoopUnit {
    pub fn new(id: impl Into<String>, lp: &PhilLoop, dt_s: f64) -> Result<Self, UnitError> {
        Ok(Self {
            id: id.into(),
            runner: LoopRunner::new(lp, dt_s)?,
            clock: StepClock::new(dt_s)?,
            input: InputPort::new(),
            trace: Trace::new(dt_s, &channel::LOOP),
        })
    }
}

impl SimUnit for PhilLoopUnit {
    fn id(&self) -> &str {
        &self.id
    }

    fn inputs(&self) -> &[PortSpec] {
        &LOOP_IN
    }

    fn outputs(&self) -> &[PortSpec] {
        &LOOP_OUT
    }

    fn lookahead(&self) -> SimTime {
        SimTime::ZERO
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
            let s = self.runner.step(self.input.latest_at(t));
            finite(s.v_pcc, "v_pcc", t)?;
            finite(s.i_hut, "i_hut", t)?;
            self.trace.push_row(&s.as_row());
            out.push(Emission {
                port: 0,
                time: t,
                value: s.v_pcc,
            });
            out.push(Emission {
                port: 1,
                time: t,
                value: s.i_hut,
            });
        }
        Ok(())
    }

    fn trace(&self) -> Option<Trace> {
        Some(self.trace.clone())
    }
}

/// Reassembles the four loop channels from the two halves of a split.
pub fn merge_split_traces(simulator: &Trace, hardware: &Trace) -> Option<Trace> {
    let len = simulator.len().min(hardware.len());
    let take = |t: &Trace, name: &str| t.channel(name).map(|c| c[..len].to_vec());
    Some(Trace::from_channels(
        simulator.dt_s(),
        alloc::vec![
            (channel::V_CMD.into(), take(simulator, channel::V_CMD)?),
            (channel::V_PCC.into(), take(hardware, channel::V_PCC)?),
            (channel::I_HUT.into(), take(hardware, channel::I_HUT)?),
            (channel::I_FB.into(), take(simulator, channel::I_FB)?),
        ],
    ))
}
