use alloc::vec::Vec;

use super::stages::{HardwareStage, SimulatedStage, SourceSynth};
use super::{channel, BenchError, PhilLoop, Trace};
use crate::lti::{DelayLine, DiscreteFilter};
use crate::math;

/// A run is flagged diverged once a voltage channel exceeds this multiple of
/// the open-circuit source amplitude (plus the disturbance peak).
pub const DIVERGENCE_FACTOR: f64 = 10.0;

/// One step of loop signals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub v_cmd: f64,
    pub v_pcc: f64,
    pub i_hut: f64,
    pub i_fb: f64,
}

impl Sample {
    pub fn as_row(&self) -> [f64; 4] {
        [self.v_cmd, self.v_pcc, self.i_hut, self.i_fb]
    }
}

/// Monolithic fixed-step execution of a [`PhilLoop`].
#[derive(Debug, Clone)]
pub struct LoopRunner {
    sim: SimulatedStage,
    hw: HardwareStage,
    amp_delay: DelayLine,
    sensor_delay: DelayLine,
    dt_s: f64,
    index: usize,
}

impl LoopRunner {
    pub fn new(lp: &PhilLoop, dt_s: f64) -> Result<Self, BenchError> {
        let (na, ns) = lp.check_step(dt_s)?;
        if na + ns == 0 {
            return Err(BenchError::ZeroLoopDelay);
        }
        Ok(Self {
            sim: SimulatedStage::new(lp, dt_s)?,
            hw: HardwareStage::new(lp, dt_s)?,
            amp_delay: DelayLine::new(na),
            sensor_delay: DelayLine::new(ns),
            dt_s,
            index: 0,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Advances one step; `extra_v` is added at the amplifier output on top
    /// of the loop's own disturbance.
    pub fn step(&mut self, extra_v: f64) -> Sample {
        let k = self.index;
        let t = k as f64 * self.dt_s;
        let s = if !self.amp_delay.is_empty() {
            let (v_pcc, i_hut) = self.hw.step(k, t, self.amp_delay.peek(), extra_v);
            let i_meas = self.sensor_delay.step(i_hut);
            let (i_fb, v_cmd) = self.sim.step(t, i_meas);
            self.amp_delay.push(v_cmd);
            Sample {
                v_cmd,
                v_pcc,
                i_hut,
                i_fb,
            }
        } else {
            let (i_fb, v_cmd) = self.sim.step(t, self.sensor_delay.peek());
            let (v_pcc, i_hut) = self.hw.step(k, t, v_cmd, extra_v);
            self.sensor_delay.push(i_hut);
            Sample {
                v_cmd,
                v_pcc,
                i_hut,
                i_fb,
            }
        };
        self.index += 1;
        s
    }
}

fn step_count(dt_s: f64, duration_s: f64) -> Result<usize, BenchError> {
    if !(dt_s > 0.0 && dt_s.is_finite()) {
        return Err(BenchError::Lti(crate::lti::LtiError::InvalidStep(dt_s)));
    }
    if !(duration_s >= 0.0 && duration_s.is_finite()) {
        return Err(BenchError::Invalid(alloc::format!(
            "duration must be >= 0, got {duration_s}"
        )));
    }
    Ok(math::round(duration_s / dt_s) as usize)
}

fn check_rate(lp: &PhilLoop, dt_s: f64) -> Result<(), BenchError> {
    let limit_s = 1.0 / (50.0 * lp.simulated_side().max_frequency_hz());
    if dt_s > limit_s * (1.0 + 1e-12) {
        return Err(BenchError::StepTooLarge { dt_s, limit_s });
    }
    Ok(())
}

/// Divergence threshold for a loop.
pub(crate) fn divergence_limit(lp: &PhilLoop) -> f64 {
    let d = lp.disturbance().map_or(0.0, |d| d.peak());
    DIVERGENCE_FACTOR * (lp.simulated_side().open_circuit_amplitude() + d)
}

/// Closed-loop fixed-step run. Stops early and flags the trace when a
/// voltage channel exceeds [`DIVERGENCE_FACTOR`] times the open-circuit
/// amplitude.
pub fn run_time_domain(lp: &PhilLoop, dt_s: f64, duration_s: f64) -> Result<Trace, BenchError> {
    check_rate(lp, dt_s)?;
    let steps = step_count(dt_s, duration_s)?;
    let mut runner = LoopRunner::new(lp, dt_s)?;
    let limit = divergence_limit(lp);
    let mut trace = Trace::new(dt_s, &channel::LOOP);
    for k in 0..steps {
        let s = runner.step(0.0);
        let row = s.as_row();
        if let Some(c) = row.iter().position(|x| !x.is_finite()) {
            return Err(BenchError::NonFinite {
                step: k,
                channel: channel::LOOP[c],
            });
        }
        trace.push_row(&row);
        if s.v_cmd.abs() > limit || s.v_pcc.abs() > limit {
            trace.set_diverged(true);
            break;
        }
    }
    Ok(trace)
}

/// Hardware connected directly to the simulated source: no amplifier, no
/// delay, no compensation. The accuracy baseline.
pub fn reference_direct(lp: &PhilLoop, dt_s: f64, duration_s: f64) -> Result<Trace, BenchError> {
    check_rate(lp, dt_s)?;
    let steps = step_count(dt_s, duration_s)?;
    let zs = lp.simulated_side().source_impedance.rational();
    let total = zs.add(&lp.hut().impedance().rational());
    let mut admittance = DiscreteFilter::bilinear(&total.recip(), dt_s)?;
    let mut drop = if zs.is_zero() {
        DiscreteFilter::gain(0.0)
    } else {
        DiscreteFilter::bilinear(&zs, dt_s)?
    };
    let source = SourceSynth::new(lp, false);
    let mut cols: [Vec<f64>; 2] = [Vec::with_capacity(steps), Vec::with_capacity(steps)];
    for k in 0..steps {
        let vs = source.at(k as f64 * dt_s);
        let i = admittance.step(vs);
        let v = vs - drop.step(i);
        cols[0].push(v);
        cols[1].push(i);
    }
    let [v, i] = cols;
    Ok(Trace::from_channels(
        dt_s,
        alloc::vec![
            (channel::V_CMD.into(), v.clone()),
            (channel::V_PCC.into(), v),
            (channel::I_HUT.into(), i.clone()),
            (channel::I_FB.into(), i),
        ],
    ))
}
