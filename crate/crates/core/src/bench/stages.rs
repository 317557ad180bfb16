//! Per-sample building blocks shared by the monolithic runner and the
//! co-simulation units, so both execute identical arithmetic.

use alloc::vec::Vec;

use super::{BenchError, Disturbance, PhilLoop};
use crate::compensation::Extrapolator;
use crate::lti::DiscreteFilter;
use crate::math::{self, TAU};

/// Harmonic voltage source, optionally with per-harmonic phase advance.
#[derive(Debug, Clone)]
pub(crate) struct SourceSynth {
    // (angular frequency, amplitude, phase)
    terms: Vec<(f64, f64, f64)>,
}

impl SourceSynth {
    pub fn new(lp: &PhilLoop, advanced: bool) -> Self {
        let side = lp.simulated_side();
        let plan = if advanced {
            lp.compensator().phase_advance.as_ref()
        } else {
            None
        };
        let terms = side
            .harmonics
            .iter()
            .map(|h| {
                let adv = plan.and_then(|p| p.advance_for(h.order)).unwrap_or(0.0);
                (
                    TAU * h.order as f64 * side.f0_hz,
                    h.amplitude_v,
                    h.phase_rad + adv,
                )
            })
            .collect();
        Self { terms }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(w, a, p)| a * math::sin(w * t + p))
            .sum()
    }
}

#[derive(Debug, Clone)]
struct ExtrapolatorState {
    order: u8,
    gain: f64,
    prev: f64,
}

/// Simulated side: source minus simulated impedance drop, driven by the
/// (possibly extrapolated and filtered) current feedback.
#[derive(Debug, Clone)]
pub(crate) struct SimulatedStage {
    source: SourceSynth,
    impedance: DiscreteFilter,
    filter: Option<DiscreteFilter>,
    extrapolator: Option<ExtrapolatorState>,
}

impl SimulatedStage {
    pub fn new(lp: &PhilLoop, dt_s: f64) -> Result<Self, BenchError> {
        let z = lp.simulated_impedance();
        let impedance = if z.is_zero() {
            DiscreteFilter::gain(0.0)
        } else {
            DiscreteFilter::bilinear(&z, dt_s)?
        };
        let filter = match lp.interface().feedback_filter() {
            Some(f) => Some(DiscreteFilter::bilinear(&f, dt_s)?),
            None => None,
        };
        let extrapolator = lp
            .compensator()
            .extrapolator
            .as_ref()
            .map(|e: &Extrapolator| ExtrapolatorState {
                order: e.order,
                gain: e.horizon_s / dt_s,
                prev: 0.0,
            });
        Ok(Self {
            source: SourceSynth::new(lp, true),
            impedance,
            filter,
            extrapolator,
        })
    }

    /// Returns `(i_fb, v_cmd)` for time `t` given the measured current.
    pub fn step(&mut self, t: f64, i_meas: f64) -> (f64, f64) {
        let mut i = i_meas;
        if let Some(ex) = &mut self.extrapolator {
            if ex.order == 1 {
                i = i_meas + (i_meas - ex.prev) * ex.gain;
            }
            ex.prev = i_meas;
        }
        if let Some(f) = &mut self.filter {
            i = f.step(i);
        }
        let v = self.source.at(t) - self.impedance.step(i);
        (i, v)
    }
}

/// Amplifier (after its transport delay) and hardware under test.
#[derive(Debug, Clone)]
pub(crate) struct HardwareStage {
    amplifier: DiscreteFilter,
    saturation: Option<f64>,
    disturbance: Option<Disturbance>,
    admittance: DiscreteFilter,
    z_shift: f64,
}

impl HardwareStage {
    pub fn new(lp: &PhilLoop, dt_s: f64) -> Result<Self, BenchError> {
        let amp = lp.amplifier();
        let amplifier = if amp.bandwidth_hz.is_infinite() {
            DiscreteFilter::gain(amp.gain)
        } else {
            DiscreteFilter::bilinear(&amp.rational(), dt_s)?
        };
        Ok(Self {
            amplifier,
            saturation: amp.saturation_v,
            disturbance: lp.disturbance(),
            admittance: DiscreteFilter::bilinear(&lp.hardware_admittance(), dt_s)?,
            z_shift: lp.interface().z_shift(),
        })
    }

    /// Returns `(v_pcc, i_hut)` for sample `index` at time `t`, given the
    /// delayed command and any extra additive voltage.
    pub fn step(&mut self, index: usize, t: f64, cmd: f64, extra: f64) -> (f64, f64) {
        let mut a = self.amplifier.step(cmd);
        if let Some(lim) = self.saturation {
            a = a.clamp(-lim, lim);
        }
        let d = self.disturbance.map_or(0.0, |d| d.value(index, t));
        a += d + extra;
        let i = self.admittance.step(a);
        (a - self.z_shift * i, i)
    }
}
