use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use super::BenchError;
use crate::compensation::{Extrapolator, PhaseAdvancePlan};
use crate::lti::{delay_samples, Rational, TransferBlock};
use crate::math::{self, TAU};
use crate::rng::SplitMix64;

/// Two-terminal passive element network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Impedance {
    Resistive { r_ohm: f64 },
    SeriesRl { r_ohm: f64, l_h: f64 },
    ParallelRc { r_ohm: f64, c_f: f64 },
}

impl Impedance {
    pub fn resistance(&self) -> f64 {
        match *self {
            Impedance::Resistive { r_ohm }
            | Impedance::SeriesRl { r_ohm, .. }
            | Impedance::ParallelRc { r_ohm, .. } => r_ohm,
        }
    }

    /// Same element kind with its resistance replaced.
    pub fn with_resistance(self, r: f64) -> Self {
        match self {
            Impedance::Resistive { .. } => Impedance::Resistive { r_ohm: r },
            Impedance::SeriesRl { l_h, .. } => Impedance::SeriesRl { r_ohm: r, l_h },
            Impedance::ParallelRc { c_f, .. } => Impedance::ParallelRc { r_ohm: r, c_f },
        }
    }

    /// `Z(j*omega)` from the element formulas.
    pub fn at(&self, omega: f64) -> Complex64 {
        match *self {
            Impedance::Resistive { r_ohm } => Complex64::new(r_ohm, 0.0),
            Impedance::SeriesRl { r_ohm, l_h } => Complex64::new(r_ohm, omega * l_h),
            Impedance::ParallelRc { r_ohm, c_f } => {
                Complex64::new(r_ohm, 0.0) / Complex64::new(1.0, omega * r_ohm * c_f)
            }
        }
    }

    pub(crate) fn rational(&self) -> Rational {
        match *self {
            Impedance::Resistive { r_ohm } => Rational::constant(r_ohm),
            Impedance::SeriesRl { r_ohm, l_h } => Rational::new(vec![r_ohm, l_h], vec![1.0]),
            Impedance::ParallelRc { r_ohm, c_f } => {
                Rational::new(vec![r_ohm], vec![1.0, r_ohm * c_f])
            }
        }
    }

    fn values(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Impedance::Resistive { r_ohm } => vec![("r_ohm", r_ohm)],
            Impedance::SeriesRl { r_ohm, l_h } => vec![("r_ohm", r_ohm), ("l_h", l_h)],
            Impedance::ParallelRc { r_ohm, c_f } => vec![("r_ohm", r_ohm), ("c_f", c_f)],
        }
    }
}

/// Hardware under test: every element value strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HutModel(Impedance);

impl HutModel {
    pub fn new(z: Impedance) -> Result<Self, BenchError> {
        for (name, v) in z.values() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BenchError::Invalid(format!("hut {name} must be > 0, got {v}")));
            }
        }
        Ok(Self(z))
    }

    pub fn resistive(r_ohm: f64) -> Result<Self, BenchError> {
        Self::new(Impedance::Resistive { r_ohm })
    }

    pub fn impedance(&self) -> Impedance {
        self.0
    }
}

/// One sinusoidal component of the simulated source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub order: u32,
    pub amplitude_v: f64,
    pub phase_rad: f64,
}

impl Harmonic {
    pub fn new(order: u32, amplitude_v: f64, phase_rad: f64) -> Self {
        Self {
            order,
            amplitude_v,
            phase_rad,
        }
    }
}

/// Ideal multi-harmonic voltage source behind a source impedance.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSide {
    pub f0_hz: f64,
    pub harmonics: Vec<Harmonic>,
    /// A resistance of zero (with no other elements) models an ideal source.
    pub source_impedance: Impedance,
}

impl SimulatedSide {
    pub fn open_circuit_amplitude(&self) -> f64 {
        self.harmonics.iter().map(|h| h.amplitude_v.abs()).sum()
    }

    pub fn max_frequency_hz(&self) -> f64 {
        self.harmonics
            .iter()
            .map(|h| h.order as f64 * self.f0_hz)
            .fold(self.f0_hz, f64::max)
    }

    pub fn orders(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.harmonics.iter().map(|h| h.order).collect();
        v.sort_unstable();
        v
    }

    fn validate(&self) -> Result<(), BenchError> {
        if !(self.f0_hz > 0.0 && self.f0_hz.is_finite()) {
            return Err(BenchError::Invalid(format!("f0_hz must be > 0, got {}", self.f0_hz)));
        }
        let mut orders = Vec::with_capacity(self.harmonics.len());
        for h in &self.harmonics {
            if h.order == 0 {
                return Err(BenchError::Invalid("harmonic order must be a positive integer".into()));
            }
            if orders.contains(&h.order) {
                return Err(BenchError::Invalid(format!("duplicate harmonic order {}", h.order)));
            }
            if !(h.amplitude_v.is_finite() && h.phase_rad.is_finite()) {
                return Err(BenchError::Invalid(format!("harmonic {} is not finite", h.order)));
            }
            orders.push(h.order);
        }
        let ok = match self.source_impedance {
            Impedance::Resistive { r_ohm } => r_ohm >= 0.0 && r_ohm.is_finite(),
            Impedance::SeriesRl { r_ohm, l_h } => {
                r_ohm >= 0.0 && r_ohm.is_finite() && l_h > 0.0 && l_h.is_finite()
            }
            Impedance::ParallelRc { r_ohm, c_f } => {
                r_ohm > 0.0 && r_ohm.is_finite() && c_f > 0.0 && c_f.is_finite()
            }
        };
        if !ok {
            return Err(BenchError::Invalid(format!(
                "invalid source impedance {:?}",
                self.source_impedance
            )));
        }
        Ok(())
    }
}

/// Linear power amplifier: gain, first-order bandwidth, transport delay and
/// an optional output clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplifierModel {
    pub gain: f64,
    /// `f64::INFINITY` is an ideal (flat) amplifier.
    pub bandwidth_hz: f64,
    pub delay_s: f64,
    pub saturation_v: Option<f64>,
}

impl AmplifierModel {
    /// Unit gain, infinite bandwidth, no clamp.
    pub fn ideal(delay_s: f64) -> Self {
        Self {
            gain: 1.0,
            bandwidth_hz: f64::INFINITY,
            delay_s,
            saturation_v: None,
        }
    }

    pub(crate) fn rational(&self) -> Rational {
        if self.bandwidth_hz.is_infinite() {
            Rational::constant(self.gain)
        } else {
            Rational::new(vec![self.gain], vec![1.0, 1.0 / (TAU * self.bandwidth_hz)])
        }
    }

    /// `gain * LP(bandwidth) * exp(-s delay)`; the exact linear model when no
    /// clamp is configured.
    pub fn block(&self) -> Result<TransferBlock, BenchError> {
        Ok(TransferBlock::from_rational(&self.rational(), self.delay_s, "amplifier")?)
    }

    fn validate(&self) -> Result<(), BenchError> {
        if !(self.gain.is_finite() && self.gain != 0.0) {
            return Err(BenchError::Invalid(format!(
                "amplifier gain must be finite and nonzero, got {}",
                self.gain
            )));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(BenchError::Invalid(format!(
                "amplifier bandwidth_hz must be > 0, got {}",
                self.bandwidth_hz
            )));
        }
        if !(self.delay_s >= 0.0 && self.delay_s.is_finite()) {
            return Err(BenchError::Invalid(format!(
                "amplifier delay_s must be >= 0, got {}",
                self.delay_s
            )));
        }
        if let Some(v) = self.saturation_v {
            if !(v > 0.0) {
                return Err(BenchError::Invalid(format!("saturation_v must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// How the simulated side and the hardware side are coupled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterfaceAlgorithm {
    /// Voltage-type ideal transformer method.
    Itm,
    /// ITM with a first-order low-pass in the current feedback path.
    FeedbackFilter { cutoff_hz: f64 },
    /// ITM with `z_shift_ohm` moved from the simulated source impedance to a
    /// virtual series resistance at the amplifier output.
    ShiftingImpedance { z_shift_ohm: f64 },
}

impl InterfaceAlgorithm {
    pub const NAMES: [&'static str; 3] = ["itm", "feedback_filter", "shifting_impedance"];

    /// Looks an algorithm up by name; its parameter must be supplied.
    pub fn from_name(
        name: &str,
        cutoff_hz: Option<f64>,
        z_shift_ohm: Option<f64>,
    ) -> Result<Self, BenchError> {
        match name {
            "itm" => Ok(Self::Itm),
            "feedback_filter" => cutoff_hz
                .map(|cutoff_hz| Self::FeedbackFilter { cutoff_hz })
                .ok_or(BenchError::MissingParameter {
                    algorithm: "feedback_filter",
                    parameter: "cutoff_hz",
                }),
            "shifting_impedance" => z_shift_ohm
                .map(|z_shift_ohm| Self::ShiftingImpedance { z_shift_ohm })
                .ok_or(BenchError::MissingParameter {
                    algorithm: "shifting_impedance",
                    parameter: "z_shift_ohm",
                }),
            other => Err(BenchError::UnknownInterface(other.into())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Itm => "itm",
            Self::FeedbackFilter { .. } => "feedback_filter",
            Self::ShiftingImpedance { .. } => "shifting_impedance",
        }
    }

    pub(crate) fn z_shift(&self) -> f64 {
        match *self {
            Self::ShiftingImpedance { z_shift_ohm } => z_shift_ohm,
            _ => 0.0,
        }
    }

    pub(crate) fn feedback_filter(&self) -> Option<Rational> {
        match *self {
            Self::FeedbackFilter { cutoff_hz } if cutoff_hz.is_finite() => Some(Rational::new(
                vec![1.0],
                vec![1.0, 1.0 / (TAU * cutoff_hz)],
            )),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), BenchError> {
        match *self {
            Self::Itm => Ok(()),
            Self::FeedbackFilter { cutoff_hz } if cutoff_hz > 0.0 => Ok(()),
            Self::FeedbackFilter { cutoff_hz } => Err(BenchError::Invalid(format!(
                "feedback filter cutoff_hz must be > 0, got {cutoff_hz}"
            ))),
            Self::ShiftingImpedance { z_shift_ohm } if z_shift_ohm.is_finite() => Ok(()),
            Self::ShiftingImpedance { z_shift_ohm } => Err(BenchError::Invalid(format!(
                "z_shift_ohm must be finite, got {z_shift_ohm}"
            ))),
        }
    }
}

/// Signal added at the amplifier output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Disturbance {
    Constant { value_v: f64 },
    Sine {
        amplitude_v: f64,
        frequency_hz: f64,
        phase_rad: f64,
    },
    /// Uniform in `[-amplitude_v, amplitude_v]`, drawn per sample from SplitMix64.
    WhiteNoise { amplitude_v: f64, seed: u64 },
}

impl Disturbance {
    pub fn value(&self, sample: usize, t: f64) -> f64 {
        match *self {
            Disturbance::Constant { value_v } => value_v,
            Disturbance::Sine {
                amplitude_v,
                frequency_hz,
                phase_rad,
            } => amplitude_v * math::sin(TAU * frequency_hz * t + phase_rad),
            Disturbance::WhiteNoise { amplitude_v, seed } => {
                amplitude_v * (2.0 * SplitMix64::unit_at(seed, sample as u64) - 1.0)
            }
        }
    }

    pub fn peak(&self) -> f64 {
        match *self {
            Disturbance::Constant { value_v } => value_v.abs(),
            Disturbance::Sine { amplitude_v, .. } | Disturbance::WhiteNoise { amplitude_v, .. } => {
                amplitude_v.abs()
            }
        }
    }
}

/// Compensation attached to a loop (see [`crate::compensation`]).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Compensator {
    pub phase_advance: Option<PhaseAdvancePlan>,
    pub extrapolator: Option<Extrapolator>,
}

/// Plain description of a loop; [`PhilLoop::new`] validates it.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopDescription {
    pub simulated_side: SimulatedSide,
    pub interface: InterfaceAlgorithm,
    pub amplifier: AmplifierModel,
    pub hut: Impedance,
    pub sensor_delay_s: f64,
    pub disturbance: Option<Disturbance>,
    pub compensator: Compensator,
}

/// A validated closed PHIL loop.
#[derive(Debug, Clone, PartialEq)]
pub struct PhilLoop {
    desc: LoopDescription,
    hut: HutModel,
}

impl PhilLoop {
    pub fn new(desc: LoopDescription) -> Result<Self, BenchError> {
        desc.simulated_side.validate()?;
        desc.interface.validate()?;
        desc.amplifier.validate()?;
        let hut = HutModel::new(desc.hut)?;
        if !(desc.sensor_delay_s >= 0.0 && desc.sensor_delay_s.is_finite()) {
            return Err(BenchError::Invalid(format!(
                "sensor_delay_s must be >= 0, got {}",
                desc.sensor_delay_s
            )));
        }
        if !(desc.amplifier.delay_s + desc.sensor_delay_s > 0.0) {
            return Err(BenchError::ZeroLoopDelay);
        }
        if let Some(d) = desc.disturbance {
            if !d.peak().is_finite() {
                return Err(BenchError::Invalid("disturbance must be finite".into()));
            }
        }
        let total = desc.amplifier.delay_s + desc.sensor_delay_s;
        if let Some(plan) = &desc.compensator.phase_advance {
            plan.check_against(&desc.simulated_side)
                .map_err(|e| BenchError::Invalid(format!("{e}")))?;
        }
        if let Some(ex) = &desc.compensator.extrapolator {
            ex.check(total).map_err(|e| BenchError::Invalid(format!("{e}")))?;
        }
        let lp = Self { desc, hut };
        lp.open_loop()?;
        Ok(lp)
    }

    pub fn description(&self) -> &LoopDescription {
        &self.desc
    }

    pub fn into_description(self) -> LoopDescription {
        self.desc
    }

    pub fn simulated_side(&self) -> &SimulatedSide {
        &self.desc.simulated_side
    }

    pub fn interface(&self) -> InterfaceAlgorithm {
        self.desc.interface
    }

    pub fn amplifier(&self) -> &AmplifierModel {
        &self.desc.amplifier
    }

    pub fn hut(&self) -> HutModel {
        self.hut
    }

    pub fn sensor_delay_s(&self) -> f64 {
        self.desc.sensor_delay_s
    }

    pub fn disturbance(&self) -> Option<Disturbance> {
        self.desc.disturbance
    }

    pub fn compensator(&self) -> &Compensator {
        &self.desc.compensator
    }

    /// Amplifier delay plus sensor delay.
    pub fn total_delay_s(&self) -> f64 {
        self.desc.amplifier.delay_s + self.desc.sensor_delay_s
    }

    /// Impedance the simulated side subtracts from the source voltage.
    pub(crate) fn simulated_impedance(&self) -> Rational {
        let z = self.desc.simulated_side.source_impedance.rational();
        let shift = self.desc.interface.z_shift();
        if shift == 0.0 {
            z
        } else {
            z.add(&Rational::constant(-shift))
        }
    }

    /// Admittance seen by the amplifier output.
    pub(crate) fn hardware_admittance(&self) -> Rational {
        let z = self.desc.hut.rational();
        let shift = self.desc.interface.z_shift();
        if shift == 0.0 {
            z.recip()
        } else {
            z.add(&Rational::constant(shift)).recip()
        }
    }

    /// `Z_sim * F * G_amp * exp(-s T_d) * Y_hw` as one block.
    pub fn open_loop(&self) -> Result<TransferBlock, BenchError> {
        let mut r = self.simulated_impedance();
        if let Some(f) = self.desc.interface.feedback_filter() {
            r = r.mul(&f);
        }
        r = r.mul(&self.desc.amplifier.rational());
        r = r.mul(&self.hardware_admittance());
        if r.is_zero() {
            r = Rational::constant(0.0);
        }
        TransferBlock::from_rational(&r, self.total_delay_s(), "open_loop").map_err(|e| match e {
            crate::lti::LtiError::InvalidBlock(_) => BenchError::ImproperOpenLoop,
            other => other.into(),
        })
    }

    /// Checks that `dt_s` realizes every delay with an integer sample count.
    pub fn check_step(&self, dt_s: f64) -> Result<(usize, usize), BenchError> {
        let na = delay_samples(self.desc.amplifier.delay_s, dt_s)?;
        let ns = delay_samples(self.desc.sensor_delay_s, dt_s)?;
        Ok((na, ns))
    }
}

/// Validates a loop description against a step size and assembles the open
/// loop block.
pub fn build_loop(
    desc: LoopDescription,
    dt_s: f64,
) -> Result<(PhilLoop, TransferBlock), BenchError> {
    let lp = PhilLoop::new(desc)?;
    lp.check_step(dt_s)?;
    let ol = lp.open_loop()?;
    Ok((lp, ol))
}
