//! Delay mitigation: feedback low-pass filtering, extrapolation of the
//! measured feedback, and per-harmonic phase advance of the source
//! reference.
//!
//! Phase advance acts on the declared source harmonics only. Components the
//! source does not declare (inter-harmonics, DC, disturbances) pass through
//! uncompensated.

use alloc::vec::Vec;

use crate::bench::{BenchError, InterfaceAlgorithm, PhilLoop, SimulatedSide};
use crate::lti::{LtiError, TransferBlock};
use crate::math::{self, TAU};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompensationError {
    #[error("phase advance needs at least one harmonic")]
    EmptyHarmonics,
    #[error("harmonic order must be positive and unique, got {0}")]
    BadHarmonic(u32),
    #[error("total delay must be >= 0 and finite, got {0}")]
    NegativeDelay(f64),
    #[error("plan fundamental {plan_hz} Hz does not match the loop source {loop_hz} Hz")]
    FundamentalMismatch { plan_hz: f64, loop_hz: f64 },
    #[error("plan harmonics do not match the declared source harmonics")]
    HarmonicMismatch,
    #[error("extrapolation order {0} is not supported (0 or 1)")]
    UnsupportedOrder(u8),
    #[error("extrapolation horizon {horizon_s} s must equal the total loop delay {total_s} s")]
    HorizonMismatch { horizon_s: f64, total_s: f64 },
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Lti(#[from] LtiError),
}

/// Advance of one harmonic, in `[0, 2*pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseAdvance {
    pub order: u32,
    pub advance_rad: f64,
}

/// Static per-harmonic phase advance for one phase of the reference.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseAdvancePlan {
    pub fundamental_hz: f64,
    pub total_delay_s: f64,
    /// Sorted by harmonic order.
    pub entries: Vec<PhaseAdvance>,
}

impl PhaseAdvancePlan {
    pub fn advance_for(&self, order: u32) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.order == order)
            .map(|e| e.advance_rad)
    }

    pub(crate) fn check_against(&self, side: &SimulatedSide) -> Result<(), CompensationError> {
        if (self.fundamental_hz - side.f0_hz).abs() > 1e-12 * side.f0_hz {
            return Err(CompensationError::FundamentalMismatch {
                plan_hz: self.fundamental_hz,
                loop_hz: side.f0_hz,
            });
        }
        let plan: Vec<u32> = self.entries.iter().map(|e| e.order).collect();
        if plan != side.orders() {
            return Err(CompensationError::HarmonicMismatch);
        }
        Ok(())
    }
}

/// Advance per harmonic: `2*pi*h*f0*total_delay` reduced modulo `2*pi`.
pub fn design_phase_advance(
    f0_hz: f64,
    harmonics: &[u32],
    total_delay_s: f64,
) -> Result<PhaseAdvancePlan, CompensationError> {
    if harmonics.is_empty() {
        return Err(CompensationError::EmptyHarmonics);
    }
    if !(total_delay_s >= 0.0 && total_delay_s.is_finite()) {
        return Err(CompensationError::NegativeDelay(total_delay_s));
    }
    if !(f0_hz > 0.0 && f0_hz.is_finite()) {
        return Err(BenchError::Invalid(alloc::format!("f0_hz must be > 0, got {f0_hz}")).into());
    }
    let mut orders = harmonics.to_vec();
    orders.sort_unstable();
    for w in orders.windows(2) {
        if w[0] == w[1] {
            return Err(CompensationError::BadHarmonic(w[0]));
        }
    }
    if orders[0] == 0 {
        return Err(CompensationError::BadHarmonic(0));
    }
    let entries = orders
        .into_iter()
        .map(|order| PhaseAdvance {
            order,
            advance_rad: math::rem_euclid(TAU * order as f64 * f0_hz * total_delay_s, TAU),
        })
        .collect();
    Ok(PhaseAdvancePlan {
        fundamental_hz: f0_hz,
        total_delay_s,
        entries,
    })
}

/// Attaches a plan: the amplifier reference is synthesized with each declared
/// harmonic advanced. The open loop is untouched.
pub fn apply_phase_advance(
    lp: &PhilLoop,
    plan: &PhaseAdvancePlan,
) -> Result<PhilLoop, CompensationError> {
    plan.check_against(lp.simulated_side())?;
    let mut desc = lp.description().clone();
    desc.compensator.phase_advance = Some(plan.clone());
    Ok(PhilLoop::new(desc)?)
}

/// First-order low-pass `1/(1 + s/(2*pi*cutoff))` for the current feedback.
/// An infinite cutoff yields the identity block.
pub fn design_feedback_filter(cutoff_hz: f64) -> Result<TransferBlock, CompensationError> {
    Ok(TransferBlock::low_pass(cutoff_hz)?)
}

/// Switches the loop to the feedback-filter interface with the given cutoff.
pub fn insert_feedback_filter(lp: &PhilLoop, cutoff_hz: f64) -> Result<PhilLoop, CompensationError> {
    design_feedback_filter(cutoff_hz)?;
    let mut desc = lp.description().clone();
    desc.interface = InterfaceAlgorithm::FeedbackFilter { cutoff_hz };
    Ok(PhilLoop::new(desc)?)
}

/// Predicts the measured feedback forward by `horizon_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Extrapolator {
    /// 0 holds the last sample, 1 extrapolates linearly.
    pub order: u8,
    pub horizon_s: f64,
}

impl Extrapolator {
    pub fn new(order: u8, horizon_s: f64) -> Result<Self, CompensationError> {
        if order > 1 {
            return Err(CompensationError::UnsupportedOrder(order));
        }
        if !(horizon_s >= 0.0 && horizon_s.is_finite()) {
            return Err(CompensationError::NegativeDelay(horizon_s));
        }
        Ok(Self { order, horizon_s })
    }

    /// Prediction from the last two samples taken `dt_s` apart.
    pub fn predict(&self, last: f64, previous: f64, dt_s: f64) -> f64 {
        match self.order {
            0 => last,
            _ => last + (last - previous) / dt_s * self.horizon_s,
        }
    }

    pub(crate) fn check(&self, total_delay_s: f64) -> Result<(), CompensationError> {
        if self.order > 1 {
            return Err(CompensationError::UnsupportedOrder(self.order));
        }
        if (self.horizon_s - total_delay_s).abs() > 1e-9 * total_delay_s.max(1e-12) {
            return Err(CompensationError::HorizonMismatch {
                horizon_s: self.horizon_s,
                total_s: total_delay_s,
            });
        }
        Ok(())
    }
}

/// Feedback samples are predicted forward by the horizon before they enter
/// the simulated side.
pub fn apply_extrapolator(lp: &PhilLoop, ex: Extrapolator) -> Result<PhilLoop, CompensationError> {
    ex.check(lp.total_delay_s())?;
    let mut desc = lp.description().clone();
    desc.compensator.extrapolator = Some(ex);
    Ok(PhilLoop::new(desc)?)
}
