use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use super::{poly, LtiError, Rational};
use crate::math;

/// `N(s)/D(s) * exp(-s*delay_s)` with real coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferBlock {
    numerator: Vec<f64>,
    denominator: Vec<f64>,
    delay_s: f64,
    label: String,
}

/// One point of a frequency response. `phase_rad` is the phase of the
/// rational part plus the causal delay term `-omega * delay_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyPoint {
    pub omega_rad_s: f64,
    pub magnitude: f64,
    pub phase_rad: f64,
}

impl TransferBlock {
    pub fn new(
        numerator: Vec<f64>,
        denominator: Vec<f64>,
        delay_s: f64,
        label: impl Into<String>,
    ) -> Result<Self, LtiError> {
        let label = label.into();
        if numerator.is_empty() || denominator.is_empty() {
            return Err(LtiError::InvalidBlock(format!("{label}: empty coefficient list")));
        }
        if numerator.iter().chain(&denominator).any(|c| !c.is_finite()) {
            return Err(LtiError::InvalidBlock(format!("{label}: non-finite coefficient")));
        }
        let numerator = poly::trim(numerator);
        let denominator = poly::trim(denominator);
        let Some(den_deg) = poly::degree(&denominator) else {
            return Err(LtiError::InvalidBlock(format!("{label}: zero denominator")));
        };
        if poly::degree(&numerator).is_some_and(|d| d > den_deg) {
            return Err(LtiError::InvalidBlock(format!(
                "{label}: improper block (numerator degree exceeds denominator degree)"
            )));
        }
        if !(delay_s >= 0.0 && delay_s.is_finite()) {
            return Err(LtiError::InvalidBlock(format!("{label}: delay must be >= 0, got {delay_s}")));
        }
        Ok(Self {
            numerator,
            denominator,
            delay_s,
            label,
        })
    }

    /// Static gain `k`.
    pub fn gain(k: f64) -> Result<Self, LtiError> {
        Self::new(vec![k], vec![1.0], 0.0, format!("gain({k})"))
    }

    /// Unit gain with a pure delay.
    pub fn pure_delay(delay_s: f64) -> Result<Self, LtiError> {
        Self::new(vec![1.0], vec![1.0], delay_s, format!("delay({delay_s})"))
    }

    /// First-order low-pass `1 / (1 + s/(2*pi*cutoff_hz))`. An infinite cutoff
    /// gives the identity.
    pub fn low_pass(cutoff_hz: f64) -> Result<Self, LtiError> {
        if !(cutoff_hz > 0.0) {
            return Err(LtiError::InvalidBlock(format!(
                "low-pass cutoff must be > 0, got {cutoff_hz}"
            )));
        }
        if cutoff_hz.is_infinite() {
            return Self::new(vec![1.0], vec![1.0], 0.0, "low_pass(inf)");
        }
        Self::new(
            vec![1.0],
            vec![1.0, 1.0 / (math::TAU * cutoff_hz)],
            0.0,
            format!("low_pass({cutoff_hz})"),
        )
    }

    pub(crate) fn from_rational(
        r: &Rational,
        delay_s: f64,
        label: impl Into<String>,
    ) -> Result<Self, LtiError> {
        Self::new(r.num.clone(), r.den.clone(), delay_s, label)
    }

    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }

    pub fn delay_s(&self) -> f64 {
        self.delay_s
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_delay(mut self, delay_s: f64) -> Result<Self, LtiError> {
        if !(delay_s >= 0.0 && delay_s.is_finite()) {
            return Err(LtiError::InvalidBlock(format!("delay must be >= 0, got {delay_s}")));
        }
        self.delay_s = delay_s;
        Ok(self)
    }

    /// `N(0)/D(0)`; infinite when the block has a pole at the origin.
    pub fn dc_gain(&self) -> f64 {
        self.numerator[0] / self.denominator[0]
    }

    /// True when the rational part is identically zero.
    pub fn is_zero(&self) -> bool {
        poly::degree(&self.numerator).is_none()
    }

    /// Value of the rational part alone at `j*omega`.
    pub fn rational_at(&self, omega: f64) -> Result<Complex64, LtiError> {
        if !(omega > 0.0) {
            return Err(LtiError::NonPositiveFrequency(omega));
        }
        let s = Complex64::new(0.0, omega);
        let d = poly::eval(&self.denominator, s);
        if d.re == 0.0 && d.im == 0.0 {
            return Err(LtiError::PoleOnImaginaryAxis { omega });
        }
        Ok(poly::eval(&self.numerator, s) / d)
    }

    /// Complex response `N(jw)/D(jw) * exp(-j*w*delay)`.
    pub fn evaluate_complex(&self, omega: f64) -> Result<Complex64, LtiError> {
        let r = self.rational_at(omega)?;
        let arg = -omega * self.delay_s;
        Ok(r * Complex64::new(math::cos(arg), math::sin(arg)))
    }

    /// Magnitude and phase at `omega`. The phase is the principal argument of
    /// the rational part minus `omega * delay_s` (not wrapped).
    pub fn evaluate(&self, omega: f64) -> Result<FrequencyPoint, LtiError> {
        let r = self.rational_at(omega)?;
        Ok(FrequencyPoint {
            omega_rad_s: omega,
            magnitude: r.norm(),
            phase_rad: r.arg() - omega * self.delay_s,
        })
    }

    /// Sweep with the rational phase unwrapped by nearest-2π continuation.
    /// `grid` must be strictly increasing.
    pub fn sweep(&self, grid: &[f64]) -> Result<Vec<FrequencyPoint>, LtiError> {
        let mut out = Vec::with_capacity(grid.len());
        let mut prev: Option<(f64, f64)> = None; // (omega, unwrapped rational phase)
        for &w in grid {
            if let Some((pw, _)) = prev {
                if !(w > pw) {
                    return Err(LtiError::InvalidBlock(format!(
                        "frequency grid not strictly increasing at {w}"
                    )));
                }
            }
            let r = self.rational_at(w)?;
            let raw = r.arg();
            let phase = match prev {
                None => raw,
                Some((_, p)) => p + math::wrap_pi(raw - p),
            };
            prev = Some((w, phase));
            out.push(FrequencyPoint {
                omega_rad_s: w,
                magnitude: r.norm(),
                phase_rad: phase - w * self.delay_s,
            });
        }
        Ok(out)
    }
}

/// Chains blocks: coefficient products and summed delays.
pub fn series(blocks: &[TransferBlock]) -> Result<TransferBlock, LtiError> {
    let (first, rest) = blocks.split_first().ok_or(LtiError::EmptySeries)?;
    let mut num = first.numerator.clone();
    let mut den = first.denominator.clone();
    let mut delay = first.delay_s;
    let mut label = first.label.clone();
    for b in rest {
        num = poly::mul(&num, &b.numerator);
        den = poly::mul(&den, &b.denominator);
        delay += b.delay_s;
        label.push('*');
        label.push_str(&b.label);
    }
    TransferBlock::new(num, den, delay, label)
}
