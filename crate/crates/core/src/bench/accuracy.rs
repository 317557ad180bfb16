use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use super::{BenchError, Trace};
use crate::math::{self, TAU};

/// Per-harmonic comparison of one channel against the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicError {
    pub order: u32,
    pub frequency_hz: f64,
    /// `|X_trace| / |X_reference|`.
    pub magnitude_ratio: f64,
    /// `|magnitude_ratio - 1|`.
    pub magnitude_error: f64,
    /// Lag of the trace behind the reference, wrapped to `(-180, 180]`.
    pub phase_error_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub harmonics: Vec<HarmonicError>,
    pub rms_error: f64,
    pub window_start: usize,
    pub window_len: usize,
}

impl AccuracyReport {
    pub fn harmonic(&self, order: u32) -> Option<&HarmonicError> {
        self.harmonics.iter().find(|h| h.order == order)
    }
}

/// Steady-state window: the last 20 % of the shorter trace, truncated to an
/// integer number of fundamental periods. Returns `(start, len)`.
pub(crate) fn steady_window(len: usize, dt_s: f64, f0_hz: f64) -> Result<(usize, usize), BenchError> {
    let tail = len / 5;
    let periods = math::floor(tail as f64 * dt_s * f0_hz + 1e-9);
    if periods < 1.0 {
        return Err(BenchError::WindowTooShort);
    }
    let win = (math::round(periods / (f0_hz * dt_s)) as usize).min(tail);
    Ok((len - win, win))
}

/// Single-bin Fourier projection `2/N * sum x[n] exp(-j w n dt)`.
pub(crate) fn project(x: &[f64], dt_s: f64, freq_hz: f64, t0_index: usize) -> Complex64 {
    let w = TAU * freq_hz * dt_s;
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, &v) in x.iter().enumerate() {
        let a = w * (t0_index + n) as f64;
        acc += Complex64::new(v * math::cos(a), -v * math::sin(a));
    }
    acc * (2.0 / x.len() as f64)
}

/// Compares `channel` of `trace` with the same channel of `reference` over
/// the steady-state window.
pub fn accuracy_metrics(
    trace: &Trace,
    reference: &Trace,
    channel: &str,
    f0_hz: f64,
    harmonics: &[u32],
) -> Result<AccuracyReport, BenchError> {
    if (trace.dt_s() - reference.dt_s()).abs() > 1e-12 * trace.dt_s() {
        return Err(BenchError::TraceMismatch(format!(
            "dt {} vs {}",
            trace.dt_s(),
            reference.dt_s()
        )));
    }
    if !(f0_hz > 0.0) {
        return Err(BenchError::Invalid(format!("f0_hz must be > 0, got {f0_hz}")));
    }
    let a = trace
        .channel(channel)
        .ok_or_else(|| BenchError::UnknownChannel(channel.into()))?;
    let b = reference
        .channel(channel)
        .ok_or_else(|| BenchError::UnknownChannel(channel.into()))?;
    let n = a.len().min(b.len());
    let dt = trace.dt_s();
    let (start, len) = steady_window(n, dt, f0_hz)?;
    let wa = &a[start..start + len];
    let wb = &b[start..start + len];

    let harmonics = harmonics
        .iter()
        .map(|&h| {
            let f = h as f64 * f0_hz;
            let xa = project(wa, dt, f, start);
            let xb = project(wb, dt, f, start);
            let ratio = xa.norm() / xb.norm();
            HarmonicError {
                order: h,
                frequency_hz: f,
                magnitude_ratio: ratio,
                magnitude_error: (ratio - 1.0).abs(),
                phase_error_deg: math::wrap_pi(xb.arg() - xa.arg()).to_degrees(),
            }
        })
        .collect();
    let rms_error = math::sqrt(
        wa.iter()
            .zip(wb)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / len as f64,
    );
    Ok(AccuracyReport {
        harmonics,
        rms_error,
        window_start: start,
        window_len: len,
    })
}
