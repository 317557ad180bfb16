//! Bode-style stability classification of the PHIL open loop.
//!
//! The loop is judged at its phase crossovers (total phase `-pi + 2*pi*k`,
//! causal delay convention). The largest open-loop magnitude found there is
//! compared with `1/(1+epsilon)`; a fixed band of [`MARGINAL_BAND`] around
//! that threshold is reported as marginal.

use alloc::vec::Vec;

use crate::bench::{BenchError, PhilLoop};
use crate::lti::{FrequencyPoint, LtiError, TransferBlock};
use crate::math::{self, PI, TAU};

/// Absolute magnitude band around the threshold classified as marginal.
pub const MARGINAL_BAND: f64 = 0.02;
/// Default frequency grid density.
pub const POINTS_PER_DECADE: usize = 500;
/// Crossover refinement tolerance, relative in omega.
pub const CROSSOVER_REL_TOL: f64 = 1e-9;

const GRID_LOW_HZ: f64 = 0.1;
// grid top for loops without delay
const GRID_TOP_NO_DELAY_HZ: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StabilityError {
    #[error("uncertainty margin must be >= 0, got {0}")]
    NegativeEpsilon(f64),
    #[error("frequency grid must hold at least two strictly increasing positive points")]
    BadGrid,
    #[error("non-finite open-loop response at {0} rad/s")]
    NonFinite(f64),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Bench(#[from] BenchError),
}

/// Scalar uncertainty margin; tightens the threshold to `1/(1+epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyMargin {
    epsilon: f64,
}

impl UncertaintyMargin {
    pub fn new(epsilon: f64) -> Result<Self, StabilityError> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(StabilityError::NegativeEpsilon(epsilon));
        }
        Ok(Self { epsilon })
    }

    pub fn none() -> Self {
        Self { epsilon: 0.0 }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn threshold(&self) -> f64 {
        1.0 / (1.0 + self.epsilon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Classification {
    Stable,
    Marginal,
    Unstable,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Stable => "stable",
            Classification::Marginal => "marginal",
            Classification::Unstable => "unstable",
        }
    }

    /// Classifies a magnitude against a threshold with [`MARGINAL_BAND`].
    pub fn from_magnitude(magnitude: f64, threshold: f64) -> Self {
        if magnitude < threshold - MARGINAL_BAND {
            Classification::Stable
        } else if magnitude > threshold + MARGINAL_BAND {
            Classification::Unstable
        } else {
            Classification::Marginal
        }
    }
}

impl core::fmt::Display for Classification {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub classification: Classification,
    /// Refined crossover frequencies, ascending, rad/s.
    pub phase_crossovers: Vec<f64>,
    /// Largest magnitude at a crossover; the magnitude at the top of the grid
    /// when no crossover exists.
    pub worst_magnitude: f64,
    /// `20*log10(threshold / worst_magnitude)`.
    pub gain_margin_db: f64,
    pub epsilon_used: f64,
    pub threshold: f64,
}

/// `n` points per decade from `w_min` to `w_max` inclusive.
pub fn log_grid(w_min: f64, w_max: f64, per_decade: usize) -> Vec<f64> {
    assert!(w_min > 0.0 && w_max > w_min && per_decade > 0);
    let (a, b) = (math::log10(w_min), math::log10(w_max));
    let n = math::ceil((b - a) * per_decade as f64) as usize;
    let mut g: Vec<f64> = (0..=n)
        .map(|k| math::pow10(a + (b - a) * k as f64 / n as f64))
        .collect();
    g[0] = w_min;
    g[n] = w_max;
    g
}

/// Grid spanning `[2*pi*0.1 Hz, 2*pi*10/T_d]` at [`POINTS_PER_DECADE`].
pub fn default_grid(total_delay_s: f64) -> Vec<f64> {
    let top_hz = if total_delay_s > 0.0 {
        10.0 / total_delay_s
    } else {
        GRID_TOP_NO_DELAY_HZ
    };
    log_grid(TAU * GRID_LOW_HZ, TAU * top_hz.max(10.0 * GRID_LOW_HZ), POINTS_PER_DECADE)
}

/// Open-loop frequency response with unwrapped phase.
pub fn open_loop_response(
    lp: &PhilLoop,
    grid: &[f64],
) -> Result<Vec<FrequencyPoint>, StabilityError> {
    let ol = lp.open_loop()?;
    check_grid(grid)?;
    Ok(ol.sweep(grid)?)
}

fn check_grid(grid: &[f64]) -> Result<(), StabilityError> {
    if grid.len() < 2 || !(grid[0] > 0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(StabilityError::BadGrid);
    }
    Ok(())
}

/// Classifies a loop over [`default_grid`].
pub fn classify(lp: &PhilLoop, margin: UncertaintyMargin) -> Result<StabilityVerdict, StabilityError> {
    let ol = lp.open_loop()?;
    classify_block(&ol, margin, &default_grid(ol.delay_s()))
}

/// Classifies an arbitrary open-loop block over `grid`.
pub fn classify_block(
    ol: &TransferBlock,
    margin: UncertaintyMargin,
    grid: &[f64],
) -> Result<StabilityVerdict, StabilityError> {
    check_grid(grid)?;
    let threshold = margin.threshold();
    if ol.is_zero() {
        return Ok(StabilityVerdict {
            classification: Classification::Stable,
            phase_crossovers: Vec::new(),
            worst_magnitude: 0.0,
            gain_margin_db: f64::INFINITY,
            epsilon_used: margin.epsilon(),
            threshold,
        });
    }
    let pts = ol.sweep(grid)?;
    if let Some(p) = pts
        .iter()
        .find(|p| !(p.magnitude.is_finite() && p.phase_rad.is_finite()))
    {
        return Err(StabilityError::NonFinite(p.omega_rad_s));
    }

    let mut crossovers = Vec::new();
    let mut worst: Option<f64> = None;
    for w in pts.windows(2) {
        let (c0, c1) = (level_coord(w[0].phase_rad), level_coord(w[1].phase_rad));
        let (lo, hi) = if c0 <= c1 { (c0, c1) } else { (c1, c0) };
        // integer levels m with lo < m <= hi are crossed inside this interval
        let mut m = math::floor(lo) + 1.0;
        while m <= hi {
            let target = -PI + TAU * m;
            let omega = refine(ol, &w[0], &w[1], target)?;
            let mag = ol.evaluate(omega)?.magnitude;
            crossovers.push(omega);
            worst = Some(worst.map_or(mag, |x: f64| x.max(mag)));
            m += 1.0;
        }
    }

    let worst_magnitude = match worst {
        Some(w) => w,
        None => pts.last().map_or(0.0, |p| p.magnitude),
    };
    let classification = if crossovers.is_empty() && worst_magnitude < threshold {
        Classification::Stable
    } else {
        Classification::from_magnitude(worst_magnitude, threshold)
    };
    Ok(StabilityVerdict {
        classification,
        phase_crossovers: crossovers,
        worst_magnitude,
        gain_margin_db: 20.0 * math::log10(threshold / worst_magnitude),
        epsilon_used: margin.epsilon(),
        threshold,
    })
}

// phase = -pi + 2*pi*c
fn level_coord(phase: f64) -> f64 {
    (phase + PI) / TAU
}

/// Bisection on the unwrapped phase between two grid points.
fn refine(
    ol: &TransferBlock,
    left: &FrequencyPoint,
    right: &FrequencyPoint,
    target: f64,
) -> Result<f64, StabilityError> {
    // rational phase at the left point, used to unwrap inside the interval
    let left_rational = left.phase_rad + left.omega_rad_s * ol.delay_s();
    let phase_at = |w: f64| -> Result<f64, StabilityError> {
        let r = ol.rational_at(w)?;
        let unwrapped = left_rational + math::wrap_pi(r.arg() - left_rational);
        Ok(unwrapped - w * ol.delay_s())
    };
    let (mut lo, mut hi) = (left.omega_rad_s, right.omega_rad_s);
    let f_lo = left.phase_rad - target;
    for _ in 0..200 {
        if (hi - lo) <= CROSSOVER_REL_TOL * lo {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = phase_at(mid)? - target;
        if (f_mid > 0.0) == (f_lo > 0.0) && f_mid != 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One cell of a stability map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapCell {
    pub ratio: f64,
    pub delay_s: f64,
    pub verdict: Result<StabilityVerdict, StabilityError>,
}

/// Loop for a map cell: the source resistance becomes `ratio` times the HUT
/// resistance and the amplifier delay is set so the total loop delay equals
/// `delay_s`.
pub fn loop_for_cell(base: &PhilLoop, ratio: f64, delay_s: f64) -> Result<PhilLoop, StabilityError> {
    let mut desc = base.description().clone();
    let rh = desc.hut.resistance();
    desc.simulated_side.source_impedance = desc.simulated_side.source_impedance.with_resistance(ratio * rh);
    desc.amplifier.delay_s = delay_s - desc.sensor_delay_s;
    if let Some(ex) = desc.compensator.extrapolator.as_mut() {
        ex.horizon_s = delay_s;
    }
    desc.compensator.phase_advance = None;
    Ok(PhilLoop::new(desc)?)
}

pub fn map_cell(base: &PhilLoop, ratio: f64, delay_s: f64, margin: UncertaintyMargin) -> MapCell {
    let verdict = loop_for_cell(base, ratio, delay_s).and_then(|lp| classify(&lp, margin));
    MapCell {
        ratio,
        delay_s,
        verdict,
    }
}

/// Row-major map (ratio outer, delay inner). Per-cell failures are kept in
/// the cell.
pub fn stability_map(
    base: &PhilLoop,
    ratios: &[f64],
    delays_s: &[f64],
    margin: UncertaintyMargin,
) -> Vec<MapCell> {
    ratios
        .iter()
        .flat_map(|&r| delays_s.iter().map(move |&d| (r, d)))
        .map(|(r, d)| map_cell(base, r, d, margin))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{
        AmplifierModel, Harmonic, Impedance, InterfaceAlgorithm, LoopDescription, SimulatedSide,
    };
    use alloc::vec;

    fn resistive(ratio: f64, delay: f64) -> PhilLoop {
        PhilLoop::new(LoopDescription {
            simulated_side: SimulatedSide {
                f0_hz: 50.0,
                harmonics: vec![Harmonic::new(1, 10.0, 0.0)],
                source_impedance: Impedance::Resistive { r_ohm: ratio },
            },
            interface: InterfaceAlgorithm::Itm,
            amplifier: AmplifierModel::ideal(delay),
            hut: Impedance::Resistive { r_ohm: 1.0 },
            sensor_delay_s: 0.0,
            disturbance: None,
            compensator: Default::default(),
        })
        .unwrap()
    }

    #[test]
    fn flat_half_gain() {
        let v = classify(&resistive(0.5, 1e-3), UncertaintyMargin::none()).unwrap();
        assert_eq!(v.classification, Classification::Stable);
        assert!((v.worst_magnitude - 0.5).abs() < 1e-12);
        assert!((v.gain_margin_db - 6.020599913279624).abs() < 1e-9);
        assert!((v.phase_crossovers[0] - PI / 1e-3).abs() < 1e-6 * PI / 1e-3);
    }

    #[test]
    fn margin_tightens() {
        let m = UncertaintyMargin::new(0.5).unwrap();
        assert!((m.threshold() - 2.0 / 3.0).abs() < 1e-15);
        let v = classify(&resistive(0.8, 1e-3), m).unwrap();
        assert_eq!(v.classification, Classification::Unstable);
        let v = classify(&resistive(2.0, 1e-3), UncertaintyMargin::none()).unwrap();
        assert_eq!(v.classification, Classification::Unstable);
        assert!(UncertaintyMargin::new(-0.1).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = log_grid(1.0, 1000.0, 500);
        assert_eq!(g.len(), 1501);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*g.last().unwrap(), 1000.0);
    }

    #[test]
    fn bad_grid_rejected() {
        let ol = resistive(0.5, 1e-3).open_loop().unwrap();
        assert_eq!(
            classify_block(&ol, UncertaintyMargin::none(), &[1.0]),
            Err(StabilityError::BadGrid)
        );
        assert_eq!(
            classify_block(&ol, UncertaintyMargin::none(), &[2.0, 1.0]),
            Err(StabilityError::BadGrid)
        );
    }

    #[test]
    fn zero_open_loop_is_stable() {
        let v = classify(&resistive(0.0, 1e-3), UncertaintyMargin::none()).unwrap();
        assert_eq!(v.classification, Classification::Stable);
        assert!(v.gain_margin_db.is_infinite());
    }
}
