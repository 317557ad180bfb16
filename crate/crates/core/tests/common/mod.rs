#![allow(dead_code)]

use std::f64::consts::PI;

use philsim_core::bench::{
    AmplifierModel, Compensator, Harmonic, Impedance, InterfaceAlgorithm, LoopDescription,
    PhilLoop, SimulatedSide,
};

pub const F0: f64 = 50.0;

pub fn side(rs: f64, harmonics: &[(u32, f64)]) -> SimulatedSide {
    SimulatedSide {
        f0_hz: F0,
        harmonics: harmonics
            .iter()
            .map(|&(h, a)| Harmonic::new(h, a, 0.0))
            .collect(),
        source_impedance: Impedance::Resistive { r_ohm: rs },
    }
}

pub fn desc(rs: f64, rh: f64, amp_delay: f64, sensor_delay: f64) -> LoopDescription {
    LoopDescription {
        simulated_side: side(rs, &[(1, 10.0)]),
        interface: InterfaceAlgorithm::Itm,
        amplifier: AmplifierModel::ideal(amp_delay),
        hut: Impedance::Resistive { r_ohm: rh },
        sensor_delay_s: sensor_delay,
        disturbance: None,
        compensator: Compensator::default(),
    }
}

pub fn resistive(rs: f64, rh: f64, delay: f64) -> PhilLoop {
    PhilLoop::new(desc(rs, rh, delay, 0.0)).unwrap()
}

/// Ideal source (no source impedance) with harmonics 1, 5, 7: the interface
/// acts on the HUT as a pure delay.
pub fn pure_delay_loop(amp_delay: f64, sensor_delay: f64) -> PhilLoop {
    let mut d = desc(0.0, 2.0, amp_delay, sensor_delay);
    d.simulated_side = side(0.0, &[(1, 10.0), (5, 2.0), (7, 1.0)]);
    PhilLoop::new(d).unwrap()
}

/// Single-bin DFT at `f_hz` over the last `periods` whole periods of the
/// fundamental [`F0`]; returns (amplitude, phase) of `A sin(w t + phi)`.
pub fn tone(x: &[f64], dt: f64, f_hz: f64, periods: usize) -> (f64, f64) {
    let per = (1.0 / (F0 * dt)).round() as usize;
    let n = per * periods;
    assert!(n <= x.len(), "window longer than signal");
    let start = x.len() - n;
    let (mut re, mut im) = (0.0, 0.0);
    for (k, v) in x[start..].iter().enumerate() {
        let t = (start + k) as f64 * dt;
        let w = 2.0 * PI * f_hz * t;
        re += v * w.sin();
        im += v * w.cos();
    }
    let (re, im) = (2.0 * re / n as f64, 2.0 * im / n as f64);
    (re.hypot(im), im.atan2(re))
}

/// Difference of angles in degrees, wrapped to (-180, 180].
pub fn angle_deg(a: f64, b: f64) -> f64 {
    let mut d = (a - b).to_degrees() % 360.0;
    if d <= -180.0 {
        d += 360.0;
    } else if d > 180.0 {
        d -= 360.0;
    }
    d
}

pub fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    (a[..n]
        .iter()
        .zip(&b[..n])
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n as f64)
        .sqrt()
}
