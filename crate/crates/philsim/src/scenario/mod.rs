//! Scenario files: TOML text to a validated [`Scenario`] and back.
//!
//! Parsing is strict. Unknown keys and malformed values stop at the first
//! syntax error; semantic checks then run over the whole file and report
//! every problem with its line.

mod file;
mod locate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use philsim_core::bench::{
    AmplifierModel, Disturbance, Harmonic, Impedance, InterfaceAlgorithm, LoopDescription,
    PhilLoop, SimulatedSide,
};
use philsim_core::compensation::{
    apply_extrapolator, apply_phase_advance, design_phase_advance, CompensationError, Extrapolator,
};
use philsim_core::lti::delay_samples;
use philsim_core::netem::{make_netem_unit, NetworkSpec};
use philsim_core::rng::SplitMix64;
use philsim_core::stability::UncertaintyMargin;

pub use file::*;
use locate::Locator;

use crate::quantity::{Dimension, Quantity};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub run: RunSpec,
    pub source: SimulatedSide,
    pub interface: InterfaceAlgorithm,
    pub amplifier: AmplifierModel,
    pub hut: Impedance,
    pub sensor_delay_s: f64,
    pub disturbance: Option<DisturbanceSpec>,
    pub epsilon: f64,
    pub compensation: CompensationSpec,
    pub sweep: Option<SweepSpec>,
    pub cosim: Option<CosimSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub dt_s: f64,
    pub duration_s: f64,
    /// Master seed; seeds not given explicitly are derived from it.
    pub seed: u64,
    pub out_dir: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DisturbanceSpec {
    Constant { value_v: f64 },
    Sine { amplitude_v: f64, frequency_hz: f64, phase_rad: f64 },
    WhiteNoise { amplitude_v: f64, seed: Option<u64> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensationSpec {
    pub phase_advance: bool,
    pub extrapolator_order: Option<u8>,
}

/// `steps` evenly spaced values from `from` to `to` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let h = (self.to - self.from) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| if k + 1 == self.steps { self.to } else { self.from + h * k as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub ratio: Grid,
    /// Total loop delay, seconds.
    pub delay: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasterKind {
    Lockstep,
    Hub,
    Conservative,
}

impl MasterKind {
    pub fn name(self) -> &'static str {
        match self {
            MasterKind::Lockstep => "lockstep",
            MasterKind::Hub => "hub",
            MasterKind::Conservative => "conservative",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosimSpec {
    pub master: MasterKind,
    pub end_s: Option<f64>,
    /// Hub publication lag per unit id, exchange steps.
    pub lags: BTreeMap<String, usize>,
    pub poll_order: Option<Vec<String>>,
    pub units: Vec<UnitSpec>,
    pub links: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UnitSpec {
    Simulator { id: String },
    Hardware { id: String },
    Loop { id: String },
    Netem {
        id: String,
        base_latency_s: f64,
        jitter_s: f64,
        loss_probability: f64,
        seed: Option<u64>,
    },
    Constant { id: String, value: f64 },
    Gain { id: String, gain: f64, latency_steps: u64 },
    Sine { id: String, amplitude: f64, frequency_hz: f64 },
}

impl UnitSpec {
    pub fn id(&self) -> &str {
        match self {
            UnitSpec::Simulator { id }
            | UnitSpec::Hardware { id }
            | UnitSpec::Loop { id }
            | UnitSpec::Netem { id, .. }
            | UnitSpec::Constant { id, .. }
            | UnitSpec::Gain { id, .. }
            | UnitSpec::Sine { id, .. } => id,
        }
    }

    /// Input and output port names.
    pub fn ports(&self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            UnitSpec::Simulator { .. } => (&["i_meas"], &["v_cmd"]),
            UnitSpec::Hardware { .. } => (&["v_cmd"], &["i_hut"]),
            UnitSpec::Loop { .. } => (&["extra_v"], &["v_pcc", "i_hut"]),
            UnitSpec::Netem { .. } | UnitSpec::Gain { .. } => (&["in"], &["out"]),
            UnitSpec::Constant { .. } | UnitSpec::Sine { .. } => (&[], &["out"]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub line: Option<usize>,
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.path, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {}: {message}", line.map_or("?".into(), |l| l.to_string()))]
    Syntax { line: Option<usize>, message: String },
    #[error("{}", join(.0))]
    Invalid(Vec<ValidationError>),
}

impl ScenarioError {
    pub fn errors(&self) -> Vec<ValidationError> {
        match self {
            ScenarioError::Syntax { line, message } => vec![ValidationError {
                line: *line,
                path: "syntax".into(),
                message: message.clone(),
            }],
            ScenarioError::Invalid(v) => v.clone(),
        }
    }
}

fn join(v: &[ValidationError]) -> String {
    v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let raw: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Syntax {
            line: e.span().map(|s| Locator::line_of_offset(text, s.start)),
            message: e.message().trim().to_string(),
        })?;
        Checker::new(text).scenario(&raw)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("scenario serializes")
    }

    pub fn margin(&self) -> UncertaintyMargin {
        UncertaintyMargin::new(self.epsilon).expect("epsilon validated")
    }

    /// Overrides ε from the command line.
    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<(), ScenarioError> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(ScenarioError::Invalid(vec![epsilon_error(None, epsilon)]));
        }
        self.epsilon = epsilon;
        Ok(())
    }

    /// Seed of derived stream `k`: 0 is the noise disturbance, `1 + n` the
    /// `n`-th netem unit.
    pub fn derived_seed(&self, k: u64) -> u64 {
        SplitMix64::output_at(self.run.seed, k)
    }

    pub fn loop_description(&self) -> LoopDescription {
        let disturbance = self.disturbance.map(|d| match d {
            DisturbanceSpec::Constant { value_v } => Disturbance::Constant { value_v },
            DisturbanceSpec::Sine {
                amplitude_v,
                frequency_hz,
                phase_rad,
            } => Disturbance::Sine {
                amplitude_v,
                frequency_hz,
                phase_rad,
            },
            DisturbanceSpec::WhiteNoise { amplitude_v, seed } => Disturbance::WhiteNoise {
                amplitude_v,
                seed: seed.unwrap_or_else(|| self.derived_seed(0)),
            },
        });
        LoopDescription {
            simulated_side: self.source.clone(),
            interface: self.interface,
            amplifier: self.amplifier,
            hut: self.hut,
            sensor_delay_s: self.sensor_delay_s,
            disturbance,
            compensator: Default::default(),
        }
    }

    /// The loop with the selected compensation applied.
    pub fn phil_loop(&self) -> Result<PhilLoop, CompensationError> {
        let mut lp = PhilLoop::new(self.loop_description())?;
        if self.compensation.phase_advance {
            let plan = design_phase_advance(
                self.source.f0_hz,
                &self.source.orders(),
                lp.total_delay_s(),
            )?;
            lp = apply_phase_advance(&lp, &plan)?;
        }
        if let Some(order) = self.compensation.extrapolator_order {
            lp = apply_extrapolator(&lp, Extrapolator::new(order, lp.total_delay_s())?)?;
        }
        Ok(lp)
    }

    /// Network spec of a netem unit with its seed resolved.
    pub fn network_spec(&self, unit: &UnitSpec) -> Option<NetworkSpec> {
        let cosim = self.cosim.as_ref()?;
        let UnitSpec::Netem {
            base_latency_s,
            jitter_s,
            loss_probability,
            seed,
            ..
        } = unit
        else {
            return None;
        };
        let n = cosim
            .units
            .iter()
            .filter(|u| matches!(u, UnitSpec::Netem { .. }))
            .position(|u| u == unit)? as u64;
        Some(NetworkSpec {
            base_latency_s: *base_latency_s,
            jitter_s: *jitter_s,
            loss_probability: *loss_probability,
            seed: seed.unwrap_or_else(|| self.derived_seed(1 + n)),
        })
    }

    pub fn to_file(&self) -> ScenarioFile {
        let q = Quantity::Number;
        let interface = match self.interface {
            InterfaceAlgorithm::Itm => None,
            InterfaceAlgorithm::FeedbackFilter { cutoff_hz } => Some(InterfaceFile {
                algorithm: "feedback_filter".into(),
                cutoff: Some(q(cutoff_hz)),
                z_shift: None,
            }),
            InterfaceAlgorithm::ShiftingImpedance { z_shift_ohm } => Some(InterfaceFile {
                algorithm: "shifting_impedance".into(),
                cutoff: None,
                z_shift: Some(q(z_shift_ohm)),
            }),
        };
        let disturbance = self.disturbance.map(|d| match d {
            DisturbanceSpec::Constant { value_v } => DisturbanceFile::Constant { value: q(value_v) },
            DisturbanceSpec::Sine {
                amplitude_v,
                frequency_hz,
                phase_rad,
            } => DisturbanceFile::Sine {
                amplitude: q(amplitude_v),
                frequency: q(frequency_hz),
                phase: Some(q(phase_rad)),
            },
            DisturbanceSpec::WhiteNoise { amplitude_v, seed } => DisturbanceFile::WhiteNoise {
                amplitude: q(amplitude_v),
                seed: seed.map(Seed),
            },
        });
        let grid = |g: Grid| GridFile {
            from: q(g.from),
            to: q(g.to),
            steps: g.steps,
        };
        ScenarioFile {
            run: RunFile {
                dt: q(self.run.dt_s),
                duration: q(self.run.duration_s),
                seed: Some(Seed(self.run.seed)),
                out: self.run.out_dir.clone(),
            },
            source: SourceFile {
                f0: q(self.source.f0_hz),
                harmonics: self
                    .source
                    .harmonics
                    .iter()
                    .map(|h| HarmonicFile {
                        order: h.order,
                        amplitude: q(h.amplitude_v),
                        phase: Some(q(h.phase_rad)),
                    })
                    .collect(),
                impedance: impedance_file(self.source.source_impedance),
            },
            interface,
            amplifier: AmplifierFile {
                gain: Some(self.amplifier.gain),
                bandwidth: self
                    .amplifier
                    .bandwidth_hz
                    .is_finite()
                    .then(|| q(self.amplifier.bandwidth_hz)),
                delay: q(self.amplifier.delay_s),
                saturation: self.amplifier.saturation_v.map(q),
            },
            hut: impedance_file(self.hut),
            sensor: Some(SensorFile {
                delay: q(self.sensor_delay_s),
            }),
            disturbance,
            stability: Some(StabilityFile {
                epsilon: self.epsilon,
            }),
            compensation: Some(CompensationFile {
                phase_advance: Some(self.compensation.phase_advance),
                extrapolator: self
                    .compensation
                    .extrapolator_order
                    .map(|order| ExtrapolatorFile { order }),
            }),
            sweep: self.sweep.map(|s| SweepFile {
                ratio: grid(s.ratio),
                delay: grid(s.delay),
            }),
            cosim: self.cosim.as_ref().map(|c| CosimFile {
                master: c.master.name().into(),
                end: c.end_s.map(q),
                lags: c.lags.clone(),
                poll_order: c.poll_order.clone(),
                unit: c.units.iter().map(unit_file).collect(),
                link: c
                    .links
                    .iter()
                    .map(|(from, to)| LinkFile {
                        from: from.clone(),
                        to: to.clone(),
                    })
                    .collect(),
            }),
        }
    }
}

fn impedance_file(z: Impedance) -> ImpedanceFile {
    let q = Quantity::Number;
    match z {
        Impedance::Resistive { r_ohm } => ImpedanceFile::Resistive { r: q(r_ohm) },
        Impedance::SeriesRl { r_ohm, l_h } => ImpedanceFile::SeriesRl {
            r: q(r_ohm),
            l: q(l_h),
        },
        Impedance::ParallelRc { r_ohm, c_f } => ImpedanceFile::ParallelRc {
            r: q(r_ohm),
            c: q(c_f),
        },
    }
}

fn unit_file(u: &UnitSpec) -> UnitFile {
    let id = u.id().to_string();
    match *u {
        UnitSpec::Simulator { .. } => UnitFile::Simulator { id },
        UnitSpec::Hardware { .. } => UnitFile::Hardware { id },
        UnitSpec::Loop { .. } => UnitFile::Loop { id },
        UnitSpec::Netem {
            base_latency_s,
            jitter_s,
            loss_probability,
            seed,
            ..
        } => UnitFile::Netem {
            id,
            latency: Quantity::Number(base_latency_s),
            jitter: Some(Quantity::Number(jitter_s)),
            loss: Some(loss_probability),
            seed: seed.map(Seed),
        },
        UnitSpec::Constant { value, .. } => UnitFile::Constant { id, value },
        UnitSpec::Gain {
            gain, latency_steps, ..
        } => UnitFile::Gain {
            id,
            gain,
            latency_steps: Some(latency_steps),
        },
        UnitSpec::Sine {
            amplitude,
            frequency_hz,
            ..
        } => UnitFile::Sine {
            id,
            amplitude,
            frequency: Quantity::Number(frequency_hz),
        },
    }
}

fn epsilon_error(line: Option<usize>, epsilon: f64) -> ValidationError {
    ValidationError {
        line,
        path: "stability.epsilon".into(),
        message: format!("epsilon must satisfy epsilon >= 0, got {epsilon}"),
    }
}

/// Collects every semantic error of a file.
struct Checker<'a> {
    loc: Locator<'a>,
    errors: Vec<ValidationError>,
}

/// Where a value lives: table name, array index, key.
type At<'k> = (&'k str, Option<usize>, &'k str);

impl<'a> Checker<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            loc: Locator::new(text),
            errors: Vec::new(),
        }
    }

    fn push(&mut self, (table, index, key): At, message: String) {
        let path = match index {
            Some(i) => format!("{table}[{i}].{key}"),
            None if key.is_empty() => table.to_string(),
            None => format!("{table}.{key}"),
        };
        let line = self.loc.line(table, index, (!key.is_empty()).then_some(key));
        self.errors.push(ValidationError {
            line,
            path,
            message,
        });
    }

    fn check(&mut self, ok: bool, at: At, message: impl FnOnce() -> String) {
        if !ok {
            self.push(at, message());
        }
    }

    fn quantity(&mut self, q: &Quantity, dim: Dimension, at: At) -> f64 {
        match q.resolve(dim) {
            Ok(v) => v,
            Err(e) => {
                self.push(at, e.to_string());
                f64::NAN
            }
        }
    }

    fn positive(&mut self, q: &Quantity, dim: Dimension, at: At) -> f64 {
        let v = self.quantity(q, dim, at);
        if !v.is_nan() {
            self.check(v > 0.0, at, || format!("must be > 0, got {v}"));
        }
        v
    }

    fn non_negative(&mut self, q: &Quantity, dim: Dimension, at: At) -> f64 {
        let v = self.quantity(q, dim, at);
        if !v.is_nan() {
            self.check(v >= 0.0, at, || format!("must be >= 0, got {v}"));
        }
        v
    }

    fn delay(&mut self, delay_s: f64, dt_s: f64, at: At) {
        if delay_s >= 0.0 && dt_s > 0.0 && delay_samples(delay_s, dt_s).is_err() {
            self.push(
                at,
                format!("delay/dt not integer: {delay_s} s / {dt_s} s = {}", delay_s / dt_s),
            );
        }
    }

    fn impedance(&mut self, z: &ImpedanceFile, table: &str, hut: bool) -> Impedance {
        let key = if table == "source" { "impedance" } else { "r" };
        let r_at = (table, None, key);
        let r = |c: &mut Self, q: &Quantity| {
            if hut {
                c.positive(q, Dimension::Resistance, r_at)
            } else {
                c.non_negative(q, Dimension::Resistance, r_at)
            }
        };
        let elem_at = |k| (table, None, if table == "source" { "impedance" } else { k });
        match z {
            ImpedanceFile::Resistive { r: rq } => Impedance::Resistive { r_ohm: r(self, rq) },
            ImpedanceFile::SeriesRl { r: rq, l } => Impedance::SeriesRl {
                r_ohm: r(self, rq),
                l_h: self.positive(l, Dimension::Inductance, elem_at("l")),
            },
            ImpedanceFile::ParallelRc { r: rq, c } => Impedance::ParallelRc {
                r_ohm: r(self, rq),
                c_f: self.positive(c, Dimension::Capacitance, elem_at("c")),
            },
        }
    }

    fn scenario(mut self, f: &ScenarioFile) -> Result<Scenario, ScenarioError> {
        let dt_s = self.positive(&f.run.dt, Dimension::Time, ("run", None, "dt"));
        let duration_s = self.positive(&f.run.duration, Dimension::Time, ("run", None, "duration"));
        if dt_s > 0.0 && duration_s > 0.0 {
            self.check(duration_s >= dt_s, ("run", None, "duration"), || {
                format!("duration {duration_s} s is shorter than dt {dt_s} s")
            });
        }
        let run = RunSpec {
            dt_s,
            duration_s,
            seed: f.run.seed.map_or(0, |s| s.0),
            out_dir: f.run.out.clone(),
        };

        let source = self.source(&f.source);
        let interface = self.interface(f.interface.as_ref());

        let a = &f.amplifier;
        let gain = a.gain.unwrap_or(1.0);
        self.check(gain.is_finite() && gain != 0.0, ("amplifier", None, "gain"), || {
            format!("must be finite and nonzero, got {gain}")
        });
        let bandwidth_hz = a.bandwidth.as_ref().map_or(f64::INFINITY, |q| {
            self.positive(q, Dimension::Frequency, ("amplifier", None, "bandwidth"))
        });
        let amp_delay = self.non_negative(&a.delay, Dimension::Time, ("amplifier", None, "delay"));
        self.delay(amp_delay, dt_s, ("amplifier", None, "delay"));
        let saturation_v = a
            .saturation
            .as_ref()
            .map(|q| self.positive(q, Dimension::Voltage, ("amplifier", None, "saturation")));
        let amplifier = AmplifierModel {
            gain,
            bandwidth_hz,
            delay_s: amp_delay,
            saturation_v,
        };

        let hut = self.impedance(&f.hut, "hut", true);
        let sensor_delay_s = match &f.sensor {
            Some(s) => {
                let d = self.non_negative(&s.delay, Dimension::Time, ("sensor", None, "delay"));
                self.delay(d, dt_s, ("sensor", None, "delay"));
                d
            }
            None => 0.0,
        };
        let disturbance = f.disturbance.as_ref().map(|d| self.disturbance(d));

        let epsilon = f.stability.as_ref().map_or(0.0, |s| s.epsilon);
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            let line = self.loc.line("stability", None, Some("epsilon"));
            self.errors.push(epsilon_error(line, epsilon));
        }

        let compensation = f.compensation.as_ref().map_or(CompensationSpec::default(), |c| {
            CompensationSpec {
                phase_advance: c.phase_advance.unwrap_or(false),
                extrapolator_order: c.extrapolator.as_ref().map(|e| e.order),
            }
        });
        if let Some(order) = compensation.extrapolator_order {
            self.check(order <= 1, ("compensation", None, "extrapolator"), || {
                format!("extrapolator order must be 0 or 1, got {order}")
            });
        }

        let sweep = f.sweep.as_ref().map(|s| self.sweep(s, dt_s, sensor_delay_s));
        let cosim = f.cosim.as_ref().map(|c| self.cosim(c));

        let scenario = Scenario {
            run,
            source,
            interface,
            amplifier,
            hut,
            sensor_delay_s,
            disturbance,
            epsilon,
            compensation,
            sweep,
            cosim,
        };
        if self.errors.is_empty() {
            let built = scenario
                .phil_loop()
                .map_err(|e| e.to_string())
                .and_then(|lp| lp.open_loop().map(|_| ()).map_err(|e| e.to_string()));
            if let Err(message) = built {
                self.errors.push(ValidationError {
                    line: None,
                    path: "loop".into(),
                    message,
                });
            }
        }
        if self.errors.is_empty() {
            Ok(scenario)
        } else {
            Err(ScenarioError::Invalid(self.errors))
        }
    }

    fn source(&mut self, s: &SourceFile) -> SimulatedSide {
        let f0_hz = self.positive(&s.f0, Dimension::Frequency, ("source", None, "f0"));
        let at = ("source", None, "harmonics");
        self.check(!s.harmonics.is_empty(), at, || "at least one harmonic is required".into());
        let mut seen = BTreeSet::new();
        let harmonics = s
            .harmonics
            .iter()
            .map(|h| {
                self.check(h.order > 0, at, || "harmonic order must be >= 1".into());
                self.check(seen.insert(h.order), at, || {
                    format!("harmonic order {} declared twice", h.order)
                });
                let amplitude = self.quantity(&h.amplitude, Dimension::Voltage, at);
                let phase = h
                    .phase
                    .as_ref()
                    .map_or(0.0, |p| self.quantity(p, Dimension::Angle, at));
                Harmonic::new(h.order, amplitude, phase)
            })
            .collect();
        SimulatedSide {
            f0_hz,
            harmonics,
            source_impedance: self.impedance(&s.impedance, "source", false),
        }
    }

    fn interface(&mut self, i: Option<&InterfaceFile>) -> InterfaceAlgorithm {
        let Some(i) = i else {
            return InterfaceAlgorithm::Itm;
        };
        let cutoff = i
            .cutoff
            .as_ref()
            .map(|q| self.positive(q, Dimension::Frequency, ("interface", None, "cutoff")));
        let z_shift = i
            .z_shift
            .as_ref()
            .map(|q| self.quantity(q, Dimension::Resistance, ("interface", None, "z_shift")));
        let algo = i.algorithm.as_str();
        self.check(cutoff.is_none() || algo == "feedback_filter", ("interface", None, "cutoff"), || {
            format!("cutoff is not a parameter of '{algo}'")
        });
        self.check(z_shift.is_none() || algo == "shifting_impedance", ("interface", None, "z_shift"), || {
            format!("z_shift is not a parameter of '{algo}'")
        });
        match InterfaceAlgorithm::from_name(algo, cutoff, z_shift) {
            Ok(a) => a,
            Err(e) => {
                self.push(("interface", None, "algorithm"), e.to_string());
                InterfaceAlgorithm::Itm
            }
        }
    }

    fn disturbance(&mut self, d: &DisturbanceFile) -> DisturbanceSpec {
        let at = |k| ("disturbance", None, k);
        match d {
            DisturbanceFile::Constant { value } => DisturbanceSpec::Constant {
                value_v: self.quantity(value, Dimension::Voltage, at("value")),
            },
            DisturbanceFile::Sine {
                amplitude,
                frequency,
                phase,
            } => DisturbanceSpec::Sine {
                amplitude_v: self.quantity(amplitude, Dimension::Voltage, at("amplitude")),
                frequency_hz: self.positive(frequency, Dimension::Frequency, at("frequency")),
                phase_rad: phase
                    .as_ref()
                    .map_or(0.0, |p| self.quantity(p, Dimension::Angle, at("phase"))),
            },
            DisturbanceFile::WhiteNoise { amplitude, seed } => DisturbanceSpec::WhiteNoise {
                amplitude_v: self.non_negative(amplitude, Dimension::Voltage, at("amplitude")),
                seed: seed.map(|s| s.0),
            },
        }
    }

    fn grid(&mut self, g: &GridFile, dim: Dimension, key: &str) -> Grid {
        let at = ("sweep", None, key);
        let grid = Grid {
            from: self.quantity(&g.from, dim, at),
            to: self.quantity(&g.to, dim, at),
            steps: g.steps,
        };
        self.check(g.steps >= 1, at, || "steps must be >= 1".into());
        if g.steps > 1 {
            self.check(grid.to > grid.from, at, || {
                format!("to ({}) must exceed from ({})", grid.to, grid.from)
            });
        }
        grid
    }

    fn sweep(&mut self, s: &SweepFile, dt_s: f64, sensor_delay_s: f64) -> SweepSpec {
        let ratio = self.grid(&s.ratio, Dimension::Ratio, "ratio");
        let delay = self.grid(&s.delay, Dimension::Time, "delay");
        self.check(!(ratio.from < 0.0), ("sweep", None, "ratio"), || {
            format!("ratios must be >= 0, got {}", ratio.from)
        });
        if delay.steps >= 1 && delay.from.is_finite() && delay.to.is_finite() {
            for d in delay.values() {
                let amp = d - sensor_delay_s;
                if amp < -1e-12 * d.abs() {
                    self.push(
                        ("sweep", None, "delay"),
                        format!("total delay {d} s is below the sensor delay {sensor_delay_s} s"),
                    );
                    break;
                }
                let before = self.errors.len();
                self.delay(amp.max(0.0), dt_s, ("sweep", None, "delay"));
                if self.errors.len() > before {
                    break;
                }
            }
        }
        SweepSpec { ratio, delay }
    }

    fn cosim(&mut self, c: &CosimFile) -> CosimSpec {
        let master = match c.master.as_str() {
            "lockstep" => MasterKind::Lockstep,
            "hub" => MasterKind::Hub,
            "conservative" => MasterKind::Conservative,
            other => {
                self.push(
                    ("cosim", None, "master"),
                    format!("unknown master '{other}' (lockstep, hub, conservative)"),
                );
                MasterKind::Lockstep
            }
        };
        let end_s = c
            .end
            .as_ref()
            .map(|q| self.positive(q, Dimension::Time, ("cosim", None, "end")));

        let mut ids = BTreeSet::new();
        let units: Vec<UnitSpec> = c
            .unit
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let at = |k| ("cosim.unit", Some(i), k);
                self.check(!u.id().is_empty() && !u.id().contains('.'), at("id"), || {
                    format!("unit id '{}' must be non-empty and contain no '.'", u.id())
                });
                self.check(ids.insert(u.id().to_string()), at("id"), || {
                    format!("duplicate unit id '{}'", u.id())
                });
                self.unit(u, i)
            })
            .collect();

        let mut links = Vec::new();
        for (i, l) in c.link.iter().enumerate() {
            for (key, end, inputs) in [("from", &l.from, false), ("to", &l.to, true)] {
                let at = ("cosim.link", Some(i), key);
                let Some((u, p)) = end.split_once('.') else {
                    self.push(at, format!("expected \"unit.port\", got \"{end}\""));
                    continue;
                };
                match units.iter().find(|s| s.id() == u) {
                    None => self.push(at, format!("unknown unit '{u}'")),
                    Some(s) => {
                        let (ins, outs) = s.ports();
                        let names = if inputs { ins } else { outs };
                        self.check(names.contains(&p), at, || {
                            let side = if inputs { "input" } else { "output" };
                            format!("unit '{u}' has no {side} port '{p}' (has {names:?})")
                        });
                    }
                }
            }
            links.push((l.from.clone(), l.to.clone()));
        }

        for id in c.lags.keys() {
            self.check(ids.contains(id), ("cosim", None, "lags"), || format!("lag for unknown unit '{id}'"));
        }
        self.check(c.lags.is_empty() || master == MasterKind::Hub, ("cosim", None, "lags"), || {
            "lags apply to the hub master only".into()
        });
        if let Some(order) = &c.poll_order {
            self.check(master == MasterKind::Conservative, ("cosim", None, "poll_order"), || {
                "poll_order applies to the conservative master only".into()
            });
            let given: BTreeSet<&String> = order.iter().collect();
            self.check(
                given.len() == order.len() && order.len() == ids.len() && order.iter().all(|o| ids.contains(o)),
                ("cosim", None, "poll_order"),
                || "poll_order must list every unit id exactly once".into(),
            );
        }
        CosimSpec {
            master,
            end_s,
            lags: c.lags.clone(),
            poll_order: c.poll_order.clone(),
            units,
            links,
        }
    }

    fn unit(&mut self, u: &UnitFile, i: usize) -> UnitSpec {
        let at = |k| ("cosim.unit", Some(i), k);
        let id = u.id().to_string();
        match u {
            UnitFile::Simulator { .. } => UnitSpec::Simulator { id },
            UnitFile::Hardware { .. } => UnitSpec::Hardware { id },
            UnitFile::Loop { .. } => UnitSpec::Loop { id },
            UnitFile::Netem {
                latency,
                jitter,
                loss,
                seed,
                ..
            } => {
                let spec = NetworkSpec {
                    base_latency_s: self.positive(latency, Dimension::Time, at("latency")),
                    jitter_s: jitter
                        .as_ref()
                        .map_or(0.0, |q| self.non_negative(q, Dimension::Time, at("jitter"))),
                    loss_probability: loss.unwrap_or(0.0),
                    seed: seed.map_or(0, |s| s.0),
                };
                if let Err(e) = make_netem_unit(id.as_str(), spec) {
                    self.push(at("latency"), e.to_string());
                }
                UnitSpec::Netem {
                    id,
                    base_latency_s: spec.base_latency_s,
                    jitter_s: spec.jitter_s,
                    loss_probability: spec.loss_probability,
                    seed: seed.map(|s| s.0),
                }
            }
            UnitFile::Constant { value, .. } => UnitSpec::Constant { id, value: *value },
            UnitFile::Gain {
                gain, latency_steps, ..
            } => UnitSpec::Gain {
                id,
                gain: *gain,
                latency_steps: latency_steps.unwrap_or(0),
            },
            UnitFile::Sine {
                amplitude,
                frequency,
                ..
            } => UnitSpec::Sine {
                id,
                amplitude: *amplitude,
                frequency_hz: self.positive(frequency, Dimension::Frequency, at("frequency")),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values_hit_both_ends() {
        let g = Grid {
            from: 1e-4,
            to: 5e-3,
            steps: 21,
        };
        let v = g.values();
        assert_eq!(v.len(), 21);
        assert_eq!(v[0], 1e-4);
        assert_eq!(v[20], 5e-3);
        assert_eq!(Grid { from: 2.0, to: 2.0, steps: 1 }.values(), vec![2.0]);
    }
}
