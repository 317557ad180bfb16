//! The closed PHIL loop: simulated source side, interface algorithm, power
//! amplifier, hardware under test and feedback sensor.
//!
//! Signal flow of the voltage-type ideal transformer method:
//!
//! ```text
//!  V_s ──(+)── v_cmd ──> [delay_a] ─> [gain*LP] ─> sat ─(+ d)─> v_amp ─> [1/Z_h] ─> i_hut
//!        (-)                                                                       │
//!         └── [Z_s] <── [F] <── [extrapolate] <── i_meas <── [delay_s] <───────────┘
//! ```
//!
//! The open loop is `Z_s * F * G_amp * exp(-s T_d) / Z_h`.

mod accuracy;
mod model;
mod run;
pub(crate) mod stages;
mod trace;

pub use accuracy::{accuracy_metrics, AccuracyReport, HarmonicError};
pub use model::{
    build_loop, AmplifierModel, Compensator, Disturbance, Harmonic, HutModel, Impedance, InterfaceAlgorithm,
    LoopDescription, PhilLoop, SimulatedSide,
};
pub use run::{reference_direct, run_time_domain, LoopRunner, Sample, DIVERGENCE_FACTOR};
pub use trace::{channel, Trace};

use alloc::string::String;

use crate::lti::LtiError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("unknown interface algorithm '{0}'")]
    UnknownInterface(String),
    #[error("interface algorithm '{algorithm}' requires parameter '{parameter}'")]
    MissingParameter {
        algorithm: &'static str,
        parameter: &'static str,
    },
    #[error("total loop delay must be > 0 for a PHIL run")]
    ZeroLoopDelay,
    #[error("open-loop chain is improper; give the amplifier a finite bandwidth or add a feedback filter")]
    ImproperOpenLoop,
    #[error("time step {dt_s} s exceeds the limit {limit_s} s (1/(50*f_max))")]
    StepTooLarge { dt_s: f64, limit_s: f64 },
    #[error("non-finite value in channel '{channel}' at step {step}")]
    NonFinite { step: usize, channel: &'static str },
    #[error("analysis window shorter than one fundamental period")]
    WindowTooShort,
    #[error("traces are not comparable: {0}")]
    TraceMismatch(String),
    #[error("unknown channel '{0}'")]
    UnknownChannel(String),
    #[error(transparent)]
    Lti(#[from] LtiError),
}
