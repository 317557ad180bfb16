//! Co-simulation kernel: the [`SimUnit`] contract, an [`EventQueue`] and
//! three masters.
//!
//! * [`run_lockstep`] routes every output once per fixed step, then advances
//!   all units by that step.
//! * [`run_hub`] is lockstep with per-unit publication lags, emulating a
//!   latest-value message router without time alignment.
//! * [`run_conservative`] grants each unit the earliest time an upstream peer
//!   could still affect it and delivers events in queue order.
//!
//! Master logs are one line per action: `<time>\t<unit>\t<action>`, time in
//! seconds with twelve fractional digits.

mod master;
mod phil;
mod queue;
mod time;
mod unit;
mod units;

pub use master::{
    run_conservative, run_conservative_ordered, run_hub, run_lockstep, run_master, CosimError,
    CosimRun, Link, LogEntry, MasterConfig, MasterLog, MasterMode, PortRef, RunStats, SkewReport,
    UnitSkew, Wiring,
};
pub use phil::{merge_split_traces, HardwareUnit, PhilLoopUnit, SimulatorUnit};
pub use queue::{Event, EventQueue};
pub use time::SimTime;
pub use unit::{Emission, InputPort, PortKind, PortSpec, SimUnit, StepClock, UnitError};
pub use units::{ConstantUnit, GainUnit, SineSourceUnit};
