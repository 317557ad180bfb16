//! Virtual power-hardware-in-the-loop testbench.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! and scheduling core:
//!
//! * [`lti`] rational blocks with pure delay, frequency evaluation and
//!   bilinear discretization,
//! * [`bench`] the closed PHIL loop in the time domain plus accuracy metrics,
//! * [`stability`] Bode-style classification with an uncertainty margin,
//! * [`compensation`] feedback filtering, extrapolation and per-harmonic
//!   phase advance,
//! * [`cosim`] co-simulation units and the lockstep, hub and conservative
//!   masters,
//! * [`netem`] a seeded network impairment unit.
//!
//! File formats and the command line live in the `philsim` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bench;
pub mod compensation;
pub mod cosim;
pub mod lti;
pub(crate) mod math;
pub mod netem;
pub mod rng;
pub mod stability;

pub use bench::{PhilLoop, Trace};
pub use lti::{FrequencyPoint, TransferBlock};
pub use stability::{Classification, StabilityVerdict, UncertaintyMargin};
