//! Linear time-invariant blocks with pure transport delay.
//!
//! A [`TransferBlock`] is `N(s)/D(s) * exp(-s*T)`. Blocks can be evaluated on
//! the imaginary axis, chained with [`series`] and turned into fixed-step
//! recursions with [`discretize`].

mod block;
mod discrete;
pub(crate) mod poly;
mod rational;

pub use block::{series, FrequencyPoint, TransferBlock};
pub use discrete::{delay_samples, discretize, DelayLine, DiscreteFilter, DiscreteStepper};
pub(crate) use rational::Rational;

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LtiError {
    #[error("invalid block: {0}")]
    InvalidBlock(String),
    #[error("frequency must be positive, got {0} rad/s")]
    NonPositiveFrequency(f64),
    #[error("pole on imaginary axis at {omega} rad/s")]
    PoleOnImaginaryAxis { omega: f64 },
    #[error("delay {delay_s} s is not an integer multiple of dt {dt_s} s")]
    NonIntegerDelay { delay_s: f64, dt_s: f64 },
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("non-finite input sample {0}")]
    NonFiniteInput(f64),
    #[error("series of zero blocks")]
    EmptySeries,
}
