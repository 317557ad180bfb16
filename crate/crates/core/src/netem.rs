//! Seeded network impairment: latency, uniform jitter and loss.
//!
//! The fate of message `n` is a pure function of `(spec, n)`: draw `2n` of
//! the SplitMix64 stream decides loss (`u < loss_probability`), draw `2n+1`
//! sets the delay `base + jitter * (2u - 1)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cosim::{Emission, InputPort, LogEntry, PortSpec, SimTime, SimUnit, UnitError};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetemError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("base latency {base_latency_s} s minus jitter {jitter_s} s must be > 0 for a positive lookahead")]
    NoLookahead { base_latency_s: f64, jitter_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkSpec {
    pub base_latency_s: f64,
    /// Half-width of the uniform jitter.
    pub jitter_s: f64,
    pub loss_probability: f64,
    pub seed: u64,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<(), NetemError> {
        let bad = |m: String| Err(NetemError::InvalidSpec(m));
        if !(self.base_latency_s >= 0.0 && self.base_latency_s.is_finite()) {
            return bad(format!("base_latency_s must be >= 0, got {}", self.base_latency_s));
        }
        if !(self.jitter_s >= 0.0 && self.jitter_s.is_finite()) {
            return bad(format!("jitter_s must be >= 0, got {}", self.jitter_s));
        }
        if self.jitter_s > self.base_latency_s {
            return bad(format!(
                "jitter_s {} exceeds base_latency_s {}",
                self.jitter_s, self.base_latency_s
            ));
        }
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return bad(format!(
                "loss_probability must be in [0, 1], got {}",
                self.loss_probability
            ));
        }
        Ok(())
    }

    /// Outcome of message number `seq`.
    pub fn outcome(&self, seq: u64) -> Outcome {
        let lost = SplitMix64::unit_at(self.seed, 2 * seq) < self.loss_probability;
        let u = SplitMix64::unit_at(self.seed, 2 * seq + 1);
        let delay_s = if self.jitter_s == 0.0 {
            self.base_latency_s
        } else {
            self.base_latency_s + self.jitter_s * (2.0 * u - 1.0)
        };
        Outcome {
            delivered: !lost,
            delay_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub delivered: bool,
    pub delay_s: f64,
}

/// Outcomes of the first `n` messages.
pub fn sample_stream(spec: &NetworkSpec, n: usize) -> Vec<Outcome> {
    (0..n as u64).map(|k| spec.outcome(k)).collect()
}

/// One message that passed through a [`NetemUnit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transmission {
    pub seq: u64,
    pub sent: SimTime,
    pub delivered: Option<SimTime>,
}

const IN: [PortSpec; 1] = [PortSpec::message("in")];
const OUT: [PortSpec; 1] = [PortSpec::continuous("out")];

/// Event-driven unit forwarding `in` to `out` through the network model.
pub struct NetemUnit {
    id: String,
    spec: NetworkSpec,
    lookahead: SimTime,
    committed: SimTime,
    input: InputPort,
    next_seq: u64,
    transmissions: Vec<Transmission>,
    log: Vec<LogEntry>,
}

pub fn make_netem_unit(id: impl Into<String>, spec: NetworkSpec) -> Result<NetemUnit, NetemError> {
    spec.validate()?;
    let no_lookahead = NetemError::NoLookahead {
        base_latency_s: spec.base_latency_s,
        jitter_s: spec.jitter_s,
    };
    let lookahead = SimTime::from_secs(spec.base_latency_s - spec.jitter_s)
        .filter(|t| t.ticks() > 0)
        .ok_or(no_lookahead)?;
    Ok(NetemUnit {
        id: id.into(),
        spec,
        lookahead,
        committed: SimTime::ZERO,
        input: InputPort::new(),
        next_seq: 0,
        transmissions: Vec::new(),
        log: Vec::new(),
    })
}

impl NetemUnit {
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn transmissions(&self) -> &[Transmission] {
        &self.transmissions
    }

    pub fn delivered_count(&self) -> usize {
        self.transmissions
            .iter()
            .filter(|t| t.delivered.is_some())
            .count()
    }
}

impl SimUnit for NetemUnit {
    fn id(&self) -> &str {
        &self.id
    }

    fn inputs(&self) -> &[PortSpec] {
        &IN
    }

    fn outputs(&self) -> &[PortSpec] {
        &OUT
    }

    fn lookahead(&self) -> SimTime {
        self.lookahead
    }

    fn committed(&self) -> SimTime {
        self.committed
    }

    fn step_size(&self) -> Option<SimTime> {
        None
    }

    fn receive(&mut self, _port: usize, time: SimTime, value: f64) {
        self.input.push(time, value);
    }

    fn advance(&mut self, to: SimTime, out: &mut Vec<Emission>) -> Result<(), UnitError> {
        if to < self.committed {
            return Err(UnitError::TimeRegression {
                committed: self.committed,
                requested: to,
            });
        }
        while let Some((sent, value)) = self.input.pop_before(to) {
            let seq = self.next_seq;
            self.next_seq += 1;
            let o = self.spec.outcome(seq);
            let delivered = if o.delivered {
                let delay = SimTime::from_secs(o.delay_s)
                    .unwrap_or(self.lookahead)
                    .max(self.lookahead);
                let at = sent.saturating_add(delay);
                out.push(Emission {
                    port: 0,
                    time: at,
                    value,
                });
                self.log
                    .push(LogEntry::new(sent, self.id.clone(), format!("deliver seq={seq} at={at}")));
                Some(at)
            } else {
                self.log
                    .push(LogEntry::new(sent, self.id.clone(), format!("drop seq={seq}")));
                None
            };
            self.transmissions.push(Transmission {
                seq,
                sent,
                delivered,
            });
        }
        self.committed = to;
        Ok(())
    }

    fn drain_log(&mut self, log: &mut Vec<LogEntry>) {
        log.append(&mut self.log);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(base: f64, jitter: f64, loss: f64) -> NetworkSpec {
        NetworkSpec {
            base_latency_s: base,
            jitter_s: jitter,
            loss_probability: loss,
            seed: 7,
        }
    }

    #[test]
    fn fixed_pipe() {
        let mut u = make_netem_unit("net", spec(0.02, 0.0, 0.0)).unwrap();
        let t = SimTime::from_secs(0.005).unwrap();
        u.receive(0, t, 1.5);
        let mut out = Vec::new();
        u.advance(SimTime::from_secs(0.01).unwrap(), &mut out).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].time, SimTime::from_secs(0.025).unwrap());
        assert_eq!(out[0].value, 1.5);
    }

    #[test]
    fn total_loss() {
        assert!(sample_stream(&spec(0.02, 0.0, 1.0), 1000)
            .iter()
            .all(|o| !o.delivered));
    }

    #[test]
    fn rejects_zero_lookahead() {
        assert!(matches!(
            make_netem_unit("n", spec(0.01, 0.01, 0.0)),
            Err(NetemError::InvalidSpec(_)) | Err(NetemError::NoLookahead { .. })
        ));
        assert!(matches!(
            make_netem_unit("n", spec(0.0, 0.0, 0.0)),
            Err(NetemError::NoLookahead { .. })
        ));
        assert!(spec(0.01, 0.0, 1.5).validate().is_err());
    }
}
