use alloc::vec;
use alloc::vec::Vec;

use super::{poly, LtiError, Rational, TransferBlock};
use crate::math;

/// Number of samples a delay spans at step `dt_s`. Fails when the ratio is
/// not an integer within 1e-6 relative.
pub fn delay_samples(delay_s: f64, dt_s: f64) -> Result<usize, LtiError> {
    if !(dt_s > 0.0 && dt_s.is_finite()) {
        return Err(LtiError::InvalidStep(dt_s));
    }
    let ratio = delay_s / dt_s;
    let n = math::round(ratio);
    if !(ratio.is_finite() && ratio >= 0.0) || (ratio - n).abs() > 1e-6 * ratio.max(1.0) {
        return Err(LtiError::NonIntegerDelay { delay_s, dt_s });
    }
    Ok(n as usize)
}

/// Recursive filter in transposed direct form II:
/// `y = (b0 + b1 z^-1 + ...) / (1 + a1 z^-1 + ...) x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFilter {
    b: Vec<f64>,
    a: Vec<f64>,
    state: Vec<f64>,
}

impl DiscreteFilter {
    /// Pure gain, no state.
    pub fn gain(k: f64) -> Self {
        Self {
            b: vec![k],
            a: vec![1.0],
            state: Vec::new(),
        }
    }

    pub(crate) fn bilinear(r: &Rational, dt_s: f64) -> Result<Self, LtiError> {
        bilinear(&r.num, &r.den, dt_s)
    }

    /// Numerator coefficients in powers of `z^-1`.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Denominator coefficients in powers of `z^-1`, `a[0] == 1`.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let n = self.state.len();
        let y = self.b[0] * x + self.state.first().copied().unwrap_or(0.0);
        for i in 0..n {
            let next = if i + 1 < n { self.state[i + 1] } else { 0.0 };
            self.state[i] = self.b[i + 1] * x - self.a[i + 1] * y + next;
        }
        y
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|s| *s = 0.0);
    }
}

/// Trapezoidal mapping `s -> (2/dt) (z-1)/(z+1)`. Accepts relative degree -1
/// (the trapezoidal companion of an inductor or capacitor).
fn bilinear(num: &[f64], den: &[f64], dt_s: f64) -> Result<DiscreteFilter, LtiError> {
    if !(dt_s > 0.0 && dt_s.is_finite()) {
        return Err(LtiError::InvalidStep(dt_s));
    }
    let Some(dd) = poly::degree(den) else {
        return Err(LtiError::InvalidBlock("zero denominator".into()));
    };
    let nd = poly::degree(num).unwrap_or(0);
    let order = nd.max(dd);
    let k = 2.0 / dt_s;

    // sum_i c_i k^i (z-1)^i (z+1)^(order-i), ascending powers of z
    let map = |c: &[f64]| -> Vec<f64> {
        let mut acc = vec![0.0; order + 1];
        let mut ki = 1.0;
        for (i, &ci) in c.iter().enumerate().take(order + 1) {
            if ci != 0.0 {
                let term = poly::mul(
                    &poly::binomial_power(-1.0, i),
                    &poly::binomial_power(1.0, order - i),
                );
                for (j, t) in term.iter().enumerate() {
                    acc[j] += ci * ki * t;
                }
            }
            ki *= k;
        }
        acc
    };
    let nz = map(num);
    let dz = map(den);
    // divide by z^order: coefficient of z^-m is p[order - m]
    let lead = dz[order];
    if lead == 0.0 || !lead.is_finite() {
        return Err(LtiError::InvalidBlock(
            "bilinear map is singular at this step size".into(),
        ));
    }
    let b: Vec<f64> = (0..=order).map(|m| nz[order - m] / lead).collect();
    let a: Vec<f64> = (0..=order).map(|m| dz[order - m] / lead).collect();
    Ok(DiscreteFilter {
        state: vec![0.0; order],
        b,
        a,
    })
}

/// Integer-sample transport delay backed by a ring buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    buf: Vec<f64>,
    head: usize,
}

impl DelayLine {
    pub fn new(samples: usize) -> Self {
        Self {
            buf: vec![0.0; samples],
            head: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Oldest stored value, i.e. the output of this step. Only meaningful
    /// when the line is non-empty.
    pub fn peek(&self) -> f64 {
        self.buf[self.head]
    }

    pub fn push(&mut self, x: f64) {
        if self.buf.is_empty() {
            return;
        }
        self.buf[self.head] = x;
        self.head = (self.head + 1) % self.buf.len();
    }

    /// Push `x` and return the value from `len()` steps ago.
    pub fn step(&mut self, x: f64) -> f64 {
        if self.buf.is_empty() {
            return x;
        }
        let y = self.peek();
        self.push(x);
        y
    }
}

/// Fixed-step realization of a [`TransferBlock`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStepper {
    filter: DiscreteFilter,
    delay: DelayLine,
    dt_s: f64,
}

impl DiscreteStepper {
    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    pub fn delay_samples(&self) -> usize {
        self.delay.len()
    }

    pub fn filter(&self) -> &DiscreteFilter {
        &self.filter
    }

    pub fn step(&mut self, input: f64) -> Result<f64, LtiError> {
        if !input.is_finite() {
            return Err(LtiError::NonFiniteInput(input));
        }
        let y = self.filter.step(input);
        Ok(self.delay.step(y))
    }
}

/// Bilinear discretization of the rational part plus an integer-sample
/// delay line.
pub fn discretize(block: &TransferBlock, dt_s: f64) -> Result<DiscreteStepper, LtiError> {
    let samples = delay_samples(block.delay_s(), dt_s)?;
    let filter = bilinear(block.numerator(), block.denominator(), dt_s)?;
    Ok(DiscreteStepper {
        filter,
        delay: DelayLine::new(samples),
        dt_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_ratio_rule() {
        assert_eq!(delay_samples(1e-3, 1e-4).unwrap(), 10);
        assert_eq!(delay_samples(0.0, 1e-4).unwrap(), 0);
        let err = delay_samples(1e-3, 0.3e-3).unwrap_err();
        assert_eq!(
            err,
            LtiError::NonIntegerDelay {
                delay_s: 1e-3,
                dt_s: 0.3e-3
            }
        );
        assert!(matches!(delay_samples(1e-3, 0.0), Err(LtiError::InvalidStep(_))));
    }

    #[test]
    fn gain_block_steps() {
        let b = TransferBlock::gain(2.0).unwrap();
        let mut s = discretize(&b, 1e-4).unwrap();
        assert_eq!(s.step(0.0).unwrap(), 0.0);
        assert_eq!(s.step(3.0).unwrap(), 6.0);
        assert!(matches!(s.step(f64::NAN), Err(LtiError::NonFiniteInput(_))));
    }

    #[test]
    fn pure_delay_shifts_ten_samples() {
        let b = TransferBlock::pure_delay(1e-3).unwrap();
        let mut s = discretize(&b, 1e-4).unwrap();
        let out: Vec<f64> = (0..40).map(|k| s.step(k as f64 + 1.0).unwrap()).collect();
        for k in 0..40 {
            let expect = if k < 10 { 0.0 } else { (k - 10) as f64 + 1.0 };
            assert_eq!(out[k], expect);
        }
    }

    #[test]
    fn delay_line_zero_length_passes_through() {
        let mut d = DelayLine::new(0);
        assert_eq!(d.step(4.0), 4.0);
        assert!(d.is_empty());
    }

    #[test]
    fn inductor_companion_model() {
        // v = L di/dt with L = 1 mH, trapezoidal: v[k] = 2L/dt (i[k]-i[k-1]) - v[k-1]
        let dt = 1e-4;
        let mut f = DiscreteFilter::bilinear(&Rational::new(vec![0.0, 1e-3], vec![1.0]), dt).unwrap();
        let (mut iprev, mut vprev) = (0.0, 0.0);
        for k in 0..50 {
            let i = (k as f64 * 0.1).sin();
            let v = f.step(i);
            let expect = 2.0 * 1e-3 / dt * (i - iprev) - vprev;
            assert!((v - expect).abs() < 1e-9);
            iprev = i;
            vprev = v;
        }
    }

    #[test]
    fn zero_state_zero_input() {
        let b = TransferBlock::new(vec![5.0], vec![2.0, 1.0], 1e-3, "x").unwrap();
        let mut s = discretize(&b, 1e-4).unwrap();
        for _ in 0..100 {
            assert_eq!(s.step(0.0).unwrap(), 0.0);
        }
    }
}
