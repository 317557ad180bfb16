//! Dense real polynomials stored in ascending degree.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

/// Drops trailing (highest-degree) exact zeros, keeping at least one coefficient.
pub(crate) fn trim(mut c: Vec<f64>) -> Vec<f64> {
    while c.len() > 1 && c[c.len() - 1] == 0.0 {
        c.pop();
    }
    if c.is_empty() {
        c.push(0.0);
    }
    c
}

/// Degree of the polynomial, `None` for the zero polynomial.
pub(crate) fn degree(c: &[f64]) -> Option<usize> {
    c.iter().rposition(|&x| x != 0.0)
}

pub(crate) fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect();
    trim(out)
}

/// Horner evaluation at a complex point.
pub(crate) fn eval(c: &[f64], s: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &x| acc * s + x)
}

/// `(z + r)^n` in ascending powers of `z`.
pub(crate) fn binomial_power(r: f64, n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..n {
        out = mul(&out, &[r, 1.0]);
    }
    out
}
