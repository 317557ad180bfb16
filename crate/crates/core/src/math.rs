//! Thin wrappers so the rest of the crate reads like `std` float code.

pub(crate) use core::f64::consts::{PI, TAU};

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub(crate) fn pow10(x: f64) -> f64 {
    libm::pow(10.0, x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// Wraps an angle into `(-PI, PI]`.
pub(crate) fn wrap_pi(x: f64) -> f64 {
    let mut y = x - TAU * floor((x + PI) / TAU);
    if y <= -PI {
        y += TAU;
    }
    y
}

/// Euclidean remainder for positive divisors (`f64::rem_euclid` is std-only).
pub(crate) fn rem_euclid(x: f64, m: f64) -> f64 {
    let r = x - m * floor(x / m);
    if r >= m {
        r - m
    } else if r < 0.0 {
        r + m
    } else {
        r
    }
}
