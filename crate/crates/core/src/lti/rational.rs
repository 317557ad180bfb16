use alloc::vec;
use alloc::vec::Vec;

use super::poly;

/// Rational function in `s` without the properness restriction of
/// [`TransferBlock`](super::TransferBlock). Impedances such as `R + sL` need it.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Rational {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl Rational {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Self {
        Self {
            num: poly::trim(num),
            den: poly::trim(den),
        }
    }

    pub fn constant(k: f64) -> Self {
        Self::new(vec![k], vec![1.0])
    }

    pub fn is_zero(&self) -> bool {
        poly::degree(&self.num).is_none()
    }

    pub fn mul(&self, other: &Rational) -> Rational {
        Rational::new(
            poly::mul(&self.num, &other.num),
            poly::mul(&self.den, &other.den),
        )
    }

    pub fn add(&self, other: &Rational) -> Rational {
        if self.den == other.den {
            return Rational::new(poly::add(&self.num, &other.num), self.den.clone());
        }
        let num = poly::add(
            &poly::mul(&self.num, &other.den),
            &poly::mul(&other.num, &self.den),
        );
        Rational::new(num, poly::mul(&self.den, &other.den))
    }

    pub fn recip(&self) -> Rational {
        Rational::new(self.den.clone(), self.num.clone())
    }
}
