use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::combinat::binomial;
use crate::config::CollisionOrder;

/// Dense univariate polynomial with exact rational coefficients, indexed by degree.
///
/// Trailing zeros are always trimmed, so the zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Polynomial {
    coeffs: Vec<BigRational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_integers<I: IntoIterator<Item = i64>>(coeffs: I) -> Self {
        Polynomial::new(coeffs.into_iter().map(|c| BigRational::from_integer(c.into())).collect())
    }

    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Coefficient of `t^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn eval(&self, t: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * t + c)
    }

    /// Multiplication by `t^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.coeffs.is_empty() {
            return self.clone();
        }
        let mut coeffs = vec![BigRational::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        Polynomial { coeffs }
    }

    /// Product truncated after degree `kmax`.
    pub fn mul_truncated(&self, other: &Polynomial, kmax: usize) -> Polynomial {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Polynomial::zero();
        }
        let len = (self.coeffs.len() + other.coeffs.len() - 1).min(kmax + 1);
        let mut out = vec![BigRational::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate().take(len) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(len - i) {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..len).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.mul_truncated(rhs, usize::MAX - 1)
    }
}

/// `p_r(x, t) = sum_{i<r} C(x, i) t^i` as a coefficient list.
pub fn p_r_poly(x: usize, r: CollisionOrder) -> Polynomial {
    Polynomial::new(p_r_integer(x, r.get()).into_iter().map(BigRational::from_integer).collect())
}

pub(crate) fn p_r_integer(x: usize, r: usize) -> Vec<BigInt> {
    (0..r.min(x + 1)).map(|i| binomial(x, i)).collect()
}

/// Ordinary product truncated after degree `kmax`.
pub(crate) fn mul_trunc(a: &[BigInt], b: &[BigInt], kmax: usize) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = (a.len() + b.len() - 1).min(kmax + 1);
    let mut out = vec![BigInt::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Product of two exponential generating functions given by their
/// coefficients `k! [t^k]`, truncated after degree `kmax`.
pub(crate) fn egf_mul_trunc(a: &[BigInt], b: &[BigInt], kmax: usize) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = (a.len() + b.len() - 1).min(kmax + 1);
    let mut out = Vec::with_capacity(len);
    // Row k of Pascal's triangle, updated in place.
    let mut row: Vec<BigInt> = vec![BigInt::one()];
    for k in 0..len {
        if k > 0 {
            row.push(BigInt::one());
            for j in (1..k).rev() {
                let prev = row[j - 1].clone();
                row[j] += prev;
            }
        }
        let lo = k.saturating_sub(b.len() - 1);
        let hi = k.min(a.len() - 1);
        let mut acc = BigInt::zero();
        for j in lo..=hi {
            if a[j].is_zero() || b[k - j].is_zero() {
                continue;
            }
            acc += &row[j] * &a[j] * &b[k - j];
        }
        out.push(acc);
    }
    out
}

/// Coefficients of `P(t)^c` up to degree `kmax` for an integer polynomial
/// with nonzero constant term, using the recurrence obtained from
/// `P * (P^c)' = c * P' * P^c`. Each step divides exactly.
pub(crate) fn power_ordinary(base: &[BigInt], c: usize, kmax: usize) -> Vec<BigInt> {
    assert!(!base.is_empty() && !base[0].is_zero(), "power_ordinary: constant term must be nonzero");
    let d = base.len() - 1;
    let len = (d * c).min(kmax) + 1;
    let a0 = &base[0];
    let mut out = Vec::with_capacity(len);
    out.push(num_traits::pow(a0.clone(), c));
    let cp1 = BigInt::from(c) + 1;
    for k in 1..len {
        let mut acc = BigInt::zero();
        for j in 1..=k.min(d) {
            if base[j].is_zero() {
                continue;
            }
            let w: BigInt = &cp1 * j - k;
            if w.is_zero() {
                continue;
            }
            acc += w * &base[j] * &out[k - j];
        }
        let den = a0 * BigInt::from(k);
        let (q, rem) = acc.div_rem(&den);
        debug_assert!(rem.is_zero(), "power_ordinary: inexact division");
        out.push(q);
    }
    out
}

/// Exponential-generating-function analogue of [`power_ordinary`]: `base[j]`
/// and the result hold `j! [t^j]`. The constant term of `base` must be 1.
pub(crate) fn power_egf(base: &[BigInt], c: usize, kmax: usize) -> Vec<BigInt> {
    assert!(!base.is_empty() && base[0].is_one(), "power_egf: constant term must be 1");
    let d = base.len() - 1;
    let len = (d * c).min(kmax) + 1;
    let mut out = Vec::with_capacity(len);
    out.push(BigInt::one());
    let cp1 = BigInt::from(c) + 1;
    for k in 1..len {
        let mut acc = BigInt::zero();
        let mut binom = BigInt::one();
        for j in 1..=k.min(d) {
            // binom = C(k, j)
            binom = binom * (k + 1 - j) / j;
            if base[j].is_zero() {
                continue;
            }
            let w: BigInt = &cp1 * j - k;
            if w.is_zero() {
                continue;
            }
            acc += w * &binom * &base[j] * &out[k - j];
        }
        let (q, rem) = acc.div_rem(&BigInt::from(k));
        debug_assert!(rem.is_zero(), "power_egf: inexact division");
        out.push(q);
    }
    out
}
