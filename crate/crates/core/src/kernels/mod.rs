//! Arithmetic substrate: exact polynomials and combinatorial numbers, the
//! truncated binomial/Poisson sums `p_r`, `q_r`, `G_r`, and conversions from
//! exact rationals to floats.

mod combinat;
mod poly;
mod tails;

pub use combinat::{
    binomial, elementary_symmetric, elementary_symmetric_rational, falling_factorial, image_cardinality_pmf,
    surjection_count, surjection_count_capped, SurjectionRows, DEFAULT_SURJECTION_CAP,
};
pub use poly::{p_r_poly, Polynomial};
pub use tails::{g_r_eval, g_r_eval_unchecked, ln_g_r, ln_q_r, q_r_eval, q_r_exact, G_R_LOG_CROSSOVER};

pub(crate) use poly::{egf_mul_trunc, mul_trunc, power_egf, power_ordinary};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Nearest `f64` to `num / den`, without overflowing on huge operands.
pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    assert!(!den.is_zero(), "ratio_to_f64: zero denominator");
    if num.is_zero() {
        return 0.0;
    }
    let negative = (num.sign() == Sign::Minus) != (den.sign() == Sign::Minus);
    let a = num.magnitude();
    let b = den.magnitude();
    // Keep roughly 64 significant bits in the integer quotient.
    let shift = b.bits() as i64 - a.bits() as i64 + 64;
    let q = if shift >= 0 { (a << shift as u64) / b } else { a / (b << (-shift) as u64) };
    let mantissa = q.to_f64().unwrap_or(f64::INFINITY);
    let v = ldexp(mantissa, -shift);
    if negative {
        -v
    } else {
        v
    }
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    ratio_to_f64(x.numer(), x.denom())
}

/// `x * 2^e` with intermediate steps that avoid spurious overflow/underflow.
pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    const STEP: i64 = 1000;
    while e > STEP {
        x *= 2f64.powi(STEP as i32);
        e -= STEP;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -STEP {
        x *= 2f64.powi(-STEP as i32);
        e += STEP;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_handles_huge_operands() {
        let big = num_traits::pow(BigInt::from(10), 400);
        let v = ratio_to_f64(&(big.clone() * 3), &(big.clone() * 4));
        assert_eq!(v, 0.75);
        let tiny = ratio_to_f64(&BigInt::from(1), &num_traits::pow(BigInt::from(2), 1100));
        assert_eq!(tiny, 0.0);
        let r = ratio_to_f64(&BigInt::from(-1), &BigInt::from(3));
        assert!((r + 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn ratio_is_correctly_scaled_near_subnormals() {
        let den = num_traits::pow(BigInt::from(2), 1030);
        let v = ratio_to_f64(&BigInt::from(3), &den);
        assert_eq!(v, 3.0 * 2f64.powi(-1030));
    }
}
