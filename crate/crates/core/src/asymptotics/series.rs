//! Asymptotic expansion of `E(R_r)` in the classical configuration.
//!
//! `E(R_r) = n int_0^inf (q_r(y) e^-y)^n dy`. Substituting
//! `t^r / r! = y - log q_r(y)` turns the integrand into `e^(-n t^r / r!) g_r(t)`
//! with `g_r = dy/dt = sum_i a_i(r) t^i`, and Laplace's method gives
//! `E(R_r) ~ (n/r) sum_i a_i Gamma((i+1)/r) (r!/n)^((i+1)/r)`.
//!
//! Writing `t = y phi(y)^(1/r)` with `phi(y) = r! (y - log q_r(y)) / y^r`,
//! Lagrange inversion yields `a_i = [y^i] phi(y)^(-(i+1)/r)`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::config::CollisionOrder;
use crate::error::{Error, Result};
use crate::kernels::rational_to_f64;
use crate::numeric::{gamma, ln_gamma};
use crate::report::ser_rational_vec;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

/// Printed coefficients `a_0..a_4` for `r = 2..=5`.
pub fn stored_coefficients(r: CollisionOrder) -> Option<Vec<BigRational>> {
    let v = match r.get() {
        2 => vec![q(1, 1), q(2, 3), q(1, 12), q(-2, 135), q(1, 864)],
        3 => vec![q(1, 1), q(1, 2), q(21, 80), q(7, 240), q(83, 13440)],
        4 => vec![q(1, 1), q(2, 5), q(17, 100), q(194, 2625), q(271, 42000)],
        5 => vec![q(1, 1), q(1, 3), q(5, 42), q(11, 252), q(515, 31752)],
        _ => return None,
    };
    Some(v)
}

/// Coefficients of `phi(y) = r! (y - log q_r(y)) / y^r` up to `y^(len-1)`.
fn phi_series(r: usize, len: usize) -> Vec<BigRational> {
    let total = len + r;
    // q_r(y) truncated to `total` terms.
    let mut qs = vec![BigRational::zero(); total];
    let mut fact = BigInt::one();
    for (i, slot) in qs.iter_mut().enumerate().take(r) {
        if i > 0 {
            fact *= i;
        }
        *slot = BigRational::new(BigInt::one(), fact.clone());
    }
    // log q = int q'/q; the quotient d = q'/q solves q d = q'.
    let dq: Vec<BigRational> = (0..total)
        .map(|i| qs.get(i + 1).cloned().unwrap_or_else(BigRational::zero) * BigRational::from_integer((i + 1).into()))
        .collect();
    let mut d = vec![BigRational::zero(); total];
    for k in 0..total {
        let mut acc = dq[k].clone();
        for j in 1..=k {
            if !qs[j].is_zero() {
                acc -= &qs[j] * &d[k - j];
            }
        }
        d[k] = acc;
    }
    let mut h = vec![BigRational::zero(); total + 1];
    for k in 0..total {
        h[k + 1] = -&d[k] / BigRational::from_integer((k + 1).into());
    }
    h[1] += BigRational::one();
    let r_fact: BigInt = (1..=r).fold(BigInt::one(), |a, i| a * i);
    let rf = BigRational::from_integer(r_fact);
    (0..len).map(|k| &h[k + r] * &rf).collect()
}

/// `[y^0..y^(len-1)]` of `p(y)^alpha` for a series with `p_0 = 1`.
fn series_power(p: &[BigRational], alpha: &BigRational, len: usize) -> Vec<BigRational> {
    debug_assert!(p[0].is_one());
    let mut out = vec![BigRational::one()];
    let ap1 = alpha + BigRational::one();
    for k in 1..len {
        let mut acc = BigRational::zero();
        for j in 1..=k.min(p.len() - 1) {
            if p[j].is_zero() {
                continue;
            }
            let w = &ap1 * BigRational::from_integer(j.into()) - BigRational::from_integer(k.into());
            acc += w * &p[j] * &out[k - j];
        }
        out.push(acc / BigRational::from_integer(k.into()));
    }
    out
}

/// `a_0(r), ..., a_(terms-1)(r)` by Lagrange inversion in exact arithmetic.
pub fn reversion_coefficients(r: CollisionOrder, terms: usize) -> Vec<BigRational> {
    let rr = r.get();
    let phi = phi_series(rr, terms.max(1));
    (0..terms)
        .map(|i| {
            let alpha = BigRational::new(-BigInt::from(i + 1), BigInt::from(rr));
            series_power(&phi, &alpha, i + 1)[i].clone()
        })
        .collect()
}

/// The expansion coefficients for one `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticSeries {
    pub r: CollisionOrder,
    #[serde(serialize_with = "ser_rational_vec")]
    pub coefficients: Vec<BigRational>,
    pub terms: usize,
}

impl AsymptoticSeries {
    /// Default number of coefficients for `r`: `max(2r, 5)`.
    pub fn default_terms(r: CollisionOrder) -> usize {
        (2 * r.get()).max(5)
    }

    /// Coefficients for `r`, computed once per `r` and cached.
    pub fn for_order(r: CollisionOrder) -> AsymptoticSeries {
        static CACHE: OnceLock<Mutex<HashMap<usize, Vec<BigRational>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("series cache poisoned");
        let coefficients = guard
            .entry(r.get())
            .or_insert_with(|| reversion_coefficients(r, AsymptoticSeries::default_terms(r)))
            .clone();
        AsymptoticSeries { r, terms: coefficients.len(), coefficients }
    }

    /// Partial sum with `terms` terms at domain size `n`.
    pub fn evaluate(&self, n: usize, terms: usize) -> Result<f64> {
        if terms == 0 || terms > self.coefficients.len() {
            return Err(Error::OutOfRange { what: "terms", value: terms, max: self.coefficients.len() });
        }
        let rf = self.r.get() as f64;
        let nf = n as f64;
        let log_base = (gamma(rf + 1.0) / nf).ln();
        let sum: f64 = self.coefficients[..terms]
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let e = (i as f64 + 1.0) / rf;
                rational_to_f64(a) * (ln_gamma(e) + e * log_base).exp()
            })
            .sum();
        Ok(nf / rf * sum)
    }
}

/// Asymptotic approximation of `E(R_r)` for `n` singleton cells.
pub fn classical_er_series(n: usize, r: CollisionOrder, terms: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be positive".into()));
    }
    let series = match stored_coefficients(r) {
        Some(c) if terms <= c.len() => AsymptoticSeries { r, terms: c.len(), coefficients: c },
        _ => AsymptoticSeries::for_order(r),
    };
    series.evaluate(n, terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(k: usize) -> CollisionOrder {
        CollisionOrder::new(k).unwrap()
    }

    #[test]
    fn phi_for_r2() {
        // 2 (y - log(1+y)) / y^2 = 1 - 2y/3 + y^2/2 - 2y^3/5 ...
        let phi = phi_series(2, 4);
        assert_eq!(phi, vec![q(1, 1), q(-2, 3), q(1, 2), q(-2, 5)]);
    }

    #[test]
    fn reversion_reproduces_stored() {
        for rr in 2..=5 {
            let stored = stored_coefficients(r(rr)).unwrap();
            assert_eq!(reversion_coefficients(r(rr), stored.len()), stored, "r={rr}");
        }
    }

    #[test]
    fn birthday_numbers_r3() {
        let one = classical_er_series(365, r(3), 1).unwrap();
        let three = classical_er_series(365, r(3), 3).unwrap();
        assert!((one - 82.87442).abs() < 5e-5, "{one}");
        assert!((three - 88.72504).abs() < 5e-5, "{three}");
    }

    #[test]
    fn terms_out_of_range() {
        assert!(matches!(classical_er_series(10, r(2), 0), Err(Error::OutOfRange { .. })));
        assert!(classical_er_series(10, r(2), 5).is_ok());
        assert!(matches!(classical_er_series(10, r(2), 6), Err(Error::OutOfRange { .. })));
        assert!(classical_er_series(100, r(7), 14).is_ok());
    }
}
