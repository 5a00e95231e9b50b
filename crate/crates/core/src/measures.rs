//! Balance measures of a configuration and collision-count moments of
//! uniform random mappings.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::config::{CollisionOrder, Configuration};
use crate::error::{Error, Result};
use crate::expectations::config_statistics;
use crate::kernels::{binomial, rational_to_f64};
use crate::report::{ser_display, ser_opt_sig15, ser_rational, ser_sig15};

fn int(v: usize) -> BigInt {
    BigInt::from(v)
}

fn rat(v: BigInt) -> BigRational {
    BigRational::from_integer(v)
}

/// Natural logarithm of a positive big integer.
fn ln_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("finite").ln();
    }
    let shift = bits - 900;
    (x >> shift).to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
}

fn ln_ratio(q: &BigRational) -> f64 {
    ln_big(q.numer()) - ln_big(q.denom())
}

/// `T = (m/n) sum_i (x_i - n/m)^2 = (m/n) sum_i x_i^2 - n`.
pub fn chi2_statistic(config: &Configuration) -> BigRational {
    let sq: BigInt = config.sizes().iter().map(|&x| int(x) * x).sum();
    BigRational::new(sq * config.m(), int(config.n())) - rat(int(config.n()))
}

/// Logarithmic uniformity scores of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub r: CollisionOrder,
    #[serde(serialize_with = "ser_rational")]
    pub t_chi2: BigRational,
    /// `-log_m(sum_i x_i^2 / n^2)`.
    #[serde(serialize_with = "ser_sig15")]
    pub mu2: f64,
    /// `1 - log_m(1 + T/n)`.
    #[serde(serialize_with = "ser_sig15")]
    pub mu2_from_chi2: f64,
    /// `-log_m(r! s_r / n^r) / (r - 1)`, absent when there is no `r`-collision.
    #[serde(serialize_with = "ser_opt_sig15")]
    pub lambda_r: Option<f64>,
    /// `m_r = n^r / (r! s_r)`.
    #[serde(serialize_with = "ser_opt_sig15")]
    pub m_eff: Option<f64>,
    #[serde(serialize_with = "ser_display")]
    pub s_r: BigInt,
    #[serde(serialize_with = "ser_rational")]
    pub s_tilde_r: BigRational,
}

pub fn balance_measures(config: &Configuration, r: CollisionOrder) -> Result<BalanceReport> {
    let m = config.m();
    if m < 2 {
        return Err(Error::Domain(format!("balance measures need m >= 2, got m = {m}")));
    }
    let n = config.n();
    let ln_m = (m as f64).ln();
    let sq: BigInt = config.sizes().iter().map(|&x| int(x) * x).sum();
    let nn = int(n) * n;
    let mu2 = -ln_ratio(&BigRational::new(sq, nn)) / ln_m;
    let t = chi2_statistic(config);
    let one_plus = BigRational::one() + &t / rat(int(n));
    let mu2_from_chi2 = 1.0 - ln_ratio(&one_plus) / ln_m;
    let stats = config_statistics(config, r);
    let (lambda_r, m_eff) = match &stats.m_r {
        Some(mr) => {
            let inv = mr.recip();
            (Some(-ln_ratio(&inv) / ((r.get() - 1) as f64 * ln_m)), Some(rational_to_f64(mr)))
        }
        None => (None, None),
    };
    Ok(BalanceReport { r, t_chi2: t, mu2, mu2_from_chi2, lambda_r, m_eff, s_r: stats.s_r, s_tilde_r: stats.s_tilde_r })
}

/// Mean and variance of `S_r = sum_i C(X_i, r)` for a uniform random `(n, m)`-mapping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappingMoments {
    #[serde(serialize_with = "ser_rational")]
    pub mean: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub variance: BigRational,
}

/// `E S_r = C(n, r) / m^(r-1)` and
/// `Var S_r = E S_r (sum_{i<r} C(r,i) C(n-r,i) m^-i + [C(n-r,r) - C(n,r)] / m^(r-1))`.
pub fn random_mapping_moments(n: usize, m: usize, r: CollisionOrder) -> Result<MappingMoments> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig(format!("n and m must be positive, got n = {n}, m = {m}")));
    }
    let rr = r.get();
    let mi = int(m);
    let m_pow = |e: usize| num_traits::pow(mi.clone(), e);
    let mean = BigRational::new(binomial(n, rr), m_pow(rr - 1));
    if mean.is_zero() {
        return Ok(MappingMoments { mean: mean.clone(), variance: mean });
    }
    let nr = n - rr;
    let mut factor = BigRational::zero();
    for i in 0..rr {
        factor += BigRational::new(binomial(rr, i) * binomial(nr, i), m_pow(i));
    }
    factor += BigRational::new(binomial(nr, rr) - binomial(n, rr), m_pow(rr - 1));
    let variance = &mean * factor;
    debug_assert!(!variance.is_negative());
    Ok(MappingMoments { mean, variance })
}

/// Moments of `(m^(r-1) / n^r) S_r`, which concentrates at `1/r!` when `m^(r-1)/n^r -> 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Concentration {
    #[serde(serialize_with = "ser_rational")]
    pub scaled_mean: BigRational,
    #[serde(serialize_with = "ser_sig15")]
    pub scaled_std: f64,
}

pub fn concentration_check(n: usize, m: usize, r: CollisionOrder) -> Result<Concentration> {
    let mom = random_mapping_moments(n, m, r)?;
    let rr = r.get();
    let scale = BigRational::new(num_traits::pow(int(m), rr - 1), num_traits::pow(int(n), rr));
    let scaled_var = &scale * &scale * &mom.variance;
    Ok(Concentration { scaled_mean: scale * mom.mean, scaled_std: rational_to_f64(&scaled_var).sqrt() })
}

/// Expected number of cells holding exactly `j` balls after `k` uniform draws into `m` cells.
pub fn expected_cell_counts(k: usize, m: usize, j: usize) -> Result<BigRational> {
    if m == 0 {
        return Err(Error::InvalidConfig("m must be positive".into()));
    }
    if j > k {
        return Err(Error::InvalidQuery(format!("need j <= k, got j = {j}, k = {k}")));
    }
    // m C(k,j) (m-1)^(k-j) / m^k
    let num = int(m) * binomial(k, j) * num_traits::pow(int(m - 1), k - j);
    Ok(BigRational::new(num, num_traits::pow(int(m), k)))
}
