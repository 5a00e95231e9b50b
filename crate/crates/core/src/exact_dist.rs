//! Exact survival probabilities `P(T > k)` of the three waiting times, for a
//! fixed configuration and for multinomial random configurations.
//!
//! Everything is reduced to integer counts of draw sequences:
//!
//! * `C(n, k) P(K1 > k) = [t^k] prod_i p_r(x_i, t)`
//! * `n^k P(R > k) = k! [t^k] prod_i q_r(x_i t)`
//! * `n^k P(K2 > k) = sum_d Sur(k, d) C(n, d) P(K1 > d)`
//!
//! Cells of equal size are raised to a power in one pass, so the classical
//! configuration costs `O(n r)` big-integer operations.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::config::{CollisionOrder, Configuration, Mode, MultinomialModel};
use crate::error::{Error, Result};
use crate::kernels::{
    self, binomial, egf_mul_trunc, falling_factorial, mul_trunc, power_egf, power_ordinary, surjection_count,
    SurjectionRows,
};
use crate::numeric::integrate_semi_infinite;

/// Configurations up to this size are handled on the exact path by default.
pub const DEFAULT_MAX_EXACT_N: usize = 10_000;

/// Chooses between exact rationals and rounded floats for whole tables and expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactPolicy {
    pub max_exact_n: usize,
}

impl Default for ExactPolicy {
    fn default() -> Self {
        ExactPolicy { max_exact_n: DEFAULT_MAX_EXACT_N }
    }
}

impl ExactPolicy {
    pub fn is_exact(&self, n: usize) -> bool {
        n <= self.max_exact_n
    }
}

/// A value held either exactly or as a float.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Approx(f64),
}

impl Scalar {
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => kernels::rational_to_f64(q),
            Scalar::Approx(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Approx(_) => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => write!(f, "{q}"),
            Scalar::Approx(v) => write!(f, "{v:.15e}"),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Scalar", 2)?;
        match self {
            Scalar::Exact(q) => st.serialize_field("exact", &q.to_string())?,
            Scalar::Approx(_) => st.skip_field("exact")?,
        }
        st.serialize_field("value", &crate::report::Sig15(self.to_f64()))?;
        st.end()
    }
}

// ---------------------------------------------------------------------------
// Integer counts

/// Degree of `prod_i p_r(x_i, t)`.
pub(crate) fn k1_degree(config: &Configuration, r: CollisionOrder) -> usize {
    config.sizes().iter().map(|&x| x.min(r.get() - 1)).sum()
}

/// Degree of `prod_i q_r(x_i t)`, beyond which `P(R > k) = 0`.
pub(crate) fn r_degree(config: &Configuration, r: CollisionOrder) -> usize {
    (r.get() - 1) * config.occupied()
}

/// `A_k = [t^k] prod_i p_r(x_i, t)` for `k <= kmax`.
pub(crate) fn k1_counts(config: &Configuration, r: CollisionOrder, kmax: usize) -> Vec<BigInt> {
    let mut acc = vec![BigInt::one()];
    for (x, c) in config.grouped() {
        let base = crate::kernels::p_r_poly(x, r).coeffs().iter().map(|q| q.numer().clone()).collect::<Vec<_>>();
        let group = power_ordinary(&base, c, kmax);
        acc = mul_trunc(&acc, &group, kmax);
    }
    acc
}

/// `E_k = k! [t^k] prod_i q_r(x_i t)`: sequences of `k` balls with no colour `r` times.
pub(crate) fn r_counts(config: &Configuration, r: CollisionOrder, kmax: usize) -> Vec<BigInt> {
    r_counts_grouped(config.grouped(), r, kmax)
}

fn r_counts_grouped(groups: impl IntoIterator<Item = (usize, usize)>, r: CollisionOrder, kmax: usize) -> Vec<BigInt> {
    let mut acc = vec![BigInt::one()];
    for (x, c) in groups {
        if c == 0 {
            continue;
        }
        let xb = BigInt::from(x);
        let base: Vec<BigInt> = (0..r.get()).map(|j| num_traits::pow(xb.clone(), j)).collect();
        let group = power_egf(&base, c, kmax);
        acc = egf_mul_trunc(&acc, &group, kmax);
    }
    acc
}

fn count_at(counts: &[BigInt], k: usize) -> BigInt {
    counts.get(k).cloned().unwrap_or_else(BigInt::zero)
}

// ---------------------------------------------------------------------------
// Single survival values

/// `P(K1 > k)`: no `r` distinct balls of one colour among the first `k` drawn without replacement.
pub fn survival_k1(config: &Configuration, r: CollisionOrder, k: usize) -> Result<BigRational> {
    config.require_collision(r)?;
    let n = config.n();
    if k > n {
        return Ok(BigRational::zero());
    }
    let counts = k1_counts(config, r, k);
    Ok(BigRational::new(count_at(&counts, k), binomial(n, k)))
}

/// `P(K2 > k)`: drawing with replacement, via the mixture over the number of distinct balls seen.
pub fn survival_k2(config: &Configuration, r: CollisionOrder, k: usize) -> Result<BigRational> {
    config.require_collision(r)?;
    let n = config.n();
    let counts = k1_counts(config, r, k.min(n));
    let mut num = BigInt::zero();
    for (d, a) in counts.iter().enumerate().take(k.min(n) + 1) {
        if a.is_zero() {
            continue;
        }
        num += a * surjection_count(k, d)?;
    }
    Ok(BigRational::new(num, num_traits::pow(BigInt::from(n), k)))
}

/// `P(R > k)`: no colour drawn `r` times among `k` draws with replacement.
pub fn survival_r(config: &Configuration, r: CollisionOrder, k: usize) -> Result<BigRational> {
    if k > r_degree(config, r) {
        return Ok(BigRational::zero());
    }
    let counts = r_counts(config, r, k);
    Ok(BigRational::new(count_at(&counts, k), num_traits::pow(BigInt::from(config.n()), k)))
}

pub fn survival(config: &Configuration, r: CollisionOrder, mode: Mode, k: usize) -> Result<BigRational> {
    match mode {
        Mode::K1 => survival_k1(config, r, k),
        Mode::K2 => survival_k2(config, r, k),
        Mode::R => survival_r(config, r, k),
    }
}

/// `k! [t^k] prod_i q_r(p_i t)` truncated EGF coefficients for `k <= kmax`.
fn multinomial_egf(model: &MultinomialModel, r: CollisionOrder, kmax: usize) -> Vec<BigRational> {
    let mut acc = vec![BigRational::one()];
    for p in model.nonzero() {
        let powers: Vec<BigRational> = (0..r.get()).map(|j| num_traits::pow(p.clone(), j)).collect();
        let len = (acc.len() + powers.len() - 1).min(kmax + 1);
        let mut next = vec![BigRational::zero(); len];
        for (k, slot) in next.iter_mut().enumerate() {
            let mut binom = BigInt::one();
            for (j, pw) in powers.iter().enumerate().take(k + 1) {
                if j > 0 {
                    binom = binom * (k + 1 - j) / j;
                }
                if let Some(a) = acc.get(k - j) {
                    *slot += a * pw * BigRational::from_integer(binom.clone());
                }
            }
        }
        acc = next;
    }
    acc
}

/// `P(K1 > k)` for a multinomial random mapping, valid for `k <= n`.
pub fn survival_k1_multinomial(model: &MultinomialModel, r: CollisionOrder, k: usize) -> Result<BigRational> {
    if k > model.n() {
        return Err(Error::OutOfRange { what: "k", value: k, max: model.n() });
    }
    let egf = multinomial_egf(model, r, k);
    Ok(egf.get(k).cloned().unwrap_or_else(BigRational::zero))
}

/// `P(K2 > k)` for a multinomial random mapping: mixture of the `K1` law over the image size.
pub fn survival_k2_multinomial(model: &MultinomialModel, r: CollisionOrder, k: usize) -> Result<BigRational> {
    let n = model.n();
    let egf = multinomial_egf(model, r, k.min(n));
    let mut num = BigRational::zero();
    for (d, s) in egf.iter().enumerate().take(k.min(n) + 1) {
        if s.is_zero() {
            continue;
        }
        num += s * BigRational::from_integer(binomial(n, d) * surjection_count(k, d)?);
    }
    Ok(num / BigRational::from_integer(num_traits::pow(BigInt::from(n), k)))
}

// ---------------------------------------------------------------------------
// Tables

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalEntry {
    pub k: usize,
    pub prob: Scalar,
}

/// `k -> P(T > k)` for `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalTable {
    pub mode: Mode,
    pub r: CollisionOrder,
    pub exact: bool,
    pub entries: Vec<SurvivalEntry>,
}

impl SurvivalTable {
    pub fn compute(
        config: &Configuration,
        r: CollisionOrder,
        mode: Mode,
        k_max: usize,
        policy: ExactPolicy,
    ) -> Result<Self> {
        if mode != Mode::R {
            config.require_collision(r)?;
        }
        let exact = policy.is_exact(config.n());
        let probs: Vec<Scalar> = match (mode, exact) {
            (Mode::K1, true) => k1_table_exact(config, r, k_max).into_iter().map(Scalar::Exact).collect(),
            (Mode::K1, false) => k1_table_f64(config, r, k_max).into_iter().map(Scalar::Approx).collect(),
            (Mode::R, true) => r_table_exact(config, r, k_max).into_iter().map(Scalar::Exact).collect(),
            (Mode::R, false) => r_table_f64(config, r, k_max).into_iter().map(Scalar::Approx).collect(),
            (Mode::K2, true) => k2_table_exact(config, r, k_max).into_iter().map(Scalar::Exact).collect(),
            (Mode::K2, false) => k2_table_f64(config, r, k_max).into_iter().map(Scalar::Approx).collect(),
        };
        Ok(SurvivalTable {
            mode,
            r,
            exact,
            entries: probs.into_iter().enumerate().map(|(k, prob)| SurvivalEntry { k, prob }).collect(),
        })
    }

    pub fn values_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.prob.to_f64()).collect()
    }

    /// Exact values, if the table was computed on the exact path.
    pub fn values_exact(&self) -> Option<Vec<BigRational>> {
        self.entries.iter().map(|e| e.prob.exact().cloned()).collect()
    }
}

pub(crate) fn k1_table_exact(config: &Configuration, r: CollisionOrder, k_max: usize) -> Vec<BigRational> {
    let n = config.n();
    let counts = k1_counts(config, r, k_max.min(n));
    let mut binom = BigInt::one();
    (0..=k_max)
        .map(|k| {
            if k > n {
                return BigRational::zero();
            }
            if k > 0 {
                binom = &binom * (n + 1 - k) / k;
            }
            BigRational::new(count_at(&counts, k), binom.clone())
        })
        .collect()
}

/// Float `K1` table built cell by cell on normalized coefficients
/// `A_k / C(N, k)`, which stay in `[0, 1]`. Adding a cell of size `x` to a pool
/// of `n1` balls mixes them with hypergeometric weights `C(x,i) C(n1,k-i) / C(N,k)`.
pub(crate) fn k1_table_f64(config: &Configuration, r: CollisionOrder, k_max: usize) -> Vec<f64> {
    let rr = r.get();
    let mut cur = vec![1.0f64];
    let mut n1 = 0usize;
    for &x in config.sizes().iter().filter(|&&x| x > 0) {
        let big_n = n1 + x;
        let top = (cur.len() - 1 + (rr - 1).min(x)).min(k_max);
        let mut next = vec![0.0f64; top + 1];
        for i in 0..rr.min(x + 1) {
            if i > top {
                break;
            }
            // w = C(x, i) / C(N, i) at k = i.
            let mut w = (0..i).fold(1.0f64, |acc, j| acc * (x - j) as f64 / (big_n - j) as f64);
            for k in i..=top {
                if let Some(&c) = cur.get(k - i) {
                    next[k] += c * w;
                }
                if k == big_n {
                    break;
                }
                w *= (n1 + i) as f64 - k as f64;
                w *= (k + 1) as f64 / (((k + 1 - i) * (big_n - k)) as f64);
                if w == 0.0 {
                    break;
                }
            }
        }
        cur = next;
        n1 = big_n;
    }
    cur.resize(k_max + 1, 0.0);
    cur.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    cur
}

pub(crate) fn r_table_exact(config: &Configuration, r: CollisionOrder, k_max: usize) -> Vec<BigRational> {
    let n = BigInt::from(config.n());
    let counts = r_counts(config, r, k_max);
    let mut pow = BigInt::one();
    (0..=k_max)
        .map(|k| {
            if k > 0 {
                pow *= &n;
            }
            BigRational::new(count_at(&counts, k), pow.clone())
        })
        .collect()
}

/// Float `R` table on normalized coefficients `E_k / N^k`; a new cell of size `x`
/// enters with binomial weights `C(k, i) (x/N)^i (n1/N)^(k-i)`.
pub(crate) fn r_table_f64(config: &Configuration, r: CollisionOrder, k_max: usize) -> Vec<f64> {
    let rr = r.get();
    let mut cur = vec![1.0f64];
    let mut n1 = 0usize;
    for &x in config.sizes().iter().filter(|&&x| x > 0) {
        let big_n = (n1 + x) as f64;
        let (p, q) = (x as f64 / big_n, n1 as f64 / big_n);
        let top = (cur.len() - 1 + rr - 1).min(k_max);
        let mut next = vec![0.0f64; top + 1];
        for i in 0..rr.min(top + 1) {
            let mut w = p.powi(i as i32);
            for k in i..=top {
                if let Some(&c) = cur.get(k - i) {
                    next[k] += c * w;
                }
                w *= q * (k + 1) as f64 / (k + 1 - i) as f64;
                if w == 0.0 {
                    break;
                }
            }
        }
        cur = next;
        n1 += x;
    }
    cur.resize(k_max + 1, 0.0);
    cur.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    cur
}

pub(crate) fn k2_table_exact(config: &Configuration, r: CollisionOrder, k_max: usize) -> Vec<BigRational> {
    let n = config.n();
    let nb = BigInt::from(n);
    let counts = k1_counts(config, r, k_max.min(n));
    let mut pow = BigInt::one();
    SurjectionRows::new()
        .take(k_max + 1)
        .enumerate()
        .map(|(k, row)| {
            if k > 0 {
                pow *= &nb;
            }
            let num: BigInt = counts.iter().zip(row.iter()).filter(|(a, _)| !a.is_zero()).map(|(a, s)| a * s).sum();
            BigRational::new(num, pow.clone())
        })
        .collect()
}

/// Float `K2` table: `P(K1 > d)` mixed with the image-size law, which is
/// propagated in floating point one draw at a time.
pub(crate) fn k2_table_f64(config: &Configuration, r: CollisionOrder, k_max: usize) -> Vec<f64> {
    let n = config.n();
    let k1 = k1_table_f64(config, r, n);
    let mut out = Vec::with_capacity(k_max + 1);
    let mut pmf = ImagePmf::new(n);
    for _ in 0..=k_max {
        out.push(pmf.mix(&k1));
        pmf.step();
    }
    out
}

/// Law of the number of distinct balls seen after `k` uniform draws from `n`.
#[derive(Debug, Clone)]
pub(crate) struct ImagePmf {
    n: usize,
    probs: Vec<f64>,
}

impl ImagePmf {
    pub(crate) fn new(n: usize) -> Self {
        ImagePmf { n, probs: vec![1.0] }
    }

    pub(crate) fn step(&mut self) {
        let n = self.n as f64;
        let len = (self.probs.len() + 1).min(self.n + 1);
        let mut next = vec![0.0; len];
        for (d, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            next[d] += p * d as f64 / n;
            if d < self.n {
                next[d + 1] += p * (self.n - d) as f64 / n;
            }
        }
        self.probs = next;
    }

    pub(crate) fn mix(&self, values: &[f64]) -> f64 {
        self.probs.iter().zip(values.iter()).map(|(p, v)| p * v).sum::<f64>().clamp(0.0, 1.0)
    }
}

// ---------------------------------------------------------------------------
// Expected numbers of collisions at time k

/// Expected numbers of `r`-collisions after `k` draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionCounts {
    /// Without replacement.
    pub es1: BigRational,
    /// `r`-multisets with a common image, drawing with replacement.
    pub ec: BigRational,
    /// True collisions with replacement, each `r`-set counted once.
    pub es2: BigRational,
    /// True collisions with replacement, counted with multiplicity.
    pub es2_multi: BigRational,
}

pub fn expected_collision_counts(config: &Configuration, r: CollisionOrder, k: usize) -> CollisionCounts {
    let rr = r.get();
    let n = config.n();
    let nb = BigInt::from(n);
    let s_r: BigInt = config.sizes().iter().map(|&x| binomial(x, rr)).sum();
    let v_r: BigInt = config.sizes().iter().map(|&x| num_traits::pow(BigInt::from(x), rr)).sum();
    let k_r = falling_factorial(k, rr);
    let n_pow_r = num_traits::pow(nb.clone(), rr);
    let r_fact: BigInt = (1..=rr).fold(BigInt::one(), |acc, i| acc * i);

    let es1 = if k_r.is_zero() {
        BigRational::zero()
    } else {
        BigRational::new(&k_r * &s_r, falling_factorial(n, rr).max(BigInt::one()))
    };
    let ec = BigRational::new(&k_r * &v_r, &r_fact * &n_pow_r);
    let mut diff = BigRational::zero();
    for i in 0..=rr {
        let base = BigRational::new(BigInt::from(n) - i, nb.clone());
        let term = BigRational::from_integer(binomial(rr, i)) * num_traits::pow(base, k);
        if i % 2 == 0 {
            diff += term;
        } else {
            diff -= term;
        }
    }
    let es2 = diff * BigRational::from_integer(s_r.clone());
    let es2_multi = BigRational::new(&k_r * &s_r, n_pow_r);
    CollisionCounts { es1, ec, es2, es2_multi }
}

// ---------------------------------------------------------------------------
// True collision versus repetition

/// Whether the first `r`-fold hit (with replacement) is a true collision.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueCollision {
    /// `P(K_r = R_r)`.
    pub p_overall: f64,
    /// Estimated quadrature error of `p_overall`.
    pub error: f64,
    /// `P(K_r = R_r | colour i is hit r times first) = (x_i)_r / x_i^r`.
    pub conditional: Vec<BigRational>,
    /// `[(l)_r / l^r, (M)_r / M^r]` over cells with `x_i >= r`.
    pub bracket: (BigRational, BigRational),
}

fn falling_ratio(x: usize, r: usize) -> BigRational {
    if x < r {
        return BigRational::zero();
    }
    BigRational::new(falling_factorial(x, r), num_traits::pow(BigInt::from(x), r))
}

/// Probability that the first `r`-fold hit when drawing with replacement is
/// caused by `r` distinct balls, by quadrature of
/// `sum_i r C(x_i, r) int_0^inf t^(r-1) e^(-n t) prod_{j != i} q_r(x_j t) dt`.
pub fn prob_true_collision_first(config: &Configuration, r: CollisionOrder, tol: f64) -> Result<TrueCollision> {
    config.require_collision(r)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let rr = r.get();
    let n = config.n() as f64;
    let groups: Vec<(f64, f64, f64)> = config
        .grouped()
        .into_iter()
        .map(|(x, c)| (x as f64, c as f64, kernels::rational_to_f64(&BigRational::from_integer(binomial(x, rr)))))
        .collect();
    let integrand = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let mut log_all = -n * t;
        for &(x, c, _) in &groups {
            log_all += c * crate::kernels::ln_q_r(x * t, r);
        }
        let lt = (rr - 1) as f64 * t.ln();
        groups
            .iter()
            .filter(|g| g.2 > 0.0)
            .map(|&(x, c, binom)| {
                let l = log_all - crate::kernels::ln_q_r(x * t, r) + lt;
                c * rr as f64 * binom * l.exp()
            })
            .sum::<f64>()
    };
    let s_tilde: f64 = config.sizes().iter().map(|&x| (x as f64).powi(rr as i32)).sum::<f64>()
        / crate::numeric::gamma(rr as f64 + 1.0);
    let scale = 1.0 / s_tilde.powf(1.0 / rr as f64);
    let q = integrate_semi_infinite(integrand, scale, tol, 0.0, crate::numeric::DEFAULT_MAX_INTERVALS)?;

    let conditional: Vec<BigRational> = config.sizes().iter().map(|&x| falling_ratio(x, rr)).collect();
    let heavy = config.sizes().iter().copied().filter(|&x| x >= rr);
    let lo = heavy.clone().min().expect("require_collision checked a heavy cell");
    let hi = config.max_size();
    Ok(TrueCollision {
        p_overall: q.value,
        error: q.error,
        conditional,
        bracket: (falling_ratio(lo, rr), falling_ratio(hi, rr)),
    })
}

/// Exact `P(K_r = R_r)`: each term of the integral representation is a
/// polynomial times `e^(-n t)`, so `int t^j e^(-n t) dt = j! / n^(j+1)` gives a rational.
pub fn prob_true_collision_first_exact(config: &Configuration, r: CollisionOrder) -> Result<BigRational> {
    config.require_collision(r)?;
    let rr = r.get();
    let n = BigInt::from(config.n());
    let groups = config.grouped();
    let mut total = BigRational::zero();
    for (&x, &c) in &groups {
        if x < rr {
            continue;
        }
        let rest = groups.iter().map(|(&y, &d)| (y, if y == x { d - 1 } else { d }));
        let deg = (rr - 1) * (config.occupied() - 1);
        let counts = r_counts_grouped(rest, r, deg);
        // sum_k E_k (k+1)...(k+r-1) / n^(r+k), over the common denominator n^(r+deg).
        let mut num = BigInt::zero();
        for (k, e) in counts.iter().enumerate() {
            let rising: BigInt = (k + 1..k + rr).fold(BigInt::one(), |a, j| a * j);
            num = num * &n + e * rising;
        }
        num *= num_traits::pow(n.clone(), deg + 1 - counts.len());
        let weight = binomial(x, rr) * (c * rr);
        total += BigRational::new(num * weight, num_traits::pow(n.clone(), rr + deg));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn r(k: usize) -> CollisionOrder {
        CollisionOrder::new(k).unwrap()
    }

    fn cfg(v: &[usize]) -> Configuration {
        Configuration::new(v.to_vec()).unwrap()
    }

    #[test]
    fn k1_examples() {
        assert_eq!(survival_k1(&cfg(&[2, 2]), r(2), 2).unwrap(), q(2, 3));
        assert_eq!(survival_k1(&cfg(&[2, 2]), r(2), 1).unwrap(), q(1, 1));
        assert_eq!(survival_k1(&cfg(&[2, 1, 0]), r(2), 2).unwrap(), q(2, 3));
        assert_eq!(survival_k1(&cfg(&[2, 2]), r(2), 9).unwrap(), q(0, 1));
        assert!(matches!(survival_k1(&cfg(&[1, 1]), r(2), 1), Err(Error::InvalidQuery(_))));
    }

    #[test]
    fn k2_examples() {
        assert_eq!(survival_k2(&cfg(&[2, 2]), r(2), 2).unwrap(), q(3, 4));
        assert_eq!(survival_k2(&cfg(&[2, 2]), r(2), 3).unwrap(), q(7, 16));
        assert_eq!(survival_k2(&cfg(&[3, 1, 2]), r(3), 0).unwrap(), q(1, 1));
        assert!(survival_k2(&cfg(&[1, 2]), r(3), 1).is_err());
    }

    #[test]
    fn r_examples() {
        assert_eq!(survival_r(&cfg(&[2, 2]), r(2), 2).unwrap(), q(1, 2));
        assert_eq!(survival_r(&cfg(&[2, 2]), r(2), 3).unwrap(), q(0, 1));
        // Classical birthday survival (m)_k / m^k.
        let m = 23;
        for k in 0..=m + 1 {
            let expected = BigRational::new(falling_factorial(m, k), num_traits::pow(BigInt::from(m), k));
            assert_eq!(survival_r(&Configuration::classical(m).unwrap(), r(2), k).unwrap(), expected);
        }
        // No collision is possible here but repetitions are.
        assert_eq!(survival_r(&cfg(&[1, 1]), r(2), 2).unwrap(), q(1, 2));
    }

    #[test]
    fn r2_agrees_with_elementary_symmetric_form() {
        let c = cfg(&[3, 1, 4, 1, 5]);
        let n = c.n();
        let sym = kernels::elementary_symmetric(c.sizes(), n);
        for k in 0..=n {
            let fact: BigInt = (1..=k).fold(BigInt::one(), |a, i| a * i);
            let expected = &sym[k] * BigRational::new(fact, num_traits::pow(BigInt::from(n), k));
            assert_eq!(survival_r(&c, r(2), k).unwrap(), expected);
        }
    }

    #[test]
    fn multinomial_examples() {
        let half = MultinomialModel::new(4, vec![q(1, 2), q(1, 2)]).unwrap();
        assert_eq!(survival_k1_multinomial(&half, r(2), 2).unwrap(), q(1, 2));
        let single = MultinomialModel::new(3, vec![q(1, 1)]).unwrap();
        assert_eq!(survival_k1_multinomial(&single, r(2), 2).unwrap(), q(0, 1));
        assert!(matches!(survival_k1_multinomial(&single, r(2), 4), Err(Error::OutOfRange { .. })));
        let m = 7;
        let uni = MultinomialModel::uniform(10, m).unwrap();
        for k in 0..=8 {
            let expected = BigRational::new(falling_factorial(m, k), num_traits::pow(BigInt::from(m), k));
            assert_eq!(survival_k1_multinomial(&uni, r(2), k).unwrap(), expected);
        }
    }

    #[test]
    fn tables_match_pointwise_values() {
        let c = cfg(&[3, 2, 2, 1, 0]);
        for mode in Mode::ALL {
            for rr in 2..=3 {
                let t = SurvivalTable::compute(&c, r(rr), mode, 12, ExactPolicy::default()).unwrap();
                assert!(t.exact);
                for e in &t.entries {
                    assert_eq!(e.prob.exact().unwrap(), &survival(&c, r(rr), mode, e.k).unwrap());
                }
            }
        }
    }

    #[test]
    fn float_tables_match_exact_tables() {
        let c = cfg(&[4, 3, 3, 1, 1, 1, 2]);
        let float_policy = ExactPolicy { max_exact_n: 0 };
        for mode in Mode::ALL {
            let exact = SurvivalTable::compute(&c, r(3), mode, 30, ExactPolicy::default()).unwrap();
            let approx = SurvivalTable::compute(&c, r(3), mode, 30, float_policy).unwrap();
            assert!(!approx.exact);
            for (a, b) in exact.values_f64().iter().zip(approx.values_f64()) {
                assert!((a - b).abs() <= 1e-14, "{mode}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn collision_count_examples() {
        let c = cfg(&[2, 2]);
        let counts = expected_collision_counts(&c, r(2), 2);
        assert_eq!(counts.es1, q(1, 3));
        assert_eq!(counts.es2_multi, q(1, 4));
        // EC: (2)_2 / (2 * 16) * 8 = 1/2; ES2: (1 - 2(3/4)^2 + (1/2)^2) * 2 = 1/4
        assert_eq!(counts.ec, q(1, 2));
        assert_eq!(counts.es2, q(1, 4));
        for rr in 2..5 {
            let z = expected_collision_counts(&cfg(&[5, 3, 1]), r(rr), rr - 1);
            assert!(z.es1.is_zero() && z.ec.is_zero() && z.es2.is_zero() && z.es2_multi.is_zero());
        }
    }

    #[test]
    fn true_collision_examples() {
        let tc = prob_true_collision_first(&cfg(&[2, 2]), r(2), 1e-12).unwrap();
        assert_eq!(tc.conditional, vec![q(1, 2), q(1, 2)]);
        assert!((tc.p_overall - 0.5).abs() < 1e-10);
        let single = prob_true_collision_first(&cfg(&[7]), r(2), 1e-12).unwrap();
        assert_eq!(single.conditional, vec![q(6, 7)]);
        assert!((single.p_overall - 6.0 / 7.0).abs() < 1e-10);
        let mixed = prob_true_collision_first(&cfg(&[3, 2]), r(2), 1e-12).unwrap();
        assert!(mixed.p_overall > 0.5 && mixed.p_overall < 2.0 / 3.0);
        assert_eq!(mixed.bracket, (q(1, 2), q(2, 3)));
    }

    #[test]
    fn true_collision_exact() {
        assert_eq!(prob_true_collision_first_exact(&cfg(&[2, 2]), r(2)).unwrap(), q(1, 2));
        assert_eq!(prob_true_collision_first_exact(&cfg(&[7]), r(2)).unwrap(), q(6, 7));
        // r = 2: the first repetition is a repeated ball with probability sum_k P(R > k-1) (k-1)/n.
        for sizes in [vec![3, 2], vec![4, 1, 1, 2], vec![2, 0, 5, 1]] {
            let c = cfg(&sizes);
            let n = c.n();
            let mut direct = BigRational::zero();
            for k in 1..=n + 1 {
                direct += survival_r(&c, r(2), k - 1).unwrap() * q((k - 1) as i64, n as i64);
            }
            let exact = prob_true_collision_first_exact(&c, r(2)).unwrap();
            assert_eq!(exact, BigRational::one() - direct, "{sizes:?}");
        }
        for (sizes, rr) in [(vec![3, 4, 1], 3), (vec![5, 2, 6], 4), (vec![3, 2], 2)] {
            let c = cfg(&sizes);
            let exact = kernels::rational_to_f64(&prob_true_collision_first_exact(&c, r(rr)).unwrap());
            let quad = prob_true_collision_first(&c, r(rr), 1e-12).unwrap().p_overall;
            assert!((exact - quad).abs() < 1e-9, "{sizes:?} {exact} {quad}");
        }
    }

    #[test]
    fn float_tables_match_exact() {
        for (sizes, rr) in [(vec![2, 2], 2), (vec![5, 1, 3, 0, 2], 2), (vec![7, 3, 3, 1], 3), (vec![1, 1, 1, 6], 4)] {
            let c = cfg(&sizes);
            let k_max = 3 * c.n();
            let pairs = [
                (k1_table_exact(&c, r(rr), k_max), k1_table_f64(&c, r(rr), k_max)),
                (r_table_exact(&c, r(rr), k_max), r_table_f64(&c, r(rr), k_max)),
                (k2_table_exact(&c, r(rr), k_max), k2_table_f64(&c, r(rr), k_max)),
            ];
            for (exact, float) in pairs {
                assert_eq!(exact.len(), float.len());
                for (e, f) in exact.iter().zip(&float) {
                    assert!((kernels::rational_to_f64(e) - f).abs() < 1e-13, "{sizes:?} {e} {f}");
                }
            }
        }
    }
}
