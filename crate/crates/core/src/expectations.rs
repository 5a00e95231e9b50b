//! Expectations of the waiting times: exact sums, integral representations,
//! closed forms for special shapes, and the bound families.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::config::{CollisionOrder, Configuration, Mode};
use crate::error::{Error, Result};
use crate::exact_dist::{
    k1_counts, k1_degree, k1_table_f64, r_counts, r_degree, r_table_f64, ExactPolicy, ImagePmf, Scalar,
};
use crate::kernels::{binomial, ln_g_r, ln_q_r, mul_trunc, power_ordinary, ratio_to_f64, rational_to_f64};
use crate::numeric::{gamma, integrate, integrate_semi_infinite, ln_beta, ln_gamma, Quadrature, DEFAULT_MAX_INTERVALS};
use crate::report::{ser_display, ser_opt_display, ser_opt_sig15, ser_opt_sig15_vec, ser_sig15, ser_sig15_vec};

/// Default tolerance for quadratures and truncated sums.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Scalars derived from a configuration that drive the bounds and limit laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigStatistics {
    pub r: CollisionOrder,
    pub n: usize,
    pub m: usize,
    #[serde(skip)]
    pub sizes: Vec<usize>,
    /// `sum_i C(x_i, r)`.
    #[serde(serialize_with = "ser_display")]
    pub s_r: BigInt,
    /// `sum_i x_i^r / r!`.
    #[serde(serialize_with = "ser_display")]
    pub s_tilde_r: BigRational,
    /// `sum_i x_i^r`.
    #[serde(serialize_with = "ser_display")]
    pub v_r: BigInt,
    /// `n^r / (r! s_r)`, absent when `s_r = 0`.
    #[serde(serialize_with = "ser_opt_display")]
    pub m_r: Option<BigRational>,
    /// `n^r / v_r`.
    #[serde(serialize_with = "ser_display")]
    pub m_tilde_r: BigRational,
    /// Mean size over the cells with `x_i >= r`.
    #[serde(serialize_with = "ser_opt_display")]
    pub u_r: Option<BigRational>,
    /// Indices of the cells with `x_i >= r`.
    pub heavy: Vec<usize>,
    /// Number of occupied cells.
    pub b: usize,
    /// `sum_i x_i C(x_i, r)`.
    #[serde(serialize_with = "ser_display")]
    pub d: BigInt,
    /// `min(n, m)`.
    pub w: usize,
    /// `(C(x_i, r) / s_r)^(1/r)`, absent when `s_r = 0`.
    #[serde(serialize_with = "ser_opt_sig15_vec")]
    pub rho: Option<Vec<f64>>,
    /// `x_i / v_r^(1/r)`.
    #[serde(serialize_with = "ser_sig15_vec")]
    pub theta: Vec<f64>,
}

impl ConfigStatistics {
    pub fn s_r_f64(&self) -> f64 {
        ratio_to_f64(&self.s_r, &BigInt::one())
    }

    pub fn s_tilde_f64(&self) -> f64 {
        rational_to_f64(&self.s_tilde_r)
    }

    pub fn m_r_f64(&self) -> Option<f64> {
        self.m_r.as_ref().map(rational_to_f64)
    }

    pub fn m_tilde_f64(&self) -> f64 {
        rational_to_f64(&self.m_tilde_r)
    }

    pub fn x_max(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn heavy_sizes(&self) -> Vec<usize> {
        self.heavy.iter().map(|&i| self.sizes[i]).collect()
    }
}

pub fn config_statistics(config: &Configuration, r: CollisionOrder) -> ConfigStatistics {
    let rr = r.get();
    let n = config.n();
    let sizes = config.sizes().to_vec();
    let binoms: Vec<BigInt> = sizes.iter().map(|&x| binomial(x, rr)).collect();
    let s_r: BigInt = binoms.iter().sum();
    let v_r: BigInt = sizes.iter().map(|&x| num_traits::pow(BigInt::from(x), rr)).sum();
    let r_fact: BigInt = (1..=rr).fold(BigInt::one(), |a, i| a * i);
    let n_pow = num_traits::pow(BigInt::from(n), rr);
    let heavy: Vec<usize> = (0..sizes.len()).filter(|&i| sizes[i] >= rr).collect();
    let heavy_total: usize = heavy.iter().map(|&i| sizes[i]).sum();
    let d: BigInt = sizes.iter().zip(&binoms).map(|(&x, c)| c * x).sum();
    let rho = (!s_r.is_zero()).then(|| binoms.iter().map(|c| ratio_to_f64(c, &s_r).powf(1.0 / rr as f64)).collect());
    let theta = sizes
        .iter()
        .map(|&x| ratio_to_f64(&num_traits::pow(BigInt::from(x), rr), &v_r).powf(1.0 / rr as f64))
        .collect();
    ConfigStatistics {
        r,
        n,
        m: sizes.len(),
        m_r: (!s_r.is_zero()).then(|| BigRational::new(n_pow.clone(), &r_fact * &s_r)),
        m_tilde_r: BigRational::new(n_pow, v_r.clone()),
        s_tilde_r: BigRational::new(v_r.clone(), r_fact),
        u_r: (!heavy.is_empty()).then(|| BigRational::new(heavy_total.into(), heavy.len().into())),
        b: config.occupied(),
        w: n.min(sizes.len()),
        heavy,
        s_r,
        v_r,
        d,
        rho,
        theta,
        sizes,
    }
}

/// An expectation together with its error budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    pub mode: Mode,
    pub value: Scalar,
    /// Absolute error bound (0 on the exact path).
    #[serde(serialize_with = "ser_sig15")]
    pub error: f64,
    pub method: &'static str,
}

impl Expectation {
    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }
}

/// Expected waiting time, exact for `n <= DEFAULT_MAX_EXACT_N`.
pub fn expectation_exact(config: &Configuration, r: CollisionOrder, mode: Mode, tol: f64) -> Result<Expectation> {
    expectation_exact_with(config, r, mode, tol, ExactPolicy::default())
}

pub fn expectation_exact_with(
    config: &Configuration,
    r: CollisionOrder,
    mode: Mode,
    tol: f64,
    policy: ExactPolicy,
) -> Result<Expectation> {
    if mode != Mode::R {
        config.require_collision(r)?;
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if policy.is_exact(config.n()) {
        let (value, method) = match mode {
            Mode::K1 => (exact_k1(config, r), "exact survival sum"),
            Mode::K2 => (exact_k2(config, r), "exact integral of the image polynomial"),
            Mode::R => (exact_r(config, r), "exact survival sum"),
        };
        return Ok(Expectation { mode, value: Scalar::Exact(value), error: 0.0, method });
    }
    match mode {
        Mode::K1 | Mode::R => {
            let (value, error) = float_survival_sum(config, r, mode);
            Ok(Expectation { mode, value: Scalar::Approx(value), error, method: "float survival sum" })
        }
        Mode::K2 => {
            let q = expectation_quadrature(config, r, mode, tol)?;
            Ok(Expectation { mode, value: Scalar::Approx(q.value), error: q.error, method: "quadrature" })
        }
    }
}

/// `E K1 = sum_k A_k k! (n-k)! / n!`.
fn exact_k1(config: &Configuration, r: CollisionOrder) -> BigRational {
    let n = config.n();
    let counts = k1_counts(config, r, k1_degree(config, r));
    // f = k! (n-k)!
    let mut f: BigInt = (1..=n).fold(BigInt::one(), |a, i| a * i);
    let n_fact = f.clone();
    let mut num = BigInt::zero();
    for (k, a) in counts.iter().enumerate() {
        if k > 0 {
            f = f * k / (n + 1 - k);
        }
        num += a * &f;
    }
    BigRational::new(num, n_fact)
}

/// `E R = sum_k E_k / n^k`, up to the true degree `(r-1) b`.
fn exact_r(config: &Configuration, r: CollisionOrder) -> BigRational {
    let deg = r_degree(config, r);
    let counts = r_counts(config, r, deg);
    let nb = BigInt::from(config.n());
    // Horner in 1/n: sum_k E_k n^(deg-k) / n^deg
    let mut num = BigInt::zero();
    for e in &counts {
        num = num * &nb + e;
    }
    let shift = deg + 1 - counts.len();
    num *= num_traits::pow(nb.clone(), shift);
    BigRational::new(num, num_traits::pow(nb, deg))
}

/// `E K2 = n int_0^1 prod_i G_r(x_i, 1-u) du / u`. The product is an integer
/// polynomial in `u` divisible by `u^(x_i-r+1)` per heavy cell, so the
/// integral is `sum_j c_j / j` exactly.
fn exact_k2(config: &Configuration, r: CollisionOrder) -> BigRational {
    let rr = r.get();
    let mut acc = vec![BigInt::one()];
    let mut shift = 0usize;
    for (x, c) in config.grouped() {
        if x < rr {
            continue;
        }
        let h = reduced_tail_poly(x, rr);
        let deg = acc.len() - 1 + (rr - 1) * c;
        let group = power_ordinary(&h, c, deg);
        acc = mul_trunc(&acc, &group, deg);
        shift += c * (x - rr + 1);
    }
    let mut total = BigRational::zero();
    for (j, cj) in acc.iter().enumerate() {
        if !cj.is_zero() {
            total += BigRational::new(cj.clone(), BigInt::from(j + shift));
        }
    }
    total * BigRational::from_integer(config.n().into())
}

/// `G_r(x, 1-u) / u^(x-r+1) = sum_{i<r} C(x, i) (1-u)^i u^(r-1-i)`.
fn reduced_tail_poly(x: usize, r: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); r];
    for i in 0..r {
        let c = binomial(x, i);
        for j in 0..=i {
            let term = &c * binomial(i, j);
            let deg = r - 1 - i + j;
            if j % 2 == 0 {
                out[deg] += term;
            } else {
                out[deg] -= term;
            }
        }
    }
    out
}

/// Sums float survival values until the remaining tail is provably negligible.
/// Returns the sum and a bound on the neglected tail.
fn float_survival_sum(config: &Configuration, r: CollisionOrder, mode: Mode) -> (f64, f64) {
    let stats = config_statistics(config, r);
    let (deg, scale) = match mode {
        Mode::K1 => (k1_degree(config, r), config.n() as f64 / stats.s_r_f64().powf(1.0 / r.get() as f64)),
        _ => (r_degree(config, r), config.n() as f64 / stats.s_tilde_f64().powf(1.0 / r.get() as f64)),
    };
    let mut kmax = ((16.0 * scale).ceil() as usize + r.get()).min(deg);
    loop {
        let table = match mode {
            Mode::K1 => k1_table_f64(config, r, kmax),
            _ => r_table_f64(config, r, kmax),
        };
        let sum: f64 = table.iter().sum();
        let last = *table.last().expect("table is non-empty");
        // Survival is nonincreasing, so the tail is at most last * (deg - kmax).
        let tail = last * (deg - kmax) as f64;
        if kmax == deg || tail <= 1e-16 * sum {
            return (sum, tail + sum * 1e-14);
        }
        kmax = (2 * kmax).min(deg);
    }
}

/// Heavy cells grouped by size.
fn heavy_groups(config: &Configuration, r: CollisionOrder) -> Vec<(usize, usize)> {
    config.grouped().into_iter().filter(|&(x, _)| x >= r.get()).collect()
}

fn s_of(groups: &[(usize, usize)], r: usize) -> f64 {
    groups.iter().map(|&(x, c)| c as f64 * ratio_to_f64(&binomial(x, r), &BigInt::one())).sum()
}

/// `(n+1) int_0^1 prod G_r(x, t)^c dt`.
fn k1_integral(groups: &[(usize, usize)], n: usize, r: CollisionOrder, tol: f64) -> Result<Quadrature> {
    let hint = s_of(groups, r.get()).powf(-1.0 / r.get() as f64).min(1.0);
    let f = |t: f64| {
        let l: f64 = groups.iter().map(|&(x, c)| c as f64 * ln_g_r(x, r, t)).sum();
        l.exp()
    };
    let q = integrate(f, 0.0, 1.0, tol * hint, tol, DEFAULT_MAX_INTERVALS)?;
    Ok(scaled(q, (n + 1) as f64))
}

/// `n int_0^inf prod G_r(x, 1 - e^-t)^c dt`.
fn k2_integral(groups: &[(usize, usize)], n: usize, r: CollisionOrder, tol: f64) -> Result<Quadrature> {
    let rr = r.get();
    let rate: f64 = groups.iter().map(|&(x, c)| (c * (x + 1 - rr)) as f64).sum();
    let scale = s_of(groups, rr).powf(-1.0 / rr as f64).max(1.0 / rate);
    let f = |t: f64| {
        let p = -(-t).exp_m1();
        let l: f64 = groups.iter().map(|&(x, c)| c as f64 * ln_g_r(x, r, p)).sum();
        l.exp()
    };
    let q = integrate_semi_infinite(f, scale, tol * scale, tol, DEFAULT_MAX_INTERVALS)?;
    Ok(scaled(q, n as f64))
}

/// `n int_0^inf e^(-n s) prod q_r(x s)^c ds`.
fn r_integral(groups: &[(usize, usize)], n: usize, r: CollisionOrder, tol: f64) -> Result<Quadrature> {
    let rr = r.get();
    let s_tilde: f64 =
        groups.iter().map(|&(x, c)| c as f64 * (x as f64).powi(rr as i32)).sum::<f64>() / gamma(rr as f64 + 1.0);
    let scale = s_tilde.powf(-1.0 / rr as f64).max(1.0 / n as f64);
    let nf = n as f64;
    let f = |s: f64| {
        let l: f64 = groups.iter().map(|&(x, c)| c as f64 * ln_q_r(x as f64 * s, r)).sum();
        (l - nf * s).exp()
    };
    let q = integrate_semi_infinite(f, scale, tol * scale, tol, DEFAULT_MAX_INTERVALS)?;
    Ok(scaled(q, nf))
}

fn scaled(q: Quadrature, factor: f64) -> Quadrature {
    Quadrature { value: q.value * factor, error: q.error * factor, intervals: q.intervals }
}

/// Expected waiting time from its integral representation.
pub fn expectation_quadrature(config: &Configuration, r: CollisionOrder, mode: Mode, tol: f64) -> Result<Quadrature> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let n = config.n();
    match mode {
        Mode::K1 => {
            config.require_collision(r)?;
            k1_integral(&heavy_groups(config, r), n, r, tol)
        }
        Mode::K2 => {
            config.require_collision(r)?;
            k2_integral(&heavy_groups(config, r), n, r, tol)
        }
        Mode::R => r_integral(&config.grouped().into_iter().collect::<Vec<_>>(), n, r, tol),
    }
}

/// `E K2` by summing float survival values, with a geometric tail estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesSum {
    #[serde(serialize_with = "ser_sig15")]
    pub value: f64,
    /// Estimated neglected tail, already included in `value`.
    #[serde(serialize_with = "ser_sig15")]
    pub tail: f64,
    pub terms: usize,
}

/// Sums `P(K2 > k)` until it falls below `tol` times the partial sum with
/// `k > n`, then adds a geometric tail using the larger of the last survival
/// ratio and the asymptotic ratio `d / n`, `d` the largest collision-free set.
pub fn expectation_k2_series(
    config: &Configuration,
    r: CollisionOrder,
    tol: f64,
    max_terms: usize,
) -> Result<SeriesSum> {
    config.require_collision(r)?;
    let n = config.n();
    let k1 = k1_table_f64(config, r, n);
    let limit_ratio = k1_degree(config, r) as f64 / n as f64;
    let mut pmf = ImagePmf::new(n);
    let mut sum = 0.0;
    let mut prev = 1.0;
    for k in 0..max_terms {
        let s = pmf.mix(&k1);
        sum += s;
        if k > n && s < tol * sum {
            let ratio = (s / prev).max(limit_ratio).min(1.0 - 1e-12);
            let tail = s * ratio / (1.0 - ratio);
            return Ok(SeriesSum { value: sum + tail, tail, terms: k + 1 });
        }
        prev = s;
        pmf.step();
    }
    Err(Error::Numeric {
        message: format!("survival series did not reach tolerance within {max_terms} terms"),
        estimate: sum,
        achieved: prev / sum,
    })
}

// ---------------------------------------------------------------------------
// Closed forms

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClosedFormShape {
    /// All `x_i <= r`, with `a` cells of size exactly `r`.
    AtMostR { a: usize },
    /// Exactly one cell with `x_i >= r`.
    SingleHeavy { x: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedForms {
    pub shape: ClosedFormShape,
    #[serde(serialize_with = "ser_display")]
    pub k1: BigRational,
    #[serde(serialize_with = "ser_display")]
    pub k2: BigRational,
}

/// Closed-form expectations when the configuration has one of two special shapes.
pub fn closed_forms(config: &Configuration, r: CollisionOrder) -> Option<ClosedForms> {
    let rr = r.get();
    let n = config.n();
    let heavy: Vec<usize> = config.sizes().iter().copied().filter(|&x| x >= rr).collect();
    if heavy.len() == 1 {
        let x = heavy[0];
        let k1 = BigRational::new((rr * (n + 1)).into(), (x + 1).into());
        let k2: BigRational = (0..rr).map(|i| BigRational::new(n.into(), (x - i).into())).sum();
        return Some(ClosedForms { shape: ClosedFormShape::SingleHeavy { x }, k1, k2 });
    }
    if heavy.is_empty() || heavy.iter().any(|&x| x > rr) {
        return None;
    }
    let a = heavy.len();
    // (n+1)/r B(1/r, 1+a) = (n+1) a! r^a / prod_{i=1}^a (1 + i r)
    let a_fact: BigInt = (1..=a).fold(BigInt::one(), |acc, i| acc * i);
    let r_pow = num_traits::pow(BigInt::from(rr), a);
    let den: BigInt = (1..=a).fold(BigInt::one(), |acc, i| acc * (1 + i * rr));
    let k1 = BigRational::new(&a_fact * &r_pow * (n + 1), den);
    // (n/r) sum_{i=1}^r B(i/r, a), with B(i/r, a) = (a-1)! r^a / prod_{j<a} (i + j r)
    let am1_fact: BigInt = (1..a).fold(BigInt::one(), |acc, i| acc * i);
    let mut sum = BigRational::zero();
    for i in 1..=rr {
        let den: BigInt = (0..a).fold(BigInt::one(), |acc, j| acc * (i + j * rr));
        sum += BigRational::new(&am1_fact * &r_pow, den);
    }
    let k2 = sum * BigRational::new(n.into(), rr.into());
    Some(ClosedForms { shape: ClosedFormShape::AtMostR { a }, k1, k2 })
}

// ---------------------------------------------------------------------------
// Bounds

/// Lower bounds from Jensen's inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBounds {
    /// `((n+1)/r) B(1/r, 1+s_r)`.
    #[serde(serialize_with = "ser_opt_sig15")]
    pub k1_beta: Option<f64>,
    /// `Gamma(1+1/r) (n+1) / (s_r+1)^(1/r)`, weaker than `k1_beta`.
    #[serde(serialize_with = "ser_opt_sig15")]
    pub k1_gamma: Option<f64>,
    /// `Gamma(1+1/r) n / s_r^(1/r)`.
    #[serde(serialize_with = "ser_opt_sig15")]
    pub k2: Option<f64>,
    /// `Gamma(1+1/r) n / s~_r^(1/r)`.
    #[serde(serialize_with = "ser_sig15")]
    pub r: f64,
}

pub fn bounds_lower(stats: &ConfigStatistics) -> LowerBounds {
    let rr = stats.r.get() as f64;
    let n = stats.n as f64;
    let g = gamma(1.0 + 1.0 / rr);
    let s = stats.s_r_f64();
    let has = s >= 1.0;
    LowerBounds {
        k1_beta: has.then(|| ((n + 1.0) / rr) * ln_beta(1.0 / rr, 1.0 + s).exp()),
        k1_gamma: has.then(|| g * (n + 1.0) / (s + 1.0).powf(1.0 / rr)),
        k2: has.then(|| g * n / s.powf(1.0 / rr)),
        r: g * n / stats.s_tilde_f64().powf(1.0 / rr),
    }
}

/// Upper bounds from the most balanced configuration in the majorization order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MajorizationBounds {
    #[serde(serialize_with = "ser_opt_sig15")]
    pub k1: Option<f64>,
    #[serde(serialize_with = "ser_opt_sig15")]
    pub k2: Option<f64>,
    /// `w int_0^inf e^(-w s) q_r(s)^w ds`, `w = min(n, m)`.
    #[serde(serialize_with = "ser_sig15")]
    pub r: f64,
}

/// The heavy cells spread as evenly as integers allow.
fn balanced_heavy(stats: &ConfigStatistics) -> Vec<(usize, usize)> {
    let heavy = stats.heavy_sizes();
    let h = heavy.len();
    let total: usize = heavy.iter().sum();
    let (q, rem) = (total / h, total % h);
    let mut groups = vec![(q, h - rem)];
    if rem > 0 {
        groups.push((q + 1, rem));
    }
    groups
}

pub fn bounds_upper_majorization(stats: &ConfigStatistics, tol: f64) -> Result<MajorizationBounds> {
    let r = stats.r;
    let (k1, k2) = if stats.heavy.is_empty() {
        (None, None)
    } else {
        let groups = balanced_heavy(stats);
        (Some(k1_integral(&groups, stats.n, r, tol)?.value), Some(k2_integral(&groups, stats.n, r, tol)?.value))
    };
    let rq = r_integral(&[(1, stats.w)], stats.w, r, tol)?;
    Ok(MajorizationBounds { k1, k2, r: rq.value })
}

/// Upper bounds obtained by matching every cell to the largest one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedBounds {
    /// Common bound for `E K1 <= E K2`.
    #[serde(serialize_with = "ser_opt_sig15")]
    pub k12_common: Option<f64>,
    #[serde(serialize_with = "ser_sig15")]
    pub r: f64,
}

/// `(n / s^(1/r)) sum_{i<r} C(x_max, i) (1/r) Gamma((i+1)/r) s^(-i/r)`.
fn matched_sum(n: f64, s: f64, x_max: usize, r: usize) -> f64 {
    let rf = r as f64;
    let ls = s.ln();
    let mut total = 0.0;
    for i in 0..r {
        let c = ratio_to_f64(&binomial(x_max, i), &BigInt::one());
        if c == 0.0 {
            continue;
        }
        let lt = c.ln() + ln_gamma((i as f64 + 1.0) / rf) - (i as f64 + 1.0) / rf * ls;
        total += lt.exp() / rf;
    }
    n * total
}

pub fn bounds_upper_matched(stats: &ConfigStatistics, x_max: usize) -> MatchedBounds {
    let r = stats.r.get();
    let n = stats.n as f64;
    let s = stats.s_r_f64();
    MatchedBounds {
        k12_common: (s >= 1.0).then(|| matched_sum(n, s, x_max, r)),
        r: matched_sum(n, stats.s_tilde_f64(), x_max, r),
    }
}

/// Bound on `E K2 - E K1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapBound {
    #[serde(serialize_with = "ser_sig15")]
    pub c_r: f64,
    #[serde(serialize_with = "ser_sig15")]
    pub bound: f64,
}

/// `C_r = (1/r)^(2/r) int_0^inf t (e^-t q_r(t))^(1/r^(r-1)) dt`, cached per `r`.
pub fn gap_constant(r: CollisionOrder) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<usize, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&c) = cache.lock().expect("gap cache poisoned").get(&r.get()) {
        return Ok(c);
    }
    let rf = r.get() as f64;
    let power = rf.powi(r.get() as i32 - 1);
    let f = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        t * ((ln_q_r(t, r) - t) / power).exp()
    };
    let q = integrate_semi_infinite(f, power, 1e-13, 1e-13, DEFAULT_MAX_INTERVALS)?;
    let c = (1.0 / rf).powf(2.0 / rf) * q.value;
    cache.lock().expect("gap cache poisoned").insert(r.get(), c);
    Ok(c)
}

pub fn gap_bound(stats: &ConfigStatistics) -> Result<Option<GapBound>> {
    let s = stats.s_r_f64();
    if s < 1.0 {
        return Ok(None);
    }
    let c_r = gap_constant(stats.r)?;
    let rf = stats.r.get() as f64;
    Ok(Some(GapBound { c_r, bound: c_r * stats.n as f64 / s.powf(2.0 / rf) }))
}

/// Bracket `n / sum x_i^2 <= P(R_2 < K_2) <= b / n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitBounds {
    #[serde(serialize_with = "ser_display")]
    pub lower: BigRational,
    #[serde(serialize_with = "ser_display")]
    pub upper: BigRational,
}

pub fn true_collision_split_bounds(config: &Configuration) -> Result<SplitBounds> {
    let n = config.n();
    if n < 2 {
        return Err(Error::InvalidQuery("the split bounds need n >= 2".into()));
    }
    let sq: BigInt = config.sizes().iter().map(|&x| BigInt::from(x * x)).sum();
    Ok(SplitBounds {
        lower: BigRational::new(n.into(), sq),
        upper: BigRational::new(config.occupied().into(), n.into()),
    })
}

/// The three bound families for one waiting time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationBounds {
    pub mode: Mode,
    #[serde(serialize_with = "ser_opt_sig15")]
    pub lower: Option<f64>,
    #[serde(serialize_with = "ser_opt_sig15")]
    pub upper_majorization: Option<f64>,
    #[serde(serialize_with = "ser_opt_sig15")]
    pub upper_matched: Option<f64>,
    pub method_notes: String,
}

pub fn expectation_bounds(
    config: &Configuration,
    r: CollisionOrder,
    mode: Mode,
    tol: f64,
) -> Result<ExpectationBounds> {
    let stats = config_statistics(config, r);
    let lower = bounds_lower(&stats);
    let major = bounds_upper_majorization(&stats, tol)?;
    let matched = bounds_upper_matched(&stats, stats.x_max());
    let (lo, up_maj, up_match, notes) = match mode {
        Mode::K1 => (
            lower.k1_beta,
            major.k1,
            matched.k12_common,
            "lower: ((n+1)/r) B(1/r, 1+s_r); majorization: balanced heavy cells by quadrature; matched: common K1/K2 bound",
        ),
        Mode::K2 => (
            lower.k2,
            major.k2,
            matched.k12_common,
            "lower: Gamma(1+1/r) n / s_r^(1/r); majorization: balanced heavy cells by quadrature; matched: common K1/K2 bound",
        ),
        Mode::R => (
            Some(lower.r),
            Some(major.r),
            Some(matched.r),
            "lower: Gamma(1+1/r) n / s~_r^(1/r); majorization: w int e^(-ws) q_r(s)^w ds; matched: s~_r form",
        ),
    };
    Ok(ExpectationBounds {
        mode,
        lower: lo,
        upper_majorization: up_maj,
        upper_matched: up_match,
        method_notes: notes.to_string(),
    })
}

/// `a <= b` up to a relative slack.
pub fn le_rel(a: f64, b: f64, slack: f64) -> bool {
    a <= b + slack * b.abs().max(a.abs())
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

    fn exact(c: &Configuration, rr: usize, mode: Mode) -> BigRational {
        expectation_exact(c, r(rr), mode, DEFAULT_TOL).unwrap().value.exact().unwrap().clone()
    }

    #[test]
    fn statistics_examples() {
        let s = config_statistics(&cfg(&[2, 2]), r(2));
        assert_eq!(s.s_r, BigInt::from(2));
        assert_eq!(s.m_r, Some(q(4, 1)));
        let rho = s.rho.unwrap();
        assert!((rho[0] - 0.5f64.sqrt()).abs() < 1e-15 && (rho[1] - rho[0]).abs() < 1e-15);
        let ones = config_statistics(&Configuration::classical(9).unwrap(), r(2));
        assert!(ones.s_r.is_zero() && ones.m_r.is_none() && ones.rho.is_none());
        let four = config_statistics(&cfg(&[4]), r(2));
        assert_eq!(four.d, BigInt::from(24));
        assert_eq!(four.b, 1);
        assert_eq!(four.u_r, Some(q(4, 1)));
        let t: f64 = config_statistics(&cfg(&[5, 3, 1, 0]), r(3)).theta.iter().map(|v| v.powi(3)).sum();
        assert!((t - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_expectation_examples() {
        let c = cfg(&[2, 2]);
        assert_eq!(exact(&c, 2, Mode::K1), q(8, 3));
        assert_eq!(exact(&c, 2, Mode::R), q(5, 2));
        assert_eq!(exact(&c, 2, Mode::K2), q(11, 3));
        // Constant map: K1 = r, K2 = n (1/n + ... + 1/(n-r+1)).
        assert_eq!(exact(&cfg(&[6]), 3, Mode::K1), q(3, 1));
        assert_eq!(exact(&cfg(&[6]), 2, Mode::K2), q(2, 1) + q(1, 5));
    }

    #[test]
    fn exact_r_includes_tail_beyond_n() {
        // For r >= 3, R can exceed n: [1, 1] with r = 3 needs up to 5 draws.
        let c = cfg(&[1, 1]);
        let direct: BigRational = (0..=4).map(|k| crate::exact_dist::survival_r(&c, r(3), k).unwrap()).sum();
        assert_eq!(exact(&c, 3, Mode::R), direct);
        assert!(direct > q(3, 1));
    }

    #[test]
    fn exact_k2_matches_series() {
        for sizes in [vec![2, 2], vec![3, 1, 2], vec![4, 4, 1, 0], vec![5]] {
            let c = cfg(&sizes);
            for rr in 2..=3 {
                if c.max_size() < rr {
                    continue;
                }
                let e = rational_to_f64(&exact(&c, rr, Mode::K2));
                let s = expectation_k2_series(&c, r(rr), 1e-15, 100_000).unwrap();
                assert!((e - s.value).abs() < 1e-12 * e, "{sizes:?} r={rr}: {e} vs {}", s.value);
            }
        }
    }

    #[test]
    fn quadrature_matches_exact() {
        for sizes in [vec![2, 2], vec![3, 1, 2], vec![4, 4, 1, 0], vec![7, 1, 1, 1, 3], vec![5]] {
            let c = cfg(&sizes);
            for rr in 2..=4 {
                for mode in Mode::ALL {
                    if mode != Mode::R && c.max_size() < rr {
                        continue;
                    }
                    let e = rational_to_f64(&exact(&c, rr, mode));
                    let qd = expectation_quadrature(&c, r(rr), mode, 1e-11).unwrap();
                    assert!((e - qd.value).abs() < 1e-9 * e, "{sizes:?} r={rr} {mode}: {e} vs {}", qd.value);
                }
            }
        }
    }

    #[test]
    fn constant_map_quadrature() {
        for n in [3usize, 10, 50] {
            let c = cfg(&[n]);
            let k1 = expectation_quadrature(&c, r(2), Mode::K1, 1e-12).unwrap().value;
            assert!((k1 - 2.0).abs() < 1e-10);
            let k2 = expectation_quadrature(&c, r(2), Mode::K2, 1e-12).unwrap().value;
            assert!((k2 - (2.0 + 1.0 / (n as f64 - 1.0))).abs() < 1e-10);
        }
    }

    #[test]
    fn float_path_matches_exact_path() {
        let c = cfg(&[3, 3, 2, 2, 1, 1, 1, 4, 0, 2]);
        let float = ExactPolicy { max_exact_n: 0 };
        for rr in 2..=3 {
            for mode in Mode::ALL {
                let e = rational_to_f64(&exact(&c, rr, mode));
                let f = expectation_exact_with(&c, r(rr), mode, 1e-12, float).unwrap();
                assert!(f.value.exact().is_none());
                assert!((e - f.to_f64()).abs() < 1e-10 * e, "r={rr} {mode}: {e} vs {}", f.to_f64());
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let four = closed_forms(&cfg(&[4]), r(2)).unwrap();
        assert_eq!(four.k1, q(2, 1));
        let bal = closed_forms(&cfg(&[2, 2]), r(2)).unwrap();
        assert_eq!(bal.shape, ClosedFormShape::AtMostR { a: 2 });
        assert_eq!(bal.k1, q(8, 3));
        assert_eq!(bal.k2, q(11, 3));
        // a = 1: E K1 = r (n+1) / (r+1).
        let one = closed_forms(&cfg(&[3, 1, 1, 2]), r(3)).unwrap();
        assert_eq!(one.k1, q(3 * 8, 4));
        assert!(closed_forms(&cfg(&[3, 3, 4]), r(3)).is_none());
        assert!(closed_forms(&cfg(&[1, 1]), r(2)).is_none());
    }

    #[test]
    fn closed_forms_match_exact_sums() {
        for sizes in [vec![2, 2], vec![3, 3, 1, 2], vec![2, 1, 2, 2, 0], vec![9, 1, 1], vec![3, 3, 3, 3]] {
            let c = cfg(&sizes);
            for rr in 2..=4 {
                if let Some(cf) = closed_forms(&c, r(rr)) {
                    assert_eq!(cf.k1, exact(&c, rr, Mode::K1), "{sizes:?} r={rr}");
                    assert_eq!(cf.k2, exact(&c, rr, Mode::K2), "{sizes:?} r={rr}");
                }
            }
        }
    }

    #[test]
    fn bound_examples() {
        let s = config_statistics(&cfg(&[2, 2]), r(2));
        let lo = bounds_lower(&s);
        assert!((lo.k1_beta.unwrap() - 8.0 / 3.0).abs() < 1e-12);
        assert!((lo.k2.unwrap() - gamma(1.5) * 4.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((lo.r - gamma(1.5) * 2.0).abs() < 1e-12);
        let maj = bounds_upper_majorization(&s, 1e-12).unwrap();
        assert!((maj.r - 2.5).abs() < 1e-10);
        assert!(maj.k1.unwrap() >= 8.0 / 3.0 - 1e-10);
        let s31 = config_statistics(&cfg(&[3, 1]), r(2));
        let maj31 = bounds_upper_majorization(&s31, 1e-12).unwrap();
        assert!((maj31.r - 2.5).abs() < 1e-10);
        assert!(rational_to_f64(&exact(&cfg(&[3, 1]), 2, Mode::R)) < 2.5);
        let m = bounds_upper_matched(&s, 2);
        let expected = (4.0 / 2f64.sqrt()) * (gamma(0.5) / 2.0 + 2.0 * gamma(1.0) / (2.0 * 2f64.sqrt()));
        assert!((m.k12_common.unwrap() - expected).abs() < 1e-12);
        assert!(m.r >= 2.5);
    }

    #[test]
    fn classical_matched_bound_window() {
        for mm in [10usize, 100, 1000] {
            let c = Configuration::classical(mm).unwrap();
            let e = expectation_exact(&c, r(2), Mode::R, DEFAULT_TOL).unwrap().to_f64();
            let root = (std::f64::consts::PI * mm as f64 / 2.0).sqrt();
            assert!(e - root > 0.0 && e - root < 1.0);
            let s = config_statistics(&c, r(2));
            assert!(bounds_upper_matched(&s, 1).r >= e);
        }
    }

    #[test]
    fn gap_constant_and_bound() {
        let c2 = gap_constant(r(2)).unwrap();
        assert!(c2 >= 2.0);
        let gb = gap_bound(&config_statistics(&cfg(&[2, 2]), r(2))).unwrap().unwrap();
        assert!((gb.bound - 2.0 * c2).abs() < 1e-12);
        assert!(gb.bound > 1.0);
        for n in [3usize, 8, 20] {
            let c = cfg(&[n]);
            let gap = exact(&c, 2, Mode::K2) - exact(&c, 2, Mode::K1);
            assert_eq!(gap, q(1, n as i64 - 1));
            let gb = gap_bound(&config_statistics(&c, r(2))).unwrap().unwrap();
            assert!(gb.bound > rational_to_f64(&gap));
        }
        assert!(gap_bound(&config_statistics(&cfg(&[1, 1]), r(2))).unwrap().is_none());
    }

    #[test]
    fn split_bound_examples() {
        let b = true_collision_split_bounds(&cfg(&[2, 2])).unwrap();
        assert_eq!((b.lower, b.upper), (q(1, 2), q(1, 2)));
        let b = true_collision_split_bounds(&cfg(&[3, 1])).unwrap();
        assert_eq!((b.lower, b.upper), (q(2, 5), q(1, 2)));
        let b = true_collision_split_bounds(&cfg(&[7])).unwrap();
        assert_eq!((b.lower, b.upper), (q(1, 7), q(1, 7)));
        assert!(true_collision_split_bounds(&cfg(&[1])).is_err());
    }

    #[test]
    fn le_rel_helper() {
        assert!(le_rel(1.0, 1.0 - 1e-15, 1e-12));
        assert!(!le_rel(1.1, 1.0, 1e-12));
    }
}
