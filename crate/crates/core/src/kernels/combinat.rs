use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Largest `k` for which surjection numbers are memoized by default.
pub const DEFAULT_SURJECTION_CAP: usize = 2000;

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `(n)_k = n (n-1) ... (n-k+1)`.
pub fn falling_factorial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    (0..k).fold(BigInt::one(), |acc, i| acc * (n - i))
}

/// Rows `Sur(k, 0..=k)` of the surjection numbers, grown on demand.
fn surjection_table() -> &'static RwLock<Vec<Vec<BigInt>>> {
    static TABLE: OnceLock<RwLock<Vec<Vec<BigInt>>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(vec![vec![BigInt::one()]]))
}

/// Number of onto maps from a `k`-set to a `d`-set, `d! * S(k, d)`.
pub fn surjection_count(k: usize, d: usize) -> Result<BigInt> {
    surjection_count_capped(k, d, DEFAULT_SURJECTION_CAP)
}

pub fn surjection_count_capped(k: usize, d: usize, cap: usize) -> Result<BigInt> {
    if d > k {
        return Ok(BigInt::zero());
    }
    if k > cap {
        return Err(Error::Resource(format!("surjection table limited to k <= {cap}, requested k = {k}")));
    }
    {
        let table = surjection_table().read().expect("surjection table poisoned");
        if let Some(row) = table.get(k) {
            return Ok(row[d].clone());
        }
    }
    let mut table = surjection_table().write().expect("surjection table poisoned");
    while table.len() <= k {
        let next = next_surjection_row(table.last().expect("table starts non-empty"));
        table.push(next);
    }
    Ok(table[k][d].clone())
}

/// `Sur(k, d) = d (Sur(k-1, d) + Sur(k-1, d-1))`.
fn next_surjection_row(prev: &[BigInt]) -> Vec<BigInt> {
    let k = prev.len();
    let mut row = Vec::with_capacity(k + 1);
    row.push(BigInt::zero());
    for d in 1..=k {
        let mut v = prev[d - 1].clone();
        if d < prev.len() {
            v += &prev[d];
        }
        row.push(v * d);
    }
    row
}

/// Streams the rows `Sur(k, 0..=k)` for `k = 0, 1, 2, ...` without memoizing them.
#[derive(Debug, Clone, Default)]
pub struct SurjectionRows {
    current: Option<Vec<BigInt>>,
}

impl SurjectionRows {
    pub fn new() -> Self {
        SurjectionRows::default()
    }
}

impl Iterator for SurjectionRows {
    type Item = Vec<BigInt>;
    fn next(&mut self) -> Option<Vec<BigInt>> {
        let next = match &self.current {
            None => vec![BigInt::one()],
            Some(prev) => next_surjection_row(prev),
        };
        self.current = Some(next.clone());
        Some(next)
    }
}

/// `[Sym_0, ..., Sym_{k_max}]` of the given values; `Sym_0 = 1`.
pub fn elementary_symmetric(values: &[usize], k_max: usize) -> Vec<BigRational> {
    let mut e = vec![BigInt::zero(); k_max + 1];
    e[0] = BigInt::one();
    for (count, &v) in values.iter().enumerate() {
        let v = BigInt::from(v);
        for k in (1..=(count + 1).min(k_max)).rev() {
            let add = &e[k - 1] * &v;
            e[k] += add;
        }
    }
    e.into_iter().map(BigRational::from_integer).collect()
}

pub fn elementary_symmetric_rational(values: &[BigRational], k_max: usize) -> Vec<BigRational> {
    let mut e = vec![BigRational::zero(); k_max + 1];
    e[0] = BigRational::one();
    for (count, v) in values.iter().enumerate() {
        for k in (1..=(count + 1).min(k_max)).rev() {
            let add = &e[k - 1] * v;
            e[k] += add;
        }
    }
    e
}

/// Distribution of the number of distinct points hit by `k` uniform draws
/// (with replacement) from an `n`-set: `P(I = d) = C(n, d) Sur(k, d) / n^k`.
pub fn image_cardinality_pmf(k: usize, n: usize) -> Result<Vec<BigRational>> {
    if k == 0 || n == 0 {
        return Err(Error::Domain("image_cardinality_pmf needs k >= 1 and n >= 1".into()));
    }
    let denom = num_traits::pow(BigInt::from(n), k);
    (0..=k.min(n))
        .map(|d| {
            let num = binomial(n, d) * surjection_count(k, d)?;
            Ok(BigRational::new(num, denom.clone()))
        })
        .collect()
}
