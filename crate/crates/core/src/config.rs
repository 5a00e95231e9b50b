//! Domain types shared by every layer: the collision order, the preimage-size
//! configuration of a finite function, and the multinomial random-mapping model.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The multiplicity `r` of the collision being waited for (`r >= 2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct CollisionOrder(usize);

impl CollisionOrder {
    pub fn new(r: usize) -> Result<Self> {
        if r < 2 {
            return Err(Error::InvalidOrder(r));
        }
        Ok(CollisionOrder(r))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for CollisionOrder {
    type Error = Error;
    fn try_from(r: usize) -> Result<Self> {
        CollisionOrder::new(r)
    }
}

impl From<CollisionOrder> for usize {
    fn from(r: CollisionOrder) -> usize {
        r.0
    }
}

impl fmt::Display for CollisionOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which waiting time is meant.
///
/// * `K1`: first `r` distinct balls of one colour, drawing without replacement.
/// * `K2`: first `r` distinct balls of one colour, drawing with replacement.
/// * `R`: first colour drawn `r` times, drawing with replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    K1,
    K2,
    R,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::K1, Mode::K2, Mode::R];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::K1 => "K1",
            Mode::K2 => "K2",
            Mode::R => "R",
        };
        f.write_str(s)
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "K1" => Ok(Mode::K1),
            "K2" => Ok(Mode::K2),
            "R" => Ok(Mode::R),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

/// Preimage sizes `(x_1, ..., x_m)` of an `(n, m)`-function.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Configuration {
    sizes: Vec<usize>,
    n: usize,
}

impl Configuration {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidConfig("configuration needs at least one cell".into()));
        }
        let n = sizes
            .iter()
            .try_fold(0usize, |acc, &x| acc.checked_add(x))
            .ok_or_else(|| Error::InvalidConfig("total size overflows".into()))?;
        if n == 0 {
            return Err(Error::InvalidConfig("configuration must contain at least one ball".into()));
        }
        Ok(Configuration { sizes, n })
    }

    /// The classical birthday configuration: `m` cells holding one ball each.
    pub fn classical(m: usize) -> Result<Self> {
        Configuration::new(vec![1; m])
    }

    /// `m` cells of `c` balls each.
    pub fn regular(c: usize, m: usize) -> Result<Self> {
        Configuration::new(vec![c; m])
    }

    #[inline]
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Domain size `n = sum x_i`.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Codomain size `m` (number of cells, empty ones included).
    #[inline]
    pub fn m(&self) -> usize {
        self.sizes.len()
    }

    pub fn max_size(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    /// Number of occupied cells.
    pub fn occupied(&self) -> usize {
        self.sizes.iter().filter(|&&x| x > 0).count()
    }

    /// True if some cell can host an `r`-collision.
    pub fn admits_collision(&self, r: CollisionOrder) -> bool {
        self.sizes.iter().any(|&x| x >= r.get())
    }

    pub(crate) fn require_collision(&self, r: CollisionOrder) -> Result<()> {
        if self.admits_collision(r) {
            Ok(())
        } else {
            Err(Error::InvalidQuery(format!("no cell has at least {r} balls, so the {r}-collision time is infinite")))
        }
    }

    /// Nonzero sizes grouped by value: `size -> multiplicity`.
    pub fn grouped(&self) -> BTreeMap<usize, usize> {
        let mut groups = BTreeMap::new();
        for &x in self.sizes.iter().filter(|&&x| x > 0) {
            *groups.entry(x).or_insert(0) += 1;
        }
        groups
    }

    /// Sizes sorted in decreasing order with empty cells dropped.
    pub fn canonical(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.sizes.iter().copied().filter(|&x| x > 0).collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }

    /// Copy with one ball moved from cell `from` to cell `to`.
    pub fn transfer(&self, from: usize, to: usize) -> Result<Self> {
        if from >= self.m() || to >= self.m() || self.sizes[from] == 0 {
            return Err(Error::InvalidConfig(format!("cannot move a ball from cell {from} to {to}")));
        }
        let mut sizes = self.sizes.clone();
        sizes[from] -= 1;
        sizes[to] += 1;
        Configuration::new(sizes)
    }
}

impl TryFrom<Vec<usize>> for Configuration {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Configuration::new(v)
    }
}

impl From<Configuration> for Vec<usize> {
    fn from(c: Configuration) -> Vec<usize> {
        c.sizes
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sizes.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A multinomial random `(n, m)`-mapping: every domain point independently
/// lands in cell `i` with probability `p_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultinomialModel {
    n: usize,
    probs: Vec<BigRational>,
}

impl MultinomialModel {
    pub fn new(n: usize, probs: Vec<BigRational>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("multinomial model needs n >= 1".into()));
        }
        if probs.is_empty() {
            return Err(Error::InvalidConfig("multinomial model needs at least one cell".into()));
        }
        if probs.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidConfig("cell probabilities must be nonnegative".into()));
        }
        let total: BigRational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidConfig(format!("cell probabilities sum to {total}, not 1")));
        }
        Ok(MultinomialModel { n, probs })
    }

    /// Uniform model over `m` cells.
    pub fn uniform(n: usize, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("multinomial model needs at least one cell".into()));
        }
        let p = BigRational::new(BigInt::one(), BigInt::from(m));
        MultinomialModel::new(n, vec![p; m])
    }

    /// The model with `p_i = x_i / n` matching a fixed configuration.
    pub fn from_configuration(config: &Configuration) -> Self {
        let n = BigInt::from(config.n());
        let probs = config.sizes().iter().map(|&x| BigRational::new(BigInt::from(x), n.clone())).collect();
        MultinomialModel { n: config.n(), probs }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn probs_f64(&self) -> Vec<f64> {
        self.probs.iter().map(crate::kernels::rational_to_f64).collect()
    }

    pub(crate) fn nonzero(&self) -> impl Iterator<Item = &BigRational> {
        self.probs.iter().filter(|p| !p.is_zero())
    }
}

/// Parses `"a/b"`, `"a"` or a plain decimal like `"0.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidConfig(format!("cannot parse {s:?} as a rational"));
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let s = s.replace(',', ".");
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10u32), frac.len());
        return Ok(BigRational::new(digits, scale));
    }
    let v: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(v))
}
