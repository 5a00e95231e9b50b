//! Random mappings with a prescribed indegree sequence.
//!
//! A configuration `x` over `m` cells with `n` balls is turned into a self-map of
//! `{0..n-1}`: when `m < n` the sizes are padded with empty cells, and when `m > n`
//! the occupied cells are relabelled into `0..n-1`. The law of the cycle structure
//! does not depend on the labelling.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::kernels::binomial;
use crate::report::ser_rational_vec;

use super::sim::block_rng;

/// Largest number of distinct value sequences enumerated.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// Indegree sequence of a self-map of `{0..n-1}` with the configuration's sizes.
pub fn self_map_indegrees(config: &Configuration) -> Vec<usize> {
    let n = config.n();
    let mut sizes: Vec<usize> = if config.m() <= n {
        config.sizes().to_vec()
    } else {
        config.sizes().iter().copied().filter(|&x| x > 0).collect()
    };
    sizes.resize(n, 0);
    sizes
}

fn value_multiset(indeg: &[usize]) -> Vec<usize> {
    let mut v = Vec::with_capacity(indeg.iter().sum());
    for (i, &x) in indeg.iter().enumerate() {
        v.extend(std::iter::repeat_n(i, x));
    }
    v
}

/// Number of points lying on a cycle of `f`.
pub fn cyclic_points(f: &[usize]) -> usize {
    let n = f.len();
    // 0 unvisited, 1 on the current path, 2 finished.
    let mut state = vec![0u8; n];
    let mut count = 0;
    let mut path = Vec::new();
    for start in 0..n {
        let mut x = start;
        while state[x] == 0 {
            state[x] = 1;
            path.push(x);
            x = f[x];
        }
        if state[x] == 1 {
            // Closed a new cycle through x.
            let mut y = x;
            loop {
                count += 1;
                y = f[y];
                if y == x {
                    break;
                }
            }
        }
        for p in path.drain(..) {
            state[p] = 2;
        }
    }
    count
}

/// Number of distinct points in the orbit `x, f(x), f(f(x)), ...`.
pub fn rho_length(f: &[usize], x: usize) -> usize {
    let mut seen = vec![false; f.len()];
    let mut y = x;
    let mut len = 0;
    while !seen[y] {
        seen[y] = true;
        len += 1;
        y = f[y];
    }
    len
}

/// `rho_length` for every start point, in `O(n)` total.
fn rho_lengths(f: &[usize]) -> Vec<usize> {
    let n = f.len();
    let mut rho = vec![0usize; n];
    let mut pos = vec![usize::MAX; n];
    let mut path = Vec::new();
    for start in 0..n {
        if rho[start] != 0 {
            continue;
        }
        let mut x = start;
        while rho[x] == 0 && pos[x] == usize::MAX {
            pos[x] = path.len();
            path.push(x);
            x = f[x];
        }
        let mut base = if rho[x] != 0 {
            rho[x]
        } else {
            // Cycle found: every point on it has rho equal to the cycle length.
            let cyc = path.len() - pos[x];
            for &p in &path[pos[x]..] {
                rho[p] = cyc;
            }
            path.truncate(pos[x]);
            cyc
        };
        for &p in path.iter().rev() {
            base += 1;
            rho[p] = base;
        }
        for p in path.drain(..) {
            pos[p] = usize::MAX;
        }
    }
    rho
}

/// Exact laws of the number of cyclic points and of the rho-length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedIndegreeDistribution {
    /// `z[j] = P(Z = j)` for a uniform mapping with the given indegrees.
    #[serde(serialize_with = "ser_rational_vec")]
    pub z: Vec<BigRational>,
    /// `rho[j] = P(rho = j)` for a uniform pair of start point and mapping.
    #[serde(serialize_with = "ser_rational_vec")]
    pub rho: Vec<BigRational>,
    pub mappings: u64,
}

fn tail(pmf: &[BigRational], k: usize) -> BigRational {
    pmf.iter().skip(k + 1).fold(BigRational::zero(), |a, p| a + p)
}

impl FixedIndegreeDistribution {
    /// `P(Z > k)`.
    pub fn z_survival(&self, k: usize) -> BigRational {
        tail(&self.z, k)
    }

    /// `P(rho > k)`.
    pub fn rho_survival(&self, k: usize) -> BigRational {
        tail(&self.rho, k)
    }
}

fn multinomial_count(sizes: &[usize]) -> BigInt {
    let mut total = 0usize;
    let mut out = BigInt::from(1);
    for &x in sizes {
        total += x;
        out *= binomial(total, x);
    }
    out
}

/// Enumerates every mapping with the configuration's indegree sequence.
pub fn enumerate_fixed_indegree(config: &Configuration) -> Result<FixedIndegreeDistribution> {
    let count = multinomial_count(config.sizes());
    if count > BigInt::from(ENUMERATION_LIMIT) {
        return Err(Error::Resource(format!("{count} mappings exceed the enumeration limit of {ENUMERATION_LIMIT}")));
    }
    let n = config.n();
    let mut f = value_multiset(&self_map_indegrees(config));
    let mut z = vec![0u64; n + 1];
    let mut rho = vec![0u64; n + 1];
    let mut mappings = 0u64;
    loop {
        mappings += 1;
        z[cyclic_points(&f)] += 1;
        for l in rho_lengths(&f) {
            rho[l] += 1;
        }
        if !next_permutation(&mut f) {
            break;
        }
    }
    let zden = BigInt::from(mappings);
    let rden = BigInt::from(mappings) * n;
    Ok(FixedIndegreeDistribution {
        z: z.into_iter().map(|c| BigRational::new(c.into(), zden.clone())).collect(),
        rho: rho.into_iter().map(|c| BigRational::new(c.into(), rden.clone())).collect(),
        mappings,
    })
}

/// Lexicographic successor; returns false after the last arrangement.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// A uniform mapping with the configuration's indegrees, as its value list.
pub fn sample_fixed_indegree(config: &Configuration, seed: u64) -> Vec<usize> {
    let mut f = value_multiset(&self_map_indegrees(config));
    f.shuffle(&mut block_rng(seed, 0));
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(v: &[usize]) -> Configuration {
        Configuration::new(v.to_vec()).unwrap()
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn small_example() {
        let d = enumerate_fixed_indegree(&cfg(&[2, 1, 0])).unwrap();
        assert_eq!(d.mappings, 3);
        assert_eq!(d.z_survival(1), q(2, 3));
        assert_eq!(d.rho_survival(1), q(2, 3));
    }

    #[test]
    fn constant_map() {
        let d = enumerate_fixed_indegree(&cfg(&[4, 0, 0, 0])).unwrap();
        assert_eq!(d.z[1], q(1, 1));
        assert_eq!(sample_fixed_indegree(&cfg(&[5]), 3), vec![0; 5]);
    }

    #[test]
    fn permutation_sample() {
        let mut f = sample_fixed_indegree(&Configuration::classical(9).unwrap(), 11);
        f.sort();
        assert_eq!(f, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn rho_helpers_agree() {
        let f = vec![1, 2, 0, 0, 3, 5, 4];
        let all = rho_lengths(&f);
        for x in 0..f.len() {
            assert_eq!(all[x], rho_length(&f, x));
        }
        assert_eq!(cyclic_points(&f), 4);
        assert_eq!(all, vec![3, 3, 3, 4, 5, 1, 6]);
    }

    #[test]
    fn relabels_wide_codomain() {
        let c = cfg(&[0, 2, 0, 0, 1]);
        assert_eq!(self_map_indegrees(&c), vec![2, 1, 0]);
        let d = enumerate_fixed_indegree(&c).unwrap();
        assert_eq!(d.z_survival(1), q(2, 3));
    }

    #[test]
    fn guard() {
        assert!(matches!(enumerate_fixed_indegree(&Configuration::classical(11).unwrap()), Err(Error::Resource(_))));
    }
}
