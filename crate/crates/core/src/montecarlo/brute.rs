//! Exhaustive enumeration of draw sequences on tiny instances.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::config::{CollisionOrder, Configuration, Mode};
use crate::error::{Error, Result};
use crate::exact_dist::{Scalar, SurvivalEntry, SurvivalTable};

/// Largest number of ordered draw sequences the enumeration will visit.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

fn sequence_count(n: usize, k: usize, with_replacement: bool) -> u128 {
    let mut total: u128 = 1;
    for i in 0..k {
        let f = if with_replacement { n } else { n.saturating_sub(i) } as u128;
        if f == 0 {
            break;
        }
        total = total.saturating_mul(f);
        if total > BRUTE_FORCE_LIMIT {
            return total;
        }
    }
    total
}

struct Walk<'a> {
    colour: &'a [usize],
    r: u32,
    mode: Mode,
    k_max: usize,
    used: Vec<bool>,
    distinct: Vec<u32>,
    draws: Vec<u32>,
    survivors: Vec<u64>,
}

impl Walk<'_> {
    fn dfs(&mut self, depth: usize) {
        self.survivors[depth] += 1;
        if depth == self.k_max {
            return;
        }
        for j in 0..self.colour.len() {
            if self.mode == Mode::K1 && self.used[j] {
                continue;
            }
            let c = self.colour[j];
            let fresh = !self.used[j];
            self.draws[c] += 1;
            if fresh {
                self.distinct[c] += 1;
                self.used[j] = true;
            }
            let hit = match self.mode {
                Mode::K1 | Mode::K2 => self.distinct[c] >= self.r,
                Mode::R => self.draws[c] >= self.r,
            };
            if !hit {
                self.dfs(depth + 1);
            }
            self.draws[c] -= 1;
            if fresh {
                self.distinct[c] -= 1;
                self.used[j] = false;
            }
        }
    }
}

/// Exact survival probabilities by visiting every equiprobable ordered draw sequence.
pub fn brute_force_survival(
    config: &Configuration,
    r: CollisionOrder,
    mode: Mode,
    k_max: usize,
) -> Result<SurvivalTable> {
    if mode != Mode::R {
        config.require_collision(r)?;
    }
    let n = config.n();
    let with_replacement = mode != Mode::K1;
    let depth = if with_replacement { k_max } else { k_max.min(n) };
    let count = sequence_count(n, depth, with_replacement);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::Resource(format!(
            "brute force over {count} draw sequences exceeds the limit of {BRUTE_FORCE_LIMIT}"
        )));
    }
    let mut colour = Vec::with_capacity(n);
    for (c, &x) in config.sizes().iter().enumerate() {
        colour.extend(std::iter::repeat_n(c, x));
    }
    let mut walk = Walk {
        colour: &colour,
        r: r.get() as u32,
        mode,
        k_max: depth,
        used: vec![false; n],
        distinct: vec![0; config.m()],
        draws: vec![0; config.m()],
        survivors: vec![0; depth + 1],
    };
    walk.dfs(0);
    let entries = (0..=k_max)
        .map(|k| {
            let prob = if k > depth {
                BigRational::from_integer(BigInt::from(0))
            } else {
                let total = sequence_count(n, k, with_replacement);
                BigRational::new(BigInt::from(walk.survivors[k]), BigInt::from(total))
            };
            SurvivalEntry { k, prob: Scalar::Exact(prob) }
        })
        .collect();
    Ok(SurvivalTable { mode, r, exact: true, entries })
}
