//! Configuration batteries and the cross-validation suites run over them.

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{CollisionOrder, Configuration, Mode};
use crate::error::Result;
use crate::exact_dist::{ExactPolicy, SurvivalTable};
use crate::expectations::{
    bounds_lower, bounds_upper_majorization, bounds_upper_matched, config_statistics, expectation_exact,
    expectation_quadrature, gap_bound, le_rel,
};
use crate::montecarlo::{brute_force_survival, enumerate_fixed_indegree};

mod inequalities;

pub use inequalities::{
    binomial_lower_tail_suite, inequality_suites, log_tail_power_suite, tail_product_suite, truncated_exponential_suite,
};

/// Seed of the standard random battery.
pub const BATTERY_SEED: u64 = 20_240_601;

/// All partitions of `n` into at most `parts` positive parts, largest first.
pub fn partitions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, max: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        if parts == 0 {
            return;
        }
        for x in (1..=max.min(n)).rev() {
            cur.push(x);
            go(n - x, x, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, parts, &mut Vec::new(), &mut out);
    out
}

/// Every configuration with `1 <= n <= n_max` and at most `parts` cells.
pub fn small_configurations(n_max: usize, parts: usize) -> Vec<Configuration> {
    (1..=n_max)
        .flat_map(|n| partitions(n, parts))
        .map(|p| Configuration::new(p).expect("partition is a valid configuration"))
        .collect()
}

/// `count` seeded configurations with `n <= n_max`, `m <= m_max`, alternating
/// `r = 2, 3`, each admitting an `r`-collision. Cell weights are cubed uniforms so
/// that both balanced and lopsided configurations occur.
pub fn random_battery(count: usize, n_max: usize, m_max: usize, seed: u64) -> Vec<(Configuration, CollisionOrder)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let r = CollisionOrder::new(2 + out.len() % 2).expect("r >= 2");
        let m = rng.random_range(1..=m_max);
        let n = rng.random_range(r.get()..=n_max);
        let w: Vec<f64> = (0..m).map(|_| rng.random::<f64>().powi(3) + 1e-3).collect();
        let total: f64 = w.iter().sum();
        let mut sizes = vec![0usize; m];
        for _ in 0..n {
            let mut u = rng.random::<f64>() * total;
            let mut i = 0;
            while i + 1 < m && u >= w[i] {
                u -= w[i];
                i += 1;
            }
            sizes[i] += 1;
        }
        let c = Configuration::new(sizes).expect("nonempty");
        if c.admits_collision(r) {
            out.push((c, r));
        }
    }
    out
}

/// The standard battery: 200 configurations, `n <= 60`, `m <= 20`.
pub fn standard_battery() -> Vec<(Configuration, CollisionOrder)> {
    random_battery(200, 60, 20, BATTERY_SEED)
}

/// Outcome of one verification suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: u64,
    pub violations: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport { name: name.to_string(), checks: 0, violations: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok && self.violations.len() < 20 {
            self.violations.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn orders() -> [CollisionOrder; 2] {
    [CollisionOrder::new(2).expect("2"), CollisionOrder::new(3).expect("3")]
}

fn exact_values(t: &SurvivalTable) -> Vec<BigRational> {
    t.values_exact().expect("exact table")
}

/// Exact survival against exhaustive enumeration for every small configuration,
/// `r in {2, 3}`, all modes and `k <= n + 2`.
pub fn oracle_equivalence(n_max: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("exact survival equals brute-force enumeration");
    for c in small_configurations(n_max, 4) {
        for r in orders() {
            for mode in Mode::ALL {
                if mode != Mode::R && !c.admits_collision(r) {
                    continue;
                }
                let k_max = c.n() + 2;
                let exact = exact_values(&SurvivalTable::compute(&c, r, mode, k_max, ExactPolicy::default())?);
                let brute = exact_values(&brute_force_survival(&c, r, mode, k_max)?);
                rep.check(exact == brute, || format!("{c} r={r} {mode}"));
            }
        }
    }
    Ok(rep)
}

/// Cyclic points and rho-lengths of fixed-indegree mappings against the
/// without-replacement collision time for `r = 2`.
pub fn bijection_identities(n_max: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("cyclic points and rho-length identities");
    let r = orders()[0];
    for c in small_configurations(n_max, 4) {
        let n = c.n();
        let d = enumerate_fixed_indegree(&c)?;
        if !c.admits_collision(r) {
            // A permutation: every point is cyclic.
            rep.check(d.z_survival(n - 1) == BigRational::from_integer(1.into()), || format!("{c} permutation"));
            continue;
        }
        let k1 = exact_values(&SurvivalTable::compute(&c, r, Mode::K1, n + 1, ExactPolicy::default())?);
        for k in 0..=n {
            rep.check(d.z_survival(k) == k1[k + 1], || format!("{c} Z k={k}"));
            let scaled = BigRational::new((n - k).into(), n.into()) * &k1[k];
            rep.check(d.rho_survival(k) == scaled, || format!("{c} rho k={k}"));
        }
    }
    Ok(rep)
}

fn table(c: &Configuration, r: CollisionOrder, mode: Mode, k_max: usize) -> Result<Vec<BigRational>> {
    Ok(exact_values(&SurvivalTable::compute(c, r, mode, k_max, ExactPolicy::default())?))
}

fn dominates(a: &[BigRational], b: &[BigRational]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// Pointwise survival orderings between the waiting times and the transfer
/// monotonicity over configurations.
pub fn ordering_suite(battery: &[(Configuration, CollisionOrder)]) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("survival orderings and transfer monotonicity");
    for (c, r) in battery {
        let (c, r) = (c, *r);
        let rr = r.get();
        let k_max = 2 * c.n() + 2;
        let k1 = table(c, r, Mode::K1, k_max)?;
        let k2 = table(c, r, Mode::K2, k_max)?;
        let rt = table(c, r, Mode::R, k_max)?;
        rep.check(dominates(&k2, &k1), || format!("{c} r={r}: K2 >= K1"));
        rep.check(dominates(&k2, &rt), || format!("{c} r={r}: K2 >= R"));
        if rr == 2 {
            rep.check(dominates(&k1, &rt), || format!("{c} r={r}: K1 >= R"));
        }
        let sizes = c.sizes();
        // Collision times: move a ball from the largest cell to the smallest heavy one.
        let (lo, hi) = extreme_cells(sizes, rr);
        if sizes[lo] + 1 < sizes[hi] {
            let moved = c.transfer(hi, lo)?;
            for mode in [Mode::K1, Mode::K2] {
                let after = table(&moved, r, mode, k_max)?;
                let before = if mode == Mode::K1 { &k1 } else { &k2 };
                rep.check(dominates(&after, before), || format!("{c} -> {moved} r={r} {mode}"));
            }
        }
        // Repetition time: the same with any pair, and averaging the pair.
        let (lo, hi) = extreme_cells(sizes, 0);
        if sizes[lo] + 1 < sizes[hi] {
            let moved = c.transfer(hi, lo)?;
            rep.check(dominates(&table(&moved, r, Mode::R, k_max)?, &rt), || format!("{c} -> {moved} r={r} R"));
            let sum = sizes[lo] + sizes[hi];
            if sum % 2 == 0 {
                let mut avg = sizes.to_vec();
                avg[lo] = sum / 2;
                avg[hi] = sum / 2;
                let avg = Configuration::new(avg)?;
                rep.check(dominates(&table(&avg, r, Mode::R, k_max)?, &rt), || format!("{c} -> {avg} r={r} R avg"));
            }
        }
    }
    Ok(rep)
}

/// Index of the smallest cell with size `>= floor` and of the largest cell.
fn extreme_cells(sizes: &[usize], floor: usize) -> (usize, usize) {
    let hi = (0..sizes.len()).max_by_key(|&i| (sizes[i], usize::MAX - i)).expect("nonempty");
    let lo = (0..sizes.len()).filter(|&i| sizes[i] >= floor).min_by_key(|&i| (sizes[i], i)).unwrap_or(hi);
    (lo, hi)
}

/// The configurations `(1, r)` where `K1` and `R` cross: returns
/// `(P(K1 > r), P(R > r), P(K1 > r+1), P(R > r+1))`.
pub fn crossing_example(r: CollisionOrder) -> Result<[BigRational; 4]> {
    let c = Configuration::new(vec![1, r.get()])?;
    let rr = r.get();
    let k1 = table(&c, r, Mode::K1, rr + 1)?;
    let rt = table(&c, r, Mode::R, rr + 1)?;
    Ok([k1[rr].clone(), rt[rr].clone(), k1[rr + 1].clone(), rt[rr + 1].clone()])
}

/// Checks both strict reversals of [`crossing_example`] for every `r` given.
pub fn crossing_suite(orders: &[CollisionOrder]) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("K1 and R cross for (1, r)");
    for &r in orders {
        let [k1_r, r_r, k1_next, r_next] = crossing_example(r)?;
        rep.check(k1_r > r_r, || format!("r={r}: P(K1>r) = {k1_r} <= P(R>r) = {r_r}"));
        rep.check(k1_next < r_next, || format!("r={r}: P(K1>r+1) = {k1_next} >= P(R>r+1) = {r_next}"));
    }
    Ok(rep)
}

/// Lower and upper bounds around the exact expectations, plus the gap bound.
pub fn bound_sandwich(battery: &[(Configuration, CollisionOrder)], tol: f64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("expectation bounds and gap");
    let slack = 1e-9;
    for (c, r) in battery {
        let stats = config_statistics(c, *r);
        let lower = bounds_lower(&stats);
        let matched = bounds_upper_matched(&stats, stats.x_max());
        let major = bounds_upper_majorization(&stats, tol)?;
        let e1 = expectation_exact(c, *r, Mode::K1, tol)?.to_f64();
        let e2 = expectation_exact(c, *r, Mode::K2, tol)?.to_f64();
        let er = expectation_exact(c, *r, Mode::R, tol)?.to_f64();
        let up = matched.k12_common.expect("collision admitted");
        let tag = || format!("{c} r={r}");
        rep.check(le_rel(lower.k1_beta.expect("s_r >= 1"), e1, slack), || format!("{} K1 lower", tag()));
        rep.check(le_rel(lower.k2.expect("s_r >= 1"), e2, slack), || format!("{} K2 lower", tag()));
        rep.check(le_rel(lower.r, er, slack), || format!("{} R lower", tag()));
        rep.check(le_rel(e1, up, slack) && le_rel(e2, up, slack), || format!("{} K matched", tag()));
        rep.check(le_rel(er, matched.r, slack), || format!("{} R matched", tag()));
        rep.check(le_rel(er, major.r, slack), || format!("{} R majorization", tag()));
        rep.check(le_rel(e1, e2, slack), || format!("{} E K1 <= E K2", tag()));
        let gap = gap_bound(&stats)?.expect("s_r >= 1");
        rep.check(e2 - e1 < gap.bound, || format!("{} gap {} >= {}", tag(), e2 - e1, gap.bound));
        for (mode, exact) in [(Mode::K1, e1), (Mode::K2, e2), (Mode::R, er)] {
            let q = expectation_quadrature(c, *r, mode, tol)?;
            rep.check((q.value - exact).abs() <= 10.0 * tol * exact.max(1.0), || {
                format!("{} {mode} quadrature {} vs {exact}", tag(), q.value)
            });
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (1..=6).map(|n| partitions(n, 4).len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 6, 9]);
    }

    #[test]
    fn battery_is_seeded() {
        let a = random_battery(30, 60, 20, 7);
        assert_eq!(a, random_battery(30, 60, 20, 7));
        for (c, r) in &a {
            assert!(c.admits_collision(*r) && c.n() <= 60 && c.m() <= 20);
        }
    }

    #[test]
    fn suites_pass_on_small_inputs() {
        assert!(oracle_equivalence(4).unwrap().passed());
        assert!(bijection_identities(4).unwrap().passed());
        let b = random_battery(6, 20, 6, 1);
        let o = ordering_suite(&b).unwrap();
        assert!(o.passed(), "{:?}", o.violations);
        let s = bound_sandwich(&b, 1e-10).unwrap();
        assert!(s.passed(), "{:?}", s.violations);
    }
}
