//! Grid checks of the tail inequalities behind the bounds.
//!
//! Small tails are summed directly instead of as `1 - (lower part)`, so a bound
//! that holds is not reported as violated through cancellation.

use num_rational::BigRational;

use crate::config::{CollisionOrder, Configuration};
use crate::error::Result;
use crate::expectations::config_statistics;
use crate::kernels::{binomial, g_r_eval, ln_q_r, rational_to_f64};

use super::SuiteReport;

/// Relative slack for floating-point comparisons.
const REL: f64 = 1e-12;

fn order(r: usize) -> CollisionOrder {
    CollisionOrder::new(r).expect("r >= 2")
}

fn binom_f64(n: usize, k: usize) -> f64 {
    rational_to_f64(&BigRational::from_integer(binomial(n, k)))
}

/// `ln G_r(x, 1 - e^-s) = -x s + ln p_r(x, e^s - 1)`, summed in logs.
pub(crate) fn ln_g_of_s(x: usize, r: usize, s: f64) -> f64 {
    if x < r {
        return 0.0;
    }
    let lu = s.exp_m1().ln();
    let mut terms = Vec::with_capacity(r);
    let mut lc = 0.0;
    for i in 0..r {
        if i > 0 {
            lc += ((x - i + 1) as f64 / i as f64).ln();
        }
        terms.push(lc + i as f64 * lu);
    }
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    -(x as f64) * s + top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// `P(Binomial(x, 1 - e^-s) >= r)`.
fn binomial_upper_tail(x: usize, r: usize, s: f64) -> f64 {
    let lp = (-(-s).exp_m1()).ln();
    let mut total = 0.0;
    let mut lc = binom_f64(x, r).ln();
    for i in r..=x {
        if i > r {
            lc += ((x - i + 1) as f64 / i as f64).ln();
        }
        total += (lc + i as f64 * lp - (x - i) as f64 * s).exp();
    }
    total
}

/// `-ln G_r(x, 1 - e^-s)`.
fn neg_ln_g(x: usize, r: usize, s: f64) -> f64 {
    let tail = binomial_upper_tail(x, r, s);
    if tail < 0.5 {
        -(-tail).ln_1p()
    } else {
        -ln_g_of_s(x, r, s)
    }
}

/// `P(Poisson(s) >= r)`.
fn poisson_upper_tail(r: usize, s: f64) -> f64 {
    let mut term = (-s).exp();
    for i in 1..=r {
        term *= s / i as f64;
    }
    let mut total = 0.0;
    let mut i = r;
    while term > 1e-30 * total || i < r + 5 {
        total += term;
        i += 1;
        term *= s / i as f64;
    }
    total
}

/// `G_r(n, p) >= (1 - p^r)^C(n, r)` for `3 <= n <= 40`, `2 <= r < n`, `p = 0.01..0.99`.
pub fn binomial_lower_tail_suite() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("binomial lower tail dominates the product bound");
    for n in 3..=40 {
        for r in 2..n {
            let c = binom_f64(n, r);
            for j in 1..=99 {
                let p = j as f64 / 100.0;
                let lhs = g_r_eval(n, order(r), p)?.ln();
                let rhs = c * (-p.powi(r as i32)).ln_1p();
                rep.check(lhs >= rhs - REL * rhs.abs().max(1.0), || format!("n={n} r={r} p={p}: {lhs} < {rhs}"));
            }
        }
    }
    Ok(rep)
}

/// `-ln G_r(n, 1 - e^-s) <= C(n, r) s^r` for `3 <= n <= 40`, `2 <= r < n`, `s = 0.01..5`.
pub fn log_tail_power_suite() -> SuiteReport {
    let mut rep = SuiteReport::new("log binomial tail bounded by C(n,r) s^r");
    for n in 3..=40 {
        for r in 2..n {
            let c = binom_f64(n, r);
            for j in 1..=500 {
                let s = j as f64 / 100.0;
                let lhs = neg_ln_g(n, r, s);
                let rhs = c * s.powi(r as i32);
                rep.check(lhs <= rhs * (1.0 + REL), || format!("n={n} r={r} s={s}: {lhs} > {rhs}"));
            }
        }
    }
    rep
}

/// `s - ln q_r(s) <= s^r / r!` for `2 <= r <= 8`, `s = 0.01..10`.
pub fn truncated_exponential_suite() -> SuiteReport {
    let mut rep = SuiteReport::new("truncated exponential bounded by s^r / r!");
    for r in 2..=8 {
        let fact: f64 = (1..=r).map(|i| i as f64).product();
        for j in 1..=1000 {
            let s = j as f64 / 100.0;
            let tail = poisson_upper_tail(r, s);
            let lhs = if tail < 0.5 { -(-tail).ln_1p() } else { s - ln_q_r(s, order(r)) };
            let rhs = s.powi(r as i32) / fact;
            rep.check(lhs <= rhs * (1.0 + REL), || format!("r={r} s={s}: {lhs} > {rhs}"));
        }
    }
    rep
}

/// `prod_i G_r(x_i, 1 - e^-t) <= [q_r(d t / s_r) e^-u]^(r s_r^(r+1) / d^r)` on the battery,
/// `t = 0.01..10`, with `u = d t / s_r` or, in the weaker form, `u = t`.
pub fn tail_product_suite(battery: &[(Configuration, CollisionOrder)], unscaled_exponential: bool) -> SuiteReport {
    let name = if unscaled_exponential {
        "product of tails bounded with e^-t"
    } else {
        "product of tails bounded by one Weibull-type factor"
    };
    let mut rep = SuiteReport::new(name);
    for (c, r) in battery {
        let stats = config_statistics(c, *r);
        let s = stats.s_r_f64();
        let d = rational_to_f64(&BigRational::from_integer(stats.d.clone()));
        let k = r.get() as f64;
        let exponent = k * s.powf(k + 1.0) / d.powf(k);
        for j in 1..=1000 {
            let t = j as f64 / 100.0;
            let lhs: f64 = c.sizes().iter().map(|&x| ln_g_of_s(x, r.get(), t)).sum();
            let u = d * t / s;
            let e = if unscaled_exponential { t } else { u };
            let rhs = exponent * (ln_q_r(u, *r) - e);
            rep.check(lhs <= rhs + REL * rhs.abs().max(1.0), || format!("{c} r={r} t={t}: {lhs} > {rhs}"));
        }
    }
    rep
}

/// All inequality suites on the given battery.
pub fn inequality_suites(battery: &[(Configuration, CollisionOrder)]) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        binomial_lower_tail_suite()?,
        log_tail_power_suite(),
        truncated_exponential_suite(),
        tail_product_suite(battery, false),
        tail_product_suite(battery, true),
    ])
}
