use num_rational::BigRational;
use num_traits::One;

use crate::config::CollisionOrder;
use crate::error::{Error, Result};

/// Above this preimage size `G_r` is summed in the log domain.
pub const G_R_LOG_CROSSOVER: usize = 1000;

/// `q_r(a) = sum_{i<r} a^i / i!`, the Poisson(a) probability of fewer than `r` events times `e^a`.
pub fn q_r_eval(a: f64, r: CollisionOrder) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..r.get() {
        term *= a / i as f64;
        sum += term;
    }
    sum
}

pub fn q_r_exact(a: &BigRational, r: CollisionOrder) -> BigRational {
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for i in 1..r.get() {
        term = term * a / BigRational::from_integer(i.into());
        sum += &term;
    }
    sum
}

/// `ln q_r(a)`, stable for large `a`.
pub fn ln_q_r(a: f64, r: CollisionOrder) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let r = r.get();
    if a < 100.0 && r <= 60 {
        return q_r_eval_raw(a, r).ln();
    }
    // The largest term a^i / i! sits at i = min(r-1, floor(a)).
    let la = a.ln();
    let peak = (r - 1).min(a.floor() as usize);
    let log_term = |i: usize| i as f64 * la - crate::numeric::ln_gamma(i as f64 + 1.0);
    let top = log_term(peak);
    // Walk away from the peak in both directions with term ratios.
    let mut sum = 1.0;
    let mut t = 1.0;
    for i in (0..peak).rev() {
        t *= (i + 1) as f64 / a;
        sum += t;
        if t < 1e-18 * sum {
            break;
        }
    }
    t = 1.0;
    for i in peak + 1..r {
        t *= a / i as f64;
        sum += t;
        if t < 1e-18 * sum {
            break;
        }
    }
    top + sum.ln()
}

fn q_r_eval_raw(a: f64, r: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..r {
        term *= a / i as f64;
        sum += term;
    }
    sum
}

/// `G_r(x, t) = P(Binomial(x, t) <= r - 1)`.
pub fn g_r_eval(x: usize, r: CollisionOrder, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("G_r needs t in [0, 1], got {t}")));
    }
    Ok(g_r_eval_unchecked(x, r, t))
}

/// [`g_r_eval`] for a `t` already known to lie in `[0, 1]`.
pub fn g_r_eval_unchecked(x: usize, r: CollisionOrder, t: f64) -> f64 {
    let r = r.get();
    if x < r || t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    if x > G_R_LOG_CROSSOVER {
        return ln_g_r_inner(x, r, t).exp();
    }
    // term_i = C(x, i) t^i (1-t)^(x-i), built up from term_0 = (1-t)^x.
    let s = 1.0 - t;
    let ratio = t / s;
    let mut term = s.powi(x as i32);
    if term == 0.0 {
        return ln_g_r_inner(x, r, t).exp();
    }
    let mut sum = term;
    for i in 0..r - 1 {
        term *= (x - i) as f64 / (i + 1) as f64 * ratio;
        sum += term;
    }
    sum.min(1.0)
}

/// `ln G_r(x, t)`; `-inf` at `t = 1` whenever `x >= r`.
pub fn ln_g_r(x: usize, r: CollisionOrder, t: f64) -> f64 {
    let r = r.get();
    if x < r || t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return f64::NEG_INFINITY;
    }
    ln_g_r_inner(x, r, t)
}

fn ln_g_r_inner(x: usize, r: usize, t: f64) -> f64 {
    let lt = t.ln();
    let ls = (-t).ln_1p();
    let mut log_binom = 0.0;
    let terms: Vec<f64> = (0..r)
        .map(|i| {
            if i > 0 {
                log_binom += ((x - i + 1) as f64 / i as f64).ln();
            }
            log_binom + i as f64 * lt + (x - i) as f64 * ls
        })
        .collect();
    log_sum_exp(&terms).min(0.0)
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(k: usize) -> CollisionOrder {
        CollisionOrder::new(k).unwrap()
    }

    #[test]
    fn q_r_examples() {
        assert_eq!(q_r_eval(1.0, r(2)), 2.0);
        assert_eq!(q_r_eval(0.0, r(7)), 1.0);
        assert_eq!(q_r_eval(2.0, r(3)), 5.0);
        let two = BigRational::from_integer(2.into());
        assert_eq!(q_r_exact(&two, r(3)), BigRational::from_integer(5.into()));
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(q_r_exact(&third, r(3)), BigRational::new(25.into(), 18.into()));
    }

    #[test]
    fn ln_q_r_agrees_with_direct_evaluation() {
        for &a in &[0.0, 0.3, 2.0, 17.5, 99.0, 100.0, 150.5, 300.0] {
            for rr in [2, 3, 4, 6, 20, 61, 100, 140] {
                let d = q_r_eval(a, r(rr)).ln();
                assert!((ln_q_r(a, r(rr)) - d).abs() < 1e-12 * d.abs().max(1.0), "a={a} r={rr}");
            }
        }
        // Past overflow of the direct sum: for r > a the sum is nearly e^a.
        assert!((ln_q_r(900.0, r(2000)) - 900.0).abs() < 1e-9);
    }

    #[test]
    fn g_r_examples() {
        assert!((g_r_eval(2, r(2), 0.5).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(g_r_eval(1, r(2), 0.9).unwrap(), 1.0);
        assert_eq!(g_r_eval(2, r(2), 1.0).unwrap(), 0.0);
        assert!(matches!(g_r_eval(2, r(2), 1.5), Err(Error::Domain(_))));
        assert!(g_r_eval(2, r(2), -0.1).is_err());
    }

    #[test]
    fn g_r_log_and_direct_forms_agree() {
        for &x in &[3usize, 40, 999, 1001, 5000] {
            for &t in &[1e-4, 0.01, 0.2, 0.7] {
                for rr in 2..6 {
                    let direct = g_r_eval(x, r(rr), t).unwrap();
                    let logd = ln_g_r(x, r(rr), t).exp();
                    let tol = 1e-12 * direct.max(1e-300);
                    assert!((direct - logd).abs() <= tol, "x={x} t={t} r={rr}: {direct} vs {logd}");
                }
            }
        }
    }

    #[test]
    fn g_r_is_monotone() {
        for x in [2usize, 5, 12, 30, 1500] {
            for rr in 2..5 {
                let mut prev = 1.0;
                for i in 0..=100 {
                    let t = i as f64 / 100.0;
                    let g = g_r_eval(x, r(rr), t).unwrap();
                    assert!(g <= prev + 1e-15, "x={x} r={rr} t={t}");
                    assert!(g <= g_r_eval(x, r(rr + 1), t).unwrap() + 1e-15);
                    prev = g;
                }
            }
        }
    }
}
