//! Inequalities between binomial tails, truncated exponentials and their products.

use collision_lab::battery::{
    binomial_lower_tail_suite, log_tail_power_suite, standard_battery, tail_product_suite, truncated_exponential_suite,
    SuiteReport,
};

fn assert_clean(rep: SuiteReport, min_checks: u64) {
    assert!(rep.passed(), "{}: {:?}", rep.name, rep.violations);
    assert!(rep.checks >= min_checks, "{}: only {} checks", rep.name, rep.checks);
}

#[test]
fn binomial_lower_tail_dominates_product() {
    assert_clean(binomial_lower_tail_suite().unwrap(), 60_000);
}

#[test]
fn log_tail_bounded_by_power() {
    assert_clean(log_tail_power_suite(), 300_000);
}

#[test]
fn truncated_exponential_bound() {
    assert_clean(truncated_exponential_suite(), 7_000);
}

#[test]
fn product_of_tails_bounded_by_single_weibull_factor() {
    assert_clean(tail_product_suite(&standard_battery(), false), 200_000);
}

#[test]
fn product_of_tails_bounded_with_unscaled_exponential() {
    // Weaker than the scaled form because d / s_r >= r.
    assert_clean(tail_product_suite(&standard_battery(), true), 200_000);
}
