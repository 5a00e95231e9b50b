//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use collision_lab::asymptotics::{classical_er_series, reversion_coefficients, stored_coefficients};
use collision_lab::battery::{
    bijection_identities, bound_sandwich, crossing_suite, inequality_suites, oracle_equivalence, ordering_suite,
    standard_battery, SuiteReport,
};
use collision_lab::exact_dist::{prob_true_collision_first_exact, survival};
use collision_lab::expectations::{config_statistics, expectation_exact};
use collision_lab::measures::{concentration_check, random_mapping_moments};
use collision_lab::montecarlo::{brute_force_survival, simulate_waiting_times};
use collision_lab::{parse_rational, CollisionOrder, Configuration, ExactPolicy, Mode, SurvivalTable};
use collision_lab_cli::request::parse_decimal;
use serde_json::Value;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn r(k: usize) -> CollisionOrder {
    CollisionOrder::new(k).unwrap()
}

macro_rules! q {
    ($s:expr) => {
        parse_rational($s).unwrap()
    };
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {:.1} s, limit {} s", t.as_secs_f64(), limit.as_secs()))
}

fn suites(reports: &[SuiteReport]) -> Check {
    let mut checks = 0;
    for rep in reports {
        ensure(rep.passed(), || format!("{}: {:?}", rep.name, rep.violations))?;
        ensure(rep.checks > 0, || format!("{}: no checks ran", rep.name))?;
        checks += rep.checks;
    }
    Ok(format!("{checks} checks over {} suites", reports.len()))
}

fn classical_expectation_cli() -> Check {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_collision-lab"))
        .args(["expect", "--classical", "365", "--r", "3", "--mode", "R"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(out.status.success(), || format!("exit status {:?}", out.status.code()))?;
    let doc: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let v = doc["result"]["expectations"][0]["value"]["value"].as_f64().ok_or("no value in report")?;
    let published = parse_decimal("88,73891").map_err(|e| e.to_string())?;
    ensure((v - published).abs() < 5e-5, || format!("E(R_3) = {v}"))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {:?}", elapsed))?;
    Ok(format!("E(R_3) = {v} in {:.2} s", elapsed.as_secs_f64()))
}

fn asymptotic_series() -> Check {
    let one = classical_er_series(365, r(3), 1).map_err(|e| e.to_string())?;
    let three = classical_er_series(365, r(3), 3).map_err(|e| e.to_string())?;
    ensure((one - 82.87442).abs() < 5e-5, || format!("one term: {one}"))?;
    ensure((three - 88.72504).abs() < 5e-5, || format!("three terms: {three}"))?;
    let printed: [(usize, [&str; 5]); 4] = [
        (2, ["1", "2/3", "1/12", "-2/135", "1/864"]),
        (3, ["1", "1/2", "21/80", "7/240", "83/13440"]),
        (4, ["1", "2/5", "17/100", "194/2625", "271/42000"]),
        (5, ["1", "1/3", "5/42", "11/252", "515/31752"]),
    ];
    for (rr, coeffs) in printed {
        let want: Vec<_> = coeffs.iter().map(|s| q!(s)).collect();
        let stored = stored_coefficients(r(rr)).ok_or("missing stored coefficients")?;
        ensure(stored == want, || format!("stored r={rr}: {stored:?}"))?;
        let recomputed = reversion_coefficients(r(rr), 5);
        ensure(recomputed == want, || format!("reversion r={rr}: {recomputed:?}"))?;
    }
    Ok(format!("{one:.5} and {three:.5}; coefficients for r = 2..5 match"))
}

fn classical_window() -> Check {
    let start = Instant::now();
    let (lo, hi) = (2.0 / 3.0, 2.0 - (std::f64::consts::PI / 2.0).sqrt());
    let mut diffs = Vec::new();
    for m in [256usize, 4096, 65536] {
        let c = Configuration::classical(m).unwrap();
        let e = expectation_exact(&c, r(2), Mode::R, 1e-12).map_err(|e| e.to_string())?;
        let d = e.to_f64() - (std::f64::consts::PI * m as f64 / 2.0).sqrt();
        ensure(d > lo && d <= hi, || format!("m={m}: E - sqrt(pi m/2) = {d}"))?;
        diffs.push(format!("{m}: {d:.6} ({})", e.method));
    }
    within(start, Duration::from_secs(10))?;
    Ok(diffs.join(", "))
}

/// `P(R < K)` for `(2, 2)`, `r = 2`, by listing all 4^3 draw sequences: the first
/// repeated colour appears by the third draw.
fn repetition_first_by_enumeration() -> (u32, u32) {
    let colour = [0, 0, 1, 1];
    let mut hits = 0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let seq = [a, b, c];
                'find: for j in 1..3 {
                    for i in 0..j {
                        if colour[seq[i]] == colour[seq[j]] {
                            hits += (seq[i] == seq[j]) as u32;
                            break 'find;
                        }
                    }
                }
            }
        }
    }
    (hits, 64)
}

fn hand_values() -> Check {
    let c = Configuration::new(vec![2, 2]).unwrap();
    let r2 = r(2);
    let err = |e: collision_lab::Error| e.to_string();
    for (mode, s2, mean) in [(Mode::K1, "2/3", "8/3"), (Mode::K2, "3/4", "11/3"), (Mode::R, "1/2", "5/2")] {
        let got = survival(&c, r2, mode, 2).map_err(err)?;
        ensure(got == q!(s2), || format!("{mode}: P(T>2) = {got}"))?;
        let e = expectation_exact(&c, r2, mode, 1e-12).map_err(err)?;
        ensure(e.value.exact() == Some(&q!(mean)), || format!("{mode}: E = {}", e.value))?;
        let table = SurvivalTable::compute(&c, r2, mode, 6, ExactPolicy::default()).map_err(err)?;
        let brute = brute_force_survival(&c, r2, mode, 6).map_err(err)?;
        ensure(table.values_exact() == brute.values_exact(), || format!("{mode}: brute force differs"))?;
        ensure(brute.values_exact().unwrap()[2] == q!(s2), || format!("{mode}: brute-force P(T>2)"))?;
    }
    let split = q!("1") - prob_true_collision_first_exact(&c, r2).map_err(err)?;
    ensure(split == q!("1/2"), || format!("P(R<K) = {split}"))?;
    let (hits, total) = repetition_first_by_enumeration();
    ensure(q!(&format!("{hits}/{total}")) == split, || format!("enumerated P(R<K) = {hits}/{total}"))?;
    Ok("survival, expectations and P(R<K) = 1/2 match exactly".into())
}

fn oracle() -> Check {
    let start = Instant::now();
    let detail = suites(&[oracle_equivalence(6).map_err(|e| e.to_string())?])?;
    within(start, Duration::from_secs(60))?;
    Ok(format!("{detail} in {:.1} s", start.elapsed().as_secs_f64()))
}

fn bijection() -> Check {
    suites(&[bijection_identities(6).map_err(|e| e.to_string())?])
}

fn orderings() -> Check {
    let battery = standard_battery();
    ensure(battery.len() == 200, || format!("battery has {} configurations", battery.len()))?;
    let orders: Vec<_> = (3..=5).map(r).collect();
    suites(&[ordering_suite(&battery).map_err(|e| e.to_string())?, crossing_suite(&orders).map_err(|e| e.to_string())?])
}

fn sandwich() -> Check {
    suites(&[bound_sandwich(&standard_battery(), 1e-10).map_err(|e| e.to_string())?])
}

fn monte_carlo() -> Check {
    let trials = 100_000;
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    for (i, (c, rr)) in standard_battery().into_iter().take(20).enumerate() {
        for mode in Mode::ALL {
            let rep = simulate_waiting_times(&c, rr, mode, trials, i as u64).map_err(|e| e.to_string())?;
            let k_max = rep.empirical_survival.len() + 2;
            let exact = SurvivalTable::compute(&c, rr, mode, k_max, ExactPolicy::default())
                .map_err(|e| e.to_string())?
                .values_f64();
            for (k, &p) in exact.iter().enumerate() {
                let se = (p * (1.0 - p) / trials as f64).sqrt();
                let dev = (rep.survival_at(k) - p).abs();
                ensure(dev <= 4.0 * se + 1e-12, || format!("{c} r={rr} {mode} k={k}: {} vs {p}", rep.survival_at(k)))?;
                if se > 0.0 {
                    worst = worst.max(dev / se);
                }
                compared += 1;
            }
            let mean = expectation_exact(&c, rr, mode, 1e-10).map_err(|e| e.to_string())?.to_f64();
            let dev = (rep.mean - mean).abs();
            // A degenerate waiting time has zero spread and must be hit exactly.
            let ok = if rep.stderr > 0.0 { dev <= 4.0 * rep.stderr } else { dev <= 1e-12 * mean };
            ensure(ok, || format!("{c} r={rr} {mode}: mean {} +- {} vs {mean}", rep.mean, rep.stderr))?;
            if rep.stderr > 0.0 {
                worst = worst.max(dev / rep.stderr);
            }
            compared += 1;
        }
    }
    let (c, rr) = standard_battery().swap_remove(0);
    for mode in Mode::ALL {
        let a = simulate_waiting_times(&c, rr, mode, 20_000, 99).map_err(|e| e.to_string())?;
        let b = simulate_waiting_times(&c, rr, mode, 20_000, 99).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{mode}: repeated run differs"))?;
    }
    Ok(format!("{compared} comparisons, largest deviation {worst:.2} standard errors; reruns identical"))
}

/// `sup_t |S(floor(scale t)) - L(t)|`, checking both ends of every step.
fn sup_distance(s: &[f64], scale: f64, limit: impl Fn(f64) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, &v) in s.iter().enumerate() {
        worst = worst.max((v - limit(k as f64 / scale)).abs()).max((v - limit((k + 1) as f64 / scale)).abs());
    }
    worst.max(limit(s.len() as f64 / scale))
}

fn ladder(name: &str, rungs: &[(usize, Vec<f64>, f64)], limit: impl Fn(f64) -> f64) -> Result<String, String> {
    let d: Vec<f64> = rungs.iter().map(|(_, s, scale)| sup_distance(s, *scale, &limit)).collect();
    ensure(d.windows(2).all(|w| w[1] < w[0]), || format!("{name}: not decreasing {d:?}"))?;
    ensure(*d.last().unwrap() < 0.05, || format!("{name}: top rung {}", d.last().unwrap()))?;
    let parts: Vec<String> = rungs.iter().zip(&d).map(|((n, _, _), d)| format!("{n}:{d:.4}")).collect();
    Ok(format!("{name} [{}]", parts.join(" ")))
}

fn limits() -> Check {
    let start = Instant::now();
    let table = |c: &Configuration, mode: Mode, k_max: usize| {
        SurvivalTable::compute(c, r(2), mode, k_max, ExactPolicy { max_exact_n: 0 }).unwrap().values_f64()
    };
    let rayleigh = |t: f64| (-t * t / 2.0).exp();
    let mut out = Vec::new();

    let rungs: Vec<_> = [100, 1000, 10_000]
        .into_iter()
        .map(|m| {
            let c = Configuration::classical(m).unwrap();
            (m, table(&c, Mode::R, m + 1), (m as f64).sqrt())
        })
        .collect();
    out.push(ladder("classical R", &rungs, rayleigh)?);

    for mode in [Mode::K1, Mode::K2] {
        let rungs: Vec<_> = [200, 2000, 20_000]
            .into_iter()
            .map(|n| {
                let c = Configuration::regular(2, n / 2).unwrap();
                let scale = config_statistics(&c, r(2)).m_r_f64().unwrap().sqrt();
                // K2 has unbounded support; 12 scale units leave a tail below 1e-30.
                (n, table(&c, mode, (12.0 * scale) as usize), scale)
            })
            .collect();
        out.push(ladder(&format!("2-regular {mode}"), &rungs, rayleigh)?);
    }

    let rungs: Vec<_> = [100, 1000, 10_000]
        .into_iter()
        .map(|n| {
            let mut sizes = vec![1; n - 2];
            sizes.push(2);
            let c = Configuration::new(sizes).unwrap();
            (n, table(&c, Mode::K1, n), n as f64)
        })
        .collect();
    out.push(ladder("one pair K1", &rungs, |t| (1.0 - t * t).max(0.0))?);

    within(start, Duration::from_secs(120))?;
    Ok(out.join("; "))
}

fn inequalities() -> Check {
    suites(&inequality_suites(&standard_battery()).map_err(|e| e.to_string())?)
}

fn small_binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn moments() -> Check {
    for (n, m) in [(4usize, 2usize), (5, 2), (6, 3), (8, 2)] {
        for rr in 2..=3 {
            let total = (m as u128).pow(n as u32);
            let (mut s1, mut s2) = (0u128, 0u128);
            let mut counts = vec![0usize; m];
            for code in 0..total {
                counts.iter_mut().for_each(|c| *c = 0);
                let mut x = code;
                for _ in 0..n {
                    counts[(x % m as u128) as usize] += 1;
                    x /= m as u128;
                }
                let s: u128 = counts.iter().map(|&c| small_binomial(c, rr)).sum();
                s1 += s;
                s2 += s * s;
            }
            let mom = random_mapping_moments(n, m, r(rr)).map_err(|e| e.to_string())?;
            let mean = q!(&format!("{s1}/{total}"));
            let var = q!(&format!("{}/{}", total * s2 - s1 * s1, total * total));
            ensure(mom.mean == mean, || format!("({n},{m}) r={rr}: mean {} vs {mean}", mom.mean))?;
            ensure(mom.variance == var, || format!("({n},{m}) r={rr}: variance {} vs {var}", mom.variance))?;
        }
    }
    let mut detail = Vec::new();
    for rr in 2..=3 {
        let stds: Vec<f64> = (2..=4)
            .map(|j| concentration_check(10usize.pow(j), 10usize.pow(j - 1), r(rr)).map(|c| c.scaled_std))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ensure(stds.windows(2).all(|w| w[1] < w[0]), || format!("r={rr}: scaled_std {stds:?}"))?;
        detail.push(format!("r={rr} std {stds:.3?}"));
    }
    Ok(format!("moments match enumeration; {}", detail.join(", ")))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("classical r=3 expectation from the command line", classical_expectation_cli),
        ("asymptotic series values and coefficients", asymptotic_series),
        ("classical r=2 window", classical_window),
        ("hand values for (2,2)", hand_values),
        ("exact survival equals enumeration, n <= 6", oracle),
        ("cyclic-point and rho-length identities", bijection),
        ("orderings, transfers and the (1,r) crossing", orderings),
        ("bound sandwich and gap", sandwich),
        ("Monte Carlo agreement", monte_carlo),
        ("limit ladders", limits),
        ("tail inequality grids", inequalities),
        ("random-mapping moments and concentration", moments),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
