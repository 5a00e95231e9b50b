use collision_lab::asymptotics::{classify_regime, limit_survival, LimitArgument, LimitModel, Regime};
use collision_lab::expectations::config_statistics;
use collision_lab::{CollisionOrder, Configuration, ExactPolicy, Mode, SurvivalTable};
use num_rational::BigRational;

fn r(k: usize) -> CollisionOrder {
    CollisionOrder::new(k).unwrap()
}

/// `sup_t |S(floor(scale t)) - L(t)|` for a step survival function `S` against a
/// continuous nonincreasing limit `L`; both ends of every step are checked.
fn sup_distance(s: &[f64], scale: f64, limit: impl Fn(f64) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, &v) in s.iter().enumerate() {
        let a = limit(k as f64 / scale);
        let b = limit((k + 1) as f64 / scale);
        worst = worst.max((v - a).abs()).max((v - b).abs());
    }
    // Beyond the table the exact survival is (numerically) zero.
    worst.max(limit(s.len() as f64 / scale))
}

fn float_table(c: &Configuration, rr: CollisionOrder, mode: Mode, k_max: usize) -> Vec<f64> {
    SurvivalTable::compute(c, rr, mode, k_max, ExactPolicy { max_exact_n: 0 }).unwrap().values_f64()
}

#[test]
fn classical_repetition_approaches_rayleigh() {
    let mut prev = f64::INFINITY;
    for m in [100, 1000, 10_000] {
        let c = Configuration::classical(m).unwrap();
        let s = float_table(&c, r(2), Mode::R, m + 1);
        let d = sup_distance(&s, (m as f64).sqrt(), |t| (-t * t / 2.0).exp());
        assert!(d < prev, "m={m}: {d} >= {prev}");
        prev = d;
    }
    assert!(prev < 0.05, "{prev}");
}

#[test]
fn two_regular_collisions_approach_rayleigh() {
    let mut prev = f64::INFINITY;
    for n in [200, 2000, 20_000] {
        let c = Configuration::regular(2, n / 2).unwrap();
        let stats = config_statistics(&c, r(2));
        let scale = stats.m_r_f64().unwrap().sqrt();
        let fit = classify_regime(&stats).unwrap();
        assert_eq!(fit.regime, Regime::Type2);
        let model = fit.without_replacement.unwrap().model;
        let s = float_table(&c, r(2), Mode::K1, n);
        let d = sup_distance(&s, scale, |t| limit_survival(&model, LimitArgument::Time(t)).unwrap());
        assert!(d < prev, "n={n}: {d} >= {prev}");
        prev = d;
    }
    assert!(prev < 0.05, "{prev}");
}

#[test]
fn single_pair_is_type_one() {
    let model = LimitModel::type1_k1(r(2), vec![2]).unwrap();
    let mut prev = f64::INFINITY;
    for n in [100, 1000, 10_000] {
        let mut sizes = vec![1; n - 2];
        sizes.push(2);
        let c = Configuration::new(sizes).unwrap();
        let s = float_table(&c, r(2), Mode::K1, n);
        let d = sup_distance(&s, n as f64, |t| limit_survival(&model, LimitArgument::Time(t)).unwrap());
        let closed = sup_distance(&s, n as f64, |t| (1.0 - t * t).max(0.0));
        assert!((d - closed).abs() < 1e-12);
        assert!(d < prev);
        prev = d;
    }
    assert!(prev < 0.05);
}

#[test]
fn few_large_cells_are_type_three() {
    let model =
        LimitModel::type3(r(2), vec![BigRational::new(1.into(), 4.into()), BigRational::new(3.into(), 4.into())])
            .unwrap();
    for n in [1000usize, 10_000] {
        let c = Configuration::new(vec![n / 4, 3 * n / 4]).unwrap();
        let fit = classify_regime(&config_statistics(&c, r(2))).unwrap();
        assert_eq!(fit.regime, Regime::Type3);
        let s = float_table(&c, r(2), Mode::K1, 4);
        for (k, exact) in s.iter().enumerate() {
            let l = limit_survival(&model, LimitArgument::Step(k)).unwrap();
            assert!((l - exact).abs() < 0.01, "n={n} k={k}");
        }
    }
}

#[test]
fn limit_laws_are_survival_functions() {
    let models = [
        LimitModel::type1_k1(r(3), vec![3, 5]).unwrap(),
        LimitModel::type1_k2(r(2), vec![2, 4]).unwrap(),
        LimitModel::type2_collision(r(3), vec![0.5, 0.3]).unwrap(),
        LimitModel::type2_repetition(r(2), vec![0.7]).unwrap(),
    ];
    for m in &models {
        let mut prev = 1.0;
        for i in 0..400 {
            let v = limit_survival(m, LimitArgument::Time(i as f64 * 0.025)).unwrap();
            assert!((0.0..=1.0).contains(&v) && v <= prev + 1e-15, "{}", m.name());
            prev = v;
        }
    }
}
