//! One function per subcommand. Each returns the JSON result and the CSV table
//! built from the same values.

use collision_lab::asymptotics::{classify_regime, limit_survival, time_scales, LimitArgument};
use collision_lab::battery::{
    bijection_identities, bound_sandwich, crossing_suite, inequality_suites, oracle_equivalence, ordering_suite,
    random_battery, standard_battery, SuiteReport, BATTERY_SEED,
};
use collision_lab::exact_dist::{survival_k1_multinomial, survival_k2_multinomial, SurvivalEntry};
use collision_lab::expectations::{
    config_statistics, expectation_bounds, expectation_exact, gap_bound, true_collision_split_bounds,
};
use collision_lab::kernels::rational_to_f64;
use collision_lab::measures::{balance_measures, concentration_check, random_mapping_moments};
use collision_lab::montecarlo::{simulate_two_stage, simulate_waiting_times};
use collision_lab::{CollisionOrder, Configuration, ExactPolicy, Mode, MultinomialModel, Scalar, SurvivalTable};
use serde_json::{json, Value};

use crate::output::{num, scalar_cells, Cell, Outcome, Table};
use crate::request::{AnalysisRequest, Battery, Command, Resolved};
use crate::CliError;

pub fn execute(req: &AnalysisRequest) -> Result<Outcome, CliError> {
    req.validate()?;
    if req.command == Command::Verify {
        return verify(req);
    }
    let source = req.config.as_ref().expect("validated");
    let resolved = source.resolve()?;
    let r = req.order()?;
    match (req.command, resolved) {
        (Command::Dist, Resolved::Fixed(c)) => dist(req, &c, r),
        (Command::Dist, Resolved::Multinomial(m)) => dist_multinomial(req, &m, r),
        (Command::Simulate, Resolved::Fixed(c)) => simulate(req, Some(&c), None, r),
        (Command::Simulate, Resolved::Multinomial(m)) => simulate(req, None, Some(&m), r),
        (Command::Expect, Resolved::Fixed(c)) => expect(req, &c, r),
        (Command::Bounds, Resolved::Fixed(c)) => bounds(req, &c, r),
        (Command::Limits, Resolved::Fixed(c)) => limits(req, &c, r),
        (Command::Measures, Resolved::Fixed(c)) => measures(&c, r),
        (cmd, _) => Err(CliError::Invalid(format!("{cmd} needs a fixed configuration"))),
    }
}

fn done(result: Value, table: Table) -> Result<Outcome, CliError> {
    Ok(Outcome { result, table, passed: true })
}

/// Covers the whole support of `K1` and `R`.
fn default_k_max(c: &Configuration, r: CollisionOrder) -> usize {
    (r.get() - 1) * c.occupied() + 1
}

fn survival_rows(table: &mut Table, t: &SurvivalTable) {
    for e in &t.entries {
        let [exact, value] = scalar_cells(&e.prob);
        table.push(vec![t.mode.to_string().into(), e.k.into(), exact, value]);
    }
}

const DIST_HEADER: &[&str] = &["mode", "k", "exact", "value"];

fn dist(req: &AnalysisRequest, c: &Configuration, r: CollisionOrder) -> Result<Outcome, CliError> {
    let k_max = req.k_max.unwrap_or_else(|| default_k_max(c, r));
    let mut table = Table::new(DIST_HEADER);
    let mut tables = Vec::new();
    for &mode in &req.modes {
        let t = SurvivalTable::compute(c, r, mode, k_max, ExactPolicy::default())?;
        survival_rows(&mut table, &t);
        tables.push(t);
    }
    done(json!({ "n": c.n(), "m": c.m(), "tables": tables }), table)
}

fn dist_multinomial(req: &AnalysisRequest, model: &MultinomialModel, r: CollisionOrder) -> Result<Outcome, CliError> {
    let k_max = req.k_max.unwrap_or(model.n());
    let mut table = Table::new(DIST_HEADER);
    let mut tables = Vec::new();
    for &mode in &req.modes {
        let f = match mode {
            Mode::K1 => survival_k1_multinomial,
            Mode::K2 => survival_k2_multinomial,
            Mode::R => return Err(CliError::Invalid("no exact multinomial law for R".into())),
        };
        let entries = (0..=k_max)
            .map(|k| Ok(SurvivalEntry { k, prob: Scalar::Exact(f(model, r, k)?) }))
            .collect::<Result<Vec<_>, CliError>>()?;
        let t = SurvivalTable { mode, r, exact: true, entries };
        survival_rows(&mut table, &t);
        tables.push(t);
    }
    done(json!({ "n": model.n(), "m": model.m(), "tables": tables }), table)
}

fn expect(req: &AnalysisRequest, c: &Configuration, r: CollisionOrder) -> Result<Outcome, CliError> {
    let mut table = Table::new(&["mode", "exact", "value", "error", "method"]);
    let mut out = Vec::new();
    for &mode in &req.modes {
        let e = expectation_exact(c, r, mode, req.tol)?;
        let [exact, value] = scalar_cells(&e.value);
        table.push(vec![mode.to_string().into(), exact, value, e.error.into(), e.method.into()]);
        out.push(e);
    }
    done(json!({ "n": c.n(), "m": c.m(), "expectations": out }), table)
}

fn bounds(req: &AnalysisRequest, c: &Configuration, r: CollisionOrder) -> Result<Outcome, CliError> {
    let stats = config_statistics(c, r);
    let mut table = Table::new(&["mode", "lower", "exact", "value", "upper_majorization", "upper_matched"]);
    let mut out = Vec::new();
    for &mode in &req.modes {
        let b = expectation_bounds(c, r, mode, req.tol)?;
        let e = expectation_exact(c, r, mode, req.tol)?;
        let [exact, value] = scalar_cells(&e.value);
        table.push(vec![
            mode.to_string().into(),
            Cell::opt(b.lower),
            exact,
            value,
            Cell::opt(b.upper_majorization),
            Cell::opt(b.upper_matched),
        ]);
        out.push(json!({ "bounds": b, "expectation": e }));
    }
    let gap = gap_bound(&stats)?;
    let split = if r.get() == 2 && c.n() >= 2 { Some(true_collision_split_bounds(c)?) } else { None };
    done(json!({ "statistics": stats, "modes": out, "gap": gap, "true_collision_split": split }), table)
}

fn limits(req: &AnalysisRequest, c: &Configuration, r: CollisionOrder) -> Result<Outcome, CliError> {
    let stats = config_statistics(c, r);
    let fit = classify_regime(&stats)?;
    let scales = time_scales(&stats);
    let mut table =
        Table::new(&["mode", "model", "scale", "type2_scale", "type2_scale_as_printed", "t", "k", "limit", "exact"]);
    let mut curves = Vec::new();
    for &mode in &req.modes {
        let (fitted, t2, t2_printed) = match mode {
            Mode::K1 => {
                (&fit.without_replacement, scales.type2_collision_scale, scales.type2_collision_scale_as_printed)
            }
            Mode::K2 => (&fit.with_replacement, scales.type2_collision_scale, scales.type2_collision_scale_as_printed),
            Mode::R => (
                &Some(fit.repetition.clone()),
                Some(scales.type2_repetition_scale),
                Some(scales.type2_repetition_scale_as_printed),
            ),
        };
        let fitted = fitted
            .as_ref()
            .ok_or_else(|| CliError::Invalid(format!("no {r}-collision is possible, so {mode} has no limit law")))?;
        let discrete = fitted.model.is_discrete();
        let grid = match &req.t_grid {
            Some(g) => g.clone(),
            None if discrete => (0..=default_k_max(c, r)).map(|k| k as f64).collect(),
            None => (0..=12).map(|i| i as f64 * 0.25).collect(),
        };
        let ks: Vec<usize> = grid.iter().map(|&t| (t * fitted.scale).floor() as usize).collect();
        let k_top = ks.iter().copied().max().unwrap_or(0);
        let exact = SurvivalTable::compute(c, r, mode, k_top, ExactPolicy { max_exact_n: 0 })?.values_f64();
        let mut points = Vec::with_capacity(grid.len());
        for (&t, &k) in grid.iter().zip(&ks) {
            let arg = if discrete { LimitArgument::Step(k) } else { LimitArgument::Time(t) };
            let lim = limit_survival(&fitted.model, arg)?;
            table.push(vec![
                mode.to_string().into(),
                fitted.model.name().into(),
                fitted.scale.into(),
                Cell::opt(t2),
                Cell::opt(t2_printed),
                t.into(),
                k.into(),
                lim.into(),
                exact[k].into(),
            ]);
            points.push(json!({ "t": num(t), "k": k, "limit": num(lim), "exact": num(exact[k]) }));
        }
        curves.push(json!({
            "mode": mode,
            "model": fitted.model.name(),
            "scale": num(fitted.scale),
            "points": points,
        }));
    }
    done(json!({ "regime": fit, "time_scales": scales, "curves": curves }), table)
}

fn simulate(
    req: &AnalysisRequest,
    config: Option<&Configuration>,
    model: Option<&MultinomialModel>,
    r: CollisionOrder,
) -> Result<Outcome, CliError> {
    let mut table = Table::new(&["mode", "k", "survival", "mean", "stderr"]);
    let mut reports = Vec::new();
    for &mode in &req.modes {
        let rep = match (config, model) {
            (Some(c), _) => simulate_waiting_times(c, r, mode, req.trials, req.seed)?,
            (None, Some(m)) => simulate_two_stage(m, r, mode, req.trials, req.seed)?,
            (None, None) => unreachable!("one source is always given"),
        };
        for &(k, p) in &rep.empirical_survival {
            table.push(vec![mode.to_string().into(), k.into(), p.into(), rep.mean.into(), rep.stderr.into()]);
        }
        reports.push(rep);
    }
    let kind = if model.is_some() { "two-stage" } else { "fixed" };
    done(json!({ "kind": kind, "simulations": reports }), table)
}

fn measures(c: &Configuration, r: CollisionOrder) -> Result<Outcome, CliError> {
    let bal = balance_measures(c, r)?;
    let mom = random_mapping_moments(c.n(), c.m(), r)?;
    let conc = concentration_check(c.n(), c.m(), r)?;
    let int_value = |s: String| s.parse::<f64>().unwrap_or(f64::NAN);
    let rows: Vec<(&str, Option<String>, Option<f64>)> = vec![
        ("t_chi2", Some(bal.t_chi2.to_string()), Some(rational_to_f64(&bal.t_chi2))),
        ("mu2", None, Some(bal.mu2)),
        ("mu2_from_chi2", None, Some(bal.mu2_from_chi2)),
        ("lambda_r", None, bal.lambda_r),
        ("m_eff", None, bal.m_eff),
        ("s_r", Some(bal.s_r.to_string()), Some(int_value(bal.s_r.to_string()))),
        ("s_tilde_r", Some(bal.s_tilde_r.to_string()), Some(rational_to_f64(&bal.s_tilde_r))),
        ("mapping_mean", Some(mom.mean.to_string()), Some(rational_to_f64(&mom.mean))),
        ("mapping_variance", Some(mom.variance.to_string()), Some(rational_to_f64(&mom.variance))),
        ("scaled_mean", Some(conc.scaled_mean.to_string()), Some(rational_to_f64(&conc.scaled_mean))),
        ("scaled_std", None, Some(conc.scaled_std)),
    ];
    let mut table = Table::new(&["quantity", "exact", "value"]);
    let mut quantities = serde_json::Map::new();
    for (name, exact, value) in rows {
        table.push(vec![name.into(), exact.clone().map_or(Cell::Empty, Cell::Text), Cell::opt(value)]);
        quantities.insert(name.to_string(), json!({ "exact": exact, "value": value.map(num) }));
    }
    done(json!({ "n": c.n(), "m": c.m(), "r": r, "quantities": quantities }), table)
}

fn verify(req: &AnalysisRequest) -> Result<Outcome, CliError> {
    let (n_max, battery) = match req.battery.unwrap_or(Battery::Small) {
        Battery::Small => (5, random_battery(40, 30, 10, BATTERY_SEED)),
        Battery::Standard => (6, standard_battery()),
    };
    let orders: Vec<CollisionOrder> = (3..=5).map(|r| CollisionOrder::new(r).expect("r >= 2")).collect();
    let mut suites: Vec<SuiteReport> = vec![
        oracle_equivalence(n_max)?,
        bijection_identities(n_max)?,
        ordering_suite(&battery)?,
        crossing_suite(&orders)?,
        bound_sandwich(&battery, req.tol)?,
    ];
    suites.extend(inequality_suites(&battery)?);
    let passed = suites.iter().all(SuiteReport::passed);
    let mut table = Table::new(&["suite", "checks", "violations", "passed"]);
    for s in &suites {
        table.push(vec![
            s.name.as_str().into(),
            s.checks.into(),
            s.violations.len().into(),
            if s.passed() { "true" } else { "false" }.into(),
        ]);
    }
    let result = json!({ "configurations": battery.len(), "suites": suites, "passed": passed });
    Ok(Outcome { result, table, passed })
}
