//! Limit laws of the scaled waiting times and the regime classification.

use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::config::{CollisionOrder, MultinomialModel};
use crate::error::{Error, Result};
use crate::exact_dist::survival_k1_multinomial;
use crate::expectations::ConfigStatistics;
use crate::kernels::{g_r_eval_unchecked, ln_q_r, rational_to_f64};
use crate::numeric::gamma;
use crate::report::{ser_opt_sig15, ser_rational_vec, ser_sig15};

/// One of the limiting survival functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "variant")]
pub enum LimitModel {
    /// `prod_i G_r(x_i, t)` for `t < 1`: `P(K1 > n t)` with finitely many collisions.
    Type1K1 { r: CollisionOrder, sizes: Vec<usize> },
    /// `prod_i G_r(x_i, 1 - e^-t)`: `P(K2 > n t)`.
    Type1K2 { r: CollisionOrder, sizes: Vec<usize> },
    /// `e^(-(1 - sum rho^r) t^r / r!) prod_i e^(-rho_i t) q_r(rho_i t)`.
    Type2Collision { r: CollisionOrder, rho: Vec<f64> },
    /// The analogue for repetitions, with `theta_i` in place of `rho_i`.
    Type2Repetition { r: CollisionOrder, theta: Vec<f64> },
    /// `k! [t^k] prod_i q_r(p_i t)`, unscaled.
    Type3Discrete {
        r: CollisionOrder,
        #[serde(serialize_with = "ser_rational_vec")]
        p: Vec<BigRational>,
    },
}

/// Argument of a limiting survival function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitArgument {
    Time(f64),
    Step(usize),
}

fn check_weights(name: &str, w: &[f64], r: CollisionOrder) -> Result<()> {
    if w.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidConfig(format!("every {name}_i must lie in [0, 1]")));
    }
    let total: f64 = w.iter().map(|v| v.powi(r.get() as i32)).sum();
    if total > 1.0 + 1e-9 {
        return Err(Error::InvalidConfig(format!("sum of {name}_i^r is {total} > 1")));
    }
    Ok(())
}

impl LimitModel {
    pub fn type1_k1(r: CollisionOrder, sizes: Vec<usize>) -> Result<Self> {
        Self::check_type1(r, &sizes)?;
        Ok(LimitModel::Type1K1 { r, sizes })
    }

    pub fn type1_k2(r: CollisionOrder, sizes: Vec<usize>) -> Result<Self> {
        Self::check_type1(r, &sizes)?;
        Ok(LimitModel::Type1K2 { r, sizes })
    }

    fn check_type1(r: CollisionOrder, sizes: &[usize]) -> Result<()> {
        if sizes.is_empty() || sizes.iter().any(|&x| x < r.get()) {
            return Err(Error::InvalidConfig("type-1 limit sizes must be non-empty and >= r".into()));
        }
        Ok(())
    }

    /// Weights are stored in decreasing order.
    pub fn type2_collision(r: CollisionOrder, mut rho: Vec<f64>) -> Result<Self> {
        check_weights("rho", &rho, r)?;
        rho.sort_by(|a, b| b.total_cmp(a));
        Ok(LimitModel::Type2Collision { r, rho })
    }

    /// Weights are stored in decreasing order.
    pub fn type2_repetition(r: CollisionOrder, mut theta: Vec<f64>) -> Result<Self> {
        check_weights("theta", &theta, r)?;
        theta.sort_by(|a, b| b.total_cmp(a));
        Ok(LimitModel::Type2Repetition { r, theta })
    }

    pub fn type3(r: CollisionOrder, p: Vec<BigRational>) -> Result<Self> {
        if p.iter().any(|x| x.is_negative()) || !p.iter().sum::<BigRational>().is_one() {
            return Err(Error::InvalidConfig("type-3 probabilities must be nonnegative and sum to 1".into()));
        }
        Ok(LimitModel::Type3Discrete { r, p })
    }

    pub fn r(&self) -> CollisionOrder {
        match self {
            LimitModel::Type1K1 { r, .. }
            | LimitModel::Type1K2 { r, .. }
            | LimitModel::Type2Collision { r, .. }
            | LimitModel::Type2Repetition { r, .. }
            | LimitModel::Type3Discrete { r, .. } => *r,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LimitModel::Type1K1 { .. } => "Type1_K1",
            LimitModel::Type1K2 { .. } => "Type1_K2",
            LimitModel::Type2Collision { .. } => "Type2_collision",
            LimitModel::Type2Repetition { .. } => "Type2_repetition",
            LimitModel::Type3Discrete { .. } => "Type3_discrete",
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, LimitModel::Type3Discrete { .. })
    }
}

fn weibull_mixture(r: CollisionOrder, w: &[f64], t: f64) -> f64 {
    let rr = r.get() as i32;
    let mass: f64 = w.iter().map(|v| v.powi(rr)).sum();
    let mut l = -(1.0 - mass).max(0.0) * t.powi(rr) / gamma(rr as f64 + 1.0);
    // Runs of equal weights share one evaluation.
    let mut i = 0;
    while i < w.len() {
        let v = w[i];
        let mut j = i + 1;
        while j < w.len() && w[j] == v {
            j += 1;
        }
        if v > 0.0 {
            l += (j - i) as f64 * (ln_q_r(v * t, r) - v * t);
        }
        i = j;
    }
    l.exp().clamp(0.0, 1.0)
}

/// Evaluates a limiting survival function.
pub fn limit_survival(model: &LimitModel, arg: LimitArgument) -> Result<f64> {
    match (model, arg) {
        (LimitModel::Type3Discrete { .. }, LimitArgument::Step(k)) => {
            Ok(rational_to_f64(&type3_survival_exact(model, k)?))
        }
        (LimitModel::Type3Discrete { .. }, LimitArgument::Time(_)) => {
            Err(Error::InvalidQuery("the type-3 limit is discrete; pass an integer step".into()))
        }
        (_, LimitArgument::Step(_)) => {
            Err(Error::InvalidQuery("continuous limit laws take a real time argument".into()))
        }
        (_, LimitArgument::Time(t)) if !(t >= 0.0) => Err(Error::Domain(format!("time must be nonnegative, got {t}"))),
        (LimitModel::Type1K1 { r, sizes }, LimitArgument::Time(t)) => {
            if t >= 1.0 {
                return Ok(0.0);
            }
            Ok(sizes.iter().map(|&x| g_r_eval_unchecked(x, *r, t)).product())
        }
        (LimitModel::Type1K2 { r, sizes }, LimitArgument::Time(t)) => {
            let p = -(-t).exp_m1();
            Ok(sizes.iter().map(|&x| g_r_eval_unchecked(x, *r, p)).product())
        }
        (LimitModel::Type2Collision { r, rho }, LimitArgument::Time(t)) => Ok(weibull_mixture(*r, rho, t)),
        (LimitModel::Type2Repetition { r, theta }, LimitArgument::Time(t)) => Ok(weibull_mixture(*r, theta, t)),
    }
}

/// Exact type-3 survival `k! [t^k] prod_i q_r(p_i t)`.
pub fn type3_survival_exact(model: &LimitModel, k: usize) -> Result<BigRational> {
    let LimitModel::Type3Discrete { r, p } = model else {
        return Err(Error::InvalidQuery("not a type-3 model".into()));
    };
    // Same coefficient as the multinomial K1 survival with n >= k.
    let mm = MultinomialModel::new(k.max(1), p.clone())?;
    survival_k1_multinomial(&mm, *r, k)
}

/// Characteristic time scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeScales {
    /// `n / s_r^(1/r) = (r! m_r)^(1/r)`.
    #[serde(serialize_with = "ser_opt_sig15")]
    pub collision_scale: Option<f64>,
    /// `n / s~_r^(1/r)`.
    #[serde(serialize_with = "ser_sig15")]
    pub repetition_scale: f64,
    /// Scale of the type-2 collision law, `m_r^(1/r)`.
    #[serde(serialize_with = "ser_opt_sig15")]
    pub type2_collision_scale: Option<f64>,
    /// `m_r^((r-1)/r)`, the commonly quoted exponent; agrees with the scale the
    /// exact survival follows only for `r = 2`.
    #[serde(serialize_with = "ser_opt_sig15")]
    pub type2_collision_scale_as_printed: Option<f64>,
    /// Scale of the type-2 repetition law, `m~_r^(1/r)`.
    #[serde(serialize_with = "ser_sig15")]
    pub type2_repetition_scale: f64,
    /// `m~_r^((r-1)/r)`, same caveat.
    #[serde(serialize_with = "ser_sig15")]
    pub type2_repetition_scale_as_printed: f64,
}

pub fn time_scales(stats: &ConfigStatistics) -> TimeScales {
    let rf = stats.r.get() as f64;
    let n = stats.n as f64;
    let s = stats.s_r_f64();
    let m_r = stats.m_r_f64();
    let m_t = stats.m_tilde_f64();
    TimeScales {
        collision_scale: (s > 0.0).then(|| n / s.powf(1.0 / rf)),
        repetition_scale: n / stats.s_tilde_f64().powf(1.0 / rf),
        type2_collision_scale: m_r.map(|m| m.powf(1.0 / rf)),
        type2_collision_scale_as_printed: m_r.map(|m| m.powf((rf - 1.0) / rf)),
        type2_repetition_scale: m_t.powf(1.0 / rf),
        type2_repetition_scale_as_printed: m_t.powf((rf - 1.0) / rf),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Type1,
    Type2,
    Type3,
    NoCollisions,
}

/// Heuristic cut-offs used by [`classify_regime`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeThresholds {
    pub sigma: f64,
    pub m: f64,
    pub share: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds { sigma: 8.0, m: 1000.0, share: 0.05 }
    }
}

/// A limit law together with the scale `c` such that `P(T > c t)` approximates it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedModel {
    pub model: LimitModel,
    #[serde(serialize_with = "ser_sig15")]
    pub scale: f64,
}

impl FittedModel {
    /// Approximate `P(T > k)` for the unscaled waiting time.
    pub fn survival_at(&self, k: usize) -> Result<f64> {
        if self.model.is_discrete() {
            limit_survival(&self.model, LimitArgument::Step(k))
        } else {
            limit_survival(&self.model, LimitArgument::Time(k as f64 / self.scale))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeFit {
    pub regime: Regime,
    pub thresholds: RegimeThresholds,
    #[serde(serialize_with = "ser_sig15")]
    pub s_r: f64,
    #[serde(serialize_with = "ser_opt_sig15")]
    pub m_r: Option<f64>,
    /// `max_i x_i / n`.
    #[serde(serialize_with = "ser_sig15")]
    pub max_share: f64,
    pub without_replacement: Option<FittedModel>,
    pub with_replacement: Option<FittedModel>,
    pub repetition: FittedModel,
}

/// Classifies the configuration into one of the limit regimes with default thresholds.
pub fn classify_regime(stats: &ConfigStatistics) -> Result<RegimeFit> {
    classify_regime_with(stats, RegimeThresholds::default())
}

pub fn classify_regime_with(stats: &ConfigStatistics, th: RegimeThresholds) -> Result<RegimeFit> {
    let r = stats.r;
    let n = stats.n;
    let s_r = stats.s_r_f64();
    let m_r = stats.m_r_f64();
    let max_share = stats.x_max() as f64 / n as f64;
    let scales = time_scales(stats);
    let repetition_type2 = FittedModel {
        model: LimitModel::type2_repetition(r, clamp_unit(&stats.theta, r))?,
        scale: scales.type2_repetition_scale,
    };
    let share_p = || -> Result<LimitModel> {
        let p = stats.sizes.iter().filter(|&&x| x > 0).map(|&x| BigRational::new(x.into(), n.into())).collect();
        LimitModel::type3(r, p)
    };
    let (regime, without, with, repetition) = match m_r {
        None => (Regime::NoCollisions, None, None, repetition_type2),
        Some(m) if s_r <= th.sigma && m > th.m => {
            let heavy = stats.heavy_sizes();
            (
                Regime::Type1,
                Some(FittedModel { model: LimitModel::type1_k1(r, heavy.clone())?, scale: n as f64 }),
                Some(FittedModel { model: LimitModel::type1_k2(r, heavy)?, scale: n as f64 }),
                repetition_type2,
            )
        }
        Some(m) if m <= th.m && max_share > th.share => {
            let model = share_p()?;
            let fitted = FittedModel { model, scale: 1.0 };
            (Regime::Type3, Some(fitted.clone()), Some(fitted.clone()), fitted)
        }
        Some(_) => {
            let rho = clamp_unit(stats.rho.as_deref().unwrap_or(&[]), r);
            let fitted = FittedModel {
                model: LimitModel::type2_collision(r, rho)?,
                scale: scales.type2_collision_scale.expect("s_r > 0 here"),
            };
            (Regime::Type2, Some(fitted.clone()), Some(fitted), repetition_type2)
        }
    };
    Ok(RegimeFit {
        regime,
        thresholds: th,
        s_r,
        m_r,
        max_share,
        without_replacement: without,
        with_replacement: with,
        repetition,
    })
}

/// Rounding can push `sum w_i^r` a hair above one; rescale if so.
fn clamp_unit(w: &[f64], r: CollisionOrder) -> Vec<f64> {
    let total: f64 = w.iter().map(|v| v.powi(r.get() as i32)).sum();
    let f = if total > 1.0 { total.powf(-1.0 / r.get() as f64) } else { 1.0 };
    w.iter().map(|v| (v * f).clamp(0.0, 1.0)).collect()
}
