//! Asymptotic expansions and limit laws.

mod limits;
mod series;

pub use limits::{
    classify_regime, classify_regime_with, limit_survival, time_scales, type3_survival_exact, FittedModel,
    LimitArgument, LimitModel, Regime, RegimeFit, RegimeThresholds, TimeScales,
};
pub use series::{classical_er_series, reversion_coefficients, stored_coefficients, AsymptoticSeries};
