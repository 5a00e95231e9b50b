//! The request document: everything needed to rerun an analysis.

use std::fmt;

use collision_lab::expectations::DEFAULT_TOL;
use collision_lab::{parse_rational, CollisionOrder, Configuration, Mode, MultinomialModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Dist,
    Expect,
    Bounds,
    Limits,
    Simulate,
    Measures,
    Verify,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Dist => "dist",
            Command::Expect => "expect",
            Command::Bounds => "bounds",
            Command::Limits => "limits",
            Command::Simulate => "simulate",
            Command::Measures => "measures",
            Command::Verify => "verify",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Battery {
    Small,
    Standard,
}

/// Multinomial model as written in a config file; probabilities stay strings so
/// that `"1/3"` is kept exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultinomialSpec {
    pub n: usize,
    pub p: Vec<String>,
}

/// One configuration source: `{"sizes":[..]}`, `{"classical":m}` or
/// `{"multinomial":{"n":N,"p":["a/b",..]}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfigSource {
    Sizes(Vec<usize>),
    Classical(usize),
    Multinomial(MultinomialSpec),
}

/// A configuration source after parsing.
#[derive(Debug, Clone)]
pub enum Resolved {
    Fixed(Configuration),
    Multinomial(MultinomialModel),
}

impl ConfigSource {
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        match self {
            ConfigSource::Sizes(v) => Ok(Resolved::Fixed(Configuration::new(v.clone())?)),
            ConfigSource::Classical(m) => Ok(Resolved::Fixed(Configuration::classical(*m)?)),
            ConfigSource::Multinomial(spec) => {
                let probs = spec.p.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>()?;
                Ok(Resolved::Multinomial(MultinomialModel::new(spec.n, probs)?))
            }
        }
    }
}

fn default_r() -> usize {
    2
}

fn default_trials() -> u64 {
    10_000
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_format() -> Format {
    Format::Json
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisRequest {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigSource>,
    #[serde(default = "default_r")]
    pub r: usize,
    /// Empty means every mode the configuration supports.
    #[serde(default)]
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_format")]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub battery: Option<Battery>,
}

impl AnalysisRequest {
    pub fn new(command: Command) -> Self {
        AnalysisRequest {
            command,
            config: None,
            r: default_r(),
            modes: Vec::new(),
            k_max: None,
            t_grid: None,
            trials: default_trials(),
            seed: 0,
            tol: default_tol(),
            format: default_format(),
            battery: None,
        }
    }

    pub fn order(&self) -> Result<CollisionOrder, CliError> {
        Ok(CollisionOrder::new(self.r)?)
    }

    /// Checks the request before anything is computed.
    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |m: String| Err(CliError::Invalid(m));
        self.order()?;
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return invalid(format!("tolerance must be a positive number, got {}", self.tol));
        }
        if let Some(grid) = &self.t_grid {
            if grid.is_empty() || grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return invalid("the t grid must be non-empty with finite nonnegative entries".into());
            }
        }
        let mut seen = Vec::new();
        for m in &self.modes {
            if seen.contains(m) {
                return invalid(format!("mode {m} given twice"));
            }
            seen.push(*m);
        }
        match (self.command, &self.config) {
            (Command::Verify, Some(_)) => return invalid("verify takes no configuration".into()),
            (Command::Verify, None) => return Ok(()),
            (_, None) => return invalid(format!("{} needs a configuration source", self.command)),
            (_, Some(_)) => {}
        }
        if self.battery.is_some() {
            return invalid("--battery only applies to verify".into());
        }
        if self.command == Command::Simulate && self.trials == 0 {
            return invalid("trials must be positive".into());
        }
        if let Some(ConfigSource::Multinomial(_)) = &self.config {
            match self.command {
                Command::Simulate => {}
                Command::Dist if !self.modes.contains(&Mode::R) => {}
                Command::Dist => {
                    return invalid("the exact multinomial law is available for K1 and K2 only".into());
                }
                other => return invalid(format!("{other} needs a fixed configuration, not a multinomial model")),
            }
        }
        Ok(())
    }

    /// Fills in the modes when none were given.
    pub fn with_default_modes(mut self) -> Result<Self, CliError> {
        if !self.modes.is_empty() || self.command == Command::Verify {
            return Ok(self);
        }
        let r = self.order()?;
        let source = self
            .config
            .as_ref()
            .ok_or_else(|| CliError::Invalid(format!("{} needs a configuration source", self.command)))?;
        self.modes = match source.resolve()? {
            Resolved::Fixed(c) if c.admits_collision(r) => Mode::ALL.to_vec(),
            Resolved::Fixed(_) => vec![Mode::R],
            Resolved::Multinomial(_) if self.command == Command::Dist => vec![Mode::K1, Mode::K2],
            Resolved::Multinomial(_) => Mode::ALL.to_vec(),
        };
        Ok(self)
    }
}

/// Splits a list on `;` when present, else on `,`, so `0,25;0,75` keeps its decimal commas.
pub fn split_list(s: &str) -> Vec<String> {
    let sep = if s.contains(';') { ';' } else { ',' };
    s.split(sep).map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

/// Parses a float, accepting a decimal comma.
pub fn parse_decimal(s: &str) -> Result<f64, CliError> {
    s.trim().replace(',', ".").parse().map_err(|_| CliError::Invalid(format!("cannot parse {s:?} as a number")))
}

/// Expands `start:step:end` into a grid (end included up to rounding).
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, h, b] = parts.as_slice() else {
        return Err(CliError::Invalid(format!("t grid {s:?} is not of the form start:step:end")));
    };
    let (a, h, b) = (parse_decimal(a)?, parse_decimal(h)?, parse_decimal(b)?);
    if !(h > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(CliError::Invalid(format!("t grid {s:?} needs step > 0 and end >= start")));
    }
    let count = ((b - a) / h + 1e-9).floor() as usize;
    if count > 100_000 {
        return Err(CliError::Invalid(format!("t grid {s:?} has more than 100000 points")));
    }
    Ok((0..=count).map(|i| collision_lab::report::round_sig15(a + i as f64 * h)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_sources_round_trip() {
        let docs = [r#"{"sizes":[2,2]}"#, r#"{"classical":365}"#, r#"{"multinomial":{"n":4,"p":["1/2","1/4","1/4"]}}"#];
        for d in docs {
            let c: ConfigSource = serde_json::from_str(d).unwrap();
            assert_eq!(serde_json::to_string(&c).unwrap(), d);
            c.resolve().unwrap();
        }
    }

    #[test]
    fn lists_and_grids() {
        assert_eq!(split_list("0,25;0,75"), vec!["0,25", "0,75"]);
        assert_eq!(split_list("1/2, 1/2"), vec!["1/2", "1/2"]);
        assert_eq!(parse_grid("0:0,5:2").unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("0:0.1:0.3").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert!(parse_grid("1:0:2").is_err());
    }

    #[test]
    fn validation() {
        let mut r = AnalysisRequest::new(Command::Expect);
        assert!(r.validate().is_err());
        r.config = Some(ConfigSource::Sizes(vec![2, 2]));
        assert!(r.validate().is_ok());
        r.r = 1;
        assert!(r.validate().is_err());
        r.r = 2;
        r.config = Some(ConfigSource::Multinomial(MultinomialSpec { n: 2, p: vec!["1".into()] }));
        assert!(r.validate().is_err());
        r.command = Command::Simulate;
        assert!(r.validate().is_ok());
    }
}
