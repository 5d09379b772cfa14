//! Experiment configuration and its flat `key = value` file format.
//!
//! ```text
//! # comments start with '#'
//! K = 20
//! theta = 1, 1.025, 1.05        # optional; default 1 + (k-1)/(2K)
//! beta = 0.3, 0.3, 0.4          # optional; default uniform
//! c = 0.01
//! valuation = sqrt              # sqrt | log1p | power:<alpha>
//! mechanisms = pd, aas, lp
//! sweep = 2, 5, 10, 20
//! output_dir = figures
//! emit_oracle_checks = false
//! ```

use std::path::PathBuf;

use crate::economy::{default_theta, EconomyConfig, Mechanism, ValuationKind};

use super::HarnessError;

pub const DEFAULT_OUTPUT_DIR: &str = "figures";
pub const OUTPUT_DIR_ENV: &str = "CONTRACT_OFFLOAD_OUT";
pub const DEFAULT_NUM_TYPES: usize = 20;
pub const DEFAULT_UNIT_COST: f64 = 0.01;

/// Default sweep over the number of types.
pub fn default_sweep() -> Vec<usize> {
    (2..=20).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub economy: EconomyConfig<f64>,
    pub mechanisms: Vec<Mechanism>,
    /// Type counts for the per-K study; each point uses the default grid and
    /// uniform probabilities.
    pub sweep: Option<Vec<usize>>,
    pub output_dir: PathBuf,
    pub emit_oracle_checks: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            economy: EconomyConfig::default_study(),
            mechanisms: Mechanism::ALL.to_vec(),
            sweep: None,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            emit_oracle_checks: false,
        }
    }
}

/// Partially specified settings, from a file or the command line. Later
/// layers win when merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub num_types: Option<usize>,
    pub theta: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub unit_cost: Option<f64>,
    pub valuation: Option<ValuationKind<f64>>,
    pub mechanisms: Option<Vec<Mechanism>>,
    pub sweep: Option<Vec<usize>>,
    pub output_dir: Option<PathBuf>,
    pub emit_oracle_checks: Option<bool>,
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, HarnessError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| HarnessError::Usage(format!("bad value '{s}' in '{key}'"))))
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value.trim().parse::<T>().map_err(|_| HarnessError::Usage(format!("bad value '{value}' for '{key}'")))
}

impl ConfigOverrides {
    /// Parses the `key = value` format.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut out = ConfigOverrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Usage(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "K" | "k" | "num_types" => out.num_types = Some(parse_one(key, value)?),
                "theta" => out.theta = Some(parse_list(key, value)?),
                "beta" => out.beta = Some(parse_list(key, value)?),
                "c" | "unit_cost" => out.unit_cost = Some(parse_one(key, value)?),
                "valuation" => {
                    out.valuation = Some(value.parse().map_err(|e: crate::Error| HarnessError::Usage(e.to_string()))?)
                }
                "mechanisms" => {
                    out.mechanisms = Some(
                        value
                            .split(',')
                            .map(|m| m.parse::<Mechanism>().map_err(|e| HarnessError::Usage(e.to_string())))
                            .collect::<Result<_, _>>()?,
                    )
                }
                "sweep" | "K_values" | "k_values" => out.sweep = Some(parse_list(key, value)?),
                "output_dir" => out.output_dir = Some(PathBuf::from(value)),
                "emit_oracle_checks" => out.emit_oracle_checks = Some(parse_one(key, value)?),
                other => return Err(HarnessError::Usage(format!("line {}: unknown key '{other}'", lineno + 1))),
            }
        }
        Ok(out)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Overlays `other` on top of `self`.
    pub fn merge(mut self, other: ConfigOverrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(num_types, theta, beta, unit_cost, valuation, mechanisms, sweep, output_dir, emit_oracle_checks);
        self
    }

    /// Builds a validated configuration. The output directory comes from the
    /// overrides, then `CONTRACT_OFFLOAD_OUT`, then the default.
    pub fn build(&self) -> Result<ExperimentConfig, HarnessError> {
        let economy = self.economy()?;
        let mechanisms = match &self.mechanisms {
            Some(m) if m.is_empty() => return Err(HarnessError::Usage("no mechanisms selected".into())),
            Some(m) => {
                let mut m = m.clone();
                m.sort();
                m.dedup();
                m
            }
            None => Mechanism::ALL.to_vec(),
        };
        if let Some(sweep) = &self.sweep {
            if sweep.contains(&0) || sweep.is_empty() {
                return Err(HarnessError::Usage("sweep values must be positive".into()));
            }
        }
        let output_dir = self
            .output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        Ok(ExperimentConfig {
            economy,
            mechanisms,
            sweep: self.sweep.clone(),
            output_dir,
            emit_oracle_checks: self.emit_oracle_checks.unwrap_or(false),
        })
    }

    pub fn economy(&self) -> Result<EconomyConfig<f64>, HarnessError> {
        let k = match (&self.theta, self.num_types) {
            (Some(t), Some(k)) if t.len() != k => {
                return Err(HarnessError::Usage(format!("K = {k} but {} theta values given", t.len())))
            }
            (Some(t), _) => t.len(),
            (None, Some(k)) => k,
            (None, None) => self.beta.as_ref().map_or(DEFAULT_NUM_TYPES, Vec::len),
        };
        if k == 0 {
            return Err(HarnessError::Usage("K must be positive".into()));
        }
        let theta = self.theta.clone().unwrap_or_else(|| default_theta(k));
        let beta = self.beta.clone().unwrap_or_else(|| vec![1.0 / k as f64; k]);
        let c = self.unit_cost.unwrap_or(DEFAULT_UNIT_COST);
        let valuation = self.valuation.unwrap_or_default();
        EconomyConfig::new(theta, beta, c, valuation).map_err(|e| HarnessError::Usage(e.to_string()))
    }
}
