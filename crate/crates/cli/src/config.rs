use std::path::Path;

use ldp_core::bounds::{MultiplicativeFn, DEFAULT_BOUNDS_BUDGET};
use ldp_core::fibration::FibrationModel;
use ldp_core::lab::{ThresholdMode, WindowStrategy, DEFAULT_POINT_BUDGET};
use ldp_core::poly::{IntegerForm, DEFAULT_ENUMERATION_BUDGET};
use ldp_core::sigma::SyntheticRule;
use ldp_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Everything a run needs, read from one JSON file. Sections that a
/// subcommand does not use are ignored by it.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<FibrationModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowStrategy>,
    #[serde(default)]
    pub budget: Budgets,
    #[serde(default)]
    pub sieve: SieveSection,
    #[serde(default)]
    pub sigma: SigmaSection,
    #[serde(default, rename = "model-run")]
    pub model_run: ModelSection,
    #[serde(default)]
    pub rate: RateSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub bounds: BoundsSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Budgets {
    #[serde(default = "points_budget")]
    pub points: u64,
    #[serde(default = "enumeration_budget")]
    pub enumeration: u64,
    #[serde(default = "bounds_budget")]
    pub bounds: u64,
    /// Largest prime a sieve or sigma table may reach.
    #[serde(default = "prime_budget")]
    pub primes: u64,
}

fn points_budget() -> u64 {
    DEFAULT_POINT_BUDGET
}
fn enumeration_budget() -> u64 {
    DEFAULT_ENUMERATION_BUDGET
}
fn bounds_budget() -> u64 {
    DEFAULT_BOUNDS_BUDGET
}
fn prime_budget() -> u64 {
    1_000_000_000
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            points: points_budget(),
            enumeration: enumeration_budget(),
            bounds: bounds_budget(),
            primes: prime_budget(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SieveSection {
    #[serde(default)]
    pub lo: u64,
    #[serde(default = "default_sieve_hi")]
    pub hi: u64,
}

fn default_sieve_hi() -> u64 {
    100_000
}

impl Default for SieveSection {
    fn default() -> Self {
        Self {
            lo: 0,
            hi: default_sieve_hi(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SigmaSource {
    /// Exact counts for the configured model.
    Enumerated,
    Synthetic { rule: SyntheticRule },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SigmaSection {
    #[serde(default = "default_sigma_source")]
    pub source: SigmaSource,
    #[serde(default = "default_t_max")]
    pub t_max: u64,
    /// Grid for the Mertens fit; a geometric grid ending at `t-max` if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_grid: Option<Vec<u64>>,
}

fn default_sigma_source() -> SigmaSource {
    SigmaSource::Synthetic {
        rule: SyntheticRule::DeltaOverP { delta: 1.0 },
    }
}
fn default_t_max() -> u64 {
    10_000
}

impl Default for SigmaSection {
    fn default() -> Self {
        Self {
            source: default_sigma_source(),
            t_max: default_t_max(),
            fit_grid: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ModelSection {
    /// Explicit success probabilities; otherwise the sigma section's table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
    /// Largest count tracked individually by the pmf; all of it if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_max_moment")]
    pub max_moment: u32,
    /// Monte Carlo draws; zero skips sampling.
    #[serde(default)]
    pub samples: u64,
    /// Height bound for the normalized log-MGF column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

fn default_t_grid() -> Vec<f64> {
    vec![-1.0, -0.5, 0.5, 1.0]
}
fn default_max_moment() -> u32 {
    4
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            probabilities: None,
            cap: None,
            t_grid: default_t_grid(),
            max_moment: default_max_moment(),
            samples: 0,
            b: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RateSection {
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_x_grid")]
    pub x_grid: Vec<f64>,
}

fn default_delta() -> f64 {
    1.0
}
fn default_x_grid() -> Vec<f64> {
    vec![-0.5, 0.0, 0.01, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 5.0, 10.0]
}

impl Default for RateSection {
    fn default() -> Self {
        Self {
            delta: default_delta(),
            x_grid: default_x_grid(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SetAlgebraSection {
    pub b: u64,
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SyntheticExponentSection {
    pub epsilon: f64,
    pub delta: f64,
    pub b_grid: Vec<u64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<ThresholdMode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loglog_floor: Option<f64>,
    /// Gap threshold for the truncation audit; skipped if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_algebra: Option<SetAlgebraSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_exponent: Option<SyntheticExponentSection>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct HardyRamanujanSection {
    pub t_max: u32,
    pub x_max: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RadicalSection {
    pub r: Vec<u32>,
    pub t: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct NairTenenbaumSection {
    pub f: MultiplicativeFn,
    pub form: IntegerForm,
    pub b_grid: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TruncatedMomentSection {
    pub form: IntegerForm,
    pub b: u64,
    pub c1: f64,
    pub c2: f64,
    pub y: f64,
    #[serde(rename = "N")]
    pub big_n: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BoundsSection {
    #[serde(default = "yes")]
    pub norton: bool,
    #[serde(default = "default_hr", skip_serializing_if = "Option::is_none")]
    pub hardy_ramanujan: Option<HardyRamanujanSection>,
    #[serde(default = "default_radical", skip_serializing_if = "Option::is_none")]
    pub radical: Option<RadicalSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nair_tenenbaum: Option<NairTenenbaumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated_moment: Option<TruncatedMomentSection>,
}

fn yes() -> bool {
    true
}
fn default_hr() -> Option<HardyRamanujanSection> {
    Some(HardyRamanujanSection {
        t_max: 5,
        x_max: 100_000,
    })
}
fn default_radical() -> Option<RadicalSection> {
    Some(RadicalSection {
        r: vec![1, 2, 3],
        t: vec![10, 20, 50, 100],
    })
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            norton: true,
            hardy_ramanujan: default_hr(),
            radical: default_radical(),
            nair_tenenbaum: None,
            truncated_moment: None,
        }
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

impl RunConfig {
    /// Reads and parses a config; a missing path means all defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn model(&self) -> Result<&FibrationModel> {
        self.model
            .as_ref()
            .ok_or_else(|| config_error("this subcommand needs a `model` section"))
    }

    pub fn b_grid(&self) -> Result<&[u64]> {
        self.b_grid
            .as_deref()
            .ok_or_else(|| config_error("this subcommand needs a `b-grid`"))
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.epsilons.clone().unwrap_or_else(|| vec![0.5])
    }

    /// The resolved config as compact JSON, echoed into every artifact.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
