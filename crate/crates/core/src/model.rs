//! Domain records shared by every analysis: price observations, training
//! runs, price tiers and calendar quarters.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Days per year used to turn calendar spans into elapsed years.
pub const DAYS_PER_YEAR: f64 = 365.25;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("non-positive price: {0}")]
    NonPositivePrice(f64),
    #[error("blend weights must be non-negative and not both zero (got {0}, {1})")]
    InvalidWeights(f64, f64),
    #[error("unknown {kind} `{value}`")]
    Unknown { kind: &'static str, value: String },
    #[error("quarter must be in 1..=4, got {0}")]
    InvalidQuarter(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "US_EU")]
    UsEu,
    #[serde(rename = "CN")]
    Cn,
    #[serde(rename = "OTHER")]
    Other,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::UsEu => "US_EU",
            Region::Cn => "CN",
            Region::Other => "OTHER",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "US_EU" => Ok(Region::UsEu),
            "CN" => Ok(Region::Cn),
            "OTHER" => Ok(Region::Other),
            _ => Err(ModelError::Unknown {
                kind: "region",
                value: s.to_string(),
            }),
        }
    }
}

/// Price band. Variants are declared in ascending price order so the derived
/// `Ord` gives Economy < Mid < Flagship.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Economy,
    Mid,
    Flagship,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Economy, Tier::Mid, Tier::Flagship];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Economy => "economy",
            Tier::Mid => "mid",
            Tier::Flagship => "flagship",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "economy" => Ok(Tier::Economy),
            "mid" => Ok(Tier::Mid),
            "flagship" => Ok(Tier::Flagship),
            _ => Err(ModelError::Unknown {
                kind: "tier",
                value: s.to_string(),
            }),
        }
    }
}

/// Upper bound of the economy band and lower bound of the flagship band,
/// in USD per million input tokens. Both boundaries belong to Mid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierThresholds {
    pub economy_below: f64,
    pub flagship_above: f64,
}

impl Default for TierThresholds {
    fn default() -> Self {
        Self {
            economy_below: 0.5,
            flagship_above: 5.0,
        }
    }
}

impl TierThresholds {
    pub fn classify(&self, input_price: f64) -> Result<Tier, ModelError> {
        if input_price.is_nan() || input_price <= 0.0 {
            return Err(ModelError::NonPositivePrice(input_price));
        }
        Ok(if input_price < self.economy_below {
            Tier::Economy
        } else if input_price > self.flagship_above {
            Tier::Flagship
        } else {
            Tier::Mid
        })
    }
}

/// Classifies an input price (USD/M tokens) with the default thresholds.
pub fn classify_tier(input_price: f64) -> Result<Tier, ModelError> {
    TierThresholds::default().classify(input_price)
}

/// Input:output weights for the blended price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlendWeights {
    pub input: f64,
    pub output: f64,
}

impl Default for BlendWeights {
    fn default() -> Self {
        Self {
            input: 3.0,
            output: 1.0,
        }
    }
}

pub fn blended_price(
    input_price: f64,
    output_price: f64,
    weights: BlendWeights,
) -> Result<f64, ModelError> {
    for p in [input_price, output_price] {
        if p.is_nan() || p <= 0.0 {
            return Err(ModelError::NonPositivePrice(p));
        }
    }
    let BlendWeights { input, output } = weights;
    if !(input >= 0.0 && output >= 0.0) || input + output <= 0.0 {
        return Err(ModelError::InvalidWeights(input, output));
    }
    let blend = (input * input_price + output * output_price) / (input + output);
    // rounding can push the blend a hair outside [min, max]
    Ok(blend.clamp(
        input_price.min(output_price),
        input_price.max(output_price),
    ))
}

/// Calendar quarter, written `2024Q3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Quarter {
    pub year: i32,
    pub quarter: u32,
}

impl Quarter {
    pub fn new(year: i32, quarter: u32) -> Result<Self, ModelError> {
        if !(1..=4).contains(&quarter) {
            return Err(ModelError::InvalidQuarter(quarter));
        }
        Ok(Self { year, quarter })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        quarter_of(date) == *self
    }

    pub fn first_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, (self.quarter - 1) * 3 + 1, 1)
            .expect("quarter start is a valid date")
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

impl FromStr for Quarter {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || ModelError::Unknown {
            kind: "quarter",
            value: s.to_string(),
        };
        let (year, q) = s.trim().split_once(['Q', 'q']).ok_or_else(unknown)?;
        let year = year.parse().map_err(|_| unknown())?;
        let q = q.parse().map_err(|_| unknown())?;
        Quarter::new(year, q)
    }
}

impl TryFrom<String> for Quarter {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Quarter> for String {
    fn from(q: Quarter) -> Self {
        q.to_string()
    }
}

pub fn quarter_of(date: NaiveDate) -> Quarter {
    Quarter {
        year: date.year(),
        quarter: (date.month() - 1) / 3 + 1,
    }
}

/// Elapsed years between two dates.
pub fn years_between(from: NaiveDate, to: NaiveDate) -> f64 {
    (to - from).num_days() as f64 / DAYS_PER_YEAR
}

/// One model's price (and optional quality) observation at a date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceRecord {
    pub model_id: String,
    pub vendor: String,
    pub observed_date: NaiveDate,
    /// USD per million input tokens.
    pub input_price: f64,
    /// USD per million output tokens.
    pub output_price: f64,
    #[serde(default)]
    pub context_window: Option<u64>,
    #[serde(default)]
    pub quality_score: Option<f64>,
    pub reasoning: bool,
    pub open_weight: bool,
    pub region: Region,
    /// Curated tier assignment; overrides price-based classification.
    #[serde(default)]
    pub tier_hint: Option<Tier>,
}

impl PriceRecord {
    /// The hinted tier if present, otherwise the price-based classification.
    pub fn tier(&self, thresholds: &TierThresholds) -> Result<Tier, ModelError> {
        match self.tier_hint {
            Some(t) => Ok(t),
            None => thresholds.classify(self.input_price),
        }
    }

    pub fn blended(&self, weights: BlendWeights) -> Result<f64, ModelError> {
        blended_price(self.input_price, self.output_price, weights)
    }

    pub fn quarter(&self) -> Quarter {
        quarter_of(self.observed_date)
    }
}

/// One model's training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub model_id: String,
    pub vendor: String,
    pub region: Region,
    pub release_date: NaiveDate,
    /// USD.
    pub training_cost: f64,
    /// FLOP.
    pub training_compute: f64,
    pub parameter_count: f64,
}

impl TrainingRecord {
    /// USD per FLOP.
    pub fn unit_cost(&self) -> f64 {
        self.training_cost / self.training_compute
    }

    pub fn violations(&self) -> Vec<Rule> {
        let mut out = Vec::new();
        if self.training_cost.is_nan() || self.training_cost <= 0.0 {
            out.push(Rule::NonPositiveCost);
        }
        if self.training_compute.is_nan() || self.training_compute <= 0.0 {
            out.push(Rule::NonPositiveCompute);
        }
        if self.parameter_count.is_nan() || self.parameter_count <= 0.0 {
            out.push(Rule::NonPositiveParameters);
        }
        if out.is_empty() {
            let u = self.unit_cost();
            if !(u.is_finite() && u > 0.0) {
                out.push(Rule::DegenerateUnitCost);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    NonPositivePrice,
    QualityOutOfRange,
    DuplicateKey,
    NonPositiveCost,
    NonPositiveCompute,
    NonPositiveParameters,
    DegenerateUnitCost,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::NonPositivePrice => "non-positive price",
            Rule::QualityOutOfRange => "quality score outside [0, 100]",
            Rule::DuplicateKey => "duplicate key",
            Rule::NonPositiveCost => "non-positive training cost",
            Rule::NonPositiveCompute => "non-positive training compute",
            Rule::NonPositiveParameters => "non-positive parameter count",
            Rule::DegenerateUnitCost => "unit cost not finite and positive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub model_id: String,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "record {} ({}): {}", self.index, self.model_id, self.rule)
    }
}

/// Checks every record invariant plus (model_id, observed_date) uniqueness.
/// An empty report means the dataset is clean.
pub fn validate_dataset(records: &[PriceRecord]) -> Vec<Violation> {
    let mut report = Vec::new();
    let mut seen = HashSet::new();
    for (index, r) in records.iter().enumerate() {
        let mut push = |rule| {
            report.push(Violation {
                index,
                model_id: r.model_id.clone(),
                rule,
            })
        };
        if !(r.input_price > 0.0 && r.output_price > 0.0) {
            push(Rule::NonPositivePrice);
        }
        if let Some(q) = r.quality_score {
            if !(0.0..=100.0).contains(&q) {
                push(Rule::QualityOutOfRange);
            }
        }
        if !seen.insert((r.model_id.as_str(), r.observed_date)) {
            push(Rule::DuplicateKey);
        }
    }
    report
}
