//! Reasoning premium and market-concentration metrics.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{PriceRecord, Quarter};

/// Allowed deviation of a share vector's sum from 100 percentage points.
pub const SHARE_SUM_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum MarketError {
    #[error("{quarter} has no {side} records")]
    EmptyGroup { quarter: Quarter, side: &'static str },
    #[error("shares sum to {0}, expected 100 +/- {SHARE_SUM_TOLERANCE}")]
    ShareSum(f64),
    #[error("negative or non-finite share {0}")]
    InvalidShare(f64),
    #[error("no premium rows to average")]
    NoRows,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PremiumRow {
    pub quarter: Quarter,
    pub mean_reasoning_price: f64,
    pub mean_nonreasoning_price: f64,
    pub premium: f64,
}

/// Ratio of the unweighted mean input price of reasoning models to that of
/// non-reasoning models observed in `quarter`.
pub fn reasoning_premium(records: &[PriceRecord], quarter: Quarter) -> Result<PremiumRow, MarketError> {
    let mean = |reasoning: bool, side: &'static str| -> Result<f64, MarketError> {
        let prices: Vec<f64> = records
            .iter()
            .filter(|r| r.reasoning == reasoning && r.quarter() == quarter)
            .map(|r| r.input_price)
            .collect();
        if prices.is_empty() {
            return Err(MarketError::EmptyGroup { quarter, side });
        }
        Ok(prices.iter().sum::<f64>() / prices.len() as f64)
    };
    let r = mean(true, "reasoning")?;
    let nr = mean(false, "non-reasoning")?;
    Ok(PremiumRow {
        quarter,
        mean_reasoning_price: r,
        mean_nonreasoning_price: nr,
        premium: r / nr,
    })
}

/// Quarters (ascending) that contain both reasoning and non-reasoning records.
pub fn premium_quarters(records: &[PriceRecord]) -> Vec<Quarter> {
    let mut sides: BTreeMap<Quarter, (bool, bool)> = BTreeMap::new();
    for r in records {
        let e = sides.entry(r.quarter()).or_default();
        if r.reasoning {
            e.0 = true;
        } else {
            e.1 = true;
        }
    }
    sides
        .into_iter()
        .filter(|(_, (a, b))| *a && *b)
        .map(|(q, _)| q)
        .collect()
}

pub fn premium_average(rows: &[PremiumRow]) -> Result<f64, MarketError> {
    if rows.is_empty() {
        return Err(MarketError::NoRows);
    }
    Ok(rows.iter().map(|r| r.premium).sum::<f64>() / rows.len() as f64)
}

fn check_shares(shares: &[f64]) -> Result<(), MarketError> {
    if let Some(&s) = shares.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(MarketError::InvalidShare(s));
    }
    let sum: f64 = shares.iter().sum();
    if (sum - 100.0).abs() > SHARE_SUM_TOLERANCE {
        return Err(MarketError::ShareSum(sum));
    }
    Ok(())
}

/// Herfindahl-Hirschman index on percentage-point shares (0..=10000).
pub fn hhi(shares: &[f64]) -> Result<f64, MarketError> {
    check_shares(shares)?;
    Ok(shares.iter().map(|s| s * s).sum())
}

/// Sum of the four largest shares (all of them when fewer than four).
pub fn cr4(shares: &[f64]) -> Result<f64, MarketError> {
    check_shares(shares)?;
    let mut sorted = shares.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted.iter().take(4).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConcentrationBand {
    Unconcentrated,
    Moderate,
    High,
}

impl fmt::Display for ConcentrationBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConcentrationBand::Unconcentrated => "Unconcentrated",
            ConcentrationBand::Moderate => "Moderately concentrated",
            ConcentrationBand::High => "Highly concentrated",
        })
    }
}

/// DOJ/FTC bands: above 2500 high, 1500..=2500 moderate, below 1500 unconcentrated.
pub fn classify_hhi(value: f64) -> ConcentrationBand {
    if value > 2500.0 {
        ConcentrationBand::High
    } else if value >= 1500.0 {
        ConcentrationBand::Moderate
    } else {
        ConcentrationBand::Unconcentrated
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationResult {
    pub period: String,
    pub shares: Vec<(String, f64)>,
    pub hhi: f64,
    pub cr4: f64,
    pub band: ConcentrationBand,
}

impl ConcentrationResult {
    pub fn from_shares(period: impl Into<String>, shares: Vec<(String, f64)>) -> Result<Self, MarketError> {
        let values: Vec<f64> = shares.iter().map(|s| s.1).collect();
        let hhi = hhi(&values)?;
        Ok(Self {
            period: period.into(),
            cr4: cr4(&values)?,
            band: classify_hhi(hhi),
            hhi,
            shares,
        })
    }
}
