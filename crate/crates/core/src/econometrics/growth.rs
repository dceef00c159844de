use serde::{Deserialize, Serialize};

use super::EconError;

/// A production factor with its cost share and log factor-price change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub share: f64,
    pub price_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthAccounting {
    /// Total log cost change.
    pub total: f64,
    /// `(name, share * price_change)` per factor.
    pub contributions: Vec<(String, f64)>,
    /// Productivity residual: total minus the factor contributions.
    pub residual: f64,
    /// Factor contributions as percent of the total.
    pub contribution_pct: Vec<(String, f64)>,
    pub residual_pct: f64,
}

pub fn growth_accounting(total: f64, factors: &[Factor]) -> Result<GrowthAccounting, EconError> {
    if let Some(f) = factors.iter().find(|f| f.share.is_nan() || f.share < 0.0) {
        return Err(EconError::NegativeShare(f.name.clone()));
    }
    if total == 0.0 {
        return Err(EconError::ZeroTotal);
    }
    let contributions: Vec<(String, f64)> = factors
        .iter()
        .map(|f| (f.name.clone(), f.share * f.price_change))
        .collect();
    let residual = total - contributions.iter().map(|c| c.1).sum::<f64>();
    Ok(GrowthAccounting {
        total,
        contribution_pct: contributions
            .iter()
            .map(|(n, c)| (n.clone(), c / total * 100.0))
            .collect(),
        residual_pct: residual / total * 100.0,
        contributions,
        residual,
    })
}
