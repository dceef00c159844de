use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EconError;
use crate::linalg::{least_squares, LinalgError};

/// Named regressor matrix, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
}

impl Design {
    /// Columns as given, no intercept added.
    pub fn from_columns(columns: &[(&str, &[f64])]) -> Result<Self, EconError> {
        let n = columns.first().map_or(0, |c| c.1.len());
        if let Some((name, col)) = columns.iter().find(|c| c.1.len() != n) {
            return Err(EconError::LengthMismatch {
                what: format!("column `{name}`"),
                got: col.len(),
                expected: n,
            });
        }
        let x = DMatrix::from_fn(n, columns.len(), |i, j| columns[j].1[i]);
        Ok(Self {
            names: columns.iter().map(|c| c.0.to_string()).collect(),
            x,
        })
    }

    /// A leading `const` column of ones followed by `columns`.
    pub fn with_intercept(columns: &[(&str, &[f64])]) -> Result<Self, EconError> {
        let n = columns.first().map_or(0, |c| c.1.len());
        let ones = vec![1.0; n];
        let mut all: Vec<(&str, &[f64])> = vec![("const", &ones)];
        all.extend_from_slice(columns);
        Self::from_columns(&all)
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    fn select_rows(&self, keep: &[usize]) -> Self {
        Self {
            names: self.names.clone(),
            x: self.x.select_rows(keep),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub ols_se: Vec<f64>,
    /// `None` when some observation has leverage 1.
    pub hc3_se: Option<Vec<f64>>,
    /// Two-sided, from t(n - k) with classical errors.
    pub p_values: Vec<f64>,
    pub hc3_p_values: Option<Vec<f64>>,
    pub r_squared: f64,
    pub n: usize,
    pub residuals: Vec<f64>,
    pub leverages: Vec<f64>,
    /// Groups removed by [`fixed_effects`] because they had one observation.
    pub dropped_groups: Vec<String>,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn df_resid(&self) -> usize {
        self.n - self.coefficients.len()
    }
}

pub(crate) fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

fn p_values(coef: &[f64], se: &[f64], df: f64) -> Vec<f64> {
    coef.iter()
        .zip(se)
        .map(|(b, s)| {
            if *s == 0.0 {
                if *b == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                two_sided_p(b / s, df)
            }
        })
        .collect()
}

fn map_linalg(err: LinalgError, design: &Design) -> EconError {
    match err {
        LinalgError::RankDeficient(cols) => {
            EconError::SingularDesign(cols.iter().map(|&c| design.names[c].clone()).collect())
        }
        LinalgError::Underdetermined { rows, cols } => EconError::TooFewObservations {
            n: rows,
            k: cols,
        },
        LinalgError::LengthMismatch { got, expected } => EconError::LengthMismatch {
            what: "response".into(),
            got,
            expected,
        },
    }
}

/// Does the column space of `x` contain the constant vector?
fn spans_constant(x: &DMatrix<f64>) -> bool {
    let ones = DVector::from_element(x.nrows(), 1.0);
    least_squares(x, &ones).is_ok_and(|ls| ls.ssr < 1e-10 * x.nrows() as f64)
}

/// HC3 sandwich `(X'X)^-1 X' diag(e_i^2 / (1 - h_ii)^2) X (X'X)^-1`.
fn sandwich(
    x: &DMatrix<f64>,
    xtx_inv: &DMatrix<f64>,
    residuals: &[f64],
    leverages: &[f64],
) -> Result<Vec<f64>, EconError> {
    if let Some(i) = leverages.iter().position(|h| *h >= 1.0 - 1e-12) {
        return Err(EconError::UnitLeverage(i));
    }
    let k = x.ncols();
    let mut meat = DMatrix::zeros(k, k);
    for (i, (e, h)) in residuals.iter().zip(leverages).enumerate() {
        let w = e * e / ((1.0 - h) * (1.0 - h));
        if w == 0.0 {
            continue;
        }
        let row = x.row(i);
        meat += w * row.transpose() * row;
    }
    let cov = xtx_inv * meat * xtx_inv;
    Ok((0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect())
}

pub fn ols(y: &[f64], design: &Design) -> Result<RegressionResult, EconError> {
    let n = y.len();
    let k = design.x.ncols();
    if design.nrows() != n {
        return Err(EconError::LengthMismatch {
            what: "response".into(),
            got: n,
            expected: design.nrows(),
        });
    }
    if n <= k {
        return Err(EconError::TooFewObservations { n, k });
    }
    let yv = DVector::from_column_slice(y);
    let ls = least_squares(&design.x, &yv).map_err(|e| map_linalg(e, design))?;
    let df = (n - k) as f64;
    let sigma2 = ls.ssr / df;
    let coefficients: Vec<f64> = ls.coef.iter().copied().collect();
    let ols_se: Vec<f64> = (0..k)
        .map(|j| (sigma2 * ls.xtx_inv[(j, j)]).max(0.0).sqrt())
        .collect();
    let residuals: Vec<f64> = ls.residuals.iter().copied().collect();
    let leverages: Vec<f64> = (0..n)
        .map(|i| {
            let row = design.x.row(i);
            (row * &ls.xtx_inv * row.transpose())[(0, 0)].clamp(0.0, 1.0)
        })
        .collect();

    let tss = if spans_constant(&design.x) {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };
    let r_squared = if tss > 0.0 {
        (1.0 - ls.ssr / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };

    let hc3_se = sandwich(&design.x, &ls.xtx_inv, &residuals, &leverages).ok();
    let hc3_p_values = hc3_se.as_ref().map(|se| p_values(&coefficients, se, df));
    Ok(RegressionResult {
        names: design.names.clone(),
        p_values: p_values(&coefficients, &ols_se, df),
        coefficients,
        ols_se,
        hc3_se,
        hc3_p_values,
        r_squared,
        n,
        residuals,
        leverages,
        dropped_groups: Vec::new(),
    })
}

/// HC3 robust standard errors for a fitted regression on `design`.
pub fn hc3_se(result: &RegressionResult, design: &Design) -> Result<Vec<f64>, EconError> {
    let ones = DVector::zeros(design.nrows());
    let ls = least_squares(&design.x, &ones).map_err(|e| map_linalg(e, design))?;
    sandwich(&design.x, &ls.xtx_inv, &result.residuals, &result.leverages)
}

/// Least-squares dummy-variable regression: one indicator per group with at
/// least two observations and no common intercept. Singleton groups are
/// dropped and listed in `dropped_groups`.
pub fn fixed_effects(y: &[f64], design: &Design, groups: &[String]) -> Result<RegressionResult, EconError> {
    if groups.len() != y.len() || design.nrows() != y.len() {
        return Err(EconError::LengthMismatch {
            what: "groups".into(),
            got: groups.len(),
            expected: y.len(),
        });
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for g in groups {
        *counts.entry(g.as_str()).or_default() += 1;
    }
    let dropped: Vec<String> = counts
        .iter()
        .filter(|(_, c)| **c < 2)
        .map(|(g, _)| g.to_string())
        .collect();
    let retained: Vec<&str> = counts
        .iter()
        .filter(|(_, c)| **c >= 2)
        .map(|(g, _)| *g)
        .collect();
    if retained.is_empty() {
        return Err(EconError::NoGroups);
    }
    let keep: Vec<usize> = (0..y.len())
        .filter(|&i| counts[groups[i].as_str()] >= 2)
        .collect();
    let base = design.select_rows(&keep);
    let n = keep.len();
    let k = base.x.ncols();
    let mut x = DMatrix::zeros(n, k + retained.len());
    x.view_mut((0, 0), (n, k)).copy_from(&base.x);
    for (row, &i) in keep.iter().enumerate() {
        let g = retained
            .iter()
            .position(|r| *r == groups[i])
            .expect("retained group");
        x[(row, k + g)] = 1.0;
    }
    let mut names = base.names.clone();
    names.extend(retained.iter().map(|g| format!("fe[{g}]")));
    let full = Design { names, x };
    let ys: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
    let mut result = ols(&ys, &full)?;
    result.dropped_groups = dropped;
    Ok(result)
}

/// Linear interpolation between order statistics at `(n - 1) p / 100`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Clamps values below the `lower` percentile up to it and values above the
/// `upper` percentile down to it.
pub fn winsorize(series: &[f64], lower: f64, upper: f64) -> Result<Vec<f64>, EconError> {
    if !(0.0 < lower && lower < upper && upper < 100.0) {
        return Err(EconError::InvalidPercentiles(lower, upper));
    }
    if series.is_empty() {
        return Ok(Vec::new());
    }
    let (lo, hi) = winsor_bounds(series, lower, upper);
    Ok(series.iter().map(|v| v.clamp(lo, hi)).collect())
}

/// The clamp bounds [`winsorize`] applies. Percentiles of an already
/// winsorized series are generally tighter, so re-running [`winsorize`] can
/// move the extremes again; clamping to these bounds a second time cannot.
pub fn winsor_bounds(series: &[f64], lower: f64, upper: f64) -> (f64, f64) {
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    (percentile(&sorted, lower), percentile(&sorted, upper))
}
