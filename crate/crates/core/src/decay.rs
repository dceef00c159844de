//! Exponential price-decay estimation per tier.
//!
//! A decay fit regresses `ln(price)` on elapsed years since the series' first
//! observation: `P(t) = P0 * exp(-lambda * t)`.

use std::f64::consts::LN_2;
use std::fmt;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::linalg::{fit_line, least_squares};
use crate::model::{years_between, PriceRecord, Tier, TierThresholds};

/// Moore's-law price half-life benchmark in years.
pub const MOORE_HALF_LIFE_YEARS: f64 = 2.0;

/// Observations outside `[OUTLIER_MIN_PRICE, OUTLIER_MAX_PRICE]` are dropped by
/// [`drop_outliers`].
pub const OUTLIER_MIN_PRICE: f64 = 0.05;
pub const OUTLIER_MAX_PRICE: f64 = 100.0;

pub type Observation = (NaiveDate, f64);

#[derive(Debug, Error, PartialEq)]
pub enum DecayError {
    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("non-positive price {price} on {date}")]
    NonPositivePrice { date: NaiveDate, price: f64 },
    #[error("all observations share one date; slope is undefined")]
    NoTimeVariation,
    #[error("lambda standard error must be finite and positive (got {0})")]
    DegenerateStandardError(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted price at the first observation, USD/M.
    pub p0: f64,
    /// Per-year decay constant.
    pub lambda: f64,
    /// Years; `+inf` when `lambda <= 0`.
    pub half_life: f64,
    /// Computed in log space.
    pub r_squared: f64,
    pub n: usize,
    pub period: (NaiveDate, NaiveDate),
    /// Sum of squared log-price residuals.
    pub residual_sum_squares: f64,
    pub lambda_se: f64,
}

impl DecayFit {
    pub fn moore_ratio(&self) -> f64 {
        moore_ratio(self.half_life)
    }
}

pub fn half_life(lambda: f64) -> f64 {
    if lambda > 0.0 {
        LN_2 / lambda
    } else {
        f64::INFINITY
    }
}

/// `2.0 / half_life`; above 1 means faster than Moore's law.
pub fn moore_ratio(half_life: f64) -> f64 {
    MOORE_HALF_LIFE_YEARS / half_life
}

fn check_prices(series: &[Observation]) -> Result<(), DecayError> {
    match series.iter().find(|(_, p)| p.is_nan() || *p <= 0.0) {
        Some(&(date, price)) => Err(DecayError::NonPositivePrice { date, price }),
        None => Ok(()),
    }
}

fn elapsed_years(series: &[Observation]) -> (NaiveDate, NaiveDate, Vec<f64>) {
    let first = series.iter().map(|o| o.0).min().expect("non-empty series");
    let last = series.iter().map(|o| o.0).max().expect("non-empty series");
    let t = series.iter().map(|(d, _)| years_between(first, *d)).collect();
    (first, last, t)
}

pub fn fit_exponential(series: &[Observation]) -> Result<DecayFit, DecayError> {
    if series.len() < 3 {
        return Err(DecayError::InsufficientData {
            needed: 3,
            got: series.len(),
        });
    }
    check_prices(series)?;
    let (first, last, t) = elapsed_years(series);
    let ln_p: Vec<f64> = series.iter().map(|(_, p)| p.ln()).collect();
    let line = fit_line(&t, &ln_p).ok_or(DecayError::NoTimeVariation)?;
    let n = series.len();
    let lambda = 0.0 - line.slope;
    let r_squared = if line.sst > 0.0 {
        (1.0 - line.ssr / line.sst).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let sigma2 = line.ssr / (n as f64 - 2.0);
    Ok(DecayFit {
        p0: line.intercept.exp(),
        lambda,
        half_life: half_life(lambda),
        r_squared,
        n,
        period: (first, last),
        residual_sum_squares: line.ssr,
        lambda_se: (sigma2 / line.sxx).sqrt(),
    })
}

/// Wald statistic for `lambda_a == lambda_b` and its chi-square(1) p-value.
pub fn wald_lambda_diff(a: &DecayFit, b: &DecayFit) -> Result<(f64, f64), DecayError> {
    for se in [a.lambda_se, b.lambda_se] {
        if !(se.is_finite() && se > 0.0) {
            return Err(DecayError::DegenerateStandardError(se));
        }
    }
    let diff = a.lambda - b.lambda;
    let w = diff * diff / (a.lambda_se.powi(2) + b.lambda_se.powi(2));
    let chi = ChiSquared::new(1.0).expect("one degree of freedom");
    Ok((w, chi.sf(w)))
}

/// Keeps observations priced within `[0.05, 100]` USD/M.
pub fn drop_outliers(series: &[Observation]) -> Vec<Observation> {
    series
        .iter()
        .copied()
        .filter(|(_, p)| (OUTLIER_MIN_PRICE..=OUTLIER_MAX_PRICE).contains(p))
        .collect()
}

/// Inclusive date window; either bound may be open.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    #[serde(default)]
    pub start: Option<NaiveDate>,
    #[serde(default)]
    pub end: Option<NaiveDate>,
}

impl Window {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start.is_none_or(|s| date >= s) && self.end.is_none_or(|e| date <= e)
    }
}

/// Input-price series of one tier, in record order, restricted to `window`.
/// Records carrying a tier hint use it; the rest are classified by price.
pub fn tier_series(
    records: &[PriceRecord],
    tier: Tier,
    thresholds: &TierThresholds,
    window: Window,
) -> Vec<Observation> {
    records
        .iter()
        .filter(|r| window.contains(r.observed_date))
        .filter(|r| r.tier(thresholds).ok() == Some(tier))
        .map(|r| (r.observed_date, r.input_price))
        .collect()
}

/// Functional forms compared by AIC, fitted by least squares in raw price space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalForm {
    /// `a * exp(-lambda t)`
    Exponential,
    /// `a + b t`
    Linear,
    /// `a + b ln(1 + t)`
    LogLinear,
    /// `a + b t + c t^2`
    Quadratic,
    /// `a + b t + c (t - knot)+`, knot on a month start
    PiecewiseLinear,
}

impl FunctionalForm {
    pub const ALL: [FunctionalForm; 5] = [
        FunctionalForm::Exponential,
        FunctionalForm::Linear,
        FunctionalForm::LogLinear,
        FunctionalForm::Quadratic,
        FunctionalForm::PiecewiseLinear,
    ];

    pub fn parameter_count(self) -> usize {
        match self {
            FunctionalForm::Exponential | FunctionalForm::Linear | FunctionalForm::LogLinear => 2,
            FunctionalForm::Quadratic => 3,
            FunctionalForm::PiecewiseLinear => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FunctionalForm::Exponential => "exponential",
            FunctionalForm::Linear => "linear",
            FunctionalForm::LogLinear => "log-linear",
            FunctionalForm::Quadratic => "quadratic",
            FunctionalForm::PiecewiseLinear => "piecewise-linear",
        }
    }
}

impl fmt::Display for FunctionalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFit {
    pub form: FunctionalForm,
    /// Parameters in the order of the form's formula; the piecewise knot is
    /// last and expressed in years since the first observation.
    pub params: Vec<f64>,
    pub ssr: f64,
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormOutcome {
    pub form: FunctionalForm,
    /// `None` when the series is too short for this form.
    pub fit: Option<FormFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecComparison {
    pub n: usize,
    pub forms: Vec<FormOutcome>,
    pub winner: FunctionalForm,
}

impl SpecComparison {
    pub fn get(&self, form: FunctionalForm) -> Option<&FormFit> {
        self.forms
            .iter()
            .find(|o| o.form == form)
            .and_then(|o| o.fit.as_ref())
    }
}

/// `n ln(SSR/n) + 2k`, with SSR floored at `n (1e-9 * rms(price))^2` so that
/// fits exact to rounding tie and the tie goes to the smaller `k`.
pub fn aic(ssr: f64, n: usize, k: usize, ssr_floor: f64) -> f64 {
    let nf = n as f64;
    nf * (ssr.max(ssr_floor) / nf).ln() + 2.0 * k as f64
}

pub fn compare_specifications(series: &[Observation]) -> Result<SpecComparison, DecayError> {
    let n = series.len();
    if n < 3 {
        return Err(DecayError::InsufficientData { needed: 3, got: n });
    }
    check_prices(series)?;
    let seed = fit_exponential(series)?;
    let (first, _, t) = elapsed_years(series);
    let p: Vec<f64> = series.iter().map(|o| o.1).collect();
    let rms = (p.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let floor = n as f64 * (1e-9 * rms).powi(2);

    let linear_in = |cols: &[&dyn Fn(f64) -> f64]| -> Option<(Vec<f64>, f64)> {
        if n <= cols.len() {
            return None;
        }
        let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j](t[i]));
        let ls = least_squares(&x, &DVector::from_column_slice(&p)).ok()?;
        Some((ls.coef.iter().copied().collect(), ls.ssr))
    };

    let mut forms = Vec::with_capacity(5);
    for form in FunctionalForm::ALL {
        let fitted: Option<(Vec<f64>, f64)> = match form {
            FunctionalForm::Exponential => Some(refine_exponential(&t, &p, seed.p0, seed.lambda)),
            FunctionalForm::Linear => linear_in(&[&|_| 1.0, &|x| x]),
            FunctionalForm::LogLinear => linear_in(&[&|_| 1.0, &|x| x.ln_1p()]),
            FunctionalForm::Quadratic => linear_in(&[&|_| 1.0, &|x| x, &|x| x * x]),
            FunctionalForm::PiecewiseLinear => piecewise_fit(series, first, &t, &p),
        };
        let fit = fitted.map(|(params, ssr)| FormFit {
            form,
            params,
            ssr,
            aic: aic(ssr, n, form.parameter_count(), floor),
        });
        forms.push(FormOutcome { form, fit });
    }

    let winner = forms
        .iter()
        .filter_map(|o| o.fit.as_ref())
        .min_by(|a, b| {
            a.aic
                .total_cmp(&b.aic)
                .then(a.form.parameter_count().cmp(&b.form.parameter_count()))
        })
        .map(|f| f.form)
        .expect("the exponential form is always available");
    Ok(SpecComparison { n, forms, winner })
}

/// Levenberg-Marquardt on `a exp(-lambda t)` in raw space, started from the
/// log-space estimate.
fn refine_exponential(t: &[f64], p: &[f64], a0: f64, lambda0: f64) -> (Vec<f64>, f64) {
    let ssr_at = |a: f64, l: f64| -> f64 {
        t.iter()
            .zip(p)
            .map(|(ti, pi)| (pi - a * (-l * ti).exp()).powi(2))
            .sum()
    };
    let (mut a, mut l) = (a0, lambda0);
    let mut ssr = ssr_at(a, l);
    let mut mu = 1e-3;
    for _ in 0..500 {
        // J^T J and J^T r for residual r = p - model
        let (mut jaa, mut jal, mut jll, mut ga, mut gl) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (ti, pi) in t.iter().zip(p) {
            let e = (-l * ti).exp();
            let r = pi - a * e;
            let da = e;
            let dl = -a * ti * e;
            jaa += da * da;
            jal += da * dl;
            jll += dl * dl;
            ga += da * r;
            gl += dl * r;
        }
        let mut improved = false;
        while mu < 1e12 {
            let (m00, m11) = (jaa * (1.0 + mu), jll * (1.0 + mu));
            let det = m00 * m11 - jal * jal;
            if det.abs() < f64::MIN_POSITIVE {
                mu *= 10.0;
                continue;
            }
            let step_a = (m11 * ga - jal * gl) / det;
            let step_l = (m00 * gl - jal * ga) / det;
            let candidate = ssr_at(a + step_a, l + step_l);
            if candidate.is_finite() && candidate < ssr {
                let rel = (ssr - candidate) / ssr.max(f64::MIN_POSITIVE);
                a += step_a;
                l += step_l;
                ssr = candidate;
                mu = (mu * 0.3).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (vec![a, l], ssr)
}

fn piecewise_fit(
    series: &[Observation],
    first: NaiveDate,
    t: &[f64],
    p: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let n = series.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for knot in month_starts_between(series) {
        let before = series.iter().filter(|(d, _)| *d < knot).count();
        if before < 3 || n - before < 3 {
            continue;
        }
        let tau = years_between(first, knot);
        let x = DMatrix::from_fn(n, 3, |i, j| match j {
            0 => 1.0,
            1 => t[i],
            _ => (t[i] - tau).max(0.0),
        });
        let Ok(ls) = least_squares(&x, &DVector::from_column_slice(p)) else {
            continue;
        };
        if best.as_ref().is_none_or(|(_, s)| ls.ssr < *s) {
            best = Some((vec![ls.coef[0], ls.coef[1], ls.coef[2], tau], ls.ssr));
        }
    }
    best
}

/// First days of every month strictly after the earliest and up to the latest
/// observation.
pub(crate) fn month_starts_between(series: &[Observation]) -> Vec<NaiveDate> {
    let (Some(first), Some(last)) = (
        series.iter().map(|o| o.0).min(),
        series.iter().map(|o| o.0).max(),
    ) else {
        return Vec::new();
    };
    crate::breaks::month_starts(first, last)
        .into_iter()
        .filter(|d| *d > first)
        .collect()
}
