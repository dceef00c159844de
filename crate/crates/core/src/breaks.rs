//! Chow structural-break scan over a log-price series.
//!
//! Each candidate is a month start; observations dated before it form the
//! pre-break segment, the rest the post-break segment. Both segments and the
//! pooled series get their own intercept-and-slope regression on elapsed years.

use chrono::{Datelike, Months, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};
use thiserror::Error;

use crate::decay::{Observation, Window};
use crate::linalg::fit_line;
use crate::model::years_between;

/// Regressors per segment: intercept and slope.
pub const REGRESSORS: usize = 2;
pub const DEFAULT_MIN_SEGMENT: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum ChowError {
    #[error("candidate {candidate} splits {n_pre}/{n_post}; each side needs at least {min}")]
    InfeasibleCandidate {
        candidate: NaiveDate,
        n_pre: usize,
        n_post: usize,
        min: usize,
    },
    #[error("segment before or after {0} has no time variation")]
    DegenerateSegment(NaiveDate),
    #[error("no feasible candidate in the window with minimum segment {0}")]
    NoFeasibleCandidate(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChowResult {
    pub break_date: NaiveDate,
    pub f_statistic: f64,
    pub p_value: f64,
    pub n_pre: usize,
    pub n_post: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChowScan {
    pub best: ChowResult,
    /// Every feasible candidate in grid order.
    pub trace: Vec<ChowResult>,
}

/// Converts a price series to `(date, ln price)`.
pub fn log_series(series: &[Observation]) -> Vec<Observation> {
    series.iter().map(|(d, p)| (*d, p.ln())).collect()
}

/// First days of every month `m` with `from <= m <= to`.
pub fn month_starts(from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    let mut m = NaiveDate::from_ymd_opt(from.year(), from.month(), 1).expect("valid month start");
    if m < from {
        m = m + Months::new(1);
    }
    let mut out = Vec::new();
    while m <= to {
        out.push(m);
        m = m + Months::new(1);
    }
    out
}

struct Prepared {
    t: Vec<f64>,
    y: Vec<f64>,
    dates: Vec<NaiveDate>,
    pooled_ssr: f64,
    tiny: f64,
}

fn prepare(series: &[Observation]) -> Option<Prepared> {
    let first = series.iter().map(|o| o.0).min()?;
    let t: Vec<f64> = series.iter().map(|(d, _)| years_between(first, *d)).collect();
    let y: Vec<f64> = series.iter().map(|o| o.1).collect();
    let pooled = fit_line(&t, &y)?;
    Some(Prepared {
        dates: series.iter().map(|o| o.0).collect(),
        pooled_ssr: pooled.ssr,
        tiny: 1e-18 * pooled.sst.max(f64::MIN_POSITIVE),
        t,
        y,
    })
}

fn evaluate(p: &Prepared, candidate: NaiveDate, min: usize) -> Result<ChowResult, ChowError> {
    let n = p.y.len();
    let pre: Vec<bool> = p.dates.iter().map(|d| *d < candidate).collect();
    let n_pre = pre.iter().filter(|b| **b).count();
    let n_post = n - n_pre;
    if n_pre < min || n_post < min {
        return Err(ChowError::InfeasibleCandidate {
            candidate,
            n_pre,
            n_post,
            min,
        });
    }
    let split = |want: bool| -> (Vec<f64>, Vec<f64>) {
        pre.iter()
            .zip(p.t.iter().zip(&p.y))
            .filter(|(b, _)| **b == want)
            .map(|(_, (t, y))| (*t, *y))
            .unzip()
    };
    let (t1, y1) = split(true);
    let (t2, y2) = split(false);
    let s1 = fit_line(&t1, &y1).ok_or(ChowError::DegenerateSegment(candidate))?.ssr;
    let s2 = fit_line(&t2, &y2).ok_or(ChowError::DegenerateSegment(candidate))?.ssr;

    let k = REGRESSORS as f64;
    let df2 = (n - 2 * REGRESSORS) as f64;
    let within = s1 + s2;
    let (f, pval) = if p.pooled_ssr <= p.tiny {
        (0.0, 1.0)
    } else if within <= p.tiny {
        (f64::INFINITY, 0.0)
    } else {
        let f = ((p.pooled_ssr - within).max(0.0) / k) / (within / df2);
        let dist = FisherSnedecor::new(k, df2).expect("positive degrees of freedom");
        (f, dist.sf(f))
    };
    Ok(ChowResult {
        break_date: candidate,
        f_statistic: f,
        p_value: pval,
        n_pre,
        n_post,
    })
}

/// Chow F-test at one candidate on a `(date, ln price)` series.
pub fn chow_at(series: &[Observation], candidate: NaiveDate) -> Result<ChowResult, ChowError> {
    let min = REGRESSORS + 1;
    let p = prepare(series).ok_or(ChowError::DegenerateSegment(candidate))?;
    evaluate(&p, candidate, min)
}

/// Evaluates every month start in `window` (defaulting to the series span)
/// and returns the candidate with the largest F, earliest on ties.
pub fn chow_scan(
    series: &[Observation],
    window: Window,
    min_segment: usize,
) -> Result<ChowScan, ChowError> {
    let min = min_segment.max(REGRESSORS + 1);
    let no_candidate = || ChowError::NoFeasibleCandidate(min);
    let p = prepare(series).ok_or_else(no_candidate)?;
    let first = *p.dates.iter().min().ok_or_else(no_candidate)?;
    let last = *p.dates.iter().max().ok_or_else(no_candidate)?;
    let from = window.start.map_or(first, |s| s.max(first));
    let to = window.end.map_or(last, |e| e.min(last));

    let trace: Vec<ChowResult> = month_starts(from, to)
        .into_par_iter()
        .map(|c| evaluate(&p, c, min))
        .collect::<Vec<_>>()
        .into_iter()
        .filter_map(Result::ok)
        .collect();
    let best = trace
        .iter()
        .copied()
        .reduce(|best, c| if c.f_statistic > best.f_statistic { c } else { best })
        .ok_or_else(no_candidate)?;
    Ok(ChowScan { best, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn perfect_line_has_zero_f() {
        let s: Vec<Observation> = (0..24)
            .map(|m| {
                let date = d("2020-01-15") + Months::new(m);
                let t = years_between(d("2020-01-15"), date);
                (date, 4.0 - 0.5 * t)
            })
            .collect();
        let r = chow_at(&s, d("2021-01-01")).unwrap();
        assert_eq!(r.f_statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn too_few_points_for_any_candidate() {
        let s: Vec<Observation> = (0..10)
            .map(|i| (d("2024-01-05") + Duration::days(i * 9), i as f64 * 0.1 + (i % 3) as f64))
            .collect();
        assert_eq!(
            chow_scan(&s, Window::default(), 8),
            Err(ChowError::NoFeasibleCandidate(8))
        );
        assert!(matches!(
            chow_at(&s[..4], d("2024-01-20")),
            Err(ChowError::InfeasibleCandidate { n_pre: 2, .. })
        ));
    }

    #[test]
    fn month_grid() {
        let g = month_starts(d("2024-01-15"), d("2024-04-01"));
        assert_eq!(g, vec![d("2024-02-01"), d("2024-03-01"), d("2024-04-01")]);
        assert_eq!(month_starts(d("2024-01-01"), d("2024-01-01")), vec![d("2024-01-01")]);
    }

    #[test]
    fn scan_window_restricts_candidates() {
        let s: Vec<Observation> = (0..30)
            .map(|m| {
                let date = d("2020-01-10") + Months::new(m);
                let t = m as f64 / 12.0;
                let y = if m < 15 { 3.0 - 0.1 * t } else { 3.0 - 0.9 * t };
                (date, y + 0.01 * ((m * 7 % 5) as f64 - 2.0))
            })
            .collect();
        let w = Window {
            start: Some(d("2021-06-01")),
            end: Some(d("2021-09-30")),
        };
        let scan = chow_scan(&s, w, 5).unwrap();
        assert!(scan.trace.iter().all(|r| w.contains(r.break_date)));
        assert_eq!(scan.trace.len(), 4);
        let full = chow_scan(&s, Window::default(), 5).unwrap();
        assert_eq!(full.best.break_date, d("2021-04-01"));
        assert_eq!(full.best.n_pre + full.best.n_post, 30);
    }
}
