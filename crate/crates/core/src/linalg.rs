//! Least-squares kernel shared by the decay, break and regression modules.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("design has {rows} rows but {cols} columns; need more rows than columns")]
    Underdetermined { rows: usize, cols: usize },
    #[error("response has {got} entries, design has {expected} rows")]
    LengthMismatch { got: usize, expected: usize },
    #[error("design is rank deficient; dependent columns: {0:?}")]
    RankDeficient(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coef: DVector<f64>,
    pub residuals: DVector<f64>,
    pub ssr: f64,
    /// `(X'X)^-1`, from the triangular factor.
    pub xtx_inv: DMatrix<f64>,
}

/// Solves `min |y - X b|` through a Householder QR of `X`.
///
/// Columns whose diagonal entry in `R` falls below `1e-10` times the largest
/// diagonal magnitude are reported as dependent.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LeastSquares, LinalgError> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(LinalgError::LengthMismatch {
            got: y.len(),
            expected: n,
        });
    }
    if n < k || k == 0 {
        return Err(LinalgError::Underdetermined { rows: n, cols: k });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let dependent: Vec<usize> = (0..k)
        .filter(|&i| r[(i, i)].abs() <= 1e-10 * max_diag.max(f64::MIN_POSITIVE))
        .collect();
    if !dependent.is_empty() {
        return Err(LinalgError::RankDeficient(dependent));
    }
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .expect("non-singular triangular factor");
    let residuals = y - x * &coef;
    let ssr = residuals.norm_squared();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .expect("non-singular triangular factor");
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(LeastSquares {
        coef,
        residuals,
        ssr,
        xtx_inv,
    })
}

/// Intercept-and-slope fit of `y` on `x` using centered sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub ssr: f64,
    /// Total sum of squares of `y` about its mean.
    pub sst: f64,
    /// Sum of squares of `x` about its mean.
    pub sxx: f64,
}

/// Returns `None` when fewer than two points are given or `x` is constant.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    // shift by the first point so constant inputs give exact zeros
    let (x0, y0) = (x[0], y[0]);
    let nf = n as f64;
    let mx = x.iter().map(|v| v - x0).sum::<f64>() / nf;
    let my = y.iter().map(|v| v - y0).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - x0 - mx;
        let dy = b - y0 - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = (y0 + my) - slope * (x0 + mx);
    let ssr = (syy - slope * sxy).max(0.0);
    // recompute directly when cancellation dominates
    let ssr = if ssr < 1e-8 * syy.max(f64::MIN_POSITIVE) {
        x.iter()
            .zip(y)
            .map(|(a, b)| {
                let e = b - intercept - slope * a;
                e * e
            })
            .sum()
    } else {
        ssr
    };
    Some(LineFit {
        intercept,
        slope,
        ssr,
        sst: syy,
        sxx,
    })
}
