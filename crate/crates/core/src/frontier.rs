//! Input-oriented DEA efficiency and the Malmquist productivity index.
//!
//! For a DMU `o` evaluated against a reference set `J`, the envelopment
//! program is
//!
//! ```text
//! minimize    theta
//! subject to  sum_j lambda_j x_ij <= theta x_io     for every input i
//!             sum_j lambda_j y_rj >= y_ro           for every output r
//!             lambda_j >= 0         (+ sum_j lambda_j = 1 under VRS)
//! ```
//!
//! When `o` belongs to `J` the optimum lies in `(0, 1]`. Against another
//! period's reference set it can exceed 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::econometrics::spearman;
use crate::lp::{LinearProgram, LpError, Relation};
use crate::model::{BlendWeights, PriceRecord};

/// Efficiency at or above `1 - FRONTIER_TOL` counts as frontier.
pub const FRONTIER_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DeaError {
    #[error("no DMUs supplied")]
    Empty,
    #[error("DMU `{id}` has {inputs} inputs and {outputs} outputs; expected {want_in} and {want_out}")]
    Dimension {
        id: String,
        inputs: usize,
        outputs: usize,
        want_in: usize,
        want_out: usize,
    },
    #[error("DMU `{0}` has a non-positive or non-finite component")]
    NonPositive(String),
    #[error("envelopment program for `{id}` failed")]
    Solver { id: String, source: LpError },
    #[error("distance for `{0}` is zero or non-finite")]
    DegenerateDistance(String),
    #[error("perturbation factors: expected {expected}, got {got}")]
    PerturbationLength { expected: usize, got: usize },
    #[error("perturbed quality must stay positive (factor {0})")]
    InvalidPerturbation(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dmu {
    pub id: String,
    pub inputs: Vec<f64>,
    pub outputs: Vec<f64>,
}

impl Dmu {
    pub fn new(id: impl Into<String>, inputs: Vec<f64>, outputs: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            inputs,
            outputs,
        }
    }

    fn productivity(&self) -> f64 {
        self.outputs.iter().sum::<f64>() / self.inputs.iter().sum::<f64>()
    }
}

/// One DMU per record that carries a quality score: blended price in,
/// quality out. Records without quality are skipped.
pub fn dmus_from_records(records: &[PriceRecord], weights: BlendWeights) -> Vec<Dmu> {
    records
        .iter()
        .filter_map(|r| {
            let q = r.quality_score?;
            let price = r.blended(weights).ok()?;
            Some(Dmu::new(r.model_id.clone(), vec![price], vec![q]))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReturnsToScale {
    #[serde(rename = "CRS")]
    Constant,
    #[serde(rename = "VRS")]
    Variable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeaResult {
    pub ids: Vec<String>,
    pub theta: Vec<f64>,
    /// Indices of DMUs with `theta >= 1 - FRONTIER_TOL`.
    pub frontier: Vec<usize>,
    pub rts: ReturnsToScale,
}

impl DeaResult {
    pub fn mean_theta(&self) -> f64 {
        self.theta.iter().sum::<f64>() / self.theta.len() as f64
    }

    pub fn is_frontier(&self, i: usize) -> bool {
        self.theta[i] >= 1.0 - FRONTIER_TOL
    }
}

fn check_set(dmus: &[Dmu]) -> Result<(usize, usize), DeaError> {
    let first = dmus.first().ok_or(DeaError::Empty)?;
    let dims = (first.inputs.len(), first.outputs.len());
    for d in dmus {
        if (d.inputs.len(), d.outputs.len()) != dims || dims.0 == 0 || dims.1 == 0 {
            return Err(DeaError::Dimension {
                id: d.id.clone(),
                inputs: d.inputs.len(),
                outputs: d.outputs.len(),
                want_in: dims.0,
                want_out: dims.1,
            });
        }
        if d
            .inputs
            .iter()
            .chain(&d.outputs)
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(DeaError::NonPositive(d.id.clone()));
        }
    }
    Ok(dims)
}

fn envelopment(dmu: &Dmu, reference: &[Dmu], rts: ReturnsToScale) -> Result<f64, DeaError> {
    let n = reference.len();
    // variables: theta, lambda_1..lambda_n
    let mut objective = vec![0.0; n + 1];
    objective[0] = 1.0;
    let mut lp = LinearProgram::new(objective);
    for (i, &x_o) in dmu.inputs.iter().enumerate() {
        let mut row = Vec::with_capacity(n + 1);
        row.push(-x_o);
        row.extend(reference.iter().map(|r| r.inputs[i]));
        lp.add(row, Relation::Le, 0.0);
    }
    for (k, &y_o) in dmu.outputs.iter().enumerate() {
        let mut row = Vec::with_capacity(n + 1);
        row.push(0.0);
        row.extend(reference.iter().map(|r| r.outputs[k]));
        lp.add(row, Relation::Ge, y_o);
    }
    if rts == ReturnsToScale::Variable {
        let mut row = vec![1.0; n + 1];
        row[0] = 0.0;
        lp.add(row, Relation::Eq, 1.0);
    }
    let solution = lp.solve().map_err(|source| DeaError::Solver {
        id: dmu.id.clone(),
        source,
    })?;
    Ok(solution.objective)
}

/// Input-oriented efficiency of `dmu` against the technology spanned by
/// `reference`. Exceeds 1 when `dmu` lies outside that technology.
pub fn distance(dmu: &Dmu, reference: &[Dmu], rts: ReturnsToScale) -> Result<f64, DeaError> {
    let (n_in, n_out) = check_set(reference)?;
    check_set(std::slice::from_ref(dmu))?;
    if dmu.inputs.len() != n_in || dmu.outputs.len() != n_out {
        return Err(DeaError::Dimension {
            id: dmu.id.clone(),
            inputs: dmu.inputs.len(),
            outputs: dmu.outputs.len(),
            want_in: n_in,
            want_out: n_out,
        });
    }
    let d = envelopment(dmu, reference, rts)?;
    if !(d.is_finite() && d > 0.0) {
        return Err(DeaError::DegenerateDistance(dmu.id.clone()));
    }
    Ok(d)
}

fn efficiency(dmus: &[Dmu], rts: ReturnsToScale) -> Result<DeaResult, DeaError> {
    check_set(dmus)?;
    let theta = dmus
        .par_iter()
        .map(|d| envelopment(d, dmus, rts).map(|t| t.min(1.0)))
        .collect::<Result<Vec<_>, _>>()?;
    let frontier = (0..theta.len())
        .filter(|&i| theta[i] >= 1.0 - FRONTIER_TOL)
        .collect();
    Ok(DeaResult {
        ids: dmus.iter().map(|d| d.id.clone()).collect(),
        theta,
        frontier,
        rts,
    })
}

/// Constant-returns (CCR) efficiency of every DMU against the whole set.
pub fn ccr_efficiency(dmus: &[Dmu]) -> Result<DeaResult, DeaError> {
    efficiency(dmus, ReturnsToScale::Constant)
}

/// Variable-returns (BCC) efficiency: CCR plus `sum lambda = 1`.
pub fn bcc_efficiency(dmus: &[Dmu]) -> Result<DeaResult, DeaError> {
    efficiency(dmus, ReturnsToScale::Variable)
}

/// How a period's DMU set is reduced to the single unit whose distances
/// enter the Malmquist index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representative {
    /// Component-wise mean of inputs and outputs.
    #[default]
    Mean,
    /// The DMU with the highest output-to-input ratio.
    Frontier,
}

impl Representative {
    pub fn pick(self, dmus: &[Dmu]) -> Result<Dmu, DeaError> {
        check_set(dmus)?;
        Ok(match self {
            Representative::Frontier => dmus
                .iter()
                .reduce(|best, d| if d.productivity() > best.productivity() { d } else { best })
                .expect("non-empty set")
                .clone(),
            Representative::Mean => {
                let n = dmus.len() as f64;
                let mean = |pick: fn(&Dmu) -> &Vec<f64>| -> Vec<f64> {
                    let width = pick(&dmus[0]).len();
                    (0..width)
                        .map(|i| dmus.iter().map(|d| pick(d)[i]).sum::<f64>() / n)
                        .collect()
                };
                Dmu::new("mean", mean(|d| &d.inputs), mean(|d| &d.outputs))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MalmquistResult {
    pub ec: f64,
    pub tc: f64,
    pub mpi: f64,
    /// Period-a unit against period-a technology.
    pub d_a_a: f64,
    /// Period-b unit against period-a technology.
    pub d_a_b: f64,
    /// Period-a unit against period-b technology.
    pub d_b_a: f64,
    /// Period-b unit against period-b technology.
    pub d_b_b: f64,
}

impl MalmquistResult {
    pub fn from_distances(d_a_a: f64, d_a_b: f64, d_b_a: f64, d_b_b: f64) -> Self {
        let ec = d_b_b / d_a_a;
        let tc = ((d_a_b / d_b_b) * (d_a_a / d_b_a)).sqrt();
        Self {
            ec,
            tc,
            mpi: ec * tc,
            d_a_a,
            d_a_b,
            d_b_a,
            d_b_b,
        }
    }
}

/// Malmquist index from period `a` to period `b`: efficiency change
/// `D_b(b) / D_a(a)` times the geometric-mean frontier shift
/// `sqrt[(D_a(b) / D_b(b)) (D_a(a) / D_b(a))]`.
pub fn malmquist(
    period_a: &[Dmu],
    period_b: &[Dmu],
    rule: Representative,
    rts: ReturnsToScale,
) -> Result<MalmquistResult, DeaError> {
    let ra = rule.pick(period_a)?;
    let rb = rule.pick(period_b)?;
    let d_a_a = distance(&ra, period_a, rts)?;
    let d_a_b = distance(&rb, period_a, rts)?;
    let d_b_a = distance(&ra, period_b, rts)?;
    let d_b_b = distance(&rb, period_b, rts)?;
    Ok(MalmquistResult::from_distances(d_a_a, d_a_b, d_b_a, d_b_b))
}

#[derive(Debug, Clone, PartialEq)]
pub enum QualityPerturbation {
    /// Every quality output scaled by `1 + fraction`.
    Uniform(f64),
    /// DMU `i`'s outputs scaled by `1 + fractions[i]`.
    PerDmu(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivity {
    pub baseline: DeaResult,
    pub perturbed: DeaResult,
    /// Spearman correlation of perturbed against baseline efficiency.
    pub rho: f64,
}

/// Re-runs CCR with perturbed quality outputs and compares the rankings.
pub fn sensitivity_quality(dmus: &[Dmu], perturbation: &QualityPerturbation) -> Result<Sensitivity, DeaError> {
    let factors: Vec<f64> = match perturbation {
        QualityPerturbation::Uniform(f) => vec![*f; dmus.len()],
        QualityPerturbation::PerDmu(fs) => {
            if fs.len() != dmus.len() {
                return Err(DeaError::PerturbationLength {
                    expected: dmus.len(),
                    got: fs.len(),
                });
            }
            fs.clone()
        }
    };
    if let Some(&f) = factors.iter().find(|f| !(**f > -1.0 && f.is_finite())) {
        return Err(DeaError::InvalidPerturbation(f));
    }
    let perturbed_set: Vec<Dmu> = dmus
        .iter()
        .zip(&factors)
        .map(|(d, f)| Dmu {
            outputs: d.outputs.iter().map(|y| y * (1.0 + f)).collect(),
            ..d.clone()
        })
        .collect();
    let baseline = ccr_efficiency(dmus)?;
    let perturbed = ccr_efficiency(&perturbed_set)?;
    let rho = if dmus.len() < 2 {
        1.0
    } else {
        // solver noise below 1e-10 must not reorder tied scores
        let round = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| (x * 1e10).round() / 1e10).collect() };
        let (a, b) = (round(&baseline.theta), round(&perturbed.theta));
        if a == b {
            1.0
        } else {
            spearman(&a, &b).unwrap_or(f64::NAN)
        }
    };
    Ok(Sensitivity {
        baseline,
        perturbed,
        rho,
    })
}
