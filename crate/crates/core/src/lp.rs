//! Dense two-phase primal simplex.
//!
//! Solves `minimize c'x  subject to  A x {<=, >=, =} b,  x >= 0`.
//! Pivoting uses Bland's rule (lowest-index entering column, lowest-index
//! leaving basic variable on ratio ties), so the method cannot cycle.
//! Meant for the small programs DEA produces: a handful of rows and at
//! most a few hundred columns.

use thiserror::Error;

/// Feasibility and optimality tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("program is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("program is unbounded")]
    Unbounded,
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("constraint {row} has {got} coefficients, expected {expected}")]
    DimensionMismatch {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    /// Minimized.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            constraints: Vec::new(),
            max_iterations: 50_000,
        }
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    pub fn solve(&self) -> Result<Solution, LpError> {
        let n = self.objective.len();
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        for (row, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::DimensionMismatch {
                    row,
                    got: c.coeffs.len(),
                    expected: n,
                });
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(LpError::NonFinite("constraints"));
            }
        }
        Tableau::build(self).run(self.max_iterations)
    }
}

struct Tableau {
    /// m rows of `cols + 1` entries; the last entry is the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_orig: usize,
    /// First artificial column; artificials occupy `art_start..cols`.
    art_start: usize,
    cols: usize,
    cost: Vec<f64>,
    rhs_scale: f64,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.objective.len();
        // flip rows so every rhs is non-negative
        let normalized: Vec<(Vec<f64>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let rel = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|v| -v).collect(), rel, -c.rhs)
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs)
                }
            })
            .collect();

        let n_slack = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Eq)
            .count();
        let n_art = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Le)
            .count();
        let art_start = n + n_slack;
        let cols = art_start + n_art;

        let mut rows = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let (mut slack, mut art) = (n, art_start);
        for (coeffs, rel, rhs) in &normalized {
            let mut row = vec![0.0; cols + 1];
            row[..n].copy_from_slice(coeffs);
            row[cols] = *rhs;
            match rel {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
            }
            rows.push(row);
        }
        let rhs_scale = normalized.iter().map(|(_, _, b)| b.abs()).sum::<f64>().max(1.0);
        let mut cost = vec![0.0; cols];
        cost[..n].copy_from_slice(&lp.objective);
        Tableau {
            rows,
            basis,
            n_orig: n,
            art_start,
            cols,
            cost,
            rhs_scale,
        }
    }

    fn reduced_costs(&self, cost: &[f64], allowed: usize) -> Vec<f64> {
        let mut r = cost[..allowed].to_vec();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for (rj, aj) in r.iter_mut().zip(row) {
                    *rj -= cb * aj;
                }
            }
        }
        r
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let width = self.cols + 1;
        let p = self.rows[pr][pc];
        for v in self.rows[pr].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[pr].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == pr {
                continue;
            }
            let f = row[pc];
            if f != 0.0 {
                for j in 0..width {
                    row[j] -= f * pivot_row[j];
                }
                row[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Bland-rule simplex over columns `0..allowed` against `cost`.
    fn optimize(&mut self, cost: &[f64], allowed: usize, budget: &mut usize) -> Result<(), LpError> {
        loop {
            let reduced = self.reduced_costs(cost, allowed);
            let Some(enter) = (0..allowed).find(|&j| reduced[j] < -FEASIBILITY_TOL) else {
                return Ok(());
            };
            let rhs = self.cols;
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a > PIVOT_TOL {
                    let ratio = row[rhs] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_TOL
                                || (ratio <= lr + PIVOT_TOL && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            if *budget == 0 {
                return Err(LpError::IterationLimit(0));
            }
            *budget -= 1;
            self.pivot(pr, enter);
        }
    }

    fn run(mut self, max_iterations: usize) -> Result<Solution, LpError> {
        let mut budget = max_iterations;
        let limit = |e: LpError| match e {
            LpError::IterationLimit(_) => LpError::IterationLimit(max_iterations),
            other => other,
        };

        if self.art_start < self.cols {
            let mut phase_one = vec![0.0; self.cols];
            for c in phase_one.iter_mut().skip(self.art_start) {
                *c = 1.0;
            }
            self.optimize(&phase_one, self.cols, &mut budget).map_err(limit)?;
            let residual: f64 = self
                .rows
                .iter()
                .zip(&self.basis)
                .filter(|(_, &b)| b >= self.art_start)
                .map(|(row, _)| row[self.cols])
                .sum();
            if residual > FEASIBILITY_TOL * self.rhs_scale {
                return Err(LpError::Infeasible(residual));
            }
            self.evict_artificials();
        }

        let cost = self.cost.clone();
        self.optimize(&cost, self.art_start, &mut budget).map_err(limit)?;

        let mut x = vec![0.0; self.n_orig];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.n_orig {
                x[b] = row[self.cols].max(0.0);
            }
        }
        let objective = x.iter().zip(&self.cost).map(|(a, c)| a * c).sum();
        Ok(Solution {
            x,
            objective,
            iterations: max_iterations - budget,
        })
    }

    /// Pivots zero-level artificials out of the basis; rows with no
    /// structural entry left are redundant and dropped.
    fn evict_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.art_start {
                let col = (0..self.art_start).find(|&j| self.rows[i][j].abs() > PIVOT_TOL);
                match col {
                    Some(j) => self.pivot(i, j),
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }
}
