//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `max cᵀx` subject to rows `aᵀx {≤,=,≥} b` and `x ≥ 0`. Problems
//! here have at most a few dozen rows, so a full tableau is fine. Artificial
//! columns stay in the tableau after phase one (barred from entering) so the
//! row duals can be read off the final reduced costs.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;
const OPT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;

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
    /// Maximised.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per constraint, signed for the original orientation:
    /// `≥ 0` on `≤` rows, `≤ 0` on `≥` rows, free on `=` rows.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Column holding `B⁻¹ e_r` for each row.
    unit_col: Vec<usize>,
    first_artificial: usize,
    width: usize,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Reduced costs `c_B B⁻¹ A_j − c_j` for every column, plus the
    /// objective value in the last slot.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d: Vec<f64> = (0..=self.width).map(|j| if j < self.width { -cost[j] } else { 0.0 }).collect();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for (dj, v) in d.iter_mut().zip(row) {
                    *dj += cb * v;
                }
            }
        }
        d
    }

    /// Runs Bland's rule over columns `< allowed` until optimal.
    fn optimise(&mut self, cost: &[f64], allowed: usize) -> Result<()> {
        let limit = 50_000 + 50 * (self.rows.len() + self.width);
        loop {
            if self.pivots > limit {
                return Err(Error::Lp("pivot limit exceeded".into()));
            }
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..allowed).find(|&j| d[j] < -OPT_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a > PIVOT_TOL {
                    let ratio = row[self.width] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-15 || (ratio <= lratio + 1e-15 && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Lp("objective is unbounded".into()));
            };
            self.pivot(r, enter);
        }
    }
}

/// Solves the program, or reports infeasibility / unboundedness.
pub fn maximize(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.objective.len();
    let m = lp.constraints.len();
    if let Some(c) = lp.constraints.iter().find(|c| c.coeffs.len() != n) {
        return Err(Error::SizeMismatch { expected: n, found: c.coeffs.len() });
    }

    // Orient every row so its right-hand side is nonnegative.
    let mut sign = vec![1.0; m];
    let mut rel = Vec::with_capacity(m);
    for (r, c) in lp.constraints.iter().enumerate() {
        let flip = c.rhs < 0.0;
        sign[r] = if flip { -1.0 } else { 1.0 };
        rel.push(match (c.relation, flip) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (r, _) => r,
        });
    }
    let n_slack = rel.iter().filter(|r| **r != Relation::Eq).count();
    let n_art = rel.iter().filter(|r| **r != Relation::Le).count();
    let first_artificial = n + n_slack;
    let width = first_artificial + n_art;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut unit_col = Vec::with_capacity(m);
    let (mut next_slack, mut next_art) = (n, first_artificial);
    for (r, c) in lp.constraints.iter().enumerate() {
        let mut row = vec![0.0; width + 1];
        for (j, &a) in c.coeffs.iter().enumerate() {
            row[j] = sign[r] * a;
        }
        row[width] = sign[r] * c.rhs;
        match rel[r] {
            Relation::Le => {
                row[next_slack] = 1.0;
                basis.push(next_slack);
                unit_col.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_art] = 1.0;
                basis.push(next_art);
                unit_col.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = 1.0;
                basis.push(next_art);
                unit_col.push(next_art);
                next_art += 1;
            }
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, basis, unit_col, first_artificial, width, pivots: 0 };

    if n_art > 0 {
        let phase1: Vec<f64> = (0..width).map(|j| if j >= first_artificial { -1.0 } else { 0.0 }).collect();
        t.optimise(&phase1, width)?;
        let infeasibility = -t.reduced_costs(&phase1)[width];
        if infeasibility > FEAS_TOL {
            return Err(Error::Lp(format!("infeasible (phase-one residual {infeasibility:e})")));
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if t.basis[r] >= t.first_artificial {
                if let Some(c) = (0..t.first_artificial).find(|&j| t.rows[r][j].abs() > 1e-9) {
                    t.pivot(r, c);
                }
            }
        }
    }

    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&lp.objective);
    t.optimise(&cost, t.first_artificial)?;

    let d = t.reduced_costs(&cost);
    let mut x = vec![0.0; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rows[r][width];
        }
    }
    let duals = (0..m).map(|r| sign[r] * d[t.unit_col[r]]).collect();
    Ok(LpSolution { objective: d[width], x, duals, pivots: t.pivots })
}
