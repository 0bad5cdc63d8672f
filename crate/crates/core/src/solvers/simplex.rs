//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problems have the form `max c·x` s.t. `A x = b`, `G x <= h`, `x >= 0`.

use serde::{Deserialize, Serialize};

use super::linsys::{solve, LinearSolution};
use crate::error::{Error, Result};

/// Largest number of variables or constraints accepted.
pub const LP_SIZE_LIMIT: usize = 10_000;

/// Feasibility tolerance for returned optimal points.
pub const LP_FEAS_TOL: f64 = 1e-8;

const PIVOT_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 5_000_000;
const REFACTOR_ROUNDS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    eq_rows: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
    ub_rows: Vec<Vec<f64>>,
    ub_rhs: Vec<f64>,
}

impl LinearProgram {
    /// A program maximizing `objective · x` over `x >= 0`.
    pub fn new(objective: Vec<f64>) -> Result<Self> {
        if objective.is_empty() {
            return Err(Error::invalid("linear program needs at least one variable"));
        }
        if objective.len() > LP_SIZE_LIMIT {
            return Err(Error::capacity(format!(
                "{} variables exceed the limit of {LP_SIZE_LIMIT}",
                objective.len()
            )));
        }
        finite(&objective, "objective")?;
        Ok(LinearProgram {
            objective,
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            ub_rows: Vec::new(),
            ub_rhs: Vec::new(),
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.eq_rows.len() + self.ub_rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Adds `row · x = rhs`.
    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        self.check_row(&row, rhs)?;
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        Ok(())
    }

    /// Adds `row · x <= rhs`.
    pub fn add_ub(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        self.check_row(&row, rhs)?;
        self.ub_rows.push(row);
        self.ub_rhs.push(rhs);
        Ok(())
    }

    fn check_row(&self, row: &[f64], rhs: f64) -> Result<()> {
        if row.len() != self.num_vars() {
            return Err(Error::dim(format!(
                "constraint has {} coefficients, program has {} variables",
                row.len(),
                self.num_vars()
            )));
        }
        if self.num_constraints() >= LP_SIZE_LIMIT {
            return Err(Error::capacity(format!("more than {LP_SIZE_LIMIT} constraints")));
        }
        finite(row, "constraint")?;
        finite(&[rhs], "right-hand side")
    }

    /// Largest violation of any constraint (including `x >= 0`) at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |r: &[f64]| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let eq = self.eq_rows.iter().zip(&self.eq_rhs).map(|(r, b)| (dot(r) - b).abs());
        let ub = self
            .ub_rows
            .iter()
            .zip(&self.ub_rhs)
            .map(|(r, h)| (dot(r) - h).max(0.0));
        let lb = x.iter().map(|v| (-v).max(0.0));
        eq.chain(ub).chain(lb).fold(0.0, f64::max)
    }
}

fn finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{what} contains a non-finite value")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Optimal point; empty unless `status` is optimal.
    pub solution: Vec<f64>,
    /// `c · x` at the optimum; NaN unless optimal.
    pub objective_value: f64,
}

impl SolveResult {
    fn failed(status: SolveStatus) -> Self {
        SolveResult {
            status,
            solution: Vec::new(),
            objective_value: f64::NAN,
        }
    }
}

struct Tableau {
    /// Row-major `rows x (cols + 1)`, the last column holding the right-hand side.
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    basis: Vec<usize>,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.data[pr * w + pc];
        for c in 0..w {
            self.data[pr * w + c] /= p;
        }
        self.data[pr * w + pc] = 1.0;
        let (before, rest) = self.data.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[pc];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Rebuilds the rows from `lp` by Gauss-Jordan elimination on the current
    /// basis columns. Returns false, leaving the tableau untouched, if the
    /// basis is numerically singular or the rebuilt point is infeasible.
    fn refactor(&mut self, lp: &LinearProgram, row_ids: &[usize]) -> bool {
        let n = lp.num_vars();
        let n_ub = lp.ub_rows.len();
        let w = self.cols + 1;
        let mut fresh = Tableau {
            data: vec![0.0; self.rows * w],
            rows: self.rows,
            cols: self.cols,
            basis: vec![usize::MAX; self.rows],
        };
        for (r, &row) in row_ids.iter().enumerate() {
            let base = r * w;
            let (coef, rhs) = if row < n_ub {
                fresh.data[base + n + row] = 1.0;
                (&lp.ub_rows[row], lp.ub_rhs[row])
            } else {
                (&lp.eq_rows[row - n_ub], lp.eq_rhs[row - n_ub])
            };
            fresh.data[base..base + n].copy_from_slice(coef);
            fresh.data[base + self.cols] = rhs;
        }
        let mut used = vec![false; self.rows];
        for &col in &self.basis {
            let Some(pr) = (0..self.rows)
                .filter(|&r| !used[r])
                .max_by(|&a, &b| fresh.at(a, col).abs().total_cmp(&fresh.at(b, col).abs()))
            else {
                return false;
            };
            if fresh.at(pr, col).abs() <= PIVOT_TOL {
                return false;
            }
            fresh.pivot(pr, col);
            used[pr] = true;
        }
        for r in 0..fresh.rows {
            let v = fresh.rhs(r);
            if v < -LP_FEAS_TOL {
                return false;
            }
            if v < 0.0 {
                fresh.data[r * w + fresh.cols] = 0.0;
            }
        }
        *self = fresh;
        true
    }

    fn reduced_costs(&self, cost: &[f64], allowed: &[bool]) -> Vec<f64> {
        // d_j = c_j - c_B · column_j; positive means improving.
        let mut d: Vec<f64> = cost.to_vec();
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (j, dj) in d.iter_mut().enumerate() {
                    *dj -= cb * self.at(r, j);
                }
            }
        }
        for (j, dj) in d.iter_mut().enumerate() {
            if !allowed[j] {
                *dj = 0.0;
            }
        }
        d
    }

    /// Maximizes `cost · x` from the current basic feasible solution.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool], pivots: &mut usize) -> Result<Phase> {
        let scale = 1.0 + cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let tol = 1e-10 * scale;
        loop {
            let d = self.reduced_costs(cost, allowed);
            let Some(enter) = (0..self.cols).find(|&j| d[j] > tol) else {
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let closer = ratio < lratio - 1e-12;
                            let tie = (ratio - lratio).abs() <= 1e-12 && self.basis[r] < self.basis[lr];
                            if closer || tie {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((leave, _)) = leave else {
                return Ok(Phase::Unbounded);
            };
            self.pivot(leave, enter);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Error::Lp(format!("no convergence after {MAX_PIVOTS} pivots")));
            }
        }
    }
}

/// Recomputes the basic solution from the original data, discarding the
/// rounding error the tableau accumulated over many pivots.
fn resolve_basis(lp: &LinearProgram, basis: &[usize], row_ids: &[usize]) -> Option<Vec<f64>> {
    let n = lp.num_vars();
    let n_ub = lp.ub_rows.len();
    let column = |row: usize, j: usize| -> f64 {
        if j < n {
            if row < n_ub {
                lp.ub_rows[row][j]
            } else {
                lp.eq_rows[row - n_ub][j]
            }
        } else if j - n == row {
            1.0
        } else {
            0.0
        }
    };
    let a: Vec<Vec<f64>> = row_ids
        .iter()
        .map(|&row| basis.iter().map(|&j| column(row, j)).collect())
        .collect();
    let b: Vec<f64> = row_ids
        .iter()
        .map(|&row| {
            if row < n_ub {
                lp.ub_rhs[row]
            } else {
                lp.eq_rhs[row - n_ub]
            }
        })
        .collect();
    let LinearSolution::Unique(xb) = solve(&a, &b) else {
        return None;
    };
    let mut x = vec![0.0; n];
    for (&j, &v) in basis.iter().zip(&xb) {
        if v < -LP_FEAS_TOL {
            return None;
        }
        if j < n {
            x[j] = v.max(0.0);
        }
    }
    Some(x)
}

/// Solves `lp` with the two-phase simplex method.
pub fn simplex_solve(lp: &LinearProgram) -> Result<SolveResult> {
    let n = lp.num_vars();
    let n_ub = lp.ub_rows.len();
    let rows = lp.num_constraints();
    if rows == 0 {
        // Only x >= 0: optimal at 0 unless some objective coefficient is positive.
        if lp.objective.iter().any(|&c| c > 0.0) {
            return Ok(SolveResult::failed(SolveStatus::Unbounded));
        }
        return Ok(SolveResult {
            status: SolveStatus::Optimal,
            solution: vec![0.0; n],
            objective_value: 0.0,
        });
    }

    // Columns: originals, one slack per inequality, then artificials as needed.
    let n_art = lp.eq_rows.len() + lp.ub_rhs.iter().filter(|&&h| h < 0.0).count();
    let cols = n + n_ub + n_art;
    let w = cols + 1;
    let mut t = Tableau {
        data: vec![0.0; rows * w],
        rows,
        cols,
        basis: vec![0; rows],
    };
    let mut art = n + n_ub;
    for (r, (row, &h)) in lp.ub_rows.iter().zip(&lp.ub_rhs).enumerate() {
        let sign = if h < 0.0 { -1.0 } else { 1.0 };
        let base = r * w;
        for (j, &a) in row.iter().enumerate() {
            t.data[base + j] = sign * a;
        }
        t.data[base + n + r] = sign;
        t.data[base + cols] = sign * h;
        if h < 0.0 {
            t.data[base + art] = 1.0;
            t.basis[r] = art;
            art += 1;
        } else {
            t.basis[r] = n + r;
        }
    }
    for (k, (row, &b)) in lp.eq_rows.iter().zip(&lp.eq_rhs).enumerate() {
        let r = n_ub + k;
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let base = r * w;
        for (j, &a) in row.iter().enumerate() {
            t.data[base + j] = sign * a;
        }
        t.data[base + cols] = sign * b;
        t.data[base + art] = 1.0;
        t.basis[r] = art;
        art += 1;
    }

    let mut pivots = 0;
    let first_art = n + n_ub;
    let mut row_ids: Vec<usize> = (0..rows).collect();
    if n_art > 0 {
        let mut cost = vec![0.0; cols];
        cost[first_art..].iter_mut().for_each(|c| *c = -1.0);
        let allowed = vec![true; cols];
        t.optimize(&cost, &allowed, &mut pivots)?;
        let rhs_scale = 1.0 + (0..rows).map(|r| t.rhs(r).abs()).fold(0.0, f64::max);
        let infeasibility: f64 = (0..rows).filter(|&r| t.basis[r] >= first_art).map(|r| t.rhs(r)).sum();
        if infeasibility > 1e-9 * rhs_scale {
            return Ok(SolveResult::failed(SolveStatus::Infeasible));
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        let mut r = 0;
        while r < t.rows {
            if t.basis[r] >= first_art {
                let pc = (0..first_art)
                    .filter(|&j| t.at(r, j).abs() > 1e-9)
                    .max_by(|&a, &b| t.at(r, a).abs().total_cmp(&t.at(r, b).abs()));
                match pc {
                    Some(pc) => {
                        t.pivot(r, pc);
                        r += 1;
                    }
                    None => {
                        // Redundant constraint.
                        t.data.drain(r * w..(r + 1) * w);
                        t.basis.remove(r);
                        row_ids.remove(r);
                        t.rows -= 1;
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&lp.objective);
    let allowed: Vec<bool> = (0..cols).map(|j| j < first_art).collect();
    // Long pivot sequences drift; rebuild the tableau from the original data
    // at the final basis and resume until the optimum survives a rebuild.
    for _ in 0..REFACTOR_ROUNDS {
        if let Phase::Unbounded = t.optimize(&cost, &allowed, &mut pivots)? {
            return Ok(SolveResult::failed(SolveStatus::Unbounded));
        }
        if !t.refactor(lp, &row_ids) {
            break;
        }
        let tol = 1e-10 * (1.0 + cost.iter().fold(0.0f64, |m, c| m.max(c.abs())));
        let d = t.reduced_costs(&cost, &allowed);
        if d.iter().all(|&v| v <= tol) {
            break;
        }
    }
    let mut x = vec![0.0; n];
    for r in 0..t.rows {
        if t.basis[r] < n {
            x[t.basis[r]] = t.rhs(r).max(0.0);
        }
    }
    if lp.max_violation(&x) > LP_FEAS_TOL {
        if let Some(refined) = resolve_basis(lp, &t.basis, &row_ids) {
            x = refined;
        }
    }
    let violation = lp.max_violation(&x);
    if violation > LP_FEAS_TOL {
        return Err(Error::Lp(format!(
            "optimal point violates constraints by {violation:e}"
        )));
    }
    let objective_value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(SolveResult {
        status: SolveStatus::Optimal,
        solution: x,
        objective_value,
    })
}
