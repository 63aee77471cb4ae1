//! A small dense two-phase simplex solver.
//!
//! The equalized-odds programs are tiny (tens of rows, at most a few
//! thousand columns) and need bit-for-bit deterministic answers, so the
//! solver is self-contained: dense tableau, Dantzig pricing with a
//! lowest-index tie-break, and a permanent switch to Bland's rule if an
//! unusual amount of degeneracy shows up. All variables are nonnegative and
//! the objective is minimized.

use std::fmt;

/// Constraint satisfaction slack the caller may rely on.
pub const FEASIBILITY_TOL: f64 = 1e-9;

const OPT_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-8;
const REFRESH_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self {
            coeffs,
            relation: Relation::Le,
            rhs,
        }
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self {
            coeffs,
            relation: Relation::Ge,
            rhs,
        }
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self {
            coeffs,
            relation: Relation::Eq,
            rhs,
        }
    }
}

/// Minimize `minimize . x` subject to the constraints, `x >= 0`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub minimize: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpError {
    Infeasible,
    Unbounded,
    IterationLimit,
    Numerical,
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::Infeasible => write!(f, "the linear program is infeasible"),
            LpError::Unbounded => write!(f, "the linear program is unbounded"),
            LpError::IterationLimit => write!(f, "simplex iteration limit exceeded"),
            LpError::Numerical => write!(f, "simplex produced an inconsistent solution"),
        }
    }
}

impl std::error::Error for LpError {}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    n_structural: usize,
    cols: usize,
    artificial_start: usize,
}

impl Tableau {
    fn build(problem: &Problem) -> Self {
        let n = problem.minimize.len();
        let m = problem.constraints.len();
        let mut n_extra = 0;
        let mut n_art = 0;
        for c in &problem.constraints {
            let rel = effective_relation(c);
            match rel {
                Relation::Le => n_extra += 1,
                Relation::Ge => {
                    n_extra += 1;
                    n_art += 1;
                }
                Relation::Eq => n_art += 1,
            }
        }
        let artificial_start = n + n_extra;
        let cols = artificial_start + n_art;

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_extra = n;
        let mut next_art = artificial_start;
        for c in &problem.constraints {
            assert_eq!(c.coeffs.len(), n, "constraint width mismatch");
            let flip = c.rhs < 0.0;
            let sign = if flip { -1.0 } else { 1.0 };
            let rel = effective_relation(c);
            let mut row = vec![0.0; cols];
            for (j, &a) in c.coeffs.iter().enumerate() {
                row[j] = sign * a;
            }
            match rel {
                Relation::Le => {
                    row[next_extra] = 1.0;
                    basis.push(next_extra);
                    next_extra += 1;
                }
                Relation::Ge => {
                    row[next_extra] = -1.0;
                    next_extra += 1;
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
            rhs.push(sign * c.rhs);
        }
        Self {
            rows,
            rhs,
            basis,
            n_structural: n,
            cols,
            artificial_start,
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.rows[r][e];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rows[r][e] = 1.0;
        self.rhs[r] /= p;
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][e];
            if f == 0.0 {
                continue;
            }
            let pivot_row = std::mem::take(&mut self.rows[r]);
            for (v, &pr) in self.rows[i].iter_mut().zip(pivot_row.iter()) {
                *v -= f * pr;
            }
            self.rows[r] = pivot_row;
            self.rows[i][e] = 0.0;
            self.rhs[i] -= f * self.rhs[r];
            if self.rhs[i] < 0.0 && self.rhs[i] > -1e-10 {
                self.rhs[i] = 0.0;
            }
        }
        self.basis[r] = e;
    }

    /// Reduced costs priced out against the current basis. Recomputed from
    /// the tableau rather than updated incrementally so roundoff cannot
    /// accumulate across long pivot sequences.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut reduced = cost.to_vec();
        for i in 0..self.rows.len() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.rows[i];
                for (v, &a) in reduced.iter_mut().zip(row.iter()) {
                    *v -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            reduced[b] = 0.0;
        }
        reduced
    }

    /// Objective value of the current basic solution, read directly from the
    /// basis. This is the authoritative value; nothing incremental.
    fn objective_value(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(self.rhs.iter())
            .map(|(&b, &v)| cost[b] * v.max(0.0))
            .sum()
    }

    /// Runs simplex iterations for the given cost vector until optimality.
    /// Columns at `entering_limit` and beyond never enter the basis.
    fn optimize(&mut self, cost: &[f64], entering_limit: usize) -> Result<f64, LpError> {
        let m = self.rows.len();
        let mut reduced = self.reduced_costs(cost);

        let bland_switch = 200 + 10 * (m + self.cols);
        let hard_cap = 10_000 + 100 * (m + self.cols);
        let mut bland = false;
        let mut iters = 0usize;
        loop {
            let entering = if bland {
                (0..entering_limit).find(|&j| reduced[j] < -OPT_TOL)
            } else {
                let mut best: Option<usize> = None;
                for j in 0..entering_limit {
                    if reduced[j] < -OPT_TOL && best.is_none_or(|b| reduced[j] < reduced[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(e) = entering else {
                return Ok(self.objective_value(cost));
            };

            let mut min_ratio = f64::INFINITY;
            for i in 0..m {
                let a = self.rows[i][e];
                if a > PIVOT_TOL {
                    min_ratio = min_ratio.min(self.rhs[i].max(0.0) / a);
                }
            }
            if !min_ratio.is_finite() {
                return Err(LpError::Unbounded);
            }
            // Among rows tied at the minimum ratio, prefer the largest pivot
            // element: dividing a row by a near-zero pivot amplifies roundoff
            // catastrophically. Under Bland's rule the lowest basis index must
            // win instead to keep the anti-cycling guarantee.
            let mut leave: Option<usize> = None;
            for i in 0..m {
                let a = self.rows[i][e];
                if a > PIVOT_TOL && self.rhs[i].max(0.0) / a <= min_ratio + RATIO_TIE_TOL {
                    let replace = match leave {
                        None => true,
                        Some(r) => {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                a > self.rows[r][e]
                            }
                        }
                    };
                    if replace {
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                return Err(LpError::Unbounded);
            };

            let rc = reduced[e];
            self.pivot(r, e);
            let pivot_row = &self.rows[r];
            for (v, &a) in reduced.iter_mut().zip(pivot_row.iter()) {
                *v -= rc * a;
            }
            reduced[e] = 0.0;

            iters += 1;
            if iters.is_multiple_of(REFRESH_EVERY) {
                reduced = self.reduced_costs(cost);
            }
            if iters == bland_switch {
                bland = true;
                reduced = self.reduced_costs(cost);
            }
            if iters > hard_cap {
                return Err(LpError::IterationLimit);
            }
        }
    }

    /// Pivots artificial variables out of the basis after phase 1, dropping
    /// rows that turn out to be redundant. The replacement column is the one
    /// with the largest magnitude in the row, and anything smaller than 1e-7
    /// counts as a numerically dependent row: pivoting on it would scale the
    /// row by more than 1e7 and poison the rest of the tableau.
    fn remove_artificials(&mut self) {
        let mut drop_rows = Vec::new();
        for r in 0..self.rows.len() {
            if self.basis[r] < self.artificial_start {
                continue;
            }
            let col = (0..self.artificial_start)
                .max_by(|&a, &b| self.rows[r][a].abs().total_cmp(&self.rows[r][b].abs()))
                .filter(|&j| self.rows[r][j].abs() > 1e-7);
            match col {
                Some(j) => self.pivot(r, j),
                None => drop_rows.push(r),
            }
        }
        for &r in drop_rows.iter().rev() {
            self.rows.remove(r);
            self.rhs.remove(r);
            self.basis.remove(r);
        }
    }
}

fn effective_relation(c: &Constraint) -> Relation {
    if c.rhs >= 0.0 {
        c.relation
    } else {
        // The row will be negated so the right-hand side is nonnegative.
        match c.relation {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    }
}

/// Solves the problem with the two-phase simplex method.
pub fn solve(problem: &Problem) -> Result<Solution, LpError> {
    let mut t = Tableau::build(problem);

    if t.artificial_start < t.cols {
        let mut phase1 = vec![0.0; t.cols];
        for c in phase1.iter_mut().skip(t.artificial_start) {
            *c = 1.0;
        }
        let z1 = t.optimize(&phase1, t.artificial_start)?;
        if z1 > PHASE1_TOL {
            return Err(LpError::Infeasible);
        }
        t.remove_artificials();
    }

    let mut phase2 = vec![0.0; t.cols];
    phase2[..t.n_structural].copy_from_slice(&problem.minimize);
    t.optimize(&phase2, t.artificial_start)?;

    let mut x = vec![0.0; t.n_structural];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < t.n_structural {
            x[b] = t.rhs[i].max(0.0);
        }
    }
    verify(problem, &x)?;
    let objective = problem
        .minimize
        .iter()
        .zip(x.iter())
        .map(|(c, v)| c * v)
        .sum();
    Ok(Solution { x, objective })
}

/// Defensive residual check: the returned point must satisfy every
/// constraint within a loose multiple of [`FEASIBILITY_TOL`].
fn verify(problem: &Problem, x: &[f64]) -> Result<(), LpError> {
    for c in &problem.constraints {
        let lhs: f64 = c.coeffs.iter().zip(x.iter()).map(|(a, v)| a * v).sum();
        let scale = 1.0 + c.rhs.abs() + c.coeffs.iter().map(|a| a.abs()).fold(0.0, f64::max);
        let slack = 100.0 * FEASIBILITY_TOL * scale;
        let ok = match c.relation {
            Relation::Le => lhs <= c.rhs + slack,
            Relation::Ge => lhs >= c.rhs - slack,
            Relation::Eq => (lhs - c.rhs).abs() <= slack,
        };
        if !ok {
            return Err(LpError::Numerical);
        }
    }
    Ok(())
}
