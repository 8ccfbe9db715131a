//! Bounded-variable primal simplex on a dense tableau.
//!
//! Rows are brought to the form `a^T v + s = b` with one slack per row
//! (`s >= 0` for `<=` rows, `s = 0` for equalities), so row duals can be read
//! off the slack reduced costs. A phase-one problem over artificial variables
//! finds a starting basis. Pricing is Dantzig's rule; after a run of
//! degenerate pivots the solver switches to Bland's rule until the objective
//! moves again.

use crate::error::{Error, Result};
use crate::linalg::Lu;

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;
/// Iteration cap; reaching it is reported as a cycling failure.
pub const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

/// `optimize c^T v  s.t.  rows,  lower <= v <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Constraint>,
}

impl LinearProgram {
    /// A program with `objective.len()` variables, all bounded to `[0, inf)`.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { sense, objective, lower: vec![0.0; n], upper: vec![f64::INFINITY; n], rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, kind: RowKind, rhs: f64) {
        self.rows.push(Constraint { coeffs, kind, rhs });
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.add_row(coeffs, RowKind::Le, rhs);
    }

    pub fn add_ge(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.add_row(coeffs, RowKind::Ge, rhs);
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.add_row(coeffs, RowKind::Eq, rhs);
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Validation("bound vectors do not match the objective".into()));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::Validation(format!("variable {j} has empty bounds")));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.coeffs.iter().any(|&(j, v)| j >= n || !v.is_finite()) || !r.rhs.is_finite() {
                return Err(Error::Validation(format!("row {i} is malformed")));
            }
        }
        Ok(())
    }

    /// Largest violation of rows and bounds at `v`.
    pub fn max_violation(&self, v: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &x) in v.iter().enumerate() {
            worst = worst.max(self.lower[j] - x).max(x - self.upper[j]);
        }
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * v[j]).sum();
            let viol = match r.kind {
                RowKind::Le => lhs - r.rhs,
                RowKind::Ge => r.rhs - lhs,
                RowKind::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values (meaningful when optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    /// Shadow prices: derivative of the optimal objective with respect to
    /// each row's right-hand side, in the program's own sense.
    pub row_duals: Vec<f64>,
    /// Reduced costs of the structural variables, in the program's own sense.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    fn status_only(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            row_duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            iterations,
        }
    }

    /// Value of the bound-adjusted dual objective `b^T y + sum_j d_j v_j`.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let rows: f64 = lp.rows.iter().zip(&self.row_duals).map(|(r, y)| r.rhs * y).sum();
        let bounds: f64 = self.reduced_costs.iter().zip(&self.x).map(|(d, v)| d * v).sum();
        rows + bounds
    }
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// `B^{-1} A`, row-major.
    t: Vec<f64>,
    /// Internal rows of `A` (structural, slack, artificial columns).
    a_rows: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Current value of every column; authoritative for nonbasic columns.
    x: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<Option<usize>>,
    xb: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    is_artificial: Vec<bool>,
    iterations: usize,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Continue,
}

impl Tableau {
    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.ncols;
        &mut self.t[i * c..(i + 1) * c]
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn recompute_reduced_costs(&mut self) {
        let mut d = self.cost.clone();
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
            for (dj, tij) in d.iter_mut().zip(row) {
                *dj -= cb * tij;
            }
        }
        for &j in &self.basis {
            d[j] = 0.0;
        }
        self.d = d;
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.upper[j] - self.lower[j] <= 0.0
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            if self.pos[j].is_some() || self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j];
            let xj = self.x[j];
            let can_up = xj < self.upper[j];
            let can_down = xj > self.lower[j];
            let dir = if dj < -OPT_TOL && can_up {
                1.0
            } else if dj > OPT_TOL && can_down {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            let score = dj.abs();
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let nc = self.ncols;
        let piv = self.at(r, j);
        {
            let row = self.row_mut(r);
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[j] = 1.0;
        }
        let prow: Vec<(usize, f64)> = self.t[r * nc..(r + 1) * nc]
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, v)| (k, *v))
            .collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * nc..(i + 1) * nc];
            for &(k, v) in &prow {
                row[k] -= f * v;
            }
            row[j] = 0.0;
        }
        let f = self.d[j];
        if f != 0.0 {
            for &(k, v) in &prow {
                self.d[k] -= f * v;
            }
            self.d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.pos[leaving] = None;
        self.basis[r] = j;
        self.pos[j] = Some(r);
    }

    /// One primal simplex iteration.
    fn step(&mut self, bland: bool, degenerate: &mut bool) -> StepOutcome {
        let Some((j, dir)) = self.choose_entering(bland) else {
            return StepOutcome::Optimal;
        };
        let mut limit = self.upper[j] - self.lower[j];
        let mut leave: Option<(usize, bool)> = None;
        let mut leave_mag = 0.0;
        for i in 0..self.m {
            let tij = self.at(i, j);
            if tij.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -dir * tij;
            let bi = self.basis[i];
            let (room, to_upper) = if rate < 0.0 {
                if self.lower[bi] == f64::NEG_INFINITY {
                    continue;
                }
                (((self.xb[i] - self.lower[bi]).max(0.0)) / -rate, false)
            } else {
                if self.upper[bi] == f64::INFINITY {
                    continue;
                }
                (((self.upper[bi] - self.xb[i]).max(0.0)) / rate, true)
            };
            let better = match leave {
                None => room < limit,
                Some((li, _)) => {
                    if room < limit - 1e-12 * (1.0 + limit.abs()) {
                        true
                    } else if room <= limit + 1e-12 * (1.0 + limit.abs()) {
                        if bland {
                            bi < self.basis[li]
                        } else {
                            tij.abs() > leave_mag
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                limit = room.min(limit);
                leave = Some((i, to_upper));
                leave_mag = tij.abs();
            }
        }
        if limit == f64::INFINITY {
            return StepOutcome::Unbounded;
        }
        *degenerate = limit <= 1e-12;
        let t = limit;
        if t > 0.0 {
            for i in 0..self.m {
                let tij = self.at(i, j);
                if tij != 0.0 {
                    self.xb[i] -= dir * tij * t;
                }
            }
        }
        let new_xj = self.x[j] + dir * t;
        match leave {
            None => {
                // bound flip
                self.x[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
            }
            Some((r, to_upper)) => {
                let bi = self.basis[r];
                self.x[bi] = if to_upper { self.upper[bi] } else { self.lower[bi] };
                self.pivot(r, j);
                self.xb[r] = new_xj;
                self.x[j] = new_xj;
            }
        }
        StepOutcome::Continue
    }

    fn run(&mut self) -> Result<bool> {
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return Err(Error::Solver {
                    message: "simplex iteration cap reached (possible cycling)".into(),
                    iterations: self.iterations,
                });
            }
            self.iterations += 1;
            let bland = degenerate_run >= DEGENERATE_RUN;
            let mut degenerate = false;
            match self.step(bland, &mut degenerate) {
                StepOutcome::Optimal => return Ok(true),
                StepOutcome::Unbounded => return Ok(false),
                StepOutcome::Continue => {
                    if degenerate {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                }
            }
        }
    }

    fn basis_lu(&self) -> Option<Lu> {
        let m = self.m;
        let mut bmat = vec![0.0; m * m];
        let mut col_of = vec![usize::MAX; self.ncols];
        for (k, &j) in self.basis.iter().enumerate() {
            col_of[j] = k;
        }
        for (i, row) in self.a_rows.iter().enumerate() {
            for &(j, v) in row {
                let k = col_of[j];
                if k != usize::MAX {
                    bmat[i * m + k] = v;
                }
            }
        }
        Lu::factor(m, bmat, 1e-14)
    }

    /// Recomputes basic values and reduced costs from the original rows.
    /// Rebuilds the whole tableau when drift exceeds tolerance. Returns
    /// whether the current basis is still primal and dual feasible.
    fn refine(&mut self) -> bool {
        let m = self.m;
        if m == 0 {
            self.recompute_reduced_costs();
            return true;
        }
        let Some(lu) = self.basis_lu() else {
            return true;
        };
        let mut rhs = self.b.clone();
        for (i, row) in self.a_rows.iter().enumerate() {
            for &(j, v) in row {
                if self.pos[j].is_none() {
                    rhs[i] -= v * self.x[j];
                }
            }
        }
        let xb = lu.solve(&rhs);
        let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        let y = lu.solve_transpose(&cb);
        let mut d = self.cost.clone();
        for (i, row) in self.a_rows.iter().enumerate() {
            for &(j, v) in row {
                d[j] -= v * y[i];
            }
        }
        for &j in &self.basis {
            d[j] = 0.0;
        }
        let drift = xb.iter().zip(&self.xb).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        let ddrift = d.iter().zip(&self.d).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        self.xb = xb;
        self.d = d;
        if drift > 1e-7 || ddrift > 1e-7 {
            // rebuild B^{-1} A column by column
            let nc = self.ncols;
            let mut cols = vec![vec![0.0; m]; nc];
            for (i, row) in self.a_rows.iter().enumerate() {
                for &(j, v) in row {
                    cols[j][i] = v;
                }
            }
            for (j, col) in cols.iter().enumerate() {
                if col.iter().all(|v| *v == 0.0) {
                    for i in 0..m {
                        self.t[i * nc + j] = 0.0;
                    }
                    continue;
                }
                let s = lu.solve(col);
                for i in 0..m {
                    self.t[i * nc + j] = s[i];
                }
            }
        }
        let primal_ok = (0..m).all(|i| {
            let j = self.basis[i];
            let tol = 1e-8 * (1.0 + self.xb[i].abs());
            self.xb[i] >= self.lower[j] - tol && self.xb[i] <= self.upper[j] + tol
        });
        let dual_ok = (0..self.ncols).all(|j| {
            if self.pos[j].is_some() || self.is_fixed(j) {
                return true;
            }
            let dj = self.d[j];
            !((dj < -1e-8 && self.x[j] < self.upper[j]) || (dj > 1e-8 && self.x[j] > self.lower[j]))
        });
        primal_ok && dual_ok
    }

    fn objective(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.ncols {
            if self.pos[j].is_none() {
                s += self.cost[j] * self.x[j];
            }
        }
        for i in 0..self.m {
            s += self.cost[self.basis[i]] * self.xb[i];
        }
        s
    }

    fn value(&self, j: usize) -> f64 {
        match self.pos[j] {
            Some(i) => self.xb[i],
            None => self.x[j],
        }
    }
}

/// Solves a linear program to optimality, infeasibility or unboundedness.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.rows.len();
    let sense_sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    // internal rows: a^T v + s = b with Ge rows negated
    let mut row_sign = vec![1.0; m];
    let mut a_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
    let mut b = vec![0.0; m];
    let mut slack_upper = vec![f64::INFINITY; m];
    for (i, r) in lp.rows.iter().enumerate() {
        let s = if r.kind == RowKind::Ge { -1.0 } else { 1.0 };
        row_sign[i] = s;
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(r.coeffs.len() + 1);
        let mut coeffs = r.coeffs.clone();
        coeffs.sort_by_key(|c| c.0);
        for (j, v) in coeffs {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += s * v,
                _ => merged.push((j, s * v)),
            }
        }
        merged.retain(|c| c.1 != 0.0);
        merged.push((n + i, 1.0));
        a_rows.push(merged);
        b[i] = s * r.rhs;
        if r.kind == RowKind::Eq {
            slack_upper[i] = 0.0;
        }
    }

    let mut x0 = vec![0.0; n];
    for j in 0..n {
        x0[j] = if lp.lower[j].is_finite() {
            lp.lower[j]
        } else if lp.upper[j].is_finite() {
            lp.upper[j]
        } else {
            0.0
        };
    }
    let residual: Vec<f64> = a_rows
        .iter()
        .zip(&b)
        .map(|(row, bi)| bi - row.iter().filter(|(j, _)| *j < n).map(|&(j, v)| v * x0[j]).sum::<f64>())
        .collect();

    let mut needs_art = vec![None; m];
    let mut na = 0;
    for i in 0..m {
        let r = residual[i];
        let ok = r >= -FEAS_TOL && r <= slack_upper[i] + FEAS_TOL;
        if !ok {
            needs_art[i] = Some(if r > 0.0 { 1.0 } else { -1.0 });
            na += 1;
        }
    }
    let ncols = n + m + na;
    let mut lower = Vec::with_capacity(ncols);
    let mut upper = Vec::with_capacity(ncols);
    lower.extend_from_slice(&lp.lower);
    upper.extend_from_slice(&lp.upper);
    lower.extend(std::iter::repeat(0.0).take(m));
    upper.extend_from_slice(&slack_upper);
    lower.extend(std::iter::repeat(0.0).take(na));
    upper.extend(std::iter::repeat(f64::INFINITY).take(na));
    let mut is_artificial = vec![false; ncols];
    let mut x = vec![0.0; ncols];
    x[..n].copy_from_slice(&x0);

    let mut basis = vec![0usize; m];
    let mut pos = vec![None; ncols];
    let mut xb = vec![0.0; m];
    let mut t = vec![0.0; m * ncols];
    let mut next_art = n + m;
    for i in 0..m {
        match needs_art[i] {
            None => {
                basis[i] = n + i;
                pos[n + i] = Some(i);
                xb[i] = residual[i];
                for &(j, v) in &a_rows[i] {
                    t[i * ncols + j] = v;
                }
            }
            Some(sigma) => {
                let a = next_art;
                next_art += 1;
                is_artificial[a] = true;
                a_rows[i].push((a, sigma));
                basis[i] = a;
                pos[a] = Some(i);
                xb[i] = residual[i] * sigma;
                for &(j, v) in &a_rows[i] {
                    t[i * ncols + j] = v * sigma;
                }
                t[i * ncols + a] = 1.0;
            }
        }
    }

    let mut tab = Tableau {
        m,
        ncols,
        t,
        a_rows,
        b,
        lower,
        upper,
        x,
        basis,
        pos,
        xb,
        cost: vec![0.0; ncols],
        d: vec![0.0; ncols],
        is_artificial,
        iterations: 0,
    };

    if na > 0 {
        for j in n + m..ncols {
            tab.cost[j] = 1.0;
        }
        tab.recompute_reduced_costs();
        for _ in 0..4 {
            tab.run()?;
            if tab.refine() {
                break;
            }
        }
        let infeas: f64 = (n + m..ncols).map(|j| tab.value(j)).sum();
        let scale = 1.0 + tab.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeas > 1e-8 * scale {
            return Ok(LpSolution::status_only(LpStatus::Infeasible, n, m, tab.iterations));
        }
        // drive basic artificials out where possible
        for r in 0..m {
            let bj = tab.basis[r];
            if !tab.is_artificial[bj] {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n + m {
                if tab.pos[j].is_some() {
                    continue;
                }
                let v = tab.at(r, j).abs();
                if v > 1e-7 && best.map_or(true, |(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                let val = tab.x[j];
                tab.x[bj] = 0.0;
                tab.pivot(r, j);
                tab.xb[r] = val;
            }
        }
        for j in n + m..ncols {
            tab.upper[j] = 0.0;
            if tab.pos[j].is_none() {
                tab.x[j] = 0.0;
            }
        }
        tab.refine();
    }

    for j in 0..ncols {
        tab.cost[j] = if j < n { sense_sign * lp.objective[j] } else { 0.0 };
    }
    tab.recompute_reduced_costs();
    let mut bounded = true;
    for _ in 0..4 {
        bounded = tab.run()?;
        if !bounded {
            break;
        }
        if tab.refine() {
            break;
        }
    }
    if !bounded {
        return Ok(LpSolution::status_only(LpStatus::Unbounded, n, m, tab.iterations));
    }

    let xs: Vec<f64> = (0..n).map(|j| tab.value(j).clamp(lp.lower[j], lp.upper[j])).collect();
    let objective = lp.objective.iter().zip(&xs).map(|(c, v)| c * v).sum();
    let _ = tab.objective();
    // slack reduced cost = -y_i (internal sense)
    let row_duals = (0..m).map(|i| -tab.d[n + i] * sense_sign * row_sign[i]).collect();
    let reduced_costs = (0..n).map(|j| tab.d[j] * sense_sign).collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x: xs,
        objective,
        row_duals,
        reduced_costs,
        iterations: tab.iterations,
    })
}
