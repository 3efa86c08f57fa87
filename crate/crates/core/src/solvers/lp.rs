//! Dense two-phase simplex for small linear programs.
//!
//! Problems are stated as
//!
//! ```text
//! min  c^T z
//! s.t. A z <= b,  E z = f,  l <= z <= u   (bounds optional per coordinate)
//! ```
//!
//! and every optimal solution carries Lagrange multipliers with the sign
//! convention `c + A^T y + E^T mu - r_lo + r_up = 0`, `y, r_lo, r_up >= 0`,
//! so that the dual objective is `-b^T y - f^T mu + l^T r_lo - u^T r_up`.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub ineq_matrix: Vec<Vec<f64>>,
    pub ineq_rhs: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    /// `None` means unbounded below.
    pub lower: Vec<Option<f64>>,
    /// `None` means unbounded above.
    pub upper: Vec<Option<f64>>,
}

impl LpProblem {
    /// A problem over free variables with no constraints yet.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            ineq_matrix: Vec::new(),
            ineq_rhs: Vec::new(),
            eq_matrix: Vec::new(),
            eq_rhs: Vec::new(),
            lower: vec![None; n],
            upper: vec![None; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Adds `row . z <= rhs`.
    pub fn leq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.ineq_matrix.push(row);
        self.ineq_rhs.push(rhs);
        self
    }

    /// Adds `row . z >= rhs` (stored as a negated `<=` row).
    pub fn geq(self, row: Vec<f64>, rhs: f64) -> Self {
        let neg = row.iter().map(|v| -v).collect();
        self.leq(neg, -rhs)
    }

    /// Adds `row . z = rhs`.
    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq_matrix.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn bounds(mut self, var: usize, lower: Option<f64>, upper: Option<f64>) -> Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    /// Sets `z >= 0` on every coordinate.
    pub fn nonnegative(mut self) -> Self {
        for l in &mut self.lower {
            *l = Some(0.0);
        }
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let rows = self.ineq_matrix.iter().chain(self.eq_matrix.iter());
        for row in rows {
            if row.len() != n {
                return Err(Error::NumericalFailure(format!(
                    "constraint row has {} entries, expected {n}",
                    row.len()
                )));
            }
        }
        if self.ineq_matrix.len() != self.ineq_rhs.len() || self.eq_matrix.len() != self.eq_rhs.len() {
            return Err(Error::NumericalFailure("row/rhs count mismatch".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::NumericalFailure("bound vectors have wrong length".into()));
        }
        let finite = self
            .ineq_rhs
            .iter()
            .chain(self.eq_rhs.iter())
            .chain(self.objective.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NumericalFailure("non-finite problem data".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub ineq_duals: Vec<f64>,
    pub eq_duals: Vec<f64>,
    pub lower_duals: Vec<f64>,
    pub upper_duals: Vec<f64>,
    pub pivots: usize,
}

impl LpSolution {
    fn status_only(status: LpStatus, pivots: usize) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            ineq_duals: Vec::new(),
            eq_duals: Vec::new(),
            lower_duals: Vec::new(),
            upper_duals: Vec::new(),
            pivots,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Dual objective `-b^T y - f^T mu + l^T r_lo - u^T r_up`.
    pub fn dual_objective(&self, problem: &LpProblem) -> f64 {
        let mut v = 0.0;
        for (y, b) in self.ineq_duals.iter().zip(&problem.ineq_rhs) {
            v -= y * b;
        }
        for (mu, f) in self.eq_duals.iter().zip(&problem.eq_rhs) {
            v -= mu * f;
        }
        for j in 0..problem.num_vars() {
            if let Some(l) = problem.lower[j] {
                v += l * self.lower_duals[j];
            }
            if let Some(u) = problem.upper[j] {
                v -= u * self.upper_duals[j];
            }
        }
        v
    }
}

/// Column of the standard-form problem: `z[var] += sign * x_col`.
#[derive(Debug, Clone, Copy)]
struct StdColumn {
    var: usize,
    sign: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Ineq(usize),
    Eq(usize),
    UpperBound(usize),
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    value: f64,
    /// Columns that may never enter (artificials during phase two).
    barred: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.width - 1]
    }

    fn ncols(&self) -> usize {
        self.width - 1
    }

    fn price(&mut self, cost: &[f64]) {
        let n = self.ncols();
        self.reduced = cost.to_vec();
        self.value = 0.0;
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.data[r * self.width..(r + 1) * self.width];
            for c in 0..n {
                self.reduced[c] -= cb * row[c];
            }
            self.value += cb * row[n];
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let t = self.data[r * w + pc];
            if t == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= t * p;
            }
            row[pc] = 0.0;
        }
        let t = self.reduced[pc];
        if t != 0.0 {
            for c in 0..self.ncols() {
                self.reduced[c] -= t * pivot_row[c];
            }
            self.reduced[pc] = 0.0;
            self.value += t * pivot_row[w - 1];
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Runs primal simplex on the current cost row. Returns false on unboundedness.
    fn optimize(&mut self, max_pivots: usize) -> Result<bool> {
        let n = self.ncols();
        let bland_after = 10 * (self.rows + n);
        let mut degenerate_run = 0usize;
        let start = self.pivots;
        loop {
            if self.pivots - start > max_pivots {
                return Err(Error::NumericalFailure(format!("simplex exceeded {max_pivots} pivots")));
            }
            let bland = degenerate_run >= bland_after;
            let mut enter = None;
            let mut best = -OPT_TOL;
            for c in 0..n {
                if self.barred[c] {
                    continue;
                }
                let d = self.reduced[c];
                if d < best {
                    enter = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = enter else {
                return Ok(true);
            };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            if ratio < best_ratio - 1e-12 {
                                true
                            } else if ratio <= best_ratio + 1e-12 {
                                if bland {
                                    self.basis[r] < self.basis[l]
                                } else {
                                    a > self.at(l, pc)
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        leave = Some(r);
                        best_ratio = ratio;
                    }
                }
            }
            let Some(pr) = leave else {
                return Ok(false);
            };
            if best_ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
        }
    }
}

/// Solves a linear program by the two-phase simplex method.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.num_vars();

    // Map original variables onto nonnegative standard-form columns.
    let mut columns: Vec<StdColumn> = Vec::new();
    let mut offset = vec![0.0; n];
    let mut lower_col = vec![None; n];
    let mut upper_col = vec![None; n];
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        match (problem.lower[j], problem.upper[j]) {
            (Some(l), u) => {
                if let Some(u) = u {
                    if u < l {
                        return Ok(LpSolution::status_only(LpStatus::Infeasible, 0));
                    }
                    bound_rows.push((columns.len(), u - l));
                }
                offset[j] = l;
                lower_col[j] = Some(columns.len());
                columns.push(StdColumn { var: j, sign: 1.0 });
            }
            (None, Some(u)) => {
                offset[j] = u;
                upper_col[j] = Some(columns.len());
                columns.push(StdColumn { var: j, sign: -1.0 });
            }
            (None, None) => {
                columns.push(StdColumn { var: j, sign: 1.0 });
                columns.push(StdColumn { var: j, sign: -1.0 });
            }
        }
    }
    let nstd = columns.len();

    // Rows: (coefficients over std columns, rhs, is_equality, kind).
    let mut rows: Vec<(Vec<f64>, f64, bool, RowKind)> = Vec::new();
    let shift = |row: &[f64]| -> (Vec<f64>, f64) {
        let coeffs = columns.iter().map(|c| row[c.var] * c.sign).collect();
        let off: f64 = row.iter().zip(&offset).map(|(a, o)| a * o).sum();
        (coeffs, off)
    };
    for (i, (row, &b)) in problem.ineq_matrix.iter().zip(&problem.ineq_rhs).enumerate() {
        let (coeffs, off) = shift(row);
        rows.push((coeffs, b - off, false, RowKind::Ineq(i)));
    }
    for (i, (row, &f)) in problem.eq_matrix.iter().zip(&problem.eq_rhs).enumerate() {
        let (coeffs, off) = shift(row);
        rows.push((coeffs, f - off, true, RowKind::Eq(i)));
    }
    for &(col, width) in &bound_rows {
        let mut coeffs = vec![0.0; nstd];
        coeffs[col] = 1.0;
        rows.push((coeffs, width, false, RowKind::UpperBound(columns[col].var)));
    }
    let m = rows.len();
    let num_slack = rows.iter().filter(|r| !r.2).count();

    // Column layout: [std | slacks | artificials | rhs].
    let mut slack_of_row = vec![None; m];
    let mut next_slack = nstd;
    for (r, row) in rows.iter().enumerate() {
        if !row.2 {
            slack_of_row[r] = Some(next_slack);
            next_slack += 1;
        }
    }
    let mut row_sign = vec![1.0; m];
    let mut needs_art = vec![false; m];
    for (r, row) in rows.iter().enumerate() {
        if row.1 < 0.0 {
            row_sign[r] = -1.0;
        }
        needs_art[r] = row.2 || row.1 < 0.0;
    }
    let num_art = needs_art.iter().filter(|&&a| a).count();
    let ncols = nstd + num_slack + num_art;
    let width = ncols + 1;
    let mut data = vec![0.0; m * width];
    let mut basis = vec![0usize; m];
    let mut init_col = vec![0usize; m];
    let mut next_art = nstd + num_slack;
    for (r, row) in rows.iter().enumerate() {
        let s = row_sign[r];
        let base = r * width;
        for (c, v) in row.0.iter().enumerate() {
            data[base + c] = s * v;
        }
        if let Some(sc) = slack_of_row[r] {
            data[base + sc] = s;
        }
        data[base + ncols] = s * row.1;
        if needs_art[r] {
            data[base + next_art] = 1.0;
            basis[r] = next_art;
            init_col[r] = next_art;
            next_art += 1;
        } else {
            let sc = slack_of_row[r].expect("inequality row has a slack");
            basis[r] = sc;
            init_col[r] = sc;
        }
    }

    let mut tab = Tableau {
        rows: m,
        width,
        data,
        basis,
        reduced: vec![0.0; ncols],
        value: 0.0,
        barred: vec![false; ncols],
        pivots: 0,
    };
    let max_pivots = 50 * (m + ncols) + 1000;
    let art_start = nstd + num_slack;

    if num_art > 0 {
        let mut cost1 = vec![0.0; ncols];
        for c in cost1.iter_mut().skip(art_start) {
            *c = 1.0;
        }
        tab.price(&cost1);
        tab.optimize(max_pivots)?;
        let scale = 1.0 + rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
        if tab.value > 1e-9 * scale {
            return Ok(LpSolution::status_only(LpStatus::Infeasible, tab.pivots));
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= art_start {
                let mut best: Option<(usize, f64)> = None;
                for c in 0..art_start {
                    let a = tab.at(r, c).abs();
                    if a > PIVOT_TOL && best.is_none_or(|(_, b)| a > b) {
                        best = Some((c, a));
                    }
                }
                if let Some((c, _)) = best {
                    tab.pivot(r, c);
                }
            }
        }
        for b in tab.barred.iter_mut().skip(art_start) {
            *b = true;
        }
    }

    let mut cost2 = vec![0.0; ncols];
    for (k, col) in columns.iter().enumerate() {
        cost2[k] = problem.objective[col.var] * col.sign;
    }
    tab.price(&cost2);
    if !tab.optimize(max_pivots)? {
        return Ok(LpSolution::status_only(LpStatus::Unbounded, tab.pivots));
    }

    // Primal point.
    let mut xstd = vec![0.0; ncols];
    for r in 0..m {
        xstd[tab.basis[r]] = tab.rhs(r);
    }
    let mut x = offset.clone();
    for (k, col) in columns.iter().enumerate() {
        x[col.var] += col.sign * xstd[k];
    }
    let objective: f64 = problem.objective.iter().zip(&x).map(|(c, z)| c * z).sum();

    // Simplex multipliers pi_r = c_init - d_init; Lagrange multiplier = -sign * pi.
    let mut ineq_duals = vec![0.0; problem.ineq_matrix.len()];
    let mut eq_duals = vec![0.0; problem.eq_matrix.len()];
    let mut upper_duals = vec![0.0; n];
    let mut lower_duals = vec![0.0; n];
    for (r, row) in rows.iter().enumerate() {
        let pi = -tab.reduced[init_col[r]];
        let mult = -row_sign[r] * pi;
        match row.3 {
            RowKind::Ineq(i) => ineq_duals[i] = mult.max(0.0),
            RowKind::Eq(i) => eq_duals[i] = mult,
            RowKind::UpperBound(j) => upper_duals[j] = mult.max(0.0),
        }
    }
    for j in 0..n {
        if let Some(k) = lower_col[j] {
            lower_duals[j] = tab.reduced[k].max(0.0);
        }
        if let Some(k) = upper_col[j] {
            upper_duals[j] = tab.reduced[k].max(0.0);
        }
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        ineq_duals,
        eq_duals,
        lower_duals,
        upper_duals,
        pivots: tab.pivots,
    })
}

/// Residuals of an optimal solution: (primal infeasibility, stationarity, complementarity).
pub fn kkt_residuals(problem: &LpProblem, sol: &LpSolution) -> (f64, f64, f64) {
    let n = problem.num_vars();
    let mut primal: f64 = 0.0;
    let mut comp: f64 = 0.0;
    for (i, (row, &b)) in problem.ineq_matrix.iter().zip(&problem.ineq_rhs).enumerate() {
        let ax: f64 = row.iter().zip(&sol.x).map(|(a, z)| a * z).sum();
        primal = primal.max(ax - b);
        comp = comp.max((sol.ineq_duals[i] * (b - ax)).abs());
    }
    for (row, &f) in problem.eq_matrix.iter().zip(&problem.eq_rhs) {
        let ax: f64 = row.iter().zip(&sol.x).map(|(a, z)| a * z).sum();
        primal = primal.max((ax - f).abs());
    }
    let mut grad = problem.objective.clone();
    for (row, y) in problem.ineq_matrix.iter().zip(&sol.ineq_duals) {
        for j in 0..n {
            grad[j] += row[j] * y;
        }
    }
    for (row, mu) in problem.eq_matrix.iter().zip(&sol.eq_duals) {
        for j in 0..n {
            grad[j] += row[j] * mu;
        }
    }
    let mut stat: f64 = 0.0;
    for j in 0..n {
        if let Some(l) = problem.lower[j] {
            primal = primal.max(l - sol.x[j]);
            comp = comp.max((sol.lower_duals[j] * (sol.x[j] - l)).abs());
        }
        if let Some(u) = problem.upper[j] {
            primal = primal.max(sol.x[j] - u);
            comp = comp.max((sol.upper_duals[j] * (u - sol.x[j])).abs());
        }
        let r = grad[j] - sol.lower_duals[j] + sol.upper_duals[j];
        stat = stat.max(r.abs());
    }
    (primal.max(0.0), stat, comp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_equality_example() {
        let lp = LpProblem::new(vec![1.0, 0.0]).eq(vec![1.0, 1.0], 1.0).nonnegative();
        let sol = solve_lp(&lp).unwrap();
        assert!(sol.is_optimal());
        assert!(sol.objective.abs() < 1e-12);
        assert!((sol.x[0]).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        let lp = LpProblem::new(vec![1.0]).leq(vec![1.0], -1.0).nonnegative();
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let lp = LpProblem::new(vec![-1.0, 0.0]).leq(vec![0.0, 1.0], 1.0).nonnegative();
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_bounded_variables_with_duals() {
        // min -z0 - 2 z1, z0 + z1 <= 4, z0 free, -1 <= z1 <= 3, z0 <= 10 via row
        let lp = LpProblem::new(vec![-1.0, -2.0])
            .leq(vec![1.0, 1.0], 4.0)
            .leq(vec![1.0, 0.0], 10.0)
            .bounds(1, Some(-1.0), Some(3.0));
        let sol = solve_lp(&lp).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective + 7.0).abs() < 1e-10, "{}", sol.objective);
        let (p, s, c) = kkt_residuals(&lp, &sol);
        assert!(p < 1e-9 && s < 1e-9 && c < 1e-9, "{p} {s} {c}");
        assert!((sol.dual_objective(&lp) - sol.objective).abs() < 1e-9);
    }

    #[test]
    fn upper_only_bound() {
        // max z subject to z <= 2 given as a bound only
        let lp = LpProblem::new(vec![-1.0]).bounds(0, None, Some(2.0));
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-12);
        assert!((sol.upper_duals[0] - 1.0).abs() < 1e-12);
        assert!((sol.dual_objective(&lp) - sol.objective).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let lp = LpProblem::new(vec![1.0, 1.0])
            .eq(vec![1.0, 1.0], 2.0)
            .eq(vec![2.0, 2.0], 4.0)
            .nonnegative();
        let sol = solve_lp(&lp).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective - 2.0).abs() < 1e-10);
    }
}
