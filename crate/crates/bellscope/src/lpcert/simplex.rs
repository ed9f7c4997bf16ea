//! Dense two-phase tableau simplex.
//!
//! Problems here have a few dozen variables, so a full tableau is the simplest robust
//! choice. Pricing is Dantzig's rule; after `10·n` consecutive degenerate pivots the solver
//! switches to Bland's rule, which cannot cycle.

use super::LpError;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 50_000;

/// `maximize objective·x` subject to equality rows, `≤` rows and per-variable bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub ub_rows: Vec<Vec<f64>>,
    pub ub_rhs: Vec<f64>,
    /// `(lower, upper)`; infinities mean unbounded on that side.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// Maximization over nonnegative variables.
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            ub_rows: Vec::new(),
            ub_rhs: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::maximize(objective.into_iter().map(|c| -c).collect())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn equality(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn at_most(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.ub_rows.push(row);
        self.ub_rhs.push(rhs);
        self
    }

    pub fn at_least(self, row: Vec<f64>, rhs: f64) -> Self {
        self.at_most(row.into_iter().map(|v| -v).collect(), -rhs)
    }

    pub fn bounded(mut self, var: usize, lower: f64, upper: f64) -> Self {
        self.bounds[var] = (lower, upper);
        self
    }

    pub fn free(self, var: usize) -> Self {
        self.bounded(var, f64::NEG_INFINITY, f64::INFINITY)
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let rows_ok = self.eq_rows.iter().chain(&self.ub_rows).all(|r| r.len() == n);
        if !rows_ok
            || self.eq_rows.len() != self.eq_rhs.len()
            || self.ub_rows.len() != self.ub_rhs.len()
            || self.bounds.len() != n
        {
            return Err(LpError::DimensionMismatch);
        }
        let finite = self
            .objective
            .iter()
            .chain(self.eq_rows.iter().flatten())
            .chain(self.ub_rows.iter().flatten())
            .chain(&self.eq_rhs)
            .chain(&self.ub_rhs)
            .all(|v| v.is_finite());
        let bounds_ok = self
            .bounds
            .iter()
            .all(|(l, u)| !l.is_nan() && !u.is_nan() && l <= u && *l < f64::INFINITY && *u > f64::NEG_INFINITY);
        if !finite || !bounds_ok {
            return Err(LpError::NonFinite);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver result. On `Optimal`, `duals_eq`/`duals_ub` are multipliers of the original rows
/// (`≥ 0` for `≤` rows) with `objective = Σ y_i a_i + reduced costs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
    pub duals_eq: Vec<f64>,
    pub duals_ub: Vec<f64>,
    pub pivots: usize,
    pub used_bland: bool,
}

impl LpOutcome {
    fn without_solution(status: LpStatus, pivots: usize, used_bland: bool) -> Self {
        LpOutcome {
            status,
            value: match status {
                LpStatus::Unbounded => f64::INFINITY,
                _ => f64::NAN,
            },
            x: Vec::new(),
            duals_eq: Vec::new(),
            duals_ub: Vec::new(),
            pivots,
            used_bland,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Largest violation of the constraints of `lp` at `x`.
    pub fn primal_residual(&self, lp: &LinearProgram) -> f64 {
        let dot = |r: &[f64]| r.iter().zip(&self.x).map(|(a, b)| a * b).sum::<f64>();
        let eq = lp.eq_rows.iter().zip(&lp.eq_rhs).map(|(r, b)| (dot(r) - b).abs());
        let ub = lp.ub_rows.iter().zip(&lp.ub_rhs).map(|(r, b)| (dot(r) - b).max(0.0));
        let bd = lp
            .bounds
            .iter()
            .zip(&self.x)
            .map(|((l, u), x)| (l - x).max(x - u).max(0.0));
        eq.chain(ub).chain(bd).fold(0.0, f64::max)
    }

    /// Largest `|y_i · slack_i|` over the `≤` rows.
    pub fn complementary_slackness(&self, lp: &LinearProgram) -> f64 {
        let dot = |r: &[f64]| r.iter().zip(&self.x).map(|(a, b)| a * b).sum::<f64>();
        lp.ub_rows
            .iter()
            .zip(&lp.ub_rhs)
            .zip(&self.duals_ub)
            .map(|((r, b), y)| (y * (b - dot(r))).abs())
            .fold(0.0, f64::max)
    }
}

/// How an original variable is recovered from the nonnegative standard-form columns.
#[derive(Clone, Copy)]
enum VarMap {
    /// `x = offset + z_k`
    Shifted(usize, f64),
    /// `x = offset − z_k`
    Mirrored(usize, f64),
    /// `x = z_k − z_{k+1}`
    Split(usize),
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    cost_rhs: f64,
    basis: Vec<usize>,
    allowed: Vec<bool>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.rows[r][e];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        let (pivot_row, pivot_rhs) = (self.rows[r].clone(), self.rhs[r]);
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][e];
            if f != 0.0 {
                for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = self.cost[e];
        if f != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost_rhs -= f * pivot_rhs;
        }
        self.basis[r] = e;
    }

    fn set_cost(&mut self, c: &[f64]) {
        self.cost = c.to_vec();
        self.cost_rhs = 0.0;
        for r in 0..self.rows.len() {
            let f = self.cost[self.basis[r]];
            if f != 0.0 {
                for (v, rv) in self.cost.iter_mut().zip(&self.rows[r]) {
                    *v -= f * rv;
                }
                self.cost_rhs -= f * self.rhs[r];
            }
        }
    }

    /// Runs to optimality; `Ok(false)` signals an unbounded ray.
    fn optimize(&mut self, pivots: &mut usize, bland: &mut bool) -> Result<bool, LpError> {
        let n = self.cost.len();
        let mut degenerate_run = 0usize;
        let mut use_bland = false;
        loop {
            if *pivots >= MAX_PIVOTS {
                return Err(LpError::IterationLimit(*pivots));
            }
            let candidates = (0..n).filter(|&j| self.allowed[j] && self.cost[j] > PIVOT_TOL);
            let entering = if use_bland {
                candidates.min()
            } else {
                candidates.max_by(|&a, &b| self.cost[a].total_cmp(&self.cost[b]).then(b.cmp(&a)))
            };
            let Some(e) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][e];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= FEAS_TOL {
                degenerate_run += 1;
                if degenerate_run > 10 * n && !use_bland {
                    use_bland = true;
                    *bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, e);
            *pivots += 1;
        }
    }
}

/// Solves `lp`. Infeasibility and unboundedness are statuses, not errors.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    lp.check()?;
    let n = lp.num_vars();

    // Standard-form columns for the original variables.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        if lo.is_finite() {
            maps.push(VarMap::Shifted(ncols, lo));
            if hi.is_finite() {
                bound_rows.push((ncols, hi - lo));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Mirrored(ncols, hi));
            ncols += 1;
        } else {
            maps.push(VarMap::Split(ncols));
            ncols += 2;
        }
    }
    // Substitutes the map into a row: returns (standard row, constant term).
    let substitute = |row: &[f64]| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; ncols];
        let mut constant = 0.0;
        for (coef, map) in row.iter().zip(&maps) {
            match *map {
                VarMap::Shifted(k, off) => {
                    out[k] += coef;
                    constant += coef * off;
                }
                VarMap::Mirrored(k, off) => {
                    out[k] -= coef;
                    constant += coef * off;
                }
                VarMap::Split(k) => {
                    out[k] += coef;
                    out[k + 1] -= coef;
                }
            }
        }
        (out, constant)
    };

    // Rows: equalities, then ≤ rows, then upper bounds; every ≤ row gets a slack.
    let mut a_rows: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut slack_of_row: Vec<Option<usize>> = Vec::new();
    for (row, rhs) in lp.eq_rows.iter().zip(&lp.eq_rhs) {
        let (r, k) = substitute(row);
        a_rows.push(r);
        b.push(rhs - k);
        slack_of_row.push(None);
    }
    let n_ub = lp.ub_rows.len() + bound_rows.len();
    let mut next_slack = ncols;
    for (row, rhs) in lp.ub_rows.iter().zip(&lp.ub_rhs) {
        let (r, k) = substitute(row);
        a_rows.push(r);
        b.push(rhs - k);
        slack_of_row.push(Some(next_slack));
        next_slack += 1;
    }
    for &(k, width) in &bound_rows {
        let mut r = vec![0.0; ncols];
        r[k] = 1.0;
        a_rows.push(r);
        b.push(width);
        slack_of_row.push(Some(next_slack));
        next_slack += 1;
    }
    let m = a_rows.len();
    let n_struct = ncols + n_ub;

    // Orient rows to b ≥ 0; rows whose slack keeps a +1 coefficient start with it basic.
    let mut flipped = vec![false; m];
    let mut needs_artificial = Vec::new();
    for i in 0..m {
        if b[i] < 0.0 {
            flipped[i] = true;
        }
        if flipped[i] || slack_of_row[i].is_none() {
            needs_artificial.push(i);
        }
    }
    let total = n_struct + needs_artificial.len();
    let mut rows = vec![vec![0.0; total]; m];
    let mut rhs = vec![0.0; m];
    let mut basis = vec![0; m];
    for i in 0..m {
        let sign = if flipped[i] { -1.0 } else { 1.0 };
        for j in 0..ncols {
            rows[i][j] = sign * a_rows[i][j];
        }
        if let Some(s) = slack_of_row[i] {
            rows[i][s] = sign;
            basis[i] = s;
        }
        rhs[i] = sign * b[i];
    }
    for (k, &i) in needs_artificial.iter().enumerate() {
        rows[i][n_struct + k] = 1.0;
        basis[i] = n_struct + k;
    }
    let mut tab = Tableau {
        rows,
        rhs,
        cost: vec![0.0; total],
        cost_rhs: 0.0,
        basis,
        allowed: vec![true; total],
    };
    let mut pivots = 0;
    let mut bland = false;

    if !needs_artificial.is_empty() {
        let mut phase1 = vec![0.0; total];
        for v in phase1.iter_mut().skip(n_struct) {
            *v = -1.0;
        }
        tab.set_cost(&phase1);
        // Phase one is bounded above by zero, so it always terminates optimally.
        tab.optimize(&mut pivots, &mut bland)?;
        let scale = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        // cost_rhs holds minus the phase-one objective, i.e. the total artificial mass.
        if tab.cost_rhs > FEAS_TOL * scale {
            return Ok(LpOutcome::without_solution(LpStatus::Infeasible, pivots, bland));
        }
        // Drive zero-level artificials out of the basis where a structural pivot exists.
        for r in 0..m {
            if tab.basis[r] >= n_struct {
                if let Some(e) = (0..n_struct).find(|&j| tab.rows[r][j].abs() > 1e-9) {
                    tab.pivot(r, e);
                    pivots += 1;
                }
            }
        }
        for j in n_struct..total {
            tab.allowed[j] = false;
        }
    }

    let mut phase2 = vec![0.0; total];
    for (j, coef) in lp.objective.iter().enumerate() {
        match maps[j] {
            VarMap::Shifted(k, _) => phase2[k] += coef,
            VarMap::Mirrored(k, _) => phase2[k] -= coef,
            VarMap::Split(k) => {
                phase2[k] += coef;
                phase2[k + 1] -= coef;
            }
        }
    }
    tab.set_cost(&phase2);
    if !tab.optimize(&mut pivots, &mut bland)? {
        return Ok(LpOutcome::without_solution(LpStatus::Unbounded, pivots, bland));
    }

    let mut z = vec![0.0; total];
    for (r, &j) in tab.basis.iter().enumerate() {
        z[j] = tab.rhs[r];
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            VarMap::Shifted(k, off) => off + z[k],
            VarMap::Mirrored(k, off) => off - z[k],
            VarMap::Split(k) => z[k] - z[k + 1],
        })
        .collect();
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();

    // Duals from Bᵀ y = c_B over the oriented rows (artificial columns are unit vectors).
    let column = |j: usize| -> DVector<f64> {
        DVector::from_fn(m, |i, _| {
            let sign = if flipped[i] { -1.0 } else { 1.0 };
            if j < ncols {
                sign * a_rows[i][j]
            } else if j < n_struct {
                if slack_of_row[i] == Some(j) {
                    sign
                } else {
                    0.0
                }
            } else if needs_artificial[j - n_struct] == i {
                1.0
            } else {
                0.0
            }
        })
    };
    let bmat = DMatrix::from_columns(&tab.basis.iter().map(|&j| column(j)).collect::<Vec<_>>());
    let cb = DVector::from_iterator(m, tab.basis.iter().map(|&j| phase2[j]));
    let y = bmat.transpose().lu().solve(&cb).unwrap_or_else(|| DVector::zeros(m));
    let dual = |i: usize| if flipped[i] { -y[i] } else { y[i] };
    let n_eq = lp.eq_rows.len();
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        value,
        x,
        duals_eq: (0..n_eq).map(dual).collect(),
        duals_ub: (n_eq..n_eq + lp.ub_rows.len()).map(dual).collect(),
        pivots,
        used_bland: bland,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bound() {
        let lp = LinearProgram::maximize(vec![1.0]).at_most(vec![1.0], 1.0);
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.value - 1.0).abs() < 1e-12);
        assert!((out.duals_ub[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_pair() {
        let lp = LinearProgram::maximize(vec![1.0])
            .free(0)
            .at_most(vec![1.0], 0.0)
            .at_least(vec![1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let lp = LinearProgram::maximize(vec![1.0, 1.0]).at_most(vec![1.0, -1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn textbook_with_duals() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), value 36, duals (0, 3/2, 1).
        let lp = LinearProgram::maximize(vec![3.0, 5.0])
            .at_most(vec![1.0, 0.0], 4.0)
            .at_most(vec![0.0, 2.0], 12.0)
            .at_most(vec![3.0, 2.0], 18.0);
        let out = solve_lp(&lp).unwrap();
        assert!((out.value - 36.0).abs() < 1e-10);
        assert!((out.x[0] - 2.0).abs() < 1e-10 && (out.x[1] - 6.0).abs() < 1e-10);
        let expected = [0.0, 1.5, 1.0];
        for (y, e) in out.duals_ub.iter().zip(expected) {
            assert!((y - e).abs() < 1e-10);
        }
        assert!(out.complementary_slackness(&lp) < 1e-10);
    }

    #[test]
    fn bounds_and_equalities() {
        // min x + 2y with x + y = 3, −1 ≤ x ≤ 1, y ≤ 5 (free below): x = 1, y = 2.
        let lp = LinearProgram::minimize(vec![1.0, 2.0])
            .bounded(0, -1.0, 1.0)
            .bounded(1, f64::NEG_INFINITY, 5.0)
            .equality(vec![1.0, 1.0], 3.0);
        let out = solve_lp(&lp).unwrap();
        assert!(out.is_optimal());
        assert!((out.x[0] - 1.0).abs() < 1e-10 && (out.x[1] - 2.0).abs() < 1e-10);
        assert!((out.value + 5.0).abs() < 1e-10);
        assert!(out.primal_residual(&lp) < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under naive Dantzig pricing with lowest-index ties.
        let lp = LinearProgram::maximize(vec![0.75, -150.0, 0.02, -6.0])
            .at_most(vec![0.25, -60.0, -0.04, 9.0], 0.0)
            .at_most(vec![0.5, -90.0, -0.02, 3.0], 0.0)
            .at_most(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let out = solve_lp(&lp).unwrap();
        assert!((out.value - 0.05).abs() < 1e-10);
    }

    #[test]
    fn rejects_ragged_rows() {
        let lp = LinearProgram::maximize(vec![1.0, 1.0]).at_most(vec![1.0], 1.0);
        assert!(matches!(solve_lp(&lp), Err(LpError::DimensionMismatch)));
    }
}
