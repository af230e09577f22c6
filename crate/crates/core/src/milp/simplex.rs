//! Bounded-variable revised primal simplex with an explicit dense basis inverse.
//!
//! Every row gets a logical column `-e_i` so the system reads `A x - s = 0`
//! with `s` carrying the row bounds. Rows violated by the starting point get
//! an artificial column; phase one drives those to zero.

use super::{LinearProgram, LpSettings, LpSolution, LpStatus};

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;
const NONE: usize = usize::MAX;

pub fn solve_lp(lp: &LinearProgram) -> LpSolution {
    solve_lp_with(lp, &LpSettings::default())
}

pub fn solve_lp_with(lp: &LinearProgram, settings: &LpSettings) -> LpSolution {
    let lo: Vec<f64> = lp.vars.iter().map(|v| v.lower).collect();
    let hi: Vec<f64> = lp.vars.iter().map(|v| v.upper).collect();
    solve_with_bounds(lp, &lo, &hi, settings)
}

/// Solves `lp` with its variable bounds replaced by `lo`/`hi`.
pub(crate) fn solve_with_bounds(lp: &LinearProgram, lo: &[f64], hi: &[f64], settings: &LpSettings) -> LpSolution {
    let n = lp.vars.len();
    let m = lp.rows.len();
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return LpSolution {
            status: LpStatus::Infeasible,
            x: vec![],
            objective: f64::NAN,
            row_duals: vec![],
            reduced_costs: vec![],
            iterations: 0,
        };
    }
    let mut s = Simplex::new(lp, lo, hi, settings);
    let limit = settings.max_iterations.unwrap_or(50_000 + 50 * (n + m));
    let status = s.solve(limit);
    let x: Vec<f64> = s.x[..n].to_vec();
    let (row_duals, reduced_costs) = if status == LpStatus::Optimal {
        let y = s.duals();
        let d = (0..n).map(|j| s.cost[j] - s.dot_col(&y, j)).collect();
        (y, d)
    } else {
        (vec![], vec![])
    };
    LpSolution {
        status,
        objective: if status == LpStatus::Optimal {
            lp.objective(&x)
        } else {
            f64::NAN
        },
        x: if status == LpStatus::Optimal { x } else { vec![] },
        row_duals,
        reduced_costs,
        iterations: s.iterations,
    }
}

enum Phase {
    Optimal,
    Unbounded,
    Limit,
    Numerical,
}

struct Simplex {
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    position: Vec<usize>,
    /// Row-major m×m.
    binv: Vec<f64>,
    first_artificial: usize,
    iterations: usize,
    since_reinvert: usize,
    feas_tol: f64,
    opt_tol: f64,
}

impl Simplex {
    fn new(lp: &LinearProgram, lo: &[f64], hi: &[f64], settings: &LpSettings) -> Self {
        let n = lp.vars.len();
        let m = lp.rows.len();
        let mut counts = vec![0usize; n];
        for r in &lp.rows {
            for &(j, _) in &r.coeffs {
                counts[j] += 1;
            }
        }
        let mut col_start = vec![0usize; n + 1];
        for j in 0..n {
            col_start[j + 1] = col_start[j] + counts[j];
        }
        let nnz = col_start[n];
        let mut col_row = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        let mut fill = col_start.clone();
        for (i, r) in lp.rows.iter().enumerate() {
            for &(j, a) in &r.coeffs {
                col_row[fill[j]] = i;
                col_val[fill[j]] = a;
                fill[j] += 1;
            }
        }

        let mut s = Simplex {
            m,
            col_start,
            col_row,
            col_val,
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            cost: vec![0.0; n],
            x: Vec::with_capacity(n + 2 * m),
            basis: Vec::with_capacity(m),
            position: vec![],
            binv: vec![0.0; m * m],
            first_artificial: n + m,
            iterations: 0,
            since_reinvert: 0,
            feas_tol: settings.feasibility_tol,
            opt_tol: settings.optimality_tol,
        };
        for j in 0..n {
            s.x.push(resting_value(lo[j], hi[j]));
        }
        let mut activity = vec![0.0; m];
        for j in 0..n {
            if s.x[j] != 0.0 {
                for k in s.col_start[j]..s.col_start[j + 1] {
                    activity[s.col_row[k]] += s.col_val[k] * s.x[j];
                }
            }
        }
        // Logical columns.
        for (i, r) in lp.rows.iter().enumerate() {
            s.push_column(&[(i, -1.0)], r.lower, r.upper);
            s.x.push(activity[i]);
        }
        let mut diag = vec![-1.0; m];
        let mut basic = (n..n + m).collect::<Vec<_>>();
        for (i, r) in lp.rows.iter().enumerate() {
            let a = activity[i];
            let target = if a < r.lower - s.feas_tol {
                r.lower
            } else if a > r.upper + s.feas_tol {
                r.upper
            } else {
                continue;
            };
            let sign = if target > a { 1.0 } else { -1.0 };
            s.x[n + i] = target;
            let col = s.x.len();
            s.push_column(&[(i, sign)], 0.0, f64::INFINITY);
            s.x.push((target - a).abs());
            diag[i] = sign;
            basic[i] = col;
        }
        s.basis = basic;
        s.position = vec![NONE; s.x.len()];
        for (i, &b) in s.basis.iter().enumerate() {
            s.position[b] = i;
            s.binv[i * m + i] = 1.0 / diag[i];
        }
        s.cost.resize(s.x.len(), 0.0);
        s.cost[..n].copy_from_slice(&lp.vars.iter().map(|v| v.cost).collect::<Vec<_>>());
        s
    }

    fn push_column(&mut self, entries: &[(usize, f64)], lo: f64, hi: f64) {
        for &(i, a) in entries {
            self.col_row.push(i);
            self.col_val.push(a);
        }
        self.col_start.push(self.col_row.len());
        self.lo.push(lo);
        self.hi.push(hi);
    }

    fn ncols(&self) -> usize {
        self.x.len()
    }

    fn dot_col(&self, y: &[f64], j: usize) -> f64 {
        (self.col_start[j]..self.col_start[j + 1])
            .map(|k| y[self.col_row[k]] * self.col_val[k])
            .sum()
    }

    fn solve(&mut self, limit: usize) -> LpStatus {
        let real_cost = self.cost.clone();
        if self.ncols() > self.first_artificial {
            let mut c = vec![0.0; self.ncols()];
            c[self.first_artificial..].iter_mut().for_each(|v| *v = 1.0);
            self.cost = c;
            match self.run(limit) {
                Phase::Optimal => {}
                Phase::Limit => return LpStatus::IterationLimit,
                Phase::Numerical => return LpStatus::NumericalFailure,
                Phase::Unbounded => return LpStatus::NumericalFailure,
            }
            let residual = self.x[self.first_artificial..].iter().fold(0.0f64, |a, &v| a.max(v));
            if residual > self.feas_tol {
                return LpStatus::Infeasible;
            }
            for j in self.first_artificial..self.ncols() {
                self.hi[j] = 0.0;
                if self.position[j] == NONE {
                    self.x[j] = 0.0;
                }
            }
        }
        self.cost = real_cost;
        match self.run(limit) {
            Phase::Optimal => {}
            Phase::Limit => return LpStatus::IterationLimit,
            Phase::Numerical => return LpStatus::NumericalFailure,
            Phase::Unbounded => return LpStatus::Unbounded,
        }
        if !self.reinvert() {
            return LpStatus::NumericalFailure;
        }
        self.recompute_basics();
        let drift = self
            .basis
            .iter()
            .map(|&b| (self.lo[b] - self.x[b]).max(self.x[b] - self.hi[b]))
            .fold(0.0f64, f64::max);
        if drift > 10.0 * self.feas_tol {
            // Restart from the refreshed point; the inner loop re-prices.
            match self.run(limit) {
                Phase::Optimal => {}
                _ => return LpStatus::NumericalFailure,
            }
            let drift = self
                .basis
                .iter()
                .map(|&b| (self.lo[b] - self.x[b]).max(self.x[b] - self.hi[b]))
                .fold(0.0f64, f64::max);
            if drift > 10.0 * self.feas_tol {
                return LpStatus::NumericalFailure;
            }
        }
        for &b in &self.basis {
            self.x[b] = self.x[b].clamp(self.lo[b], self.hi[b]);
        }
        LpStatus::Optimal
    }

    /// `y = c_B B⁻¹`.
    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &b) in self.basis.iter().enumerate() {
            let c = self.cost[b];
            if c != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, &r) in y.iter_mut().zip(row) {
                    *yk += c * r;
                }
            }
        }
        y
    }

    /// `B⁻¹ a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for k in self.col_start[j]..self.col_start[j + 1] {
            let (r, a) = (self.col_row[k], self.col_val[k]);
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.binv[i * m + r] * a;
            }
        }
        out
    }

    fn run(&mut self, limit: usize) -> Phase {
        let m = self.m;
        let mut degenerate = 0usize;
        let reinvert_every = m.max(100);
        loop {
            if self.iterations >= limit {
                return Phase::Limit;
            }
            if self.since_reinvert >= reinvert_every {
                if !self.reinvert() {
                    return Phase::Numerical;
                }
                self.recompute_basics();
            }
            let bland = degenerate >= DEGENERATE_STREAK;
            let y = self.duals();
            let Some((q, dir)) = self.price(&y, bland) else {
                return Phase::Optimal;
            };
            let alpha = self.ftran(q);
            let step = self.ratio_test(q, dir, &alpha, bland);
            self.iterations += 1;
            match step {
                Step::Unbounded => return Phase::Unbounded,
                Step::Flip(t) => {
                    self.shift(q, dir, t, &alpha);
                    self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                    degenerate = 0;
                }
                Step::Pivot { row, t, to_upper } => {
                    if alpha[row].abs() < PIVOT_TOL {
                        return Phase::Numerical;
                    }
                    self.shift(q, dir, t, &alpha);
                    let leaving = self.basis[row];
                    self.x[leaving] = if to_upper { self.hi[leaving] } else { self.lo[leaving] };
                    self.pivot(row, q, &alpha);
                    degenerate = if t <= 1e-12 { degenerate + 1 } else { 0 };
                }
            }
        }
    }

    fn price(&self, y: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols() {
            if self.position[j] != NONE || self.hi[j] <= self.lo[j] {
                continue;
            }
            let d = self.cost[j] - self.dot_col(y, j);
            let at_lower = self.x[j] == self.lo[j];
            let at_upper = self.x[j] == self.hi[j];
            let dir = if d < -self.opt_tol && !at_upper {
                1.0
            } else if d > self.opt_tol && !at_lower {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], bland: bool) -> Step {
        let tol = if bland { 0.0 } else { self.feas_tol };
        // Pass one: largest step keeping every basic within its relaxed bounds.
        let mut t_max = f64::INFINITY;
        for (i, &a) in alpha.iter().enumerate() {
            let rate = -dir * a;
            let b = self.basis[i];
            if rate < -PIVOT_TOL && self.lo[b].is_finite() {
                t_max = t_max.min((self.x[b] - self.lo[b] + tol) / -rate);
            } else if rate > PIVOT_TOL && self.hi[b].is_finite() {
                t_max = t_max.min((self.hi[b] - self.x[b] + tol) / rate);
            }
        }
        let range = self.hi[q] - self.lo[q];
        if range.is_finite() && range <= t_max {
            return Step::Flip(range);
        }
        if t_max == f64::INFINITY {
            return Step::Unbounded;
        }
        // Pass two: among rows blocking within t_max, the largest pivot.
        let mut pick: Option<(usize, f64, bool, f64)> = None;
        for (i, &a) in alpha.iter().enumerate() {
            let rate = -dir * a;
            let b = self.basis[i];
            let (t, to_upper) = if rate < -PIVOT_TOL && self.lo[b].is_finite() {
                ((self.x[b] - self.lo[b]) / -rate, false)
            } else if rate > PIVOT_TOL && self.hi[b].is_finite() {
                ((self.hi[b] - self.x[b]) / rate, true)
            } else {
                continue;
            };
            if t > t_max {
                continue;
            }
            let better = match pick {
                None => true,
                Some((pi, pt, _, pa)) => {
                    if bland {
                        t < pt || (t == pt && b < self.basis[pi])
                    } else {
                        a.abs() > pa || (a.abs() == pa && b < self.basis[pi])
                    }
                }
            };
            if better {
                pick = Some((i, t, to_upper, a.abs()));
            }
        }
        let (row, t, to_upper, _) = pick.expect("a blocking row exists when t_max is finite");
        Step::Pivot {
            row,
            t: t.max(0.0),
            to_upper,
        }
    }

    fn shift(&mut self, q: usize, dir: f64, t: f64, alpha: &[f64]) {
        if t == 0.0 {
            return;
        }
        self.x[q] += dir * t;
        for (i, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let b = self.basis[i];
                self.x[b] -= dir * t * a;
            }
        }
    }

    fn pivot(&mut self, row: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let leaving = self.basis[row];
        let p = alpha[row];
        let (before, rest) = self.binv.split_at_mut(row * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        pivot_row.iter_mut().for_each(|v| *v /= p);
        for (i, &a) in alpha.iter().enumerate() {
            if i == row || a == 0.0 {
                continue;
            }
            let target = if i < row {
                &mut before[i * m..(i + 1) * m]
            } else {
                &mut after[(i - row - 1) * m..(i - row) * m]
            };
            for (t, &r) in target.iter_mut().zip(pivot_row.iter()) {
                *t -= a * r;
            }
        }
        self.basis[row] = q;
        self.position[leaving] = NONE;
        self.position[q] = row;
        self.since_reinvert += 1;
    }

    /// Rebuilds B⁻¹ from scratch by Gauss-Jordan with partial pivoting.
    fn reinvert(&mut self) -> bool {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (c, &j) in self.basis.iter().enumerate() {
            for k in self.col_start[j]..self.col_start[j + 1] {
                a[self.col_row[k] * m + c] = self.col_val[k];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv = col;
            let mut best = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-12 {
                return false;
            }
            if piv != col {
                for k in 0..m {
                    a.swap(piv * m + k, col * m + k);
                    inv.swap(piv * m + k, col * m + k);
                }
            }
            let d = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = a[r * m + col];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    a[r * m + k] -= f * a[col * m + k];
                    inv[r * m + k] -= f * inv[col * m + k];
                }
            }
        }
        self.binv = inv;
        self.since_reinvert = 0;
        true
    }

    /// `x_B = -B⁻¹ N x_N`.
    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.ncols() {
            if self.position[j] == NONE && self.x[j] != 0.0 {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    rhs[self.col_row[k]] += self.col_val[k] * self.x[j];
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            self.x[self.basis[i]] = -v;
        }
    }
}

enum Step {
    Unbounded,
    Flip(f64),
    Pivot { row: usize, t: f64, to_upper: bool },
}

fn resting_value(lo: f64, hi: f64) -> f64 {
    if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    }
}
