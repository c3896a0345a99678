//! Dense two-phase primal simplex with bounded variables.
//!
//! Problems are small (a few hundred rows) so the whole tableau is kept in
//! memory and periodically rebuilt from the original matrix to shed
//! accumulated round-off.

use std::fmt::Write as _;

use thiserror::Error;

/// Feasibility tolerance for constraint rows and variable bounds.
pub const LP_TOL: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const BLAND_AFTER: usize = 50;
const REINVERT_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse `(column, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min c'x` subject to linear rows and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
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
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Row multipliers `y` with `c - A'y` equal to the reduced costs.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("row {row} references column {column} but the problem has {columns} columns")]
    Dimension {
        row: usize,
        column: usize,
        columns: usize,
    },
    #[error("objective, lower and upper have lengths {objective}, {lower}, {upper}")]
    Shape {
        objective: usize,
        lower: usize,
        upper: usize,
    },
    #[error("non-finite data in {0}")]
    NonFinite(String),
    #[error("basis matrix became singular during refactorisation")]
    NumericFailure,
    #[error("simplex did not converge within {0} iterations")]
    IterationLimit(usize),
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.constraints.len()
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Shape {
                objective: n,
                lower: self.lower.len(),
                upper: self.upper.len(),
            });
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective".into()));
        }
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::NonFinite(format!("bounds of column {j}")));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("rhs of row {i}")));
            }
            for &(col, a) in &row.coeffs {
                if col >= n {
                    return Err(LpError::Dimension {
                        row: i,
                        column: col,
                        columns: n,
                    });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(format!("row {i}, column {col}")));
                }
            }
        }
        Ok(())
    }

    /// Left-hand side of every row at `x`.
    pub fn row_activities(&self, x: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|row| row.coeffs.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for (row, act) in self.constraints.iter().zip(self.row_activities(x)) {
            let gap = match row.relation {
                Relation::Le => act - row.rhs,
                Relation::Ge => row.rhs - act,
                Relation::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.check()?;
        let n = self.n_vars();
        let m = self.n_rows();
        if self.lower.iter().zip(&self.upper).any(|(lo, hi)| lo > hi) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NAN,
                iterations: 0,
                duals: vec![0.0; m],
                reduced_costs: vec![0.0; n],
            });
        }
        Simplex::new(self).run(self)
    }

    /// Fixed-format MPS text of the problem.
    ///
    /// Columns are named `C` followed by the 1-based column index padded to
    /// seven digits, rows likewise with `R`, and the objective row is `COST`.
    pub fn to_mps(&self, name: &str) -> String {
        let col = |j: usize| format!("C{:07}", j + 1);
        let row = |i: usize| format!("R{:07}", i + 1);
        let mut s = String::new();
        let _ = writeln!(s, "NAME          {name}");
        let _ = writeln!(s, "ROWS");
        let _ = writeln!(s, " N  COST");
        for (i, r) in self.constraints.iter().enumerate() {
            let kind = match r.relation {
                Relation::Le => 'L',
                Relation::Eq => 'E',
                Relation::Ge => 'G',
            };
            let _ = writeln!(s, " {kind}  {}", row(i));
        }
        let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n_vars()];
        for (i, r) in self.constraints.iter().enumerate() {
            for &(j, a) in &r.coeffs {
                by_col[j].push((i, a));
            }
        }
        let _ = writeln!(s, "COLUMNS");
        for (j, entries) in by_col.iter_mut().enumerate() {
            entries.sort_by_key(|e| e.0);
            if self.objective[j] != 0.0 || entries.is_empty() {
                let _ = writeln!(s, "    {:<8}  {:<8}  {:>12}", col(j), "COST", mps_number(self.objective[j]));
            }
            for &(i, a) in entries.iter() {
                let _ = writeln!(s, "    {:<8}  {:<8}  {:>12}", col(j), row(i), mps_number(a));
            }
        }
        let _ = writeln!(s, "RHS");
        for (i, r) in self.constraints.iter().enumerate() {
            if r.rhs != 0.0 {
                let _ = writeln!(s, "    {:<8}  {:<8}  {:>12}", "RHS", row(i), mps_number(r.rhs));
            }
        }
        let _ = writeln!(s, "BOUNDS");
        for j in 0..self.n_vars() {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            let mut bound = |kind: &str, v: Option<f64>| {
                let value = v.map(mps_number).unwrap_or_default();
                let _ = writeln!(s, " {kind} {:<8}  {:<8}  {:>12}", "BND", col(j), value);
            };
            if lo == hi {
                bound("FX", Some(lo));
                continue;
            }
            match (lo.is_finite(), hi.is_finite()) {
                (false, false) => bound("FR", None),
                (false, true) => {
                    bound("MI", None);
                    bound("UP", Some(hi));
                }
                (true, _) => {
                    if lo != 0.0 {
                        bound("LO", Some(lo));
                    }
                    if hi.is_finite() {
                        bound("UP", Some(hi));
                    }
                }
            }
        }
        let _ = writeln!(s, "ENDATA");
        s
    }
}

/// Shortest representation of `v` that fits a 12-character MPS field.
fn mps_number(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    for digits in (0..=11).rev() {
        let sci = format!("{v:.digits$e}");
        if sci.len() <= 12 {
            return sci;
        }
    }
    format!("{v:e}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic(usize),
    Lower,
    Upper,
    Free,
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Simplex {
    m: usize,
    n: usize,
    width: usize,
    /// Original matrix `[A | I | diag(sign)]`, row-major.
    a: Vec<f64>,
    b: Vec<f64>,
    tab: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    xb: Vec<f64>,
    iterations: usize,
    since_reinvert: usize,
    degenerate_streak: usize,
    bland: bool,
}

impl Simplex {
    fn new(p: &LpProblem) -> Self {
        let n = p.n_vars();
        let m = p.n_rows();
        let width = n + 2 * m;
        let mut a = vec![0.0; m * width];
        let mut lo = vec![0.0; width];
        let mut hi = vec![0.0; width];
        let mut state = vec![State::Lower; width];
        lo[..n].copy_from_slice(&p.lower);
        hi[..n].copy_from_slice(&p.upper);
        for j in 0..n {
            state[j] = if lo[j].is_finite() {
                State::Lower
            } else if hi[j].is_finite() {
                State::Upper
            } else {
                State::Free
            };
        }
        let mut b = vec![0.0; m];
        let mut basis = vec![0; m];
        let mut xb = vec![0.0; m];
        let mut cost = vec![0.0; width];
        for (i, row) in p.constraints.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                a[i * width + j] += v;
            }
            b[i] = row.rhs;
            let slack = n + i;
            a[i * width + slack] = 1.0;
            let (slo, shi) = match row.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lo[slack] = slo;
            hi[slack] = shi;
        }
        let mut s = Simplex {
            m,
            n,
            width,
            a,
            b,
            tab: Vec::new(),
            lo,
            hi,
            cost: Vec::new(),
            d: Vec::new(),
            basis: Vec::new(),
            state,
            xb: Vec::new(),
            iterations: 0,
            since_reinvert: 0,
            degenerate_streak: 0,
            bland: false,
        };
        for i in 0..m {
            let slack = n + i;
            let art = n + m + i;
            let mut residual = s.b[i];
            for j in 0..n {
                let v = s.a[i * width + j];
                if v != 0.0 {
                    residual -= v * s.value_nonbasic(j);
                }
            }
            if residual >= s.lo[slack] && residual <= s.hi[slack] {
                basis[i] = slack;
                xb[i] = residual;
                s.state[slack] = State::Basic(i);
                s.a[i * width + art] = 1.0;
                s.state[art] = State::Lower;
            } else {
                let sval = if residual < s.lo[slack] { s.lo[slack] } else { s.hi[slack] };
                s.state[slack] = if sval == s.lo[slack] { State::Lower } else { State::Upper };
                let rest = residual - sval;
                let sign = if rest >= 0.0 { 1.0 } else { -1.0 };
                s.a[i * width + art] = sign;
                s.hi[art] = f64::INFINITY;
                basis[i] = art;
                xb[i] = rest.abs();
                s.state[art] = State::Basic(i);
                cost[art] = 1.0;
            }
        }
        // The starting basis is diagonal with entries +-1, so B^-1 A is A
        // with each row multiplied by its basic coefficient.
        let mut tab = s.a.clone();
        for i in 0..m {
            let coef = s.a[i * width + basis[i]];
            if coef < 0.0 {
                for v in &mut tab[i * width..(i + 1) * width] {
                    *v = -*v;
                }
            }
        }
        s.tab = tab;
        s.basis = basis;
        s.xb = xb;
        s.cost = cost;
        s
    }

    fn value_nonbasic(&self, j: usize) -> f64 {
        match self.state[j] {
            State::Lower => self.lo[j],
            State::Upper => self.hi[j],
            State::Free => 0.0,
            State::Basic(r) => self.xb[r],
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n + self.m
    }

    fn compute_reduced_costs(&mut self) {
        let w = self.width;
        let mut d = self.cost.clone();
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.tab[i * w..(i + 1) * w];
                for (dj, t) in d.iter_mut().zip(row) {
                    *dj -= cb * t;
                }
            }
        }
        self.d = d;
    }

    fn dual_tol(&self) -> f64 {
        let cmax = self.cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        1e-9 * cmax.max(1.0)
    }

    /// Entering column and direction (+1 increase, -1 decrease).
    fn price(&self, tol: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.width {
            let dj = self.d[j];
            let dir = match self.state[j] {
                State::Basic(_) => continue,
                _ if self.lo[j] == self.hi[j] => continue,
                State::Lower if dj < -tol => 1.0,
                State::Upper if dj > tol => -1.0,
                State::Free if dj.abs() > tol => -dj.signum(),
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, score)| dj.abs() > score) {
                best = Some((j, dir, dj.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let p = self.tab[r * w + j];
        for v in &mut self.tab[r * w..(r + 1) * w] {
            *v /= p;
        }
        self.tab[r * w + j] = 1.0;
        let (before, rest) = self.tab.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[j];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (v, pv) in self.d.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            self.d[j] = 0.0;
        }
        self.since_reinvert += 1;
    }

    /// Rebuilds `B^-1 A`, the basic values and the reduced costs from the
    /// original data.
    fn reinvert(&mut self) -> Result<(), LpError> {
        let (m, w) = (self.m, self.width);
        let mut t = self.a.clone();
        let mut rhs = self.b.clone();
        for j in 0..w {
            if matches!(self.state[j], State::Basic(_)) {
                continue;
            }
            let v = self.value_nonbasic(j);
            if v != 0.0 {
                for i in 0..m {
                    rhs[i] -= self.a[i * w + j] * v;
                }
            }
        }
        let cols = self.basis.clone();
        let mut row_of = vec![usize::MAX; m];
        let mut used = vec![false; m];
        for &c in &cols {
            let mut best = None;
            let mut best_abs = 1e-11;
            for i in 0..m {
                if !used[i] && t[i * w + c].abs() > best_abs {
                    best_abs = t[i * w + c].abs();
                    best = Some(i);
                }
            }
            let r = best.ok_or(LpError::NumericFailure)?;
            used[r] = true;
            let p = t[r * w + c];
            for v in &mut t[r * w..(r + 1) * w] {
                *v /= p;
            }
            rhs[r] /= p;
            for i in 0..m {
                if i == r {
                    continue;
                }
                let f = t[i * w + c];
                if f != 0.0 {
                    for k in 0..w {
                        t[i * w + k] -= f * t[r * w + k];
                    }
                    rhs[i] -= f * rhs[r];
                    t[i * w + c] = 0.0;
                }
            }
            row_of[r] = c;
        }
        self.tab = t;
        self.basis = row_of;
        self.xb = rhs;
        for (i, &c) in self.basis.iter().enumerate() {
            self.state[c] = State::Basic(i);
        }
        self.compute_reduced_costs();
        self.since_reinvert = 0;
        Ok(())
    }

    fn iterate(&mut self, phase_two: bool) -> Result<Outcome, LpError> {
        let limit = 50 * (self.m + self.width) + 1000;
        let w = self.width;
        loop {
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert()?;
            }
            let tol = if phase_two { self.dual_tol() } else { 1e-9 };
            let Some((j, dir)) = self.price(tol) else {
                return Ok(Outcome::Optimal);
            };
            self.iterations += 1;
            if self.iterations > limit {
                return Err(LpError::IterationLimit(limit));
            }

            let mut theta = if self.lo[j].is_finite() && self.hi[j].is_finite() {
                self.hi[j] - self.lo[j]
            } else {
                f64::INFINITY
            };
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_pivot = 0.0f64;
            for i in 0..self.m {
                let t = self.tab[i * w + j];
                if t.abs() <= PIVOT_TOL {
                    continue;
                }
                let delta = -dir * t;
                let col = self.basis[i];
                let (limit_i, to_upper) = if delta < 0.0 {
                    if !self.lo[col].is_finite() {
                        continue;
                    }
                    ((self.xb[i] - self.lo[col]) / -delta, false)
                } else {
                    if !self.hi[col].is_finite() {
                        continue;
                    }
                    ((self.hi[col] - self.xb[i]) / delta, true)
                };
                let limit_i = limit_i.max(0.0);
                let slack = 1e-12 * (1.0 + theta.min(1e12));
                let better = if limit_i < theta - slack {
                    true
                } else if (limit_i - theta).abs() <= slack {
                    match leave {
                        None => false,
                        Some((r, _)) => {
                            if self.bland {
                                col < self.basis[r]
                            } else {
                                t.abs() > leave_pivot
                            }
                        }
                    }
                } else {
                    false
                };
                if better {
                    theta = limit_i;
                    leave = Some((i, to_upper));
                    leave_pivot = t.abs();
                }
            }
            if theta.is_infinite() {
                return Ok(Outcome::Unbounded);
            }

            if theta <= DEGENERATE_STEP {
                self.degenerate_streak += 1;
                if self.degenerate_streak >= BLAND_AFTER {
                    self.bland = true;
                }
            } else {
                self.degenerate_streak = 0;
                self.bland = false;
            }

            let entering_value = self.value_nonbasic(j) + dir * theta;
            if theta != 0.0 {
                for i in 0..self.m {
                    let t = self.tab[i * w + j];
                    if t != 0.0 {
                        self.xb[i] -= dir * t * theta;
                    }
                }
            }
            match leave {
                None => {
                    self.state[j] = if dir > 0.0 { State::Upper } else { State::Lower };
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    self.state[out] = if to_upper && self.lo[out] != self.hi[out] {
                        State::Upper
                    } else {
                        State::Lower
                    };
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.state[j] = State::Basic(r);
                    self.xb[r] = entering_value;
                }
            }
        }
    }

    fn run(mut self, p: &LpProblem) -> Result<LpSolution, LpError> {
        let (n, m) = (self.n, self.m);
        let needs_phase_one = (0..m).any(|i| self.is_artificial(self.basis[i]));
        if needs_phase_one {
            self.compute_reduced_costs();
            self.iterate(false)?;
            self.reinvert()?;
            let infeasibility: f64 = (0..m)
                .filter(|&i| self.is_artificial(self.basis[i]))
                .map(|i| self.xb[i].max(0.0))
                .sum();
            let bnorm = self.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if infeasibility > 1e-8 * (1.0 + bnorm) {
                return Ok(self.finish(p, LpStatus::Infeasible));
            }
            for j in n + m..self.width {
                self.hi[j] = 0.0;
                if !matches!(self.state[j], State::Basic(_)) {
                    self.state[j] = State::Lower;
                }
            }
            self.drive_out_artificials();
            self.reinvert()?;
        }
        self.cost = vec![0.0; self.width];
        self.cost[..n].copy_from_slice(&p.objective);
        self.compute_reduced_costs();
        self.bland = false;
        self.degenerate_streak = 0;
        // A final refactorisation can expose residual pricing errors, so
        // iterate until a clean tableau confirms optimality.
        for _ in 0..5 {
            match self.iterate(true)? {
                Outcome::Unbounded => return Ok(self.finish(p, LpStatus::Unbounded)),
                Outcome::Optimal => {}
            }
            self.reinvert()?;
            if self.price(self.dual_tol()).is_none() {
                break;
            }
        }
        Ok(self.finish(p, LpStatus::Optimal))
    }

    fn drive_out_artificials(&mut self) {
        let w = self.width;
        let real = self.n + self.m;
        for r in 0..self.m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let mut best = None;
            let mut best_abs = 1e-7;
            for k in 0..real {
                if matches!(self.state[k], State::Basic(_)) {
                    continue;
                }
                let v = self.tab[r * w + k].abs();
                if v > best_abs {
                    best_abs = v;
                    best = Some(k);
                }
            }
            if let Some(k) = best {
                let out = self.basis[r];
                let value = self.value_nonbasic(k);
                self.pivot(r, k);
                self.basis[r] = k;
                self.state[k] = State::Basic(r);
                self.state[out] = State::Lower;
                self.xb[r] = value;
            }
        }
    }

    fn finish(&self, p: &LpProblem, status: LpStatus) -> LpSolution {
        let n = self.n;
        let x: Vec<f64> = (0..n).map(|j| self.value_nonbasic(j)).collect();
        let objective = if status == LpStatus::Optimal {
            p.objective.iter().zip(&x).map(|(c, v)| c * v).sum()
        } else {
            f64::NAN
        };
        let (duals, reduced_costs) = if status == LpStatus::Optimal {
            (
                (0..self.m).map(|i| -self.d[n + i]).collect(),
                self.d[..n].to_vec(),
            )
        } else {
            (vec![0.0; self.m], vec![0.0; n])
        };
        LpSolution {
            status,
            x,
            objective,
            iterations: self.iterations,
            duals,
            reduced_costs,
        }
    }
}
