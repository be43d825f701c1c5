//! Charnes-Cooper reduction of the single-slot linear-fractional program and
//! a small dense two-phase simplex solver with Bland's anti-cycling rule.
//!
//! The solver only ever sees `max c'x, Ax <= b, x >= 0`. Equality rows and
//! free variables are rewritten into that form before the tableau is built
//! and mapped back afterwards.

use crate::error::{Error, Result};
use crate::single_slot::LfpStandardForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    NonNegative,
    Free,
}

/// `maximize objective' x` subject to `matrix x (<= | =) rhs` row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub row_kinds: Vec<RowKind>,
    pub var_bounds: Vec<VarBound>,
}

impl LinearProgram {
    pub fn new(
        objective: Vec<f64>,
        matrix: Vec<Vec<f64>>,
        rhs: Vec<f64>,
        row_kinds: Vec<RowKind>,
        var_bounds: Vec<VarBound>,
    ) -> Result<Self> {
        let lp = Self {
            objective,
            matrix,
            rhs,
            row_kinds,
            var_bounds,
        };
        lp.validate()?;
        Ok(lp)
    }

    /// All rows `<=`, all variables non-negative.
    pub fn canonical(objective: Vec<f64>, matrix: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        let m = matrix.len();
        let n = objective.len();
        Self::new(objective, matrix, rhs, vec![RowKind::Le; m], vec![VarBound::NonNegative; n])
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let m = self.n_rows();
        if self.rhs.len() != m || self.row_kinds.len() != m || self.var_bounds.len() != n {
            return Err(Error::Contract("inconsistent LP dimensions".into()));
        }
        if self.matrix.iter().any(|row| row.len() != n) {
            return Err(Error::Contract("constraint row length differs from objective".into()));
        }
        let finite = self
            .objective
            .iter()
            .chain(self.rhs.iter())
            .chain(self.matrix.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("LP data must be finite".into()));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest KKT residual of a claimed optimal primal/dual pair, relative to
    /// the magnitude of the data: primal feasibility, dual feasibility, dual
    /// sign, and the duality gap.
    pub fn kkt_residual(&self, sol: &LpSolution) -> f64 {
        let scale = 1.0
            + self
                .objective
                .iter()
                .chain(self.rhs.iter())
                .chain(self.matrix.iter().flatten())
                .fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut worst: f64 = 0.0;

        for (i, row) in self.matrix.iter().enumerate() {
            let lhs = dot(row, &sol.x);
            let r = match self.row_kinds[i] {
                RowKind::Le => (lhs - self.rhs[i]).max(0.0),
                RowKind::Eq => (lhs - self.rhs[i]).abs(),
            };
            worst = worst.max(r);
            if self.row_kinds[i] == RowKind::Le {
                worst = worst.max(-sol.duals[i]);
            }
        }
        for (j, bound) in self.var_bounds.iter().enumerate() {
            let aty: f64 = self
                .matrix
                .iter()
                .zip(&sol.duals)
                .map(|(row, y)| row[j] * y)
                .sum();
            let reduced = self.objective[j] - aty;
            match bound {
                VarBound::NonNegative => {
                    worst = worst.max(-sol.x[j]).max(reduced);
                }
                VarBound::Free => worst = worst.max(reduced.abs()),
            }
        }
        worst = worst.max((sol.objective - sol.dual_bound).abs());
        worst / scale
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
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers of the dual `min rhs'y, A'y >= c`. Empty unless optimal.
    pub duals: Vec<f64>,
    /// `rhs' duals`; an upper bound on every feasible primal value.
    pub dual_bound: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Defaults to `10 (m + n)^2` on the internal standard form.
    pub max_pivots: Option<usize>,
    pub eps: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_pivots: None,
            eps: 1e-11,
        }
    }
}

pub fn simplex_solve(lp: &LinearProgram) -> Result<LpSolution> {
    simplex_solve_with(lp, &SimplexOptions::default())
}

pub fn simplex_solve_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    lp.validate()?;
    let std = StandardForm::from_lp(lp);
    let raw = Tableau::solve(&std, opts)?;
    Ok(std.map_back(lp, raw))
}

struct StandardForm {
    c: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    /// For each original variable, (positive column, optional negative column).
    var_cols: Vec<(usize, Option<usize>)>,
    /// For each original row, (first std row, optional mirrored std row).
    row_map: Vec<(usize, Option<usize>)>,
}

impl StandardForm {
    fn from_lp(lp: &LinearProgram) -> Self {
        let mut var_cols = Vec::with_capacity(lp.n_vars());
        let mut n_std = 0;
        for bound in &lp.var_bounds {
            match bound {
                VarBound::NonNegative => {
                    var_cols.push((n_std, None));
                    n_std += 1;
                }
                VarBound::Free => {
                    var_cols.push((n_std, Some(n_std + 1)));
                    n_std += 2;
                }
            }
        }
        let expand = |row: &[f64], sign: f64| -> Vec<f64> {
            let mut out = vec![0.0; n_std];
            for (j, &(pos, neg)) in var_cols.iter().enumerate() {
                out[pos] = sign * row[j];
                if let Some(neg) = neg {
                    out[neg] = -sign * row[j];
                }
            }
            out
        };

        let c = expand(&lp.objective, 1.0);
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut row_map = Vec::with_capacity(lp.n_rows());
        for (i, row) in lp.matrix.iter().enumerate() {
            let first = a.len();
            a.push(expand(row, 1.0));
            b.push(lp.rhs[i]);
            let mirror = match lp.row_kinds[i] {
                RowKind::Le => None,
                RowKind::Eq => {
                    a.push(expand(row, -1.0));
                    b.push(-lp.rhs[i]);
                    Some(first + 1)
                }
            };
            row_map.push((first, mirror));
        }
        Self {
            c,
            a,
            b,
            var_cols,
            row_map,
        }
    }

    fn map_back(&self, lp: &LinearProgram, raw: RawSolution) -> LpSolution {
        let n = lp.n_vars();
        match raw.status {
            LpStatus::Optimal => {
                let x: Vec<f64> = self
                    .var_cols
                    .iter()
                    .map(|&(pos, neg)| raw.x[pos] - neg.map_or(0.0, |k| raw.x[k]))
                    .collect();
                let duals: Vec<f64> = self
                    .row_map
                    .iter()
                    .map(|&(first, mirror)| raw.y[first] - mirror.map_or(0.0, |k| raw.y[k]))
                    .collect();
                let dual_bound = dot(&lp.rhs, &duals);
                LpSolution {
                    status: LpStatus::Optimal,
                    objective: lp.value(&x),
                    x,
                    duals,
                    dual_bound,
                    pivots: raw.pivots,
                }
            }
            status => LpSolution {
                status,
                x: vec![0.0; n],
                objective: match status {
                    LpStatus::Unbounded => f64::INFINITY,
                    _ => f64::NEG_INFINITY,
                },
                duals: Vec::new(),
                dual_bound: f64::NAN,
                pivots: raw.pivots,
            },
        }
    }
}

struct RawSolution {
    status: LpStatus,
    x: Vec<f64>,
    y: Vec<f64>,
    pivots: usize,
}

/// Dense tableau. Columns are laid out as structural, slack, artificial, rhs.
struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced costs `c_j - c_B' B^-1 A_j` for the current phase.
    cost: Vec<f64>,
    basis: Vec<usize>,
    n: usize,
    m: usize,
    n_art: usize,
    pivots: usize,
    max_pivots: usize,
    eps: f64,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn solve(std: &StandardForm, opts: &SimplexOptions) -> Result<RawSolution> {
        let m = std.a.len();
        let n = std.c.len();
        let negated: Vec<bool> = std.b.iter().map(|&v| v < 0.0).collect();
        let n_art = negated.iter().filter(|&&neg| neg).count();
        let width = n + m + n_art + 1;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut art = 0;
        for i in 0..m {
            let sign = if negated[i] { -1.0 } else { 1.0 };
            let mut row = vec![0.0; width];
            for j in 0..n {
                row[j] = sign * std.a[i][j];
            }
            row[n + i] = sign;
            row[width - 1] = sign * std.b[i];
            if negated[i] {
                row[n + m + art] = 1.0;
                basis.push(n + m + art);
                art += 1;
            } else {
                basis.push(n + i);
            }
            rows.push(row);
        }

        let max_pivots = opts.max_pivots.unwrap_or(10 * (m + n) * (m + n)).max(1);
        let mut tab = Tableau {
            rows,
            cost: vec![0.0; width],
            basis,
            n,
            m,
            n_art,
            pivots: 0,
            max_pivots,
            eps: opts.eps,
        };

        if n_art > 0 {
            // Phase 1: maximize -(sum of artificials).
            let mut c1 = vec![0.0; width - 1];
            for k in 0..n_art {
                c1[n + m + k] = -1.0;
            }
            tab.price(&c1);
            tab.run(width - 1)?;
            let scale = 1.0 + std.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if tab.cost[width - 1] < -1e-9 * scale {
                return Ok(RawSolution {
                    status: LpStatus::Infeasible,
                    x: Vec::new(),
                    y: Vec::new(),
                    pivots: tab.pivots,
                });
            }
            tab.evict_artificials();
        }

        let mut c2 = vec![0.0; width - 1];
        c2[..n].copy_from_slice(&std.c);
        tab.price(&c2);
        let status = match tab.run(n + m)? {
            PhaseEnd::Optimal => LpStatus::Optimal,
            PhaseEnd::Unbounded => LpStatus::Unbounded,
        };

        let mut x = vec![0.0; n];
        for (i, &bv) in tab.basis.iter().enumerate() {
            if bv < n {
                x[bv] = tab.rows[i][width - 1].max(0.0);
            }
        }
        let y = (0..m).map(|i| -tab.cost[n + i]).collect();
        Ok(RawSolution {
            status,
            x,
            y,
            pivots: tab.pivots,
        })
    }

    fn rhs_col(&self) -> usize {
        self.n + self.m + self.n_art
    }

    /// Loads reduced costs for objective `c` given the current basis. The
    /// last entry of `cost` holds the current objective value.
    fn price(&mut self, c: &[f64]) {
        let rhs = self.rhs_col();
        self.cost[..rhs].copy_from_slice(c);
        self.cost[rhs] = 0.0;
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = c[bv];
            if cb != 0.0 {
                for (j, v) in self.rows[i].iter().enumerate() {
                    if j == rhs {
                        self.cost[j] += cb * v;
                    } else {
                        self.cost[j] -= cb * v;
                    }
                }
            }
        }
    }

    /// Primal simplex iterations with Bland's rule over the first
    /// `n_cols` columns.
    fn run(&mut self, n_cols: usize) -> Result<PhaseEnd> {
        loop {
            let Some(enter) = (0..n_cols).find(|&j| self.cost[j] > self.eps) else {
                return Ok(PhaseEnd::Optimal);
            };
            let rhs = self.rhs_col();
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.rows[i][enter];
                if a > self.eps {
                    let ratio = self.rows[i][rhs] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - self.eps
                                || (ratio <= best + self.eps && self.basis[i] < self.basis[k])
                            {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((leave, _)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            if self.pivots >= self.max_pivots {
                return Err(Error::NumericalFailure(self.max_pivots));
            }
            self.pivot(leave, enter);
        }
    }

    fn pivot(&mut self, r: usize, col: usize) {
        self.pivots += 1;
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[col];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                    row[col] = 0.0;
                }
            }
        }
        let rhs = self.rhs_col();
        let f = self.cost[col];
        if f != 0.0 {
            for (j, pv) in pivot_row.iter().enumerate() {
                if j == rhs {
                    self.cost[j] += f * pv;
                } else {
                    self.cost[j] -= f * pv;
                }
            }
            self.cost[col] = 0.0;
        }
        self.basis[r] = col;
    }

    /// Replaces artificials that remain basic at zero level. The structural
    /// and slack columns together have full row rank, so a pivot always exists.
    fn evict_artificials(&mut self) {
        let first_art = self.n + self.m;
        for i in 0..self.m {
            if self.basis[i] >= first_art {
                let col = (0..first_art)
                    .filter(|&j| !self.basis.contains(&j))
                    .max_by(|&a, &b| self.rows[i][a].abs().total_cmp(&self.rows[i][b].abs()));
                if let Some(col) = col {
                    if self.rows[i][col].abs() > self.eps {
                        self.pivot(i, col);
                    }
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Homogenizes `max (c'x + a)/(d'x + b), Ax <= beta` into the linear program
/// over `(y, t) = (x, 1)/(d'x + b)`:
/// `max c'y + a t, Ay - beta t <= 0, d'y + b t = 1, y, t >= 0`.
pub fn charnes_cooper(lfp: &LfpStandardForm) -> Result<LinearProgram> {
    if !(lfp.b_scalar > 0.0) {
        return Err(Error::Domain(format!(
            "denominator constant b = {} must be positive",
            lfp.b_scalar
        )));
    }
    let mut matrix: Vec<Vec<f64>> = lfp
        .matrix_a
        .iter()
        .zip(&lfp.beta)
        .map(|(row, beta)| vec![row[0], row[1], row[2], -beta])
        .collect();
    let mut rhs = vec![0.0; matrix.len()];
    let mut kinds = vec![RowKind::Le; matrix.len()];
    matrix.push(vec![lfp.d[0], lfp.d[1], lfp.d[2], lfp.b_scalar]);
    rhs.push(1.0);
    kinds.push(RowKind::Eq);

    LinearProgram::new(
        vec![lfp.c[0], lfp.c[1], lfp.c[2], lfp.a_scalar],
        matrix,
        rhs,
        kinds,
        vec![VarBound::NonNegative; 4],
    )
}

/// Undoes the Charnes-Cooper substitution, `x = y / t`.
pub fn recover_x(sol: &LpSolution) -> Result<[f64; 3]> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::Contract(format!("cannot recover x from {:?} LP", sol.status)));
    }
    if sol.x.len() != 4 {
        return Err(Error::Contract("expected (y1, y2, y3, t)".into()));
    }
    let t = sol.x[3];
    if t <= 1e-12 {
        return Err(Error::DegenerateDenominator(t));
    }
    Ok([sol.x[0] / t, sol.x[1] / t, sol.x[2] / t])
}
