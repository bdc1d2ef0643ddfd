//! Bounded-variable primal revised simplex.
//!
//! Every row gets a logical (slack) column so the working form is
//! `A x + I s = b` with `l <= (x, s) <= u`. Phase 1 minimizes the sum of bound
//! violations of the basic variables (composite objective); phase 2 minimizes
//! the true cost. The basis inverse is kept explicitly (column-major) and is
//! updated in product form, with a fresh Gauss-Jordan inversion every
//! `refactor_interval` pivots.

use std::time::Instant;

use log::trace;

use crate::error::ModelError;
use crate::problem::{LinearProgram, ObjectiveSense, RowSense};
use crate::scaling::Scaling;

/// Status of a column in a simplex basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    FreeZero,
}

/// A simplex basis: one status per structural column followed by one per row.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

impl Basis {
    /// Returns a copy with `added` nonbasic structural columns appended after
    /// the existing `num_structural` ones (before the row logicals).
    pub fn with_added_columns(&self, num_structural: usize, added: usize) -> Basis {
        let mut status = Vec::with_capacity(self.status.len() + added);
        status.extend_from_slice(&self.status[..num_structural]);
        status.extend(std::iter::repeat_n(VarStatus::AtLower, added));
        status.extend_from_slice(&self.status[num_structural..]);
        Basis { status }
    }

    pub fn num_basic(&self) -> usize {
        self.status.iter().filter(|s| **s == VarStatus::Basic).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The solver could not reach a trustworthy answer.
    Numerical,
    /// Iteration or time limit hit before a conclusion.
    Interrupted,
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    /// Primal feasibility tolerance on the scaled problem.
    pub feasibility_tol: f64,
    /// Reduced-cost tolerance on the scaled problem.
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub max_iterations: Option<usize>,
    pub refactor_interval: usize,
    pub scaling: bool,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_switch: usize,
    pub deadline: Option<Instant>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: None,
            refactor_interval: 100,
            scaling: true,
            degenerate_switch: 50,
            deadline: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural variable values.
    pub x: Vec<f64>,
    /// Per-row dual value: the rate of change of the optimal objective with
    /// respect to that row's right-hand side.
    pub duals: Vec<f64>,
    /// Per-structural reduced cost in the caller's objective sense.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub basis: Basis,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn empty(status: LpStatus, n: usize, m: usize, iterations: usize, basis: Basis) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            objective: f64::NAN,
            iterations,
            basis,
        }
    }
}

/// Solves `p` from a slack basis with default options.
pub fn solve_lp(p: &LinearProgram) -> Result<LpSolution, ModelError> {
    solve_lp_with(p, None, &LpOptions::default())
}

/// Solves `p`, optionally warm-started from `basis`.
pub fn solve_lp_with(p: &LinearProgram, basis: Option<&Basis>, opts: &LpOptions) -> Result<LpSolution, ModelError> {
    p.validate()?;
    let n = p.num_vars();
    let m = p.num_rows();
    if let Some(b) = basis {
        if b.status.len() != n + m {
            return Err(ModelError::BasisLength {
                got: b.status.len(),
                expected: n + m,
            });
        }
    }
    let mut engine = Engine::new(p, opts);
    engine.install_basis(basis);
    let status = engine.run();
    Ok(engine.extract(p, status))
}

/// Compressed sparse column storage for the structural part.
struct Csc {
    start: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

struct Engine<'o> {
    opts: &'o LpOptions,
    m: usize,
    n: usize,
    a: Csc,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    b: Vec<f64>,
    scaling: Scaling,
    negate: bool,
    head: Vec<usize>,
    status: Vec<VarStatus>,
    x: Vec<f64>,
    /// Column-major basis inverse.
    binv: Vec<f64>,
    since_refactor: usize,
    iterations: usize,
}

impl<'o> Engine<'o> {
    fn new(p: &LinearProgram, opts: &'o LpOptions) -> Self {
        let n = p.num_vars();
        let m = p.num_rows();
        let scaling = if opts.scaling {
            Scaling::equilibrate(p)
        } else {
            Scaling::identity(n, m)
        };
        let negate = p.sense == ObjectiveSense::Maximize;

        // Build scaled CSC, merging duplicate entries.
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, c) in p.constraints.iter().enumerate() {
            for &(j, v) in &c.coeffs {
                if v != 0.0 {
                    cols[j].push((i, v * scaling.row[i] * scaling.col[j]));
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        start.push(0);
        for col in &mut cols {
            col.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < col.len() {
                let (i, mut v) = col[k];
                k += 1;
                while k < col.len() && col[k].0 == i {
                    v += col[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    rows.push(i);
                    vals.push(v);
                }
            }
            start.push(rows.len());
        }

        let nt = n + m;
        let mut lb = Vec::with_capacity(nt);
        let mut ub = Vec::with_capacity(nt);
        let mut cost = Vec::with_capacity(nt);
        for (j, v) in p.variables.iter().enumerate() {
            let s = scaling.col[j];
            lb.push(v.lower / s);
            ub.push(v.upper / s);
            let c = v.cost * s;
            cost.push(if negate { -c } else { c });
        }
        let mut b = Vec::with_capacity(m);
        for (i, c) in p.constraints.iter().enumerate() {
            let r = scaling.row[i];
            b.push(c.rhs * r);
            let (l, u) = match c.sense {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            };
            lb.push(l);
            ub.push(u);
            cost.push(0.0);
        }

        Self {
            opts,
            m,
            n,
            a: Csc { start, rows, vals },
            lb,
            ub,
            cost,
            b,
            scaling,
            negate,
            head: Vec::new(),
            status: Vec::new(),
            x: vec![0.0; nt],
            binv: Vec::new(),
            since_refactor: 0,
            iterations: 0,
        }
    }

    fn nonbasic_status_for(&self, j: usize, hint: VarStatus) -> VarStatus {
        let (l, u) = (self.lb[j], self.ub[j]);
        match hint {
            VarStatus::AtUpper if u.is_finite() => VarStatus::AtUpper,
            VarStatus::AtLower if l.is_finite() => VarStatus::AtLower,
            _ => {
                if l.is_finite() {
                    VarStatus::AtLower
                } else if u.is_finite() {
                    VarStatus::AtUpper
                } else {
                    VarStatus::FreeZero
                }
            }
        }
    }

    fn install_basis(&mut self, basis: Option<&Basis>) {
        let nt = self.n + self.m;
        let usable = basis.filter(|b| b.num_basic() == self.m);
        let mut status = vec![VarStatus::AtLower; nt];
        let mut head = Vec::with_capacity(self.m);
        match usable {
            Some(b) => {
                for j in 0..nt {
                    if b.status[j] == VarStatus::Basic {
                        status[j] = VarStatus::Basic;
                        head.push(j);
                    } else {
                        status[j] = self.nonbasic_status_for(j, b.status[j]);
                    }
                }
            }
            None => {
                for j in 0..self.n {
                    status[j] = self.nonbasic_status_for(j, VarStatus::AtLower);
                }
                for i in 0..self.m {
                    status[self.n + i] = VarStatus::Basic;
                    head.push(self.n + i);
                }
            }
        }
        self.status = status;
        self.head = head;
        self.refactor();
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => self.lb[j],
            VarStatus::AtUpper => self.ub[j],
            _ => 0.0,
        }
    }

    fn column(&self, j: usize) -> ColumnIter<'_> {
        if j < self.n {
            let (s, e) = (self.a.start[j], self.a.start[j + 1]);
            ColumnIter::Sparse(self.a.rows[s..e].iter().zip(self.a.vals[s..e].iter()))
        } else {
            ColumnIter::Unit(Some(j - self.n))
        }
    }

    /// Inverts the current basis from scratch. Dependent columns are swapped
    /// for row logicals.
    fn refactor(&mut self) {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            self.binv.clear();
            self.recompute_primal();
            return;
        }
        loop {
            // Dense row-major working copy [B | I].
            let mut bm = vec![0.0; m * m];
            for (c, &j) in self.head.iter().enumerate() {
                for (i, v) in self.column(j) {
                    bm[i * m + c] = v;
                }
            }
            let mut inv = vec![0.0; m * m];
            for i in 0..m {
                inv[i * m + i] = 1.0;
            }
            // orig[p] = original row currently stored at physical row p.
            let mut orig: Vec<usize> = (0..m).collect();
            let mut failed = Vec::new();
            let mut placed = 0usize;
            let mut pivot_col_of_row = vec![usize::MAX; m];
            for c in 0..m {
                let mut best = placed;
                let mut best_abs = 0.0;
                for r in placed..m {
                    let v = bm[r * m + c].abs();
                    if v > best_abs {
                        best_abs = v;
                        best = r;
                    }
                }
                if best_abs < 1e-11 {
                    failed.push(c);
                    continue;
                }
                if best != placed {
                    for k in 0..m {
                        bm.swap(best * m + k, placed * m + k);
                        inv.swap(best * m + k, placed * m + k);
                    }
                    orig.swap(best, placed);
                }
                let p = placed;
                let piv = bm[p * m + c];
                for k in 0..m {
                    bm[p * m + k] /= piv;
                    inv[p * m + k] /= piv;
                }
                for r in 0..m {
                    if r == p {
                        continue;
                    }
                    let f = bm[r * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            bm[r * m + k] -= f * bm[p * m + k];
                            inv[r * m + k] -= f * inv[p * m + k];
                        }
                    }
                }
                pivot_col_of_row[p] = c;
                placed += 1;
            }
            if failed.is_empty() {
                // Physical row p of inv belongs to basis position pivot_col_of_row[p].
                let mut binv = vec![0.0; m * m];
                for p in 0..m {
                    let pos = pivot_col_of_row[p];
                    for k in 0..m {
                        binv[k * m + pos] = inv[p * m + k];
                    }
                }
                self.binv = binv;
                break;
            }
            // Replace each dependent column by the logical of an unpivoted row.
            let free_rows: Vec<usize> = (placed..m).map(|p| orig[p]).collect();
            for (c, row) in failed.into_iter().zip(free_rows) {
                let out = self.head[c];
                let logical = self.n + row;
                trace!("basis repair: column {out} replaced by logical {logical}");
                self.status[out] = self.nonbasic_status_for(out, VarStatus::AtLower);
                if self.status[logical] != VarStatus::Basic {
                    self.status[logical] = VarStatus::Basic;
                    self.head[c] = logical;
                }
            }
        }
        self.recompute_primal();
    }

    fn recompute_primal(&mut self) {
        let m = self.m;
        let nt = self.n + m;
        let mut rhs = self.b.clone();
        for j in 0..nt {
            if self.status[j] != VarStatus::Basic {
                let v = self.nonbasic_value(j);
                self.x[j] = v;
                if v != 0.0 {
                    for (i, a) in self.column(j) {
                        rhs[i] -= a * v;
                    }
                }
            }
        }
        for i in 0..m {
            let mut s = 0.0;
            for k in 0..m {
                s += self.binv[k * m + i] * rhs[k];
            }
            self.x[self.head[i]] = s;
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for (k, a) in self.column(j) {
            let col = &self.binv[k * m..(k + 1) * m];
            for (al, bv) in alpha.iter_mut().zip(col) {
                *al += a * bv;
            }
        }
        alpha
    }

    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|k| {
                let col = &self.binv[k * m..(k + 1) * m];
                col.iter().zip(cb).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    fn pivot_update(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let ar = alpha[r];
        for k in 0..m {
            let col = &mut self.binv[k * m..(k + 1) * m];
            let v = col[r] / ar;
            if v != 0.0 {
                for (i, al) in alpha.iter().enumerate() {
                    if i != r {
                        col[i] -= al * v;
                    }
                }
            }
            col[r] = v;
        }
        self.since_refactor += 1;
    }

    fn reduced_cost(&self, j: usize, y: &[f64], phase1: bool) -> f64 {
        let c = if phase1 { 0.0 } else { self.cost[j] };
        let mut d = c;
        for (i, a) in self.column(j) {
            d -= y[i] * a;
        }
        d
    }

    /// Basic-variable costs for the current phase; returns `true` in phase 1.
    fn phase_costs(&self, cb: &mut [f64]) -> bool {
        let tol = self.opts.feasibility_tol;
        let mut infeasible = false;
        for (i, &v) in self.head.iter().enumerate() {
            let xv = self.x[v];
            cb[i] = if xv < self.lb[v] - tol {
                infeasible = true;
                -1.0
            } else if xv > self.ub[v] + tol {
                infeasible = true;
                1.0
            } else {
                0.0
            };
        }
        if !infeasible {
            for (i, &v) in self.head.iter().enumerate() {
                cb[i] = self.cost[v];
            }
        }
        infeasible
    }

    /// Reduced costs of the nonbasic columns satisfy the optimality signs.
    fn dual_feasible(&self, y: &[f64]) -> bool {
        let otol = self.opts.optimality_tol.max(1e-7);
        (0..self.n + self.m).all(|j| {
            let st = self.status[j];
            if st == VarStatus::Basic || self.lb[j] == self.ub[j] {
                return true;
            }
            let d = self.reduced_cost(j, y, false);
            match st {
                VarStatus::AtLower => d >= -otol,
                VarStatus::AtUpper => d <= otol,
                _ => d.abs() <= otol,
            }
        })
    }

    /// Dual simplex from a dual feasible basis. Returns `Some(Infeasible)` on a
    /// dual ray, `None` once primal feasible or when it gives up (the primal
    /// loop then takes over).
    fn dual_phase(&mut self, max_iter: usize) -> Option<LpStatus> {
        let m = self.m;
        let nt = self.n + m;
        let ftol = self.opts.feasibility_tol;
        let ptol = self.opts.pivot_tol;
        let mut cb = vec![0.0; m];
        let mut verified = false;
        let start = self.iterations;
        loop {
            if self.iterations - start >= max_iter {
                return None;
            }
            if let Some(d) = self.opts.deadline {
                if self.iterations.is_multiple_of(64) && Instant::now() >= d {
                    return Some(LpStatus::Interrupted);
                }
            }
            if self.since_refactor >= self.opts.refactor_interval {
                self.refactor();
            }
            // Leaving row: largest bound violation.
            let mut leave = None;
            let mut worst = ftol;
            for (i, &v) in self.head.iter().enumerate() {
                let xv = self.x[v];
                let viol = if xv < self.lb[v] { self.lb[v] - xv } else { xv - self.ub[v] };
                if viol > worst {
                    worst = viol;
                    leave = Some(i);
                }
            }
            let Some(r) = leave else { return None };
            let out = self.head[r];
            let below = self.x[out] < self.lb[out];
            for (i, &v) in self.head.iter().enumerate() {
                cb[i] = self.cost[v];
            }
            let y = self.btran(&cb);
            let row: Vec<f64> = (0..m).map(|k| self.binv[k * m + r]).collect();

            // Dual ratio test with a two-pass tolerance.
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..nt {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lb[j] == self.ub[j] {
                    continue;
                }
                let a: f64 = self.column(j).map(|(i, v)| row[i] * v).sum();
                if a.abs() <= ptol {
                    continue;
                }
                // Moving x_j in direction s changes x_out by -a * s.
                let wanted = if below { -a } else { a };
                let ok = match st {
                    VarStatus::AtLower => wanted > 0.0,
                    VarStatus::AtUpper => wanted < 0.0,
                    _ => true,
                };
                if ok {
                    let d = self.reduced_cost(j, &y, false);
                    cands.push((j, a, d.abs() / a.abs()));
                }
            }
            if cands.is_empty() {
                if self.since_refactor > 0 && !verified {
                    verified = true;
                    self.refactor();
                    continue;
                }
                return Some(LpStatus::Infeasible);
            }
            verified = false;
            let otol = self.opts.optimality_tol;
            let bound = cands
                .iter()
                .map(|&(_, a, t)| t + otol / a.abs())
                .fold(f64::INFINITY, f64::min);
            let &(q, _, _) = cands
                .iter()
                .filter(|c| c.2 <= bound)
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()).then(y.0.cmp(&x.0)))
                .expect("candidate within bound");

            let alpha = self.ftran(q);
            if alpha[r].abs() <= ptol {
                self.refactor();
                return None;
            }
            let target = if below { self.lb[out] } else { self.ub[out] };
            let delta = (self.x[out] - target) / alpha[r];
            self.x[q] += delta;
            for i in 0..m {
                if alpha[i] != 0.0 {
                    let v = self.head[i];
                    self.x[v] -= alpha[i] * delta;
                }
            }
            self.status[out] = if below { VarStatus::AtLower } else { VarStatus::AtUpper };
            self.status[out] = self.nonbasic_status_for(out, self.status[out]);
            self.x[out] = self.nonbasic_value(out);
            self.head[r] = q;
            self.status[q] = VarStatus::Basic;
            self.pivot_update(r, &alpha);
            self.iterations += 1;
        }
    }

    fn run(&mut self) -> LpStatus {
        let m = self.m;
        let nt = self.n + m;
        let ftol = self.opts.feasibility_tol;
        let otol = self.opts.optimality_tol;
        let ptol = self.opts.pivot_tol;
        let max_iter = self.opts.max_iterations.unwrap_or(50 * (nt + m) + 20_000);
        let mut cb = vec![0.0; m];
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut verified_refactor = false;

        if self.phase_costs(&mut cb) {
            let mut costs = vec![0.0; m];
            for (i, &v) in self.head.iter().enumerate() {
                costs[i] = self.cost[v];
            }
            let y = self.btran(&costs);
            if self.dual_feasible(&y) {
                if let Some(status) = self.dual_phase(10 * (nt + m) + 1000) {
                    return status;
                }
            }
        }

        loop {
            if self.iterations >= max_iter {
                return LpStatus::Interrupted;
            }
            if let Some(d) = self.opts.deadline {
                if self.iterations.is_multiple_of(64) && Instant::now() >= d {
                    return LpStatus::Interrupted;
                }
            }
            if self.since_refactor >= self.opts.refactor_interval {
                self.refactor();
            }
            let phase1 = self.phase_costs(&mut cb);
            let y = self.btran(&cb);

            // Pricing.
            let mut enter = None;
            let mut best = 0.0;
            for j in 0..nt {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lb[j] == self.ub[j] {
                    continue;
                }
                let d = self.reduced_cost(j, &y, phase1);
                let eligible = match st {
                    VarStatus::AtLower => d < -otol,
                    VarStatus::AtUpper => d > otol,
                    VarStatus::FreeZero => d.abs() > otol,
                    VarStatus::Basic => false,
                };
                if eligible {
                    if bland {
                        enter = Some((j, d));
                        break;
                    }
                    if d.abs() > best {
                        best = d.abs();
                        enter = Some((j, d));
                    }
                }
            }

            let Some((q, dq)) = enter else {
                // Confirm with a fresh factorization before concluding.
                if self.since_refactor > 0 && !verified_refactor {
                    verified_refactor = true;
                    self.refactor();
                    continue;
                }
                return if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal };
            };
            verified_refactor = false;

            let alpha = self.ftran(q);
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };

            // Ratio test. rate[i] is d x_B[i] / d theta.
            let limit = |i: usize, with_tol: bool| -> Option<(f64, bool)> {
                let a = alpha[i];
                if a.abs() <= ptol {
                    return None;
                }
                let rate = -dir * a;
                let v = self.head[i];
                let xv = self.x[v];
                let (l, u) = (self.lb[v], self.ub[v]);
                let tol = if with_tol { ftol } else { 0.0 };
                if rate < 0.0 {
                    let target = if xv > u + ftol {
                        u
                    } else if xv < l - ftol {
                        return None;
                    } else {
                        l
                    };
                    if target == f64::NEG_INFINITY {
                        return None;
                    }
                    Some((((xv - target) + tol).max(0.0) / -rate, target == u && xv > u + ftol))
                } else {
                    let target = if xv < l - ftol {
                        l
                    } else if xv > u + ftol {
                        return None;
                    } else {
                        u
                    };
                    if target == f64::INFINITY {
                        return None;
                    }
                    Some((((target - xv) + tol).max(0.0) / rate, !(target == l && xv < l - ftol)))
                }
            };

            let mut leave: Option<usize> = None;
            let mut theta = f64::INFINITY;
            if bland {
                let mut best_ratio = f64::INFINITY;
                for i in 0..m {
                    if let Some((t, _)) = limit(i, false) {
                        let better = t < best_ratio - 1e-12
                            || (t <= best_ratio + 1e-12 && leave.is_some_and(|l| self.head[i] < self.head[l]));
                        if better {
                            best_ratio = t;
                            leave = Some(i);
                        }
                    }
                }
                theta = best_ratio;
            } else {
                let mut theta_max = f64::INFINITY;
                for i in 0..m {
                    if let Some((t, _)) = limit(i, true) {
                        theta_max = theta_max.min(t);
                    }
                }
                if theta_max.is_finite() {
                    let mut best_piv = 0.0;
                    for i in 0..m {
                        if let Some((t, _)) = limit(i, false) {
                            if t <= theta_max && alpha[i].abs() > best_piv {
                                best_piv = alpha[i].abs();
                                leave = Some(i);
                                theta = t;
                            }
                        }
                    }
                }
            }

            let flip_len = self.ub[q] - self.lb[q];
            let flip = flip_len.is_finite() && (leave.is_none() || flip_len <= theta);
            if flip {
                theta = flip_len;
            } else if leave.is_none() {
                if phase1 {
                    // Phase 1 is bounded below; an unbounded ray here means trouble.
                    if self.since_refactor > 0 {
                        self.refactor();
                        continue;
                    }
                    return LpStatus::Numerical;
                }
                return LpStatus::Unbounded;
            }

            self.iterations += 1;
            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > self.opts.degenerate_switch && !bland {
                    trace!("switching to Bland's rule after {degenerate_run} degenerate pivots");
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }

            // Move.
            if theta != 0.0 {
                self.x[q] += dir * theta;
                for i in 0..m {
                    if alpha[i] != 0.0 {
                        let v = self.head[i];
                        self.x[v] -= dir * theta * alpha[i];
                    }
                }
            }
            if flip {
                self.status[q] = if self.status[q] == VarStatus::AtUpper {
                    VarStatus::AtLower
                } else {
                    VarStatus::AtUpper
                };
                self.x[q] = self.nonbasic_value(q);
                continue;
            }
            let r = leave.expect("leaving row");
            let out = self.head[r];
            let rate = -dir * alpha[r];
            let xo = self.x[out];
            let to_upper = if rate < 0.0 {
                // decreasing: lands on u only when it started above u
                self.ub[out].is_finite() && (xo - self.ub[out]).abs() < (xo - self.lb[out]).abs()
            } else {
                !(self.lb[out].is_finite() && (xo - self.lb[out]).abs() < (xo - self.ub[out]).abs())
            };
            self.status[out] = if self.lb[out] == self.ub[out] {
                VarStatus::AtLower
            } else if to_upper {
                VarStatus::AtUpper
            } else {
                VarStatus::AtLower
            };
            self.status[out] = self.nonbasic_status_for(out, self.status[out]);
            self.x[out] = self.nonbasic_value(out);
            self.head[r] = q;
            self.status[q] = VarStatus::Basic;
            self.pivot_update(r, &alpha);
        }
    }

    fn extract(mut self, p: &LinearProgram, status: LpStatus) -> LpSolution {
        let n = self.n;
        let m = self.m;
        let basis = Basis {
            status: self.status.clone(),
        };
        if status != LpStatus::Optimal {
            return LpSolution::empty(status, n, m, self.iterations, basis);
        }
        self.refactor();
        let mut cb = vec![0.0; m];
        for (i, &v) in self.head.iter().enumerate() {
            cb[i] = self.cost[v];
        }
        let y = self.btran(&cb);
        let sign = if self.negate { -1.0 } else { 1.0 };
        let x: Vec<f64> = (0..n).map(|j| self.x[j] * self.scaling.col[j]).collect();
        let duals: Vec<f64> = (0..m).map(|i| sign * y[i] * self.scaling.row[i]).collect();
        let reduced_costs: Vec<f64> = (0..n)
            .map(|j| {
                if self.status[j] == VarStatus::Basic {
                    0.0
                } else {
                    sign * self.reduced_cost(j, &y, false) / self.scaling.col[j]
                }
            })
            .collect();
        let objective = p.objective_value(&x);
        LpSolution {
            status,
            x,
            duals,
            reduced_costs,
            objective,
            iterations: self.iterations,
            basis,
        }
    }
}

enum ColumnIter<'a> {
    Sparse(std::iter::Zip<std::slice::Iter<'a, usize>, std::slice::Iter<'a, f64>>),
    Unit(Option<usize>),
}

impl Iterator for ColumnIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            ColumnIter::Sparse(it) => it.next().map(|(&i, &v)| (i, v)),
            ColumnIter::Unit(r) => r.take().map(|i| (i, 1.0)),
        }
    }
}

