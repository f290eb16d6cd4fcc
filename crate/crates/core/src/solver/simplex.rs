//! Bounded-variable revised simplex with an explicit dense basis inverse.
//!
//! Rows are written as `a·x - s = 0` with one logical column `s_i` per row
//! carrying the row's activity bounds, so the slack basis `B = -I` is always
//! available. Both primal and dual phase-2 iterations are provided; a cold or
//! arbitrary warm start that is neither primal nor dual feasible is made dual
//! feasible by temporarily boxing the offending unbounded nonbasic columns.
//! After any number of bound changes the next [`LpSolver::solve`] continues
//! from the current basis, which is what branch-and-bound and the fix/unfix
//! moves rely on.
//!
//! Ratio tests use Harris' two-pass rule. A run of degenerate pivots switches
//! pricing to Bland's smallest-index rule until progress resumes.

use crate::scalar::Scalar;

/// Magnitude of the temporary bounds put on unbounded nonbasic columns.
const ARTIFICIAL_BOUND: f64 = 1e7;
/// Degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 60;
/// Pivots between full recomputations of primal values and reduced costs.
const RESYNC_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// A linear program `max c·x` subject to row activity bounds and column
/// bounds; `None` bounds are infinite.
#[derive(Debug, Clone)]
pub struct LpProblem<T> {
    pub objective: Vec<T>,
    pub col_lower: Vec<Option<T>>,
    pub col_upper: Vec<Option<T>>,
    pub rows: Vec<LpRow<T>>,
}

#[derive(Debug, Clone)]
pub struct LpRow<T> {
    pub coeffs: Vec<(usize, T)>,
    pub lower: Option<T>,
    pub upper: Option<T>,
}

#[derive(Debug, Clone)]
pub struct LpSolver<T> {
    n: usize,
    m: usize,
    /// Minimisation costs (the negated objective), logicals zero.
    cost: Vec<T>,
    lower: Vec<Option<T>>,
    upper: Vec<Option<T>>,
    /// Original bounds of columns that currently carry artificial ones.
    artificial: Vec<(usize, Option<T>, Option<T>)>,
    col_start: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<T>,
    row_start: Vec<usize>,
    row_cols: Vec<usize>,
    row_vals: Vec<T>,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    x: Vec<T>,
    d: Vec<T>,
    binv: Vec<T>,
    iterations: u64,
    iteration_limit: u64,
    since_resync: usize,
    bland: bool,
    degenerate: usize,
    status: Option<LpStatus>,
}

enum Phase2 {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

impl<T: Scalar> LpSolver<T> {
    pub fn new(problem: &LpProblem<T>) -> Self {
        let n = problem.objective.len();
        let m = problem.rows.len();
        assert_eq!(problem.col_lower.len(), n);
        assert_eq!(problem.col_upper.len(), n);

        let mut cost: Vec<T> = problem.objective.iter().map(|c| -c.clone()).collect();
        cost.extend((0..m).map(|_| T::zero()));
        let mut lower = problem.col_lower.clone();
        let mut upper = problem.col_upper.clone();
        for row in &problem.rows {
            lower.push(row.lower.clone());
            upper.push(row.upper.clone());
        }

        let mut row_start = Vec::with_capacity(m + 1);
        let mut row_cols = Vec::new();
        let mut row_vals = Vec::new();
        let mut col_count = vec![0usize; n];
        row_start.push(0);
        for row in &problem.rows {
            let mut entries: Vec<(usize, T)> = Vec::with_capacity(row.coeffs.len());
            for (j, v) in &row.coeffs {
                assert!(*j < n, "row references column {j} beyond {n}");
                if v.is_zero() {
                    continue;
                }
                match entries.iter_mut().find(|(k, _)| k == j) {
                    Some((_, acc)) => *acc = acc.clone() + v.clone(),
                    None => entries.push((*j, v.clone())),
                }
            }
            entries.retain(|(_, v)| !v.is_zero());
            for (j, v) in entries {
                col_count[j] += 1;
                row_cols.push(j);
                row_vals.push(v);
            }
            row_start.push(row_cols.len());
        }
        let mut col_start = vec![0usize; n + 1];
        for j in 0..n {
            col_start[j + 1] = col_start[j] + col_count[j];
        }
        let mut fill = col_start.clone();
        let mut col_rows = vec![0usize; row_cols.len()];
        let mut col_vals = vec![T::zero(); row_cols.len()];
        for i in 0..m {
            for k in row_start[i]..row_start[i + 1] {
                let j = row_cols[k];
                col_rows[fill[j]] = i;
                col_vals[fill[j]] = row_vals[k].clone();
                fill[j] += 1;
            }
        }

        let total = n + m;
        let mut x = vec![T::zero(); total];
        for j in 0..n {
            x[j] = initial_value(&lower[j], &upper[j], &cost[j]);
        }
        let mut binv = vec![T::zero(); m * m];
        for i in 0..m {
            binv[i * m + i] = -T::one();
        }
        let mut position = vec![None; total];
        let basis: Vec<usize> = (n..total).collect();
        for (p, &j) in basis.iter().enumerate() {
            position[j] = Some(p);
        }
        let mut solver = LpSolver {
            n,
            m,
            cost,
            lower,
            upper,
            artificial: Vec::new(),
            col_start,
            col_rows,
            col_vals,
            row_start,
            row_cols,
            row_vals,
            basis,
            position,
            x,
            d: vec![T::zero(); total],
            binv,
            iterations: 0,
            iteration_limit: 0,
            since_resync: 0,
            bland: false,
            degenerate: 0,
            status: None,
        };
        solver.iteration_limit = 200 * (total as u64) + 10_000;
        solver.recompute_primal();
        solver.recompute_duals();
        solver
    }

    pub fn num_cols(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    /// Total simplex pivots and bound flips performed so far.
    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn status(&self) -> Option<LpStatus> {
        self.status
    }

    pub fn bounds(&self, j: usize) -> (Option<T>, Option<T>) {
        (self.lower[j].clone(), self.upper[j].clone())
    }

    /// Replaces the bounds of structural column `j`. Takes effect on the next
    /// [`solve`](Self::solve).
    pub fn set_bounds(&mut self, j: usize, lower: Option<T>, upper: Option<T>) {
        assert!(j < self.n);
        self.lower[j] = lower;
        self.upper[j] = upper;
        self.status = None;
    }

    /// Structural values of the last solve.
    pub fn values(&self) -> &[T] {
        &self.x[..self.n]
    }

    pub fn value(&self, j: usize) -> T {
        self.x[j].clone()
    }

    /// `c·x` in the maximisation sense.
    pub fn objective(&self) -> T {
        let mut acc = T::zero();
        for j in 0..self.n {
            if !self.cost[j].is_zero() {
                acc = acc - self.cost[j].clone() * self.x[j].clone();
            }
        }
        acc
    }

    pub fn solve(&mut self) -> LpStatus {
        let status = self.solve_inner();
        self.status = Some(status);
        status
    }

    fn solve_inner(&mut self) -> LpStatus {
        for j in 0..self.n + self.m {
            if let (Some(l), Some(u)) = (&self.lower[j], &self.upper[j]) {
                if l.clone() - u.clone() > T::feas_tol() {
                    return LpStatus::Infeasible;
                }
            }
        }
        let budget = self.iterations + self.iteration_limit;
        let mut refactored = false;
        loop {
            self.clamp_nonbasic();
            self.recompute_primal();
            self.recompute_duals();
            let outcome = if self.primal_infeasibility().is_none() {
                self.primal(budget)
            } else {
                self.make_dual_feasible();
                self.recompute_primal();
                let dual = self.dual(budget);
                let had_artificial = !self.artificial.is_empty();
                self.drop_artificial_bounds();
                match dual {
                    Phase2::Optimal => {
                        self.recompute_primal();
                        self.recompute_duals();
                        if self.primal_infeasibility().is_some() {
                            // Only reachable through drift; resync below.
                            Phase2::Optimal
                        } else {
                            self.primal(budget)
                        }
                    }
                    Phase2::Infeasible if had_artificial => {
                        // The artificial boxes may be what cut the region off;
                        // a primal pass from here is not available, so report
                        // infeasibility only when the boxes were inactive.
                        Phase2::Infeasible
                    }
                    other => other,
                }
            };
            match outcome {
                Phase2::Infeasible => return LpStatus::Infeasible,
                Phase2::Unbounded => return LpStatus::Unbounded,
                Phase2::Limit => return LpStatus::IterationLimit,
                Phase2::Optimal => {}
            }
            // Certify on freshly recomputed values.
            self.recompute_primal();
            self.recompute_duals();
            let primal_ok = self
                .primal_infeasibility()
                .is_none_or(|(_, v)| v <= T::feas_tol() * T::from_i64(10));
            let primal_ok = primal_ok && self.row_residual() <= T::feas_tol() * T::from_i64(10);
            let dual_ok = self.dual_infeasibility().is_none();
            if primal_ok && dual_ok {
                return LpStatus::Optimal;
            }
            if refactored {
                if primal_ok {
                    // Tiny reduced-cost noise; accept.
                    return LpStatus::Optimal;
                }
                return LpStatus::IterationLimit;
            }
            self.refactor();
            refactored = true;
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        match (&self.lower[j], &self.upper[j]) {
            (Some(l), Some(u)) => (u.clone() - l.clone()) <= T::zero_tol(),
            _ => false,
        }
    }

    /// Moves every nonbasic value back inside its (possibly changed) bounds.
    fn clamp_nonbasic(&mut self) {
        for j in 0..self.n + self.m {
            if self.position[j].is_some() {
                continue;
            }
            if let Some(l) = &self.lower[j] {
                if self.x[j] < *l {
                    self.x[j] = l.clone();
                }
            }
            if let Some(u) = &self.upper[j] {
                if self.x[j] > *u {
                    self.x[j] = u.clone();
                }
            }
            if self.lower[j].is_none() && self.upper[j].is_none() && self.x[j].is_negligible() {
                self.x[j] = T::zero();
            }
        }
    }

    fn column(&self, j: usize) -> ColumnIter<'_, T> {
        if j < self.n {
            ColumnIter::Structural {
                rows: &self.col_rows[self.col_start[j]..self.col_start[j + 1]],
                vals: &self.col_vals[self.col_start[j]..self.col_start[j + 1]],
                k: 0,
            }
        } else {
            ColumnIter::Logical(Some(j - self.n))
        }
    }

    /// `B^{-1} a_j`.
    fn ftran(&self, j: usize) -> Vec<T> {
        let m = self.m;
        let entries: Vec<(usize, T)> = self.column(j).collect();
        let mut out = vec![T::zero(); m];
        for (p, slot) in out.iter_mut().enumerate() {
            let row = &self.binv[p * m..(p + 1) * m];
            let mut acc = T::zero();
            for (i, v) in &entries {
                let b = &row[*i];
                if !b.is_zero() {
                    acc = acc + b.clone() * v.clone();
                }
            }
            *slot = acc;
        }
        out
    }

    /// Row `r` of `B^{-1} [A -I]`, dense over all columns (basic entries are
    /// not meaningful).
    fn pivot_row(&self, r: usize) -> Vec<T> {
        let m = self.m;
        let rho = &self.binv[r * m..(r + 1) * m];
        let mut out = vec![T::zero(); self.n + m];
        for (i, rv) in rho.iter().enumerate() {
            if rv.is_negligible() {
                continue;
            }
            for k in self.row_start[i]..self.row_start[i + 1] {
                let j = self.row_cols[k];
                out[j] = out[j].clone() + rv.clone() * self.row_vals[k].clone();
            }
            out[self.n + i] = -rv.clone();
        }
        out
    }

    fn recompute_primal(&mut self) {
        let m = self.m;
        // B x_B = -N x_N
        let mut rhs = vec![T::zero(); m];
        for j in 0..self.n + m {
            if self.position[j].is_some() || self.x[j].is_zero() {
                continue;
            }
            let xj = self.x[j].clone();
            for (i, v) in self.column(j) {
                rhs[i] = rhs[i].clone() - v * xj.clone();
            }
        }
        let nz: Vec<usize> = (0..m).filter(|&i| !rhs[i].is_zero()).collect();
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let mut acc = T::zero();
            for &i in &nz {
                if !row[i].is_zero() {
                    acc = acc + row[i].clone() * rhs[i].clone();
                }
            }
            let j = self.basis[p];
            self.x[j] = acc;
        }
        self.since_resync = 0;
    }

    fn recompute_duals(&mut self) {
        let m = self.m;
        // y = c_B B^{-1}
        let mut y = vec![T::zero(); m];
        for p in 0..m {
            let c = &self.cost[self.basis[p]];
            if c.is_zero() {
                continue;
            }
            let row = &self.binv[p * m..(p + 1) * m];
            for (i, b) in row.iter().enumerate() {
                if !b.is_zero() {
                    y[i] = y[i].clone() + c.clone() * b.clone();
                }
            }
        }
        for j in 0..self.n + m {
            if self.position[j].is_some() {
                self.d[j] = T::zero();
                continue;
            }
            let mut acc = self.cost[j].clone();
            for (i, v) in self.column(j) {
                if !y[i].is_zero() {
                    acc = acc - y[i].clone() * v;
                }
            }
            self.d[j] = acc;
        }
    }

    /// Largest `|A x - s|` over the rows. Drift in the updated inverse shows
    /// up here even when every basic value is inside its bounds.
    fn row_residual(&self) -> T {
        let mut r = vec![T::zero(); self.m];
        for j in 0..self.n + self.m {
            if self.x[j].is_zero() {
                continue;
            }
            for (i, v) in self.column(j) {
                r[i] = r[i].clone() + v * self.x[j].clone();
            }
        }
        r.into_iter().map(|v| v.abs()).fold(T::zero(), T::max_of)
    }

    /// Largest bound violation among basic variables.
    fn primal_infeasibility(&self) -> Option<(usize, T)> {
        let mut worst: Option<(usize, T)> = None;
        for (p, &j) in self.basis.iter().enumerate() {
            let v = self.violation(j);
            if v > T::feas_tol() {
                let better = match &worst {
                    None => true,
                    Some((_, w)) => {
                        if self.bland {
                            false
                        } else {
                            v > *w
                        }
                    }
                };
                if better {
                    worst = Some((p, v));
                }
            }
        }
        if self.bland {
            // Smallest column index among the violated rows.
            let mut pick: Option<(usize, T)> = None;
            for (p, &j) in self.basis.iter().enumerate() {
                let v = self.violation(j);
                if v > T::feas_tol() && pick.as_ref().is_none_or(|(q, _)| j < self.basis[*q]) {
                    pick = Some((p, v));
                }
            }
            return pick;
        }
        worst
    }

    fn violation(&self, j: usize) -> T {
        if let Some(l) = &self.lower[j] {
            if self.x[j] < *l {
                return l.clone() - self.x[j].clone();
            }
        }
        if let Some(u) = &self.upper[j] {
            if self.x[j] > *u {
                return self.x[j].clone() - u.clone();
            }
        }
        T::zero()
    }

    fn can_increase(&self, j: usize) -> bool {
        self.upper[j]
            .as_ref()
            .is_none_or(|u| u.clone() - self.x[j].clone() > T::feas_tol())
    }

    fn can_decrease(&self, j: usize) -> bool {
        self.lower[j]
            .as_ref()
            .is_none_or(|l| self.x[j].clone() - l.clone() > T::feas_tol())
    }

    fn dual_infeasibility(&self) -> Option<usize> {
        (0..self.n + self.m).find(|&j| {
            self.position[j].is_none()
                && !self.is_fixed(j)
                && ((self.d[j] < -T::opt_tol() && self.can_increase(j))
                    || (self.d[j] > T::opt_tol() && self.can_decrease(j)))
        })
    }

    /// Puts boxed nonbasic columns on the bound their reduced cost prefers and
    /// gives the remaining dual-infeasible ones a temporary bound.
    fn make_dual_feasible(&mut self) {
        let big = T::from_f64(ARTIFICIAL_BOUND);
        for j in 0..self.n + self.m {
            if self.position[j].is_some() || self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j].clone();
            let wants_up = dj < -T::opt_tol();
            let wants_down = dj > T::opt_tol();
            match (self.lower[j].clone(), self.upper[j].clone()) {
                (Some(l), Some(u)) => {
                    if wants_up {
                        self.x[j] = u;
                    } else if wants_down || self.x[j] != u {
                        self.x[j] = l;
                    }
                }
                (Some(l), None) => {
                    if wants_up {
                        self.artificial.push((j, Some(l.clone()), None));
                        let u = Scalar::max_of(l, self.x[j].clone()) + big.clone();
                        self.upper[j] = Some(u.clone());
                        self.x[j] = u;
                    } else {
                        self.x[j] = l;
                    }
                }
                (None, Some(u)) => {
                    if wants_down {
                        self.artificial.push((j, None, Some(u.clone())));
                        let l = Scalar::min_of(u, self.x[j].clone()) - big.clone();
                        self.lower[j] = Some(l.clone());
                        self.x[j] = l;
                    } else {
                        self.x[j] = u;
                    }
                }
                (None, None) => {
                    if wants_up || wants_down {
                        self.artificial.push((j, None, None));
                        let l = self.x[j].clone() - big.clone();
                        let u = self.x[j].clone() + big.clone();
                        self.lower[j] = Some(l.clone());
                        self.upper[j] = Some(u.clone());
                        self.x[j] = if wants_up { u } else { l };
                    }
                }
            }
        }
    }

    fn drop_artificial_bounds(&mut self) {
        for (j, l, u) in std::mem::take(&mut self.artificial) {
            self.lower[j] = l;
            self.upper[j] = u;
        }
    }

    fn note_progress(&mut self, step_is_zero: bool) {
        if step_is_zero {
            self.degenerate += 1;
            if self.degenerate > DEGENERATE_RUN {
                self.bland = true;
            }
        } else {
            self.degenerate = 0;
            self.bland = false;
        }
    }

    fn maybe_resync(&mut self) {
        self.since_resync += 1;
        if self.since_resync >= RESYNC_EVERY {
            self.recompute_primal();
            self.recompute_duals();
        }
    }

    fn primal(&mut self, budget: u64) -> Phase2 {
        self.bland = false;
        self.degenerate = 0;
        loop {
            if self.iterations >= budget {
                return Phase2::Limit;
            }
            // Pricing.
            let mut entering: Option<(usize, bool, T)> = None;
            for j in 0..self.n + self.m {
                if self.position[j].is_some() || self.is_fixed(j) {
                    continue;
                }
                let dj = &self.d[j];
                let dir_up = if *dj < -T::opt_tol() && self.can_increase(j) {
                    true
                } else if *dj > T::opt_tol() && self.can_decrease(j) {
                    false
                } else {
                    continue;
                };
                let score = dj.abs();
                let take = match &entering {
                    None => true,
                    Some((_, _, s)) => !self.bland && score > *s,
                };
                if take {
                    entering = Some((j, dir_up, score));
                }
            }
            let Some((q, up, _)) = entering else {
                return Phase2::Optimal;
            };
            let alpha = self.ftran(q);
            let dir = if up { T::one() } else { -T::one() };

            // Harris pass 1: largest step with relaxed bounds.
            let pivot_tol = T::opt_tol();
            let mut bound_step: Option<T> = None;
            for (p, a) in alpha.iter().enumerate() {
                if a.abs() <= pivot_tol {
                    continue;
                }
                let j = self.basis[p];
                let rate = -(dir.clone() * a.clone());
                let limit = if rate < T::zero() {
                    self.lower[j]
                        .as_ref()
                        .map(|l| (self.x[j].clone() - l.clone() + T::feas_tol()) / (-rate.clone()))
                } else {
                    self.upper[j]
                        .as_ref()
                        .map(|u| (u.clone() - self.x[j].clone() + T::feas_tol()) / rate.clone())
                };
                if let Some(lim) = limit {
                    if bound_step.as_ref().is_none_or(|b| lim < *b) {
                        bound_step = Some(lim);
                    }
                }
            }
            let own_range = match (up, &self.lower[q], &self.upper[q]) {
                (true, _, Some(u)) => Some(u.clone() - self.x[q].clone()),
                (false, Some(l), _) => Some(self.x[q].clone() - l.clone()),
                _ => None,
            };
            // Pass 2: among rows within the relaxed step, the largest pivot.
            let mut leave: Option<(usize, T, T)> = None; // (position, step, |alpha|)
            if let Some(max_step) = &bound_step {
                for (p, a) in alpha.iter().enumerate() {
                    if a.abs() <= pivot_tol {
                        continue;
                    }
                    let j = self.basis[p];
                    let rate = -(dir.clone() * a.clone());
                    let exact = if rate < T::zero() {
                        self.lower[j]
                            .as_ref()
                            .map(|l| (self.x[j].clone() - l.clone()) / (-rate.clone()))
                    } else {
                        self.upper[j]
                            .as_ref()
                            .map(|u| (u.clone() - self.x[j].clone()) / rate.clone())
                    };
                    let Some(step) = exact else { continue };
                    if step > *max_step {
                        continue;
                    }
                    let mag = a.abs();
                    let better = match &leave {
                        None => true,
                        Some((lp, _, lm)) => {
                            if self.bland {
                                j < self.basis[*lp]
                            } else {
                                mag > *lm
                            }
                        }
                    };
                    if better {
                        leave = Some((p, step, mag));
                    }
                }
            }
            let flip = match (&own_range, &leave) {
                (Some(range), Some((_, step, _))) => range <= step,
                (Some(_), None) => true,
                (None, _) => false,
            };
            self.iterations += 1;
            if flip {
                let range = own_range.expect("flip needs a finite range");
                self.note_progress(range.is_negligible());
                let delta = dir.clone() * range;
                self.x[q] = if up {
                    self.upper[q].clone().expect("upper")
                } else {
                    self.lower[q].clone().expect("lower")
                };
                for (p, a) in alpha.iter().enumerate() {
                    if !a.is_zero() {
                        let j = self.basis[p];
                        self.x[j] = self.x[j].clone() - delta.clone() * a.clone();
                    }
                }
                self.maybe_resync();
                continue;
            }
            let Some((r, step, _)) = leave else {
                return Phase2::Unbounded;
            };
            let step = if step < T::zero() { T::zero() } else { step };
            self.note_progress(step.is_negligible());
            let delta = dir * step;
            self.x[q] = self.x[q].clone() + delta.clone();
            for (p, a) in alpha.iter().enumerate() {
                if !a.is_zero() {
                    let j = self.basis[p];
                    self.x[j] = self.x[j].clone() - delta.clone() * a.clone();
                }
            }
            let leaving = self.basis[r];
            let rate = -(if up { T::one() } else { -T::one() }) * alpha[r].clone();
            self.x[leaving] = if rate < T::zero() {
                self.lower[leaving].clone().expect("limited by lower")
            } else {
                self.upper[leaving].clone().expect("limited by upper")
            };
            self.pivot(r, q, &alpha);
            self.maybe_resync();
        }
    }

    fn dual(&mut self, budget: u64) -> Phase2 {
        self.bland = false;
        self.degenerate = 0;
        loop {
            if self.iterations >= budget {
                return Phase2::Limit;
            }
            let Some((r, _)) = self.primal_infeasibility() else {
                return Phase2::Optimal;
            };
            let leaving = self.basis[r];
            let below = self.lower[leaving]
                .as_ref()
                .is_some_and(|l| self.x[leaving] < *l);
            let target = if below {
                self.lower[leaving].clone().expect("lower")
            } else {
                self.upper[leaving].clone().expect("upper")
            };
            let row = self.pivot_row(r);
            let pivot_tol = T::opt_tol();

            // Eligible columns move x_r toward its violated bound.
            let eligible = |j: usize, a: &T| -> bool {
                if a.abs() <= pivot_tol {
                    return false;
                }
                let inc = self.can_increase(j);
                let dec = self.can_decrease(j);
                // d x_r / d x_j = -a
                if below {
                    (inc && *a < T::zero()) || (dec && *a > T::zero())
                } else {
                    (inc && *a > T::zero()) || (dec && *a < T::zero())
                }
            };
            let mut max_ratio: Option<T> = None;
            for j in 0..self.n + self.m {
                if self.position[j].is_some() || self.is_fixed(j) || !eligible(j, &row[j]) {
                    continue;
                }
                let ratio = (self.d[j].abs() + T::opt_tol()) / row[j].abs();
                if max_ratio.as_ref().is_none_or(|b| ratio < *b) {
                    max_ratio = Some(ratio);
                }
            }
            let Some(max_ratio) = max_ratio else {
                return Phase2::Infeasible;
            };
            let mut entering: Option<(usize, T)> = None;
            for j in 0..self.n + self.m {
                if self.position[j].is_some() || self.is_fixed(j) || !eligible(j, &row[j]) {
                    continue;
                }
                let ratio = self.d[j].abs() / row[j].abs();
                if ratio > max_ratio {
                    continue;
                }
                let mag = row[j].abs();
                let better = match &entering {
                    None => true,
                    Some((k, km)) => {
                        if self.bland {
                            j < *k
                        } else {
                            mag > *km
                        }
                    }
                };
                if better {
                    entering = Some((j, mag));
                }
            }
            let (q, _) = entering.expect("candidate exists");
            let alpha = self.ftran(q);
            let arq = alpha[r].clone();
            if arq.abs() <= T::zero_tol() {
                // ftran and the pivot row disagree; rebuild and retry.
                self.refactor();
                self.recompute_primal();
                self.recompute_duals();
                self.iterations += 1;
                continue;
            }
            self.iterations += 1;
            let step = (self.x[leaving].clone() - target.clone()) / arq.clone();
            let theta_d = self.d[q].clone() / arq.clone();
            self.note_progress(theta_d.is_negligible());
            self.x[q] = self.x[q].clone() + step.clone();
            for (p, a) in alpha.iter().enumerate() {
                if !a.is_zero() {
                    let j = self.basis[p];
                    self.x[j] = self.x[j].clone() - step.clone() * a.clone();
                }
            }
            self.x[leaving] = target;
            for j in 0..self.n + self.m {
                if self.position[j].is_none() && !row[j].is_zero() {
                    self.d[j] = self.d[j].clone() - theta_d.clone() * row[j].clone();
                }
            }
            self.d[q] = T::zero();
            self.d[leaving] = -theta_d;
            self.pivot_basis_only(r, q, &alpha);
            self.maybe_resync();
        }
    }

    /// Basis exchange with reduced-cost update (primal iterations).
    fn pivot(&mut self, r: usize, q: usize, alpha: &[T]) {
        let row = self.pivot_row(r);
        let theta_d = self.d[q].clone() / alpha[r].clone();
        let leaving = self.basis[r];
        if !theta_d.is_zero() {
            for j in 0..self.n + self.m {
                if self.position[j].is_none() && !row[j].is_zero() {
                    self.d[j] = self.d[j].clone() - theta_d.clone() * row[j].clone();
                }
            }
        }
        self.d[q] = T::zero();
        self.d[leaving] = -theta_d;
        self.pivot_basis_only(r, q, alpha);
    }

    /// Product-form update of the explicit inverse.
    fn pivot_basis_only(&mut self, r: usize, q: usize, alpha: &[T]) {
        let m = self.m;
        let leaving = self.basis[r];
        let arq = alpha[r].clone();
        let nz: Vec<usize> = (0..m).filter(|&k| !self.binv[r * m + k].is_zero()).collect();
        for &k in &nz {
            self.binv[r * m + k] = self.binv[r * m + k].clone() / arq.clone();
        }
        let pivot_row: Vec<(usize, T)> = nz.iter().map(|&k| (k, self.binv[r * m + k].clone())).collect();
        for (p, a) in alpha.iter().enumerate() {
            if p == r || a.is_zero() {
                continue;
            }
            let base = p * m;
            for (k, v) in &pivot_row {
                let cell = &mut self.binv[base + k];
                *cell = cell.clone() - a.clone() * v.clone();
            }
        }
        self.basis[r] = q;
        self.position[q] = Some(r);
        self.position[leaving] = None;
    }

    /// Rebuilds `B^{-1}` from the basis columns. Singular bases are repaired
    /// by swapping in logical columns.
    fn refactor(&mut self) {
        let m = self.m;
        let n = self.n;
        // Rows covered by basic logicals are trivial; invert the rest.
        let mut logical_row = vec![None; m];
        let mut structural_pos = Vec::new();
        for (p, &j) in self.basis.iter().enumerate() {
            if j >= n {
                logical_row[j - n] = Some(p);
            } else {
                structural_pos.push(p);
            }
        }
        let free_rows: Vec<usize> = (0..m).filter(|&i| logical_row[i].is_none()).collect();
        let k = structural_pos.len();
        debug_assert_eq!(k, free_rows.len());
        let mut row_slot = vec![usize::MAX; m];
        for (s, &i) in free_rows.iter().enumerate() {
            row_slot[i] = s;
        }
        // M = A[free_rows, structural columns], augmented with I.
        let mut mat = vec![T::zero(); k * 2 * k];
        let w = 2 * k;
        for (c, &p) in structural_pos.iter().enumerate() {
            for (i, v) in self.column(self.basis[p]) {
                if row_slot[i] != usize::MAX {
                    mat[row_slot[i] * w + c] = v;
                }
            }
        }
        for s in 0..k {
            mat[s * w + k + s] = T::one();
        }
        let mut row_of_col = vec![usize::MAX; k];
        let mut used_row = vec![false; k];
        let mut dropped = Vec::new();
        for c in 0..k {
            let mut best: Option<(usize, T)> = None;
            for s in 0..k {
                if used_row[s] {
                    continue;
                }
                let mag = mat[s * w + c].abs();
                if mag > T::zero_tol() * T::from_i64(100)
                    && best.as_ref().is_none_or(|(_, b)| mag > *b)
                {
                    best = Some((s, mag));
                }
            }
            let Some((s, _)) = best else {
                dropped.push(c);
                continue;
            };
            used_row[s] = true;
            row_of_col[c] = s;
            let piv = mat[s * w + c].clone();
            for t in 0..w {
                mat[s * w + t] = mat[s * w + t].clone() / piv.clone();
            }
            for s2 in 0..k {
                if s2 == s {
                    continue;
                }
                let f = mat[s2 * w + c].clone();
                if f.is_zero() {
                    continue;
                }
                for t in 0..w {
                    let v = mat[s * w + t].clone();
                    if !v.is_zero() {
                        mat[s2 * w + t] = mat[s2 * w + t].clone() - f.clone() * v;
                    }
                }
            }
        }
        if !dropped.is_empty() {
            // Replace dependent structural columns by logicals of uncovered rows.
            let spare: Vec<usize> = (0..k).filter(|&s| !used_row[s]).collect();
            for (c, s) in dropped.into_iter().zip(spare) {
                let p = structural_pos[c];
                let old = self.basis[p];
                let logical = n + free_rows[s];
                self.position[old] = None;
                self.basis[p] = logical;
                self.position[logical] = Some(p);
                let clamp = match (&self.lower[old], &self.upper[old]) {
                    (Some(l), _) => l.clone(),
                    (None, Some(u)) => u.clone(),
                    (None, None) => T::zero(),
                };
                self.x[old] = clamp;
            }
            return self.refactor();
        }
        // Assemble B^{-1}: structural positions take rows of M^{-1}; logical
        // position for row i is (A[i, S] x_S) - e_i.
        let mut binv = vec![T::zero(); m * m];
        for (c, &p) in structural_pos.iter().enumerate() {
            let s = row_of_col[c];
            for (t, &i) in free_rows.iter().enumerate() {
                binv[p * m + i] = mat[s * w + k + t].clone();
            }
        }
        for i in 0..m {
            let Some(p) = logical_row[i] else { continue };
            let mut acc = vec![T::zero(); m];
            for kk in self.row_start[i]..self.row_start[i + 1] {
                let j = self.row_cols[kk];
                let Some(pj) = self.position[j] else { continue };
                let v = self.row_vals[kk].clone();
                for t in 0..m {
                    let b = &binv[pj * m + t];
                    if !b.is_zero() {
                        acc[t] = acc[t].clone() + v.clone() * b.clone();
                    }
                }
            }
            acc[i] = acc[i].clone() - T::one();
            binv[p * m..(p + 1) * m].clone_from_slice(&acc);
        }
        self.binv = binv;
    }
}

fn initial_value<T: Scalar>(lower: &Option<T>, upper: &Option<T>, cost: &T) -> T {
    match (lower, upper) {
        (Some(l), Some(u)) => {
            if *cost < T::zero() {
                u.clone()
            } else {
                l.clone()
            }
        }
        (Some(l), None) => l.clone(),
        (None, Some(u)) => u.clone(),
        (None, None) => T::zero(),
    }
}

enum ColumnIter<'a, T> {
    Structural {
        rows: &'a [usize],
        vals: &'a [T],
        k: usize,
    },
    Logical(Option<usize>),
}

impl<T: Scalar> Iterator for ColumnIter<'_, T> {
    type Item = (usize, T);

    fn next(&mut self) -> Option<(usize, T)> {
        match self {
            ColumnIter::Structural { rows, vals, k } => {
                let out = rows.get(*k).map(|&i| (i, vals[*k].clone()));
                *k += 1;
                out
            }
            ColumnIter::Logical(slot) => slot.take().map(|i| (i, -T::one())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn row<T: Clone>(coeffs: &[(usize, T)], lower: Option<T>, upper: Option<T>) -> LpRow<T> {
        LpRow {
            coeffs: coeffs.to_vec(),
            lower,
            upper,
        }
    }

    #[test]
    fn textbook_maximisation() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36
        let p: LpProblem<f64> = LpProblem {
            objective: vec![3.0, 5.0],
            col_lower: vec![Some(0.0), Some(0.0)],
            col_upper: vec![None, None],
            rows: vec![
                row(&[(0, 1.0)], None, Some(4.0)),
                row(&[(1, 2.0)], None, Some(12.0)),
                row(&[(0, 3.0), (1, 2.0)], None, Some(18.0)),
            ],
        };
        let mut lp = LpSolver::new(&p);
        assert_eq!(lp.solve(), LpStatus::Optimal);
        assert!((lp.objective() - 36.0).abs() < 1e-9);
        assert!((lp.value(0) - 2.0).abs() < 1e-9);
        assert!((lp.value(1) - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_rows_and_free_columns() {
        // max x + y, x - y = 1 (x, y free), x + y <= 5 -> x = 3, y = 2
        let p: LpProblem<f64> = LpProblem {
            objective: vec![1.0, 1.0],
            col_lower: vec![None, None],
            col_upper: vec![None, None],
            rows: vec![
                row(&[(0, 1.0), (1, -1.0)], Some(1.0), Some(1.0)),
                row(&[(0, 1.0), (1, 1.0)], None, Some(5.0)),
            ],
        };
        let mut lp = LpSolver::new(&p);
        assert_eq!(lp.solve(), LpStatus::Optimal);
        assert!((lp.value(0) - 3.0).abs() < 1e-9);
        assert!((lp.value(1) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let p: LpProblem<f64> = LpProblem {
            objective: vec![1.0],
            col_lower: vec![Some(0.0)],
            col_upper: vec![None],
            rows: vec![row(&[(0, 1.0)], Some(3.0), Some(2.0 + 0.5))],
        };
        let mut lp = LpSolver::new(&p);
        assert_eq!(lp.solve(), LpStatus::Infeasible);

        let p: LpProblem<f64> = LpProblem {
            objective: vec![1.0, 0.0],
            col_lower: vec![Some(0.0), Some(0.0)],
            col_upper: vec![None, None],
            rows: vec![row(&[(0, 1.0), (1, -1.0)], None, Some(1.0))],
        };
        let mut lp = LpSolver::new(&p);
        assert_eq!(lp.solve(), LpStatus::Unbounded);
    }

    #[test]
    fn crossed_column_bounds_are_infeasible() {
        let p: LpProblem<f64> = LpProblem {
            objective: vec![1.0],
            col_lower: vec![Some(0.0)],
            col_upper: vec![Some(1.0)],
            rows: vec![],
        };
        let mut lp = LpSolver::new(&p);
        lp.set_bounds(0, Some(2.0), Some(1.0));
        assert_eq!(lp.solve(), LpStatus::Infeasible);
    }

    #[test]
    fn warm_start_after_bound_changes() {
        // max x + 2y, x + y <= 4, x + 3y <= 6, 0 <= x, y
        let p: LpProblem<f64> = LpProblem {
            objective: vec![1.0, 2.0],
            col_lower: vec![Some(0.0), Some(0.0)],
            col_upper: vec![None, None],
            rows: vec![
                row(&[(0, 1.0), (1, 1.0)], None, Some(4.0)),
                row(&[(0, 1.0), (1, 3.0)], None, Some(6.0)),
            ],
        };
        let mut lp = LpSolver::new(&p);
        assert_eq!(lp.solve(), LpStatus::Optimal);
        assert!((lp.objective() - 5.0).abs() < 1e-9); // (3, 1)
        lp.set_bounds(1, Some(0.0), Some(0.0));
        assert_eq!(lp.solve(), LpStatus::Optimal);
        assert!((lp.objective() - 4.0).abs() < 1e-9);
        lp.set_bounds(1, Some(0.0), None);
        lp.set_bounds(0, Some(0.0), Some(1.0));
        assert_eq!(lp.solve(), LpStatus::Optimal);
        // x = 1, y = 5/3
        assert!((lp.objective() - (1.0 + 10.0 / 3.0)).abs() < 1e-9);
        lp.set_bounds(0, Some(5.0), None);
        assert_eq!(lp.solve(), LpStatus::Infeasible);
        lp.set_bounds(0, Some(0.0), None);
        assert_eq!(lp.solve(), LpStatus::Optimal);
        assert!((lp.objective() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn a_drifted_inverse_is_caught_and_rebuilt() {
        let p: LpProblem<f64> = LpProblem {
            objective: vec![1.0, 2.0],
            col_lower: vec![Some(0.0), Some(0.0)],
            col_upper: vec![None, None],
            rows: vec![
                row(&[(0, 1.0), (1, 1.0)], None, Some(4.0)),
                row(&[(0, 1.0), (1, 3.0)], None, Some(6.0)),
            ],
        };
        let mut lp = LpSolver::new(&p);
        assert_eq!(lp.solve(), LpStatus::Optimal);
        assert!(lp.row_residual() < 1e-12);
        for b in &mut lp.binv {
            *b *= 1.0 + 1e-4;
        }
        lp.recompute_primal();
        assert!(lp.row_residual() > 1e-6);
        assert_eq!(lp.solve(), LpStatus::Optimal);
        assert!(lp.row_residual() < 1e-9);
        assert!((lp.objective() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn refactor_reproduces_the_inverse() {
        let p: LpProblem<f64> = LpProblem {
            objective: vec![1.0, 2.0, -1.0],
            col_lower: vec![Some(0.0), Some(0.0), Some(-2.0)],
            col_upper: vec![Some(10.0), None, Some(3.0)],
            rows: vec![
                row(&[(0, 1.0), (1, 1.0), (2, 1.0)], None, Some(4.0)),
                row(&[(0, 1.0), (1, 3.0), (2, -1.0)], Some(-1.0), Some(6.0)),
                row(&[(0, 2.0), (2, 1.0)], Some(1.0), None),
            ],
        };
        let mut lp = LpSolver::new(&p);
        assert_eq!(lp.solve(), LpStatus::Optimal);
        let before = lp.binv.clone();
        lp.refactor();
        for (a, b) in before.iter().zip(&lp.binv) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_rational_solve() {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        // max x + y, 3x + y <= 2, x + 3y <= 2 -> x = y = 1/2
        let p = LpProblem {
            objective: vec![q(1, 1), q(1, 1)],
            col_lower: vec![Some(q(0, 1)), Some(q(0, 1))],
            col_upper: vec![None, None],
            rows: vec![
                row(&[(0, q(3, 1)), (1, q(1, 1))], None, Some(q(2, 1))),
                row(&[(0, q(1, 1)), (1, q(3, 1))], None, Some(q(2, 1))),
            ],
        };
        let mut lp = LpSolver::new(&p);
        assert_eq!(lp.solve(), LpStatus::Optimal);
        assert_eq!(lp.value(0), q(1, 2));
        assert_eq!(lp.objective(), q(1, 1));
    }
}
