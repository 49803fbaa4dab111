//! Dense bounded-variable simplex.
//!
//! Rows are turned into equalities `a x + s = b` with a bounded slack per row
//! (`s >= 0` for `<=`, `s <= 0` for `>=`, `s = 0` for `=`). Phase 1 minimizes
//! the sum of artificial variables; phase 2 runs primal simplex with Dantzig
//! pricing and a Harris two-pass ratio test, falling back to Bland's rule
//! after a run of degenerate pivots. A bounded dual simplex re-optimizes a
//! solved tableau after bound changes, which branch-and-bound uses for warm
//! starts from the root.

use crate::error::{Error, Result};
use crate::model::Sense;

const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 60;

#[derive(Clone, Debug, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A linear program over `num_vars` bounded (possibly free) variables.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub minimize: bool,
}

impl LpProblem {
    /// `n` variables, default bounds `[0, inf)`, zero objective, minimize.
    pub fn new(n: usize) -> Self {
        LpProblem {
            objective: vec![0.0; n],
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            rows: Vec::new(),
            minimize: true,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(LpRow { coeffs, sense, rhs });
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::NumericalFailure("bound vectors do not match objective length".into()));
        }
        for row in &self.rows {
            if row.coeffs.iter().any(|&(j, a)| j >= n || !a.is_finite()) || !row.rhs.is_finite() {
                return Err(Error::NumericalFailure("malformed row".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Solves `lp` from scratch.
pub fn solve_lp(lp: &LpProblem) -> Result<LpSolution> {
    let (sol, _) = Simplex::solve(lp)?;
    Ok(sol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// Solved simplex tableau that can be re-optimized after bound changes.
#[derive(Clone, Debug)]
pub struct Simplex {
    m: usize,
    n: usize,
    ncols: usize,
    tab: Vec<f64>,
    xb: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    sign: f64,
    bland: bool,
    degenerate_run: usize,
    iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Continue,
}

impl Simplex {
    /// Builds and solves the LP. Returns the tableau when the LP is optimal.
    pub fn solve(lp: &LpProblem) -> Result<(LpSolution, Option<Simplex>)> {
        lp.validate()?;
        let n = lp.num_vars();
        let m = lp.rows.len();
        for j in 0..n {
            if lp.lower[j] > lp.upper[j] + PRIMAL_TOL {
                return Ok((infeasible(n), None));
            }
        }
        let ncols = n + 2 * m;
        let mut lo = Vec::with_capacity(ncols);
        let mut hi = Vec::with_capacity(ncols);
        let mut state = Vec::with_capacity(ncols);
        for j in 0..n {
            let (l, u) = (lp.lower[j], lp.upper[j].max(lp.lower[j]));
            lo.push(l);
            hi.push(u);
            state.push(if l.is_finite() {
                State::AtLower
            } else if u.is_finite() {
                State::AtUpper
            } else {
                State::Free
            });
        }
        for row in &lp.rows {
            let (l, u, s) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY, State::AtLower),
                Sense::Ge => (f64::NEG_INFINITY, 0.0, State::AtUpper),
                Sense::Eq => (0.0, 0.0, State::AtLower),
            };
            lo.push(l);
            hi.push(u);
            state.push(s);
        }
        for _ in 0..m {
            lo.push(0.0);
            hi.push(f64::INFINITY);
            state.push(State::Basic);
        }

        let sign = if lp.minimize { 1.0 } else { -1.0 };
        let mut cost = vec![0.0; ncols];
        for j in 0..n {
            cost[j] = sign * lp.objective[j];
        }

        let mut tab = vec![0.0; m * ncols];
        let mut xb = vec![0.0; m];
        let mut basis = vec![0; m];
        for (i, row) in lp.rows.iter().enumerate() {
            let mut r = row.rhs;
            for &(j, a) in &row.coeffs {
                r -= a * nonbasic_value(state[j], lo[j], hi[j]);
            }
            let t = &mut tab[i * ncols..(i + 1) * ncols];
            // crash: the row's own logical starts basic when that is feasible
            let crash = match row.sense {
                Sense::Le => r >= 0.0,
                Sense::Ge => r <= 0.0,
                Sense::Eq => false,
            };
            let s = if crash || r >= 0.0 { 1.0 } else { -1.0 };
            for &(j, a) in &row.coeffs {
                t[j] += s * a;
            }
            t[n + i] = s;
            t[n + m + i] = 1.0;
            if crash {
                xb[i] = r;
                basis[i] = n + i;
                state[n + i] = State::Basic;
                state[n + m + i] = State::AtLower;
                hi[n + m + i] = 0.0;
            } else {
                xb[i] = r.abs();
                basis[i] = n + m + i;
            }
        }

        let mut sx = Simplex {
            m,
            n,
            ncols,
            tab,
            xb,
            basis,
            state,
            lo,
            hi,
            cost: cost.clone(),
            d: vec![0.0; ncols],
            sign,
            bland: false,
            degenerate_run: 0,
            iterations: 0,
        };

        if m > 0 {
            let phase1: Vec<f64> = (0..ncols).map(|j| if j >= n + m { 1.0 } else { 0.0 }).collect();
            sx.cost = phase1;
            sx.recompute_duals();
            loop {
                match sx.primal_step()? {
                    Step::Continue => {}
                    Step::Optimal => break,
                    Step::Unbounded => {
                        return Err(Error::NumericalFailure("phase 1 reported unbounded".into()))
                    }
                }
            }
            let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
            let infeas: f64 = (0..m)
                .filter(|&i| sx.basis[i] >= n + m)
                .map(|i| sx.xb[i])
                .sum();
            if infeas > 1e-8 * scale {
                return Ok((infeasible(n), None));
            }
            sx.drive_out_artificials();
        }

        sx.cost = (0..sx.ncols).map(|j| if j < n { cost[j] } else { 0.0 }).collect();
        sx.bland = false;
        sx.degenerate_run = 0;
        sx.recompute_duals();
        loop {
            match sx.primal_step()? {
                Step::Continue => {}
                Step::Optimal => break,
                Step::Unbounded => {
                    return Ok((
                        LpSolution {
                            status: LpStatus::Unbounded,
                            x: sx.primal_x(),
                            objective: sign * f64::NEG_INFINITY,
                        },
                        None,
                    ))
                }
            }
        }
        let sol = sx.solution(lp);
        Ok((sol, Some(sx)))
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.tab[i * self.ncols..(i + 1) * self.ncols]
    }

    fn value(&self, j: usize) -> f64 {
        nonbasic_value(self.state[j], self.lo[j], self.hi[j])
    }

    fn recompute_duals(&mut self) {
        let mut d = self.cost.clone();
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                for (dj, t) in d.iter_mut().zip(self.row(i)) {
                    *dj -= cb * t;
                }
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = 0.0;
        }
        self.d = d;
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let p = self.tab[r * nc + q];
        let mut prow: Vec<f64> = self.tab[r * nc..(r + 1) * nc].to_vec();
        for v in prow.iter_mut() {
            *v /= p;
        }
        prow[q] = 1.0;
        let nz: Vec<usize> = (0..nc).filter(|&j| prow[j] != 0.0).collect();
        let sparse = nz.len() * 3 < nc;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * nc + q];
            if f.abs() <= 1e-14 {
                self.tab[i * nc + q] = 0.0;
                continue;
            }
            let row = &mut self.tab[i * nc..(i + 1) * nc];
            if sparse {
                for &j in &nz {
                    row[j] -= f * prow[j];
                }
            } else {
                for (t, pv) in row.iter_mut().zip(&prow) {
                    *t -= f * pv;
                }
            }
            row[q] = 0.0;
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for (dj, pv) in self.d.iter_mut().zip(&prow) {
                *dj -= dq * pv;
            }
        }
        self.d[q] = 0.0;
        self.tab[r * nc..(r + 1) * nc].copy_from_slice(&prow);
        self.basis[r] = q;
        self.state[q] = State::Basic;
    }

    fn movable(&self, j: usize) -> bool {
        self.state[j] != State::Basic && self.hi[j] > self.lo[j]
    }

    fn primal_step(&mut self) -> Result<Step> {
        self.iterations += 1;
        if self.iterations > 50_000 + 50 * (self.m + self.n) {
            return Err(Error::NumericalFailure("simplex iteration budget exhausted".into()));
        }
        // pricing
        let mut enter: Option<(usize, f64)> = None;
        let mut best = 0.0;
        for j in 0..self.ncols {
            if !self.movable(j) {
                continue;
            }
            let dj = self.d[j];
            let dir = match self.state[j] {
                State::AtLower if dj < -DUAL_TOL => 1.0,
                State::AtUpper if dj > DUAL_TOL => -1.0,
                State::Free if dj.abs() > DUAL_TOL => -dj.signum(),
                _ => continue,
            };
            if self.bland {
                enter = Some((j, dir));
                break;
            }
            if dj.abs() > best {
                best = dj.abs();
                enter = Some((j, dir));
            }
        }
        let Some((q, dir)) = enter else {
            return Ok(Step::Optimal);
        };

        // Harris ratio test, pass 1
        let nc = self.ncols;
        let mut theta_max = f64::INFINITY;
        for i in 0..self.m {
            let alpha = dir * self.tab[i * nc + q];
            let b = self.basis[i];
            if alpha > PIVOT_TOL && self.lo[b].is_finite() {
                theta_max = theta_max.min((self.xb[i] - self.lo[b] + HARRIS_TOL) / alpha);
            } else if alpha < -PIVOT_TOL && self.hi[b].is_finite() {
                theta_max = theta_max.min((self.hi[b] - self.xb[i] + HARRIS_TOL) / -alpha);
            }
        }
        let flip = self.hi[q] - self.lo[q];
        if theta_max.is_infinite() && flip.is_infinite() {
            return Ok(Step::Unbounded);
        }
        // pass 2
        let mut leave: Option<(usize, f64, bool)> = None;
        let mut best_alpha = 0.0;
        for i in 0..self.m {
            let alpha = dir * self.tab[i * nc + q];
            let b = self.basis[i];
            let (ratio, to_lower) = if alpha > PIVOT_TOL && self.lo[b].is_finite() {
                ((self.xb[i] - self.lo[b]) / alpha, true)
            } else if alpha < -PIVOT_TOL && self.hi[b].is_finite() {
                ((self.hi[b] - self.xb[i]) / -alpha, false)
            } else {
                continue;
            };
            if self.bland {
                // exact minimum ratio, ties to the smallest variable index
                let better = match leave {
                    None => true,
                    Some((li, lr, _)) => {
                        ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li])
                    }
                };
                if better {
                    leave = Some((i, ratio.max(0.0), to_lower));
                }
            } else if ratio <= theta_max && alpha.abs() > best_alpha {
                best_alpha = alpha.abs();
                leave = Some((i, ratio.max(0.0), to_lower));
            }
        }

        let theta_row = leave.map(|l| l.1).unwrap_or(f64::INFINITY);
        if flip <= theta_row {
            // bound flip
            let delta = dir * flip;
            for i in 0..self.m {
                let t = self.tab[i * nc + q];
                if t != 0.0 {
                    self.xb[i] -= t * delta;
                }
            }
            self.state[q] = if dir > 0.0 { State::AtUpper } else { State::AtLower };
            self.note_degeneracy(flip);
            return Ok(Step::Continue);
        }
        let (r, theta, to_lower) = leave.expect("finite ratio implies a leaving row");
        let delta = dir * theta;
        let entering_value = self.value(q) + delta;
        for i in 0..self.m {
            let t = self.tab[i * nc + q];
            if t != 0.0 {
                self.xb[i] -= t * delta;
            }
        }
        let leaving = self.basis[r];
        self.pivot(r, q);
        self.state[leaving] = if to_lower { State::AtLower } else { State::AtUpper };
        self.xb[r] = entering_value;
        self.note_degeneracy(theta);
        Ok(Step::Continue)
    }

    fn note_degeneracy(&mut self, theta: f64) {
        if theta.abs() < 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > DEGENERATE_RUN {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
        }
    }

    fn drive_out_artificials(&mut self) {
        let art0 = self.n + self.m;
        for i in 0..self.m {
            if self.basis[i] < art0 {
                continue;
            }
            let mut best: Option<usize> = None;
            let mut best_abs = 1e-7;
            for j in 0..art0 {
                if self.state[j] == State::Basic {
                    continue;
                }
                let a = self.tab[i * self.ncols + j].abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some(j);
                }
            }
            if let Some(q) = best {
                let delta = self.xb[i] / self.tab[i * self.ncols + q];
                let entering = self.value(q) + delta;
                for k in 0..self.m {
                    let t = self.tab[k * self.ncols + q];
                    if t != 0.0 {
                        self.xb[k] -= t * delta;
                    }
                }
                let leaving = self.basis[i];
                self.pivot(i, q);
                self.state[leaving] = State::AtLower;
                self.xb[i] = entering;
            }
        }
        // Artificials are pinned at zero from here on; drop the nonbasic ones.
        for j in art0..self.ncols {
            self.hi[j] = 0.0;
        }
        let keep: Vec<usize> = (0..self.ncols)
            .filter(|&j| j < art0 || self.state[j] == State::Basic)
            .collect();
        if keep.len() == self.ncols {
            return;
        }
        let mut remap = vec![usize::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let nc = keep.len();
        let mut tab = vec![0.0; self.m * nc];
        for i in 0..self.m {
            let src = &self.tab[i * self.ncols..(i + 1) * self.ncols];
            let dst = &mut tab[i * nc..(i + 1) * nc];
            for (new, &old) in keep.iter().enumerate() {
                dst[new] = src[old];
            }
        }
        self.tab = tab;
        self.lo = keep.iter().map(|&j| self.lo[j]).collect();
        self.hi = keep.iter().map(|&j| self.hi[j]).collect();
        self.state = keep.iter().map(|&j| self.state[j]).collect();
        self.cost = keep.iter().map(|&j| self.cost[j]).collect();
        self.d = keep.iter().map(|&j| self.d[j]).collect();
        for b in self.basis.iter_mut() {
            *b = remap[*b];
        }
        self.ncols = nc;
    }

    fn primal_x(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.n).map(|j| self.value(j)).collect();
        for i in 0..self.m {
            if self.basis[i] < self.n {
                x[self.basis[i]] = self.xb[i];
            }
        }
        x
    }

    fn solution(&self, lp: &LpProblem) -> LpSolution {
        let mut x = self.primal_x();
        for j in 0..self.n {
            // snap tiny bound overshoots
            if x[j] < self.lo[j] && x[j] > self.lo[j] - 1e-9 {
                x[j] = self.lo[j];
            }
            if x[j] > self.hi[j] && x[j] < self.hi[j] + 1e-9 {
                x[j] = self.hi[j];
            }
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
        }
    }

    /// Applies new structural bounds and re-optimizes with the dual simplex.
    /// Returns `None` if the LP became infeasible.
    pub fn reoptimize(&mut self, bounds: &[(usize, f64, f64)], lp: &LpProblem) -> Result<Option<LpSolution>> {
        let nc = self.ncols;
        for &(j, lo, hi) in bounds {
            if lo > hi + PRIMAL_TOL {
                return Ok(None);
            }
            let old_val = if self.state[j] == State::Basic { None } else { Some(self.value(j)) };
            self.lo[j] = lo;
            self.hi[j] = hi.max(lo);
            if let Some(old) = old_val {
                let st = match self.state[j] {
                    State::AtLower if lo.is_finite() => State::AtLower,
                    State::AtUpper if hi.is_finite() => State::AtUpper,
                    s => {
                        if lo.is_finite() && self.d[j] >= 0.0 {
                            State::AtLower
                        } else if hi.is_finite() {
                            State::AtUpper
                        } else if lo.is_finite() {
                            State::AtLower
                        } else {
                            s
                        }
                    }
                };
                self.state[j] = st;
                let delta = self.value(j) - old;
                if delta != 0.0 {
                    for i in 0..self.m {
                        let t = self.tab[i * nc + j];
                        if t != 0.0 {
                            self.xb[i] -= t * delta;
                        }
                    }
                }
            }
        }
        let budget = 20_000 + 20 * (self.m + self.n);
        for _ in 0..budget {
            // leaving row: largest bound violation
            let mut leave: Option<(usize, f64)> = None;
            let mut worst = 0.0;
            for i in 0..self.m {
                let b = self.basis[i];
                let below = self.lo[b] - self.xb[i];
                let above = self.xb[i] - self.hi[b];
                let tol_lo = PRIMAL_TOL * (1.0 + self.lo[b].abs().min(1e6));
                let tol_hi = PRIMAL_TOL * (1.0 + self.hi[b].abs().min(1e6));
                if below > tol_lo && below > worst {
                    worst = below;
                    leave = Some((i, self.lo[b]));
                } else if above > tol_hi && above > worst {
                    worst = above;
                    leave = Some((i, self.hi[b]));
                }
            }
            let Some((r, target)) = leave else {
                return self.polish(lp).map(Some);
            };
            let increase = self.xb[r] < target;
            let row = &self.tab[r * nc..(r + 1) * nc];
            // entering column: dual ratio test
            let mut best_ratio = f64::INFINITY;
            for j in 0..nc {
                if !self.movable(j) {
                    continue;
                }
                let t = row[j];
                if !dual_eligible(self.state[j], t, increase) {
                    continue;
                }
                let ratio = (self.d[j].abs() + DUAL_TOL) / t.abs();
                best_ratio = best_ratio.min(ratio);
            }
            if best_ratio.is_infinite() {
                return Ok(None);
            }
            let mut q = usize::MAX;
            let mut best_abs = 0.0;
            for j in 0..nc {
                if !self.movable(j) {
                    continue;
                }
                let t = row[j];
                if !dual_eligible(self.state[j], t, increase) {
                    continue;
                }
                if self.d[j].abs() / t.abs() <= best_ratio && t.abs() > best_abs {
                    best_abs = t.abs();
                    q = j;
                }
            }
            let delta = (self.xb[r] - target) / row[q];
            let entering = self.value(q) + delta;
            for i in 0..self.m {
                let t = self.tab[i * nc + q];
                if t != 0.0 {
                    self.xb[i] -= t * delta;
                }
            }
            let leaving = self.basis[r];
            self.pivot(r, q);
            self.state[leaving] = if increase { State::AtLower } else { State::AtUpper };
            if self.lo[leaving] == self.hi[leaving] {
                self.state[leaving] = State::AtLower;
            }
            self.xb[r] = entering;
        }
        Err(Error::NumericalFailure("dual simplex iteration budget exhausted".into()))
    }

    /// Clears any dual infeasibility left by tolerances with primal steps.
    fn polish(&mut self, lp: &LpProblem) -> Result<LpSolution> {
        self.recompute_duals();
        self.iterations = 0;
        self.bland = false;
        self.degenerate_run = 0;
        loop {
            match self.primal_step()? {
                Step::Continue => {}
                Step::Optimal => return Ok(self.solution(lp)),
                Step::Unbounded => {
                    return Err(Error::NumericalFailure("bounded node reported unbounded".into()))
                }
            }
        }
    }

    pub fn objective_sign(&self) -> f64 {
        self.sign
    }
}

fn dual_eligible(state: State, t: f64, increase: bool) -> bool {
    // basic value changes by -t * delta_j
    match state {
        State::AtLower => {
            if increase {
                t < -PIVOT_TOL
            } else {
                t > PIVOT_TOL
            }
        }
        State::AtUpper => {
            if increase {
                t > PIVOT_TOL
            } else {
                t < -PIVOT_TOL
            }
        }
        State::Free => t.abs() > PIVOT_TOL,
        State::Basic => false,
    }
}

fn nonbasic_value(state: State, lo: f64, hi: f64) -> f64 {
    match state {
        State::AtLower => lo,
        State::AtUpper => hi,
        _ => 0.0,
    }
}

fn infeasible(n: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        x: vec![0.0; n],
        objective: f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn max_sum_on_simplex() {
        let mut lp = LpProblem::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.minimize = false;
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Le, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ge_row_lower_bound() {
        let mut lp = LpProblem::new(1);
        lp.objective = vec![1.0];
        lp.lower = vec![f64::NEG_INFINITY];
        lp.add_row(vec![(0, 1.0)], Sense::Ge, 3.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_infeasible() {
        let mut lp = LpProblem::new(1);
        lp.objective = vec![1.0];
        lp.add_row(vec![(0, 1.0)], Sense::Le, 0.0);
        lp.add_row(vec![(0, 1.0)], Sense::Ge, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LpProblem::new(2);
        lp.objective = vec![-1.0, 0.0];
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Sense::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x + 2y, x + y = 3, x - y >= -1, x free, y in [0, 5]
        let mut lp = LpProblem::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.lower = vec![f64::NEG_INFINITY, 0.0];
        lp.upper = vec![f64::INFINITY, 5.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 3.0);
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Sense::Ge, -1.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-9 && sol.x[1].abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LpProblem::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 2.0);
        lp.add_row(vec![(0, 2.0), (1, 2.0)], Sense::Eq, 4.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }

    fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LpProblem {
        let mut lp = LpProblem::new(n);
        for j in 0..n {
            lp.objective[j] = rng.random_range(-1.0..1.0);
            lp.lower[j] = rng.random_range(-3.0..0.0);
            lp.upper[j] = rng.random_range(0.5..3.0);
        }
        for _ in 0..m {
            let coeffs = (0..n).map(|j| (j, rng.random_range(-1.0..1.0))).collect();
            let sense = match rng.random_range(0..3) {
                0 => Sense::Le,
                1 => Sense::Ge,
                _ => Sense::Le,
            };
            let rhs = rng.random_range(-0.5..0.5);
            lp.add_row(coeffs, sense, rhs);
        }
        lp
    }

    #[test]
    fn solutions_are_feasible_and_dual_reopt_matches_fresh_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        for _ in 0..200 {
            let n = rng.random_range(2..8);
            let m = rng.random_range(1..8);
            let lp = random_lp(&mut rng, n, m);
            let (sol, sx) = Simplex::solve(&lp).unwrap();
            if sol.status != LpStatus::Optimal {
                continue;
            }
            assert!(lp.max_violation(&sol.x) < 1e-7);
            let j = rng.random_range(0..n);
            let mid = 0.5 * (lp.lower[j] + lp.upper[j]);
            let (lo, hi) = if rng.random_bool(0.5) { (lp.lower[j], mid) } else { (mid, lp.upper[j]) };
            let mut tight = lp.clone();
            tight.lower[j] = lo;
            tight.upper[j] = hi;
            let fresh = solve_lp(&tight).unwrap();
            let mut warm = sx.unwrap();
            match warm.reoptimize(&[(j, lo, hi)], &tight).unwrap() {
                Some(w) => {
                    assert_eq!(fresh.status, LpStatus::Optimal);
                    assert!((w.objective - fresh.objective).abs() < 1e-7, "{} vs {}", w.objective, fresh.objective);
                    assert!(tight.max_violation(&w.x) < 1e-7);
                }
                None => assert_eq!(fresh.status, LpStatus::Infeasible),
            }
            checked += 1;
        }
        assert!(checked > 50);
    }
}
