//! Local polishing of an incumbent on the true functions.
//!
//! Each iteration takes a gradient step on the objective and projects it
//! onto the linear rows, the box, and linearizations of the nonlinear
//! constraints that the step would violate. Steps are accepted on the merit
//! `f + mu * sum(violations)` with halving backtracking.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ConstraintKind, Problem, Sense};
use crate::sampler::HalfSpace;

#[derive(Clone, Debug)]
pub struct PgdConfig {
    pub iterations: usize,
    pub initial_step: f64,
    pub max_halvings: usize,
    /// Momentum coefficient gamma.
    pub momentum: f64,
    /// Violation penalty mu.
    pub penalty: f64,
    pub step_tol: f64,
    /// Rounds of adding linearizations of newly violated constraints.
    pub cut_rounds: usize,
}

impl Default for PgdConfig {
    fn default() -> Self {
        PgdConfig {
            iterations: 10,
            initial_step: 1.0,
            max_halvings: 20,
            momentum: 0.9,
            penalty: 1e3,
            step_tol: 1e-9,
            cut_rounds: 5,
        }
    }
}

impl PgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.momentum) || !(self.penalty > 0.0) {
            return Err(Error::Schema("momentum must lie in [0, 1) and the penalty must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeritState {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Nonlinear constraint violations, in problem order.
    pub violations: Vec<f64>,
    pub merit: f64,
    pub iterations: usize,
    /// Set when an evaluation failed and the best point so far was returned.
    pub warning: Option<String>,
}

/// Objective, violations and merit at `x`.
pub fn merit_state(p: &Problem, x: &[f64], penalty: f64) -> Result<MeritState> {
    let objective = p.objective.eval(x)?;
    let violations = p.nonlinear.iter().map(|c| c.violation(x)).collect::<Result<Vec<f64>>>()?;
    let merit = objective + penalty * violations.iter().sum::<f64>();
    if !merit.is_finite() {
        return Err(Error::Evaluation("merit is not finite".into()));
    }
    Ok(MeritState {
        x: x.to_vec(),
        objective,
        violations,
        merit,
        iterations: 0,
        warning: None,
    })
}

/// Euclidean projection onto the intersection of `rows` and the box by
/// cyclic Dykstra steps. Coordinates flagged in `fixed` keep their values.
pub fn project(x: &[f64], rows: &[HalfSpace], lower: &[f64], upper: &[f64], fixed: &[bool]) -> Result<Vec<f64>> {
    const TOL: f64 = 1e-9;
    let n = x.len();
    // rows restricted to the free coordinates
    let mut sets: Vec<(Vec<f64>, f64, f64)> = Vec::with_capacity(rows.len());
    for h in rows {
        let mut a = h.a.clone();
        let mut b = h.closed_rhs();
        for j in 0..n {
            if fixed[j] {
                b -= a[j] * x[j];
                a[j] = 0.0;
            }
        }
        let nn: f64 = a.iter().map(|v| v * v).sum();
        if nn == 0.0 {
            if b < -TOL {
                return Err(Error::ProjectionStall { violation: -b });
            }
            continue;
        }
        sets.push((a, b, nn));
    }
    let clamp = |y: &mut [f64]| {
        for j in 0..n {
            if !fixed[j] {
                y[j] = y[j].clamp(lower[j], upper[j]);
            }
        }
    };
    let violation = |y: &[f64]| -> f64 {
        sets.iter()
            .map(|(a, b, _)| a.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() - b)
            .chain((0..n).map(|j| (lower[j] - y[j]).max(y[j] - upper[j])))
            .fold(0.0, f64::max)
    };
    let mut y = x.to_vec();
    if violation(&y) <= TOL {
        return Ok(y);
    }
    if sets.is_empty() {
        clamp(&mut y);
        return Ok(y);
    }
    let mut incr = vec![vec![0.0; n]; sets.len() + 1];
    let mut worst = f64::INFINITY;
    for _ in 0..500 {
        for (k, (a, b, nn)) in sets.iter().enumerate() {
            let z: Vec<f64> = y.iter().zip(&incr[k]).map(|(p, q)| p + q).collect();
            let s = a.iter().zip(&z).map(|(p, q)| p * q).sum::<f64>() - b;
            let mut next = z.clone();
            if s > 0.0 {
                for j in 0..n {
                    next[j] -= s / nn * a[j];
                }
            }
            for j in 0..n {
                incr[k][j] = z[j] - next[j];
            }
            y = next;
        }
        let k = sets.len();
        let z: Vec<f64> = y.iter().zip(&incr[k]).map(|(p, q)| p + q).collect();
        let mut next = z.clone();
        clamp(&mut next);
        for j in 0..n {
            incr[k][j] = z[j] - next[j];
        }
        y = next;
        worst = violation(&y);
        if worst <= TOL {
            return Ok(y);
        }
    }
    if worst <= 1e-8 {
        return Ok(y);
    }
    Err(Error::ProjectionStall { violation: worst })
}

/// Halfspaces for the linear rows of `p`.
pub fn linear_halfspaces(p: &Problem) -> Vec<HalfSpace> {
    let mut out = Vec::new();
    for row in &p.linear {
        match row.sense {
            Sense::Le => out.push(HalfSpace::new(row.coeffs.clone(), row.rhs, false)),
            Sense::Ge => out.push(HalfSpace::new(row.coeffs.iter().map(|v| -v).collect(), -row.rhs, false)),
            Sense::Eq => {
                out.push(HalfSpace::new(row.coeffs.clone(), row.rhs, false));
                out.push(HalfSpace::new(row.coeffs.iter().map(|v| -v).collect(), -row.rhs, false));
            }
        }
    }
    out
}

/// `g(x0) + grad . (y - x0) <= 0` (both sides for equalities).
fn linearize(p: &Problem, i: usize, x0: &[f64], out: &mut Vec<HalfSpace>) -> Result<()> {
    let c = &p.nonlinear[i];
    let g = c.eval(x0)?;
    let grad = c.gradient(x0)?;
    if grad.iter().any(|v| !v.is_finite()) || grad.iter().all(|v| *v == 0.0) {
        return Ok(());
    }
    let rhs = grad.iter().zip(x0).map(|(a, b)| a * b).sum::<f64>() - g;
    out.push(HalfSpace::new(grad.clone(), rhs, false));
    if c.kind == ConstraintKind::Equality {
        out.push(HalfSpace::new(grad.iter().map(|v| -v).collect(), -rhs, false));
    }
    Ok(())
}

/// Projected gradient descent with conditional momentum. Returns the best
/// iterate by merit, never worse than `x0`.
pub fn pgd_improve(p: &Problem, x0: &[f64], cfg: &PgdConfig) -> Result<MeritState> {
    cfg.validate()?;
    let lower = p.lower();
    let upper = p.upper();
    let fixed = p.integral_mask();
    let base_rows = linear_halfspaces(p);
    let mut best = merit_state(p, x0, cfg.penalty)?;
    let mut x = x0.to_vec();
    let mut cur = best.clone();
    let mut velocity: Option<Vec<f64>> = None;
    let mut done = 0;
    for it in 0..cfg.iterations {
        done = it + 1;
        let grad = match p.objective.gradient(&x) {
            Ok(g) => g,
            Err(e) => {
                best.warning = Some(e.to_string());
                break;
            }
        };
        let dir: Vec<f64> = match &velocity {
            Some(v) if cfg.momentum > 0.0 => grad.iter().zip(v).map(|(g, m)| g + cfg.momentum * m).collect(),
            _ => grad.clone(),
        };
        // constraints violated or active at x are linearized up front
        let mut rows = base_rows.clone();
        for (i, v) in cur.violations.iter().enumerate() {
            if *v > 0.0 || p.nonlinear[i].kind == ConstraintKind::Equality {
                linearize(p, i, &x, &mut rows)?;
            }
        }
        let mut alpha = cfg.initial_step;
        let mut accepted: Option<MeritState> = None;
        let mut moved = f64::INFINITY;
        for _ in 0..=cfg.max_halvings {
            let trial: Vec<f64> = (0..x.len())
                .map(|j| if fixed[j] { x[j] } else { x[j] - alpha * dir[j] })
                .collect();
            match step_with_cuts(p, &x, &trial, &rows, &lower, &upper, &fixed, cfg) {
                Ok(Some((y, state))) => {
                    moved = y.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    if moved <= cfg.step_tol {
                        break;
                    }
                    if state.merit < cur.merit {
                        accepted = Some(state);
                        break;
                    }
                }
                Ok(None) => {}
                Err(e) => {
                    best.warning = Some(e.to_string());
                }
            }
            alpha *= 0.5;
        }
        let Some(next) = accepted else {
            if moved > cfg.step_tol && velocity.take().is_some() {
                // retry without momentum
                continue;
            }
            break;
        };
        let decreased = next.merit < cur.merit;
        velocity = if decreased { Some(dir) } else { None };
        x = next.x.clone();
        cur = next;
        if cur.merit < best.merit {
            let warning = best.warning.take();
            best = cur.clone();
            best.warning = warning;
        }
    }
    best.iterations = done;
    Ok(best)
}

/// Projects `trial`, then keeps adding linearizations (at `x` and at the
/// projected point) of constraints the projected point violates.
#[allow(clippy::too_many_arguments)]
fn step_with_cuts(
    p: &Problem,
    x: &[f64],
    trial: &[f64],
    rows: &[HalfSpace],
    lower: &[f64],
    upper: &[f64],
    fixed: &[bool],
    cfg: &PgdConfig,
) -> Result<Option<(Vec<f64>, MeritState)>> {
    let mut rows = rows.to_vec();
    let mut linearized_at_x = vec![false; p.nonlinear.len()];
    let mut last = None;
    for round in 0..=cfg.cut_rounds {
        let y = match project(trial, &rows, lower, upper, fixed) {
            Ok(y) => y,
            Err(Error::ProjectionStall { .. }) => return Ok(last),
            Err(e) => return Err(e),
        };
        let state = match merit_state(p, &y, cfg.penalty) {
            Ok(s) => s,
            Err(_) => return Ok(last),
        };
        let violated: Vec<usize> = (0..p.nonlinear.len()).filter(|&i| state.violations[i] > 1e-9).collect();
        last = Some((y.clone(), state));
        if violated.is_empty() || round == cfg.cut_rounds {
            break;
        }
        for i in violated {
            if !linearized_at_x[i] {
                linearized_at_x[i] = true;
                linearize(p, i, x, &mut rows)?;
            } else {
                linearize(p, i, &y, &mut rows)?;
            }
        }
    }
    Ok(last)
}

#[cfg(test)]
mod tests;
