//! Problem representation, standard-form generation and feasibility labeling.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::lp::{solve_lp, LpProblem, LpStatus};

/// Default feasibility tolerance used when labeling samples.
pub const FEAS_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==", alias = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarSpec {
    pub name: String,
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    pub integral: bool,
}

impl VarSpec {
    pub fn continuous(name: impl Into<String>, index: usize, lower: f64, upper: f64) -> Self {
        VarSpec {
            name: name.into(),
            index,
            lower,
            upper,
            integral: false,
        }
    }

    pub fn integer(name: impl Into<String>, index: usize, lower: f64, upper: f64) -> Self {
        VarSpec {
            integral: true,
            ..Self::continuous(name, index, lower, upper)
        }
    }
}

/// `coeffs . x  (sense)  rhs`
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub sense: Sense,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<f64>, sense: Sense, rhs: f64) -> Self {
        LinearConstraint { coeffs, rhs, sense }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A scalar function of the full decision vector.
///
/// Implementations must be deterministic and re-entrant. The default
/// gradient is a central finite difference.
pub trait Evaluator: Send + Sync {
    fn eval(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        central_difference(|p| self.eval(p), x)
    }
}

/// Central differences with step `1e-6 * max(1, |x_i|)`.
pub fn central_difference<F>(f: F, x: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut p = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        p[i] = x[i] + h;
        let fp = f(&p)?;
        p[i] = x[i] - h;
        let fm = f(&p)?;
        p[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Wraps a host closure as a black-box evaluator.
pub struct FnEvaluator<F>(pub F);

impl<F> Evaluator for FnEvaluator<F>
where
    F: Fn(&[f64]) -> Result<f64> + Send + Sync,
{
    fn eval(&self, x: &[f64]) -> Result<f64> {
        (self.0)(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// `g(x) <= 0`
    Inequality,
    /// `h(x) = 0`
    Equality,
}

#[derive(Clone)]
pub struct NonlinearConstraint {
    pub name: String,
    pub evaluator: Arc<dyn Evaluator>,
    pub kind: ConstraintKind,
    pub support: Vec<usize>,
}

impl fmt::Debug for NonlinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearConstraint")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("support", &self.support)
            .finish()
    }
}

impl NonlinearConstraint {
    pub fn new(
        name: impl Into<String>,
        evaluator: Arc<dyn Evaluator>,
        kind: ConstraintKind,
        support: Vec<usize>,
    ) -> Self {
        NonlinearConstraint {
            name: name.into(),
            evaluator,
            kind,
            support,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.evaluator.eval(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.evaluator.gradient(x)
    }

    /// `max(0, g(x))` for inequalities, `|h(x)|` for equalities.
    pub fn violation(&self, x: &[f64]) -> Result<f64> {
        let v = self.eval(x)?;
        Ok(match self.kind {
            ConstraintKind::Inequality => v.max(0.0),
            ConstraintKind::Equality => v.abs(),
        })
    }
}

#[derive(Clone)]
pub enum Objective {
    Linear { coeffs: Vec<f64>, constant: f64 },
    Nonlinear { evaluator: Arc<dyn Evaluator>, support: Vec<usize> },
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Linear { coeffs, constant } => f
                .debug_struct("Linear")
                .field("coeffs", coeffs)
                .field("constant", constant)
                .finish(),
            Objective::Nonlinear { support, .. } => {
                f.debug_struct("Nonlinear").field("support", support).finish()
            }
        }
    }
}

impl Objective {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Objective::Linear { coeffs, constant } => {
                Ok(constant + coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>())
            }
            Objective::Nonlinear { evaluator, .. } => evaluator.eval(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Objective::Linear { coeffs, .. } => Ok(coeffs.clone()),
            Objective::Nonlinear { evaluator, .. } => evaluator.gradient(x),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Objective::Linear { .. })
    }
}

/// `min f(x)` subject to linear rows, nonlinear constraints and variable bounds.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub vars: Vec<VarSpec>,
    pub objective: Objective,
    pub linear: Vec<LinearConstraint>,
    pub nonlinear: Vec<NonlinearConstraint>,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.vars.iter().map(|v| v.lower).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.vars.iter().map(|v| v.upper).collect()
    }

    pub fn integral_mask(&self) -> Vec<bool> {
        self.vars.iter().map(|v| v.integral).collect()
    }

    /// Variables that appear in any nonlinear constraint or a nonlinear objective.
    pub fn nonlinear_vars(&self) -> BTreeSet<usize> {
        let mut set: BTreeSet<usize> = self.nonlinear.iter().flat_map(|c| c.support.iter().copied()).collect();
        if let Objective::Nonlinear { support, .. } = &self.objective {
            set.extend(support.iter().copied());
        }
        set
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::Schema("problem has no variables".into()));
        }
        for (i, v) in self.vars.iter().enumerate() {
            if v.index != i {
                return Err(Error::Schema(format!("variable `{}` has index {} at position {i}", v.name, v.index)));
            }
            if v.lower.is_nan() || v.upper.is_nan() {
                return Err(Error::Schema(format!("variable `{}` has a NaN bound", v.name)));
            }
        }
        for c in &self.linear {
            if c.coeffs.len() != n {
                return Err(Error::Schema(format!("linear row has {} coefficients, expected {n}", c.coeffs.len())));
            }
        }
        for c in &self.nonlinear {
            if c.support.iter().any(|&i| i >= n) {
                return Err(Error::Schema(format!("constraint `{}` references a variable out of range", c.name)));
            }
        }
        match &self.objective {
            Objective::Linear { coeffs, .. } if coeffs.len() != n => {
                Err(Error::Schema("objective length does not match variable count".into()))
            }
            Objective::Nonlinear { support, .. } if support.iter().any(|&i| i >= n) => {
                Err(Error::Schema("objective references a variable out of range".into()))
            }
            _ => Ok(()),
        }
    }

    /// Worst violation over linear rows, nonlinear constraints and bounds.
    /// Evaluation failures count as infinite violation.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraint_violations(x)
            .into_iter()
            .chain(self.vars.iter().map(|v| (v.lower - x[v.index]).max(x[v.index] - v.upper).max(0.0)))
            .fold(0.0, f64::max)
    }

    /// Violations of the nonlinear constraints followed by the linear rows.
    pub fn constraint_violations(&self, x: &[f64]) -> Vec<f64> {
        self.nonlinear
            .iter()
            .map(|c| c.violation(x).unwrap_or(f64::INFINITY))
            .chain(self.linear.iter().map(|c| c.violation(x)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundSource {
    UserGiven,
    Inferred,
    /// No finite bound and none needed (variable not in any nonlinear term).
    Open,
}

/// A problem whose nonlinear-involved variables all carry finite bounds.
#[derive(Clone, Debug)]
pub struct StandardProblem {
    pub problem: Problem,
    /// `(lower, upper)` provenance per variable.
    pub provenance: Vec<(BoundSource, BoundSource)>,
}

impl std::ops::Deref for StandardProblem {
    type Target = Problem;

    fn deref(&self) -> &Problem {
        &self.problem
    }
}

impl StandardProblem {
    /// Bounds of the nonlinear-involved variables.
    pub fn box_of(&self, vars: &[usize]) -> Vec<(f64, f64)> {
        vars.iter().map(|&i| (self.vars[i].lower, self.vars[i].upper)).collect()
    }

    /// Structural equality ignoring evaluators and provenance.
    pub fn same_structure(&self, other: &StandardProblem) -> bool {
        self.vars == other.vars
            && self.linear == other.linear
            && self.nonlinear.len() == other.nonlinear.len()
            && self
                .nonlinear
                .iter()
                .zip(&other.nonlinear)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind && a.support == b.support)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Min,
    Max,
}

/// Partitions constraints, absorbs single-variable rows into bounds and infers
/// any missing bound of a nonlinear-involved variable by linear programming.
pub fn standardize(problem: Problem) -> Result<StandardProblem> {
    problem.validate()?;
    let mut p = problem;
    let mut linear = Vec::with_capacity(p.linear.len());
    for row in std::mem::take(&mut p.linear) {
        let nz: Vec<usize> = (0..row.coeffs.len()).filter(|&j| row.coeffs[j] != 0.0).collect();
        match nz.as_slice() {
            [] => {
                let ok = match row.sense {
                    Sense::Le => 0.0 <= row.rhs,
                    Sense::Ge => 0.0 >= row.rhs,
                    Sense::Eq => row.rhs == 0.0,
                };
                if !ok {
                    return Err(Error::InfeasibleProblem);
                }
            }
            [j] => {
                let a = row.coeffs[*j];
                let v = row.rhs / a;
                let sense = if a > 0.0 { row.sense } else { flip(row.sense) };
                let var = &mut p.vars[*j];
                match sense {
                    Sense::Le => var.upper = var.upper.min(v),
                    Sense::Ge => var.lower = var.lower.max(v),
                    Sense::Eq => {
                        var.lower = var.lower.max(v);
                        var.upper = var.upper.min(v);
                    }
                }
            }
            _ => linear.push(row),
        }
    }
    p.linear = linear;

    for v in p.vars.iter_mut() {
        if v.integral {
            v.lower = (v.lower - 1e-9).ceil();
            v.upper = (v.upper + 1e-9).floor();
        }
        if v.lower > v.upper {
            return Err(Error::InfeasibleProblem);
        }
    }

    let mut provenance: Vec<(BoundSource, BoundSource)> = p
        .vars
        .iter()
        .map(|v| {
            let src = |b: f64| if b.is_finite() { BoundSource::UserGiven } else { BoundSource::Open };
            (src(v.lower), src(v.upper))
        })
        .collect();

    for j in p.nonlinear_vars() {
        if !p.vars[j].lower.is_finite() {
            let b = infer_bound(&p, j, Direction::Min)?;
            p.vars[j].lower = if p.vars[j].integral { (b - 1e-9).ceil() } else { b };
            provenance[j].0 = BoundSource::Inferred;
        }
        if !p.vars[j].upper.is_finite() {
            let b = infer_bound(&p, j, Direction::Max)?;
            p.vars[j].upper = if p.vars[j].integral { (b + 1e-9).floor() } else { b };
            provenance[j].1 = BoundSource::Inferred;
        }
    }
    Ok(StandardProblem { problem: p, provenance })
}

fn flip(s: Sense) -> Sense {
    match s {
        Sense::Le => Sense::Ge,
        Sense::Ge => Sense::Le,
        Sense::Eq => Sense::Eq,
    }
}

/// Optimal value of `min/max x_var` subject to the linear rows and known bounds.
pub fn infer_bound(problem: &Problem, var: usize, direction: Direction) -> Result<f64> {
    let n = problem.dim();
    let mut lp = LpProblem::new(n);
    lp.lower = problem.lower();
    lp.upper = problem.upper();
    lp.objective[var] = 1.0;
    lp.minimize = direction == Direction::Min;
    for row in &problem.linear {
        let coeffs = row
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(j, a)| (j, *a))
            .collect();
        lp.add_row(coeffs, row.sense, row.rhs);
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.x[var]),
        LpStatus::Infeasible => Err(Error::InfeasibleProblem),
        LpStatus::Unbounded => Err(Error::UnboundedVariable {
            name: problem.vars[var].name.clone(),
            side: if direction == Direction::Min { "lower" } else { "upper" },
        }),
    }
}

/// `1` iff the constraint holds at `x` within `tol`.
pub fn label(con: &NonlinearConstraint, x: &[f64], tol: f64) -> Result<u8> {
    let v = con.eval(x)?;
    let ok = match con.kind {
        ConstraintKind::Inequality => v <= tol,
        ConstraintKind::Equality => v.abs() <= tol,
    };
    Ok(ok as u8)
}

/// One labeled observation in the local coordinates of a constraint's support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub point: Vec<f64>,
    pub label: f64,
}
