use crate::error::{Error, Result};
use crate::milp::lp::LpProblem;
use crate::model::Sense;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpVar {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpRow {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl MilpRow {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `||x_vars||_2 <= t`. Only representable in exported files.
#[derive(Clone, Debug, PartialEq)]
pub struct SocRow {
    pub name: String,
    pub t: usize,
    pub terms: Vec<(usize, f64)>,
}

/// Variables created for one encoded surrogate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegistryEntry {
    pub label: String,
    /// Output variable, `None` when the model is embedded as a plain row.
    pub output: Option<usize>,
    pub binaries: Vec<usize>,
    pub auxiliary: Vec<usize>,
    pub big_m: Vec<f64>,
}

/// A mixed-integer linear program.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpModel {
    pub vars: Vec<MilpVar>,
    pub rows: Vec<MilpRow>,
    pub cones: Vec<SocRow>,
    /// Sparse objective coefficients.
    pub objective: Vec<(usize, f64)>,
    pub objective_constant: f64,
    pub minimize: bool,
    pub registry: Vec<RegistryEntry>,
}

impl Default for MilpModel {
    fn default() -> Self {
        MilpModel::new()
    }
}

impl MilpModel {
    pub fn new() -> Self {
        MilpModel {
            vars: Vec::new(),
            rows: Vec::new(),
            cones: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            minimize: true,
            registry: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> usize {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        self.vars.push(MilpVar {
            name: name.into(),
            kind,
            lower,
            upper,
        });
        self.vars.len() - 1
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_row(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        let coeffs = merge_terms(coeffs);
        self.rows.push(MilpRow {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    /// Adds `coef` to the objective coefficient of `var`.
    pub fn add_objective_term(&mut self, var: usize, coef: f64) {
        match self.objective.iter_mut().find(|(j, _)| *j == var) {
            Some(t) => t.1 += coef,
            None => self.objective.push((var, coef)),
        }
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }

    pub fn is_integral(&self, j: usize) -> bool {
        self.vars[j].kind != VarKind::Continuous
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    /// Worst row, bound or cone violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xv)| (v.lower - xv).max(xv - v.upper).max(0.0));
        let rows = self.rows.iter().map(|r| r.violation(x));
        let cones = self.cones.iter().map(|c| {
            let norm = c.terms.iter().map(|&(j, a)| (a * x[j]).powi(2)).sum::<f64>().sqrt();
            (norm - x[c.t]).max(0.0)
        });
        bounds.chain(rows).chain(cones).fold(0.0, f64::max)
    }

    pub fn max_integrality_violation(&self, x: &[f64]) -> f64 {
        (0..self.vars.len())
            .filter(|&j| self.is_integral(j))
            .map(|j| (x[j] - x[j].round()).abs())
            .fold(0.0, f64::max)
    }

    /// The continuous relaxation, always in minimization form.
    pub fn relaxation(&self) -> Result<LpProblem> {
        if !self.cones.is_empty() {
            return Err(Error::UnsupportedNorm(2.0));
        }
        let n = self.num_vars();
        let mut lp = LpProblem::new(n);
        let sign = if self.minimize { 1.0 } else { -1.0 };
        for &(j, c) in &self.objective {
            lp.objective[j] += sign * c;
        }
        for (j, v) in self.vars.iter().enumerate() {
            lp.lower[j] = v.lower;
            lp.upper[j] = v.upper;
            if v.kind != VarKind::Continuous {
                lp.lower[j] = (v.lower - 1e-9).ceil();
                lp.upper[j] = (v.upper + 1e-9).floor();
            }
        }
        for r in &self.rows {
            lp.add_row(r.coeffs.clone(), r.sense, r.rhs);
        }
        Ok(lp)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::NumericalFailure(format!("variable {} has invalid bounds", v.name)));
            }
        }
        for r in &self.rows {
            if r.coeffs.iter().any(|&(j, a)| j >= n || !a.is_finite()) || !r.rhs.is_finite() {
                return Err(Error::NumericalFailure(format!("row {} is malformed", r.name)));
            }
        }
        if self.objective.iter().any(|&(j, c)| j >= n || !c.is_finite()) {
            return Err(Error::NumericalFailure("objective is malformed".into()));
        }
        Ok(())
    }
}

/// Sums duplicate indices, drops zeros and sorts by variable.
pub fn merge_terms(mut terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    terms.sort_by_key(|t| t.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (j, a) in terms {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    out
}
