//! Compiles trained surrogates into MILP rows and assembles the
//! approximation of a whole problem.

mod models;

use serde::{Deserialize, Serialize};

pub use models::{encode_gbm, encode_linear_model, encode_mlp, encode_tree, Encoded};

use crate::error::{Error, Result};
use crate::learners::{Surrogate, SurrogateModel, Task};
use crate::milp::{MilpModel, RegistryEntry, VarKind};
use crate::model::{ConstraintKind, Objective, Sense, StandardProblem};

/// Norm of the uncertainty set (`p`) or its dual (`q`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::Linf,
            Norm::L2 => Norm::L2,
            Norm::Linf => Norm::L1,
        }
    }

    pub fn exponent(self) -> f64 {
        match self {
            Norm::L1 => 1.0,
            Norm::L2 => 2.0,
            Norm::Linf => f64::INFINITY,
        }
    }

    pub fn parse(s: &str) -> Option<Norm> {
        match s {
            "1" | "l1" => Some(Norm::L1),
            "2" | "l2" => Some(Norm::L2),
            "inf" | "linf" => Some(Norm::Linf),
            _ => None,
        }
    }
}

/// Multiplicative coefficient uncertainty of radius `rho` in the `p`-norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustConfig {
    pub rho: f64,
    pub p: Norm,
    /// Robustify linear classifiers.
    pub linear: bool,
    /// Robustify tree splits (single trees and boosted ensembles).
    pub trees: bool,
    /// Allow conic rows, which only an external solver can handle.
    pub allow_conic: bool,
}

impl RobustConfig {
    pub fn new(rho: f64, p: Norm) -> Self {
        RobustConfig {
            rho,
            p,
            linear: true,
            trees: true,
            allow_conic: false,
        }
    }

    pub(crate) fn check_builtin(&self, q: Norm) -> Result<()> {
        if q == Norm::L2 && !self.allow_conic {
            return Err(Error::UnsupportedNorm(2.0));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EncodeOptions {
    pub robust: Option<RobustConfig>,
    /// Penalty of the relaxation variables; `None` disables relaxation.
    pub relax_lambda: Option<f64>,
    /// Margin for strict split rows, scaled by the row norm.
    pub strict_eps: f64,
    /// Half-width of the band that replaces an equality surrogate `y = 0`.
    pub eq_band: f64,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            robust: None,
            relax_lambda: None,
            strict_eps: 1e-6,
            eq_band: 1e-4,
        }
    }
}

/// `1.01 * max_{x in box} |a . x - b|`, at least 1.
pub fn big_m_value(a: &[f64], b: f64, lower: &[f64], upper: &[f64]) -> f64 {
    let (mut lo, mut hi) = (-b, -b);
    for ((&aj, &l), &u) in a.iter().zip(lower).zip(upper) {
        if aj == 0.0 {
            continue;
        }
        let (p, q) = (aj * l, aj * u);
        lo += p.min(q);
        hi += p.max(q);
    }
    (1.01 * lo.abs().max(hi.abs())).max(1.0)
}

/// Interval of `sum a_j x_j` over the variable bounds of `milp`.
pub(crate) fn range(milp: &MilpModel, terms: &[(usize, f64)]) -> (f64, f64) {
    terms.iter().fold((0.0, 0.0), |(lo, hi), &(j, a)| {
        let v = &milp.vars[j];
        let (p, q) = (a * v.lower, a * v.upper);
        (lo + p.min(q), hi + p.max(q))
    })
}

/// Encodes any surrogate. Its `inputs` are problem variable indices, which
/// are also the MILP indices of those variables.
pub fn encode_surrogate(s: &Surrogate, milp: &mut MilpModel, label: &str, opts: &EncodeOptions) -> Result<Encoded> {
    let robust = opts.robust.as_ref();
    match &s.model {
        SurrogateModel::Linear(m) => encode_linear_model(m, s.task, milp, &s.inputs, label, robust),
        SurrogateModel::Tree(t) => encode_tree(t, milp, &s.inputs, label, robust, opts.strict_eps),
        SurrogateModel::Gbm(g) => encode_gbm(g, milp, &s.inputs, label, robust, opts.strict_eps),
        SurrogateModel::Mlp(m) => encode_mlp(m, milp, &s.inputs, label),
    }
}

/// The assembled approximation and where its pieces live.
#[derive(Clone, Debug)]
pub struct Assembled {
    pub milp: MilpModel,
    /// Number of original problem variables (MILP indices `0..n`).
    pub n: usize,
    /// Relaxation variable per nonlinear constraint, when relaxed.
    pub relax_vars: Vec<Option<usize>>,
    pub outputs: Vec<Encoded>,
    pub objective_output: Option<usize>,
}

impl Assembled {
    /// Sum of the relaxation variables at `x`.
    pub fn total_relaxation(&self, x: &[f64]) -> f64 {
        // empty when the solve found no point
        self.relax_vars.iter().flatten().filter_map(|&u| x.get(u)).sum()
    }
}

/// Builds the approximation MILP: problem variables and linear rows
/// verbatim, one surrogate per nonlinear constraint (`None` drops the
/// constraint), and the objective or its surrogate.
pub fn assemble(
    sp: &StandardProblem,
    surrogates: &[Option<Surrogate>],
    objective: Option<&Surrogate>,
    opts: &EncodeOptions,
) -> Result<Assembled> {
    if surrogates.len() != sp.nonlinear.len() {
        return Err(Error::Schema(format!(
            "{} surrogates for {} nonlinear constraints",
            surrogates.len(),
            sp.nonlinear.len()
        )));
    }
    let mut milp = MilpModel::new();
    for v in &sp.vars {
        let kind = if v.integral { VarKind::Integer } else { VarKind::Continuous };
        milp.add_var(&v.name, kind, v.lower, v.upper);
    }
    for (k, row) in sp.linear.iter().enumerate() {
        let coeffs = row.coeffs.iter().copied().enumerate().filter(|t| t.1 != 0.0).collect();
        milp.add_row(format!("lin{k}"), coeffs, row.sense, row.rhs);
    }
    let mut relax_vars = Vec::new();
    let mut outputs = Vec::new();
    for (con, s) in sp.nonlinear.iter().zip(surrogates) {
        let Some(s) = s else {
            relax_vars.push(None);
            outputs.push(Encoded { output: None, threshold_row: None });
            continue;
        };
        let label = sanitize(&con.name);
        let enc = encode_surrogate(s, &mut milp, &label, opts)?;
        let u = opts.relax_lambda.map(|lambda| {
            let u = milp.add_continuous(format!("{label}_u"), 0.0, f64::INFINITY);
            milp.add_objective_term(u, lambda);
            milp.registry.push(RegistryEntry {
                label: format!("{label}_relax"),
                auxiliary: vec![u],
                ..Default::default()
            });
            u
        });
        match (con.kind, s.task) {
            (ConstraintKind::Inequality, Task::Classification) => match (enc.threshold_row, enc.output) {
                (Some(r), _) => {
                    if let Some(u) = u {
                        milp.rows[r].coeffs.push((u, 1.0));
                    }
                }
                (None, Some(y)) => {
                    let mut row = vec![(y, 1.0)];
                    row.extend(u.map(|u| (u, 1.0)));
                    milp.add_row(format!("{label}_thr"), row, Sense::Ge, s.threshold);
                }
                (None, None) => unreachable!("classifier encodings expose a row or an output"),
            },
            (ConstraintKind::Inequality, Task::Regression) => {
                // regression of g itself: require y <= 0
                let y = enc.output.expect("regressors have an output");
                let mut row = vec![(y, 1.0)];
                row.extend(u.map(|u| (u, -1.0)));
                milp.add_row(format!("{label}_thr"), row, Sense::Le, 0.0);
            }
            (ConstraintKind::Equality, _) => {
                let y = enc.output.ok_or_else(|| Error::Schema(format!("{}: equality needs a regressor", con.name)))?;
                let mut hi = vec![(y, 1.0)];
                hi.extend(u.map(|u| (u, -1.0)));
                milp.add_row(format!("{label}_band_hi"), hi, Sense::Le, opts.eq_band);
                let mut lo = vec![(y, 1.0)];
                lo.extend(u.map(|u| (u, 1.0)));
                milp.add_row(format!("{label}_band_lo"), lo, Sense::Ge, -opts.eq_band);
            }
        }
        relax_vars.push(u);
        outputs.push(enc);
    }
    let objective_output = match (&sp.objective, objective) {
        (Objective::Linear { coeffs, constant }, _) => {
            for (j, &c) in coeffs.iter().enumerate() {
                if c != 0.0 {
                    milp.add_objective_term(j, c);
                }
            }
            milp.objective_constant = *constant;
            None
        }
        (Objective::Nonlinear { .. }, Some(s)) => {
            let plain = EncodeOptions { robust: None, ..opts.clone() };
            let enc = encode_surrogate(s, &mut milp, "objective", &plain)?;
            let y = enc.output.expect("regressors have an output");
            milp.add_objective_term(y, 1.0);
            Some(y)
        }
        (Objective::Nonlinear { .. }, None) => {
            return Err(Error::Schema("nonlinear objective needs a surrogate".into()));
        }
    };
    Ok(Assembled {
        milp,
        n: sp.dim(),
        relax_vars,
        outputs,
        objective_output,
    })
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}
