//! TOML problem files.
//!
//! ```toml
//! schema_version = 1            # mandatory, currently 1
//! name = "illustrative"
//! known_optimum = -1.1497       # optional
//!
//! [[variables]]
//! name = "x1"
//! lower = 0.51                  # optional, default -inf
//! upper = 1.5                   # optional, default +inf
//! integral = false              # optional
//!
//! [objective]                   # always minimized
//! expression = "-x1"            # or: linear = [-1.0, 0.0] (one per variable)
//! constant = 0.0                # optional, only with `linear`
//!
//! [[constraints]]
//! name = "g1"
//! expression = "-0.43*ln(x1-0.5)-1.1-x1+x2"
//! sense = "<="                  # "<=", ">=" or "=="
//! rhs = 0.0                     # optional
//!
//! [[constraints]]
//! name = "custom"
//! black_box = "my_function"     # looked up in the registry passed to load_problem
//! support = ["x1", "x2"]
//! sense = "<="
//! ```
//!
//! Constraints whose expression is affine become linear rows; all others
//! become nonlinear constraints `expr - rhs <= 0` (or `rhs - expr <= 0` for
//! `>=`, `expr - rhs = 0` for `==`). Black-box constraints use the same
//! convention and must be nonlinear.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{parse_expr, BinaryOp, Expr, ExprEvaluator};
use crate::error::{Error, Result};
use crate::model::{
    ConstraintKind, Evaluator, LinearConstraint, NonlinearConstraint, Objective, Problem, Sense, VarSpec,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_optimum: Option<f64>,
    pub variables: Vec<VariableEntry>,
    pub objective: ObjectiveEntry,
    #[serde(default)]
    pub constraints: Vec<ConstraintEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default)]
    pub integral: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<f64>>,
    #[serde(default)]
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub black_box: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support: Vec<String>,
    pub sense: Sense,
    #[serde(default)]
    pub rhs: f64,
}

/// Host-supplied evaluators for black-box constraints, keyed by name.
pub type BlackBoxRegistry = HashMap<String, Arc<dyn Evaluator>>;

pub fn parse_problem_file(text: &str) -> Result<ProblemFile> {
    let doc: toml::Value = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    match doc.get("schema_version") {
        None => return Err(Error::Schema("missing schema_version".into())),
        Some(toml::Value::Integer(v)) if *v == SCHEMA_VERSION as i64 => {}
        Some(v) => return Err(Error::Schema(format!("unsupported schema_version {v}"))),
    }
    doc.try_into().map_err(|e: toml::de::Error| Error::Schema(e.to_string()))
}

pub fn read_problem_file(path: impl AsRef<Path>) -> Result<ProblemFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_problem_file(&text)
}

/// Reads and loads a problem file with no black-box constraints.
pub fn load_problem_path(path: impl AsRef<Path>) -> Result<(Problem, ProblemFile)> {
    let doc = read_problem_file(path)?;
    let p = load_problem(&doc, &BlackBoxRegistry::new())?;
    Ok((p, doc))
}

pub fn load_problem(doc: &ProblemFile, registry: &BlackBoxRegistry) -> Result<Problem> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema(format!("unsupported schema_version {}", doc.schema_version)));
    }
    let names: Vec<String> = doc.variables.iter().map(|v| v.name.clone()).collect();
    for (i, name) in names.iter().enumerate() {
        if names[..i].contains(name) {
            return Err(Error::Schema(format!("duplicate variable `{name}`")));
        }
        if super::UnaryOp::from_name(name).is_some() {
            return Err(Error::Schema(format!("variable name `{name}` is reserved")));
        }
    }
    let n = names.len();
    let vars = doc
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| VarSpec {
            name: v.name.clone(),
            index: i,
            lower: v.lower.unwrap_or(f64::NEG_INFINITY),
            upper: v.upper.unwrap_or(f64::INFINITY),
            integral: v.integral,
        })
        .collect();

    let objective = match (&doc.objective.expression, &doc.objective.linear) {
        (Some(text), None) => {
            let e = parse_expr(text, &names)?;
            match e.linear_form(n) {
                Some((coeffs, constant)) => Objective::Linear { coeffs, constant },
                None => Objective::Nonlinear {
                    support: e.vars().into_iter().collect(),
                    evaluator: Arc::new(ExprEvaluator { expr: e, dim: n }),
                },
            }
        }
        (None, Some(coeffs)) => {
            if coeffs.len() != n {
                return Err(Error::Schema(format!("objective has {} coefficients for {n} variables", coeffs.len())));
            }
            Objective::Linear {
                coeffs: coeffs.clone(),
                constant: doc.objective.constant,
            }
        }
        _ => return Err(Error::Schema("objective needs exactly one of `expression` or `linear`".into())),
    };

    let mut linear = Vec::new();
    let mut nonlinear = Vec::new();
    for c in &doc.constraints {
        let kind = if c.sense == Sense::Eq { ConstraintKind::Equality } else { ConstraintKind::Inequality };
        match (&c.expression, &c.black_box) {
            (Some(text), None) => {
                let e = parse_expr(text, &names)?;
                if let Some((coeffs, constant)) = e.linear_form(n) {
                    linear.push(LinearConstraint::new(coeffs, c.sense, c.rhs - constant));
                    continue;
                }
                let g = match c.sense {
                    Sense::Ge => Expr::binary(BinaryOp::Sub, Expr::Const(c.rhs), e),
                    _ if c.rhs == 0.0 => e,
                    _ => Expr::binary(BinaryOp::Sub, e, Expr::Const(c.rhs)),
                };
                nonlinear.push(NonlinearConstraint::new(
                    c.name.clone(),
                    Arc::new(ExprEvaluator { expr: g.clone(), dim: n }),
                    kind,
                    g.vars().into_iter().collect(),
                ));
            }
            (None, Some(key)) => {
                let f = registry
                    .get(key)
                    .cloned()
                    .ok_or_else(|| Error::UnknownIdentifier(key.clone()))?;
                let mut support = Vec::with_capacity(c.support.len());
                for s in &c.support {
                    support.push(
                        names
                            .iter()
                            .position(|n| n == s)
                            .ok_or_else(|| Error::UnknownIdentifier(s.clone()))?,
                    );
                }
                support.sort_unstable();
                support.dedup();
                nonlinear.push(NonlinearConstraint::new(
                    c.name.clone(),
                    Arc::new(BlackBox { f, sense: c.sense, rhs: c.rhs }),
                    kind,
                    support,
                ));
            }
            _ => {
                return Err(Error::Schema(format!(
                    "constraint `{}` needs exactly one of `expression` or `black_box`",
                    c.name
                )))
            }
        }
    }

    let p = Problem {
        name: doc.name.clone(),
        vars,
        objective,
        linear,
        nonlinear,
    };
    p.validate()?;
    Ok(p)
}

/// Shifts a black-box function into `<= 0` / `= 0` form.
struct BlackBox {
    f: Arc<dyn Evaluator>,
    sense: Sense,
    rhs: f64,
}

impl Evaluator for BlackBox {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = self.f.eval(x)?;
        Ok(match self.sense {
            Sense::Ge => self.rhs - v,
            _ => v - self.rhs,
        })
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.f.gradient(x)?;
        Ok(match self.sense {
            Sense::Ge => g.into_iter().map(|v| -v).collect(),
            _ => g,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FnEvaluator;

    const DOC: &str = r#"
schema_version = 1
name = "t"

[[variables]]
name = "x1"
lower = 0.51
upper = 1.5

[[variables]]
name = "x2"
lower = 0.3
upper = 1.6

[objective]
expression = "-x1"

[[constraints]]
name = "g1"
expression = "-0.43*ln(x1-0.5)-1.1-x1+x2"
sense = "<="

[[constraints]]
name = "g3"
expression = "-x2+1.1*x1+0.3"
sense = ">="
"#;

    #[test]
    fn loads_and_partitions() {
        let p = load_problem(&parse_problem_file(DOC).unwrap(), &BlackBoxRegistry::new()).unwrap();
        assert_eq!(p.nonlinear.len(), 1);
        assert_eq!(p.linear, vec![LinearConstraint::new(vec![1.1, -1.0], Sense::Ge, -0.3)]);
        assert!(matches!(p.objective, Objective::Linear { ref coeffs, .. } if coeffs == &vec![-1.0, 0.0]));
        assert_eq!(p.nonlinear[0].support, vec![0, 1]);
    }

    #[test]
    fn box_only_document() {
        let doc = "schema_version = 1\nname = \"b\"\n[[variables]]\nname = \"y\"\nlower = 0.0\nupper = 1.0\n[objective]\nlinear = [1.0]\n";
        let p = load_problem(&parse_problem_file(doc).unwrap(), &BlackBoxRegistry::new()).unwrap();
        assert!(p.linear.is_empty() && p.nonlinear.is_empty());
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(parse_problem_file("name = \"x\""), Err(Error::Schema(_))));
        assert!(matches!(parse_problem_file(&DOC.replace("schema_version = 1", "schema_version = 2")), Err(Error::Schema(_))));
        assert!(matches!(parse_problem_file(&DOC.replace("sense = \"<=\"", "sense = \"<\"")), Err(Error::Schema(_))));
        let bad = DOC.replace("-x1+x2", "-x1+x3");
        assert_eq!(
            load_problem(&parse_problem_file(&bad).unwrap(), &BlackBoxRegistry::new()).unwrap_err(),
            Error::UnknownIdentifier("x3".into())
        );
    }

    #[test]
    fn black_box_constraints() {
        let doc = DOC.replace(
            "expression = \"-x2+1.1*x1+0.3\"",
            "black_box = \"circle\"\nsupport = [\"x1\", \"x2\"]\nrhs = 1.0",
        );
        let mut reg = BlackBoxRegistry::new();
        reg.insert("circle".into(), Arc::new(FnEvaluator(|x: &[f64]| Ok(x[0] * x[0] + x[1] * x[1]))));
        let p = load_problem(&parse_problem_file(&doc).unwrap(), &reg).unwrap();
        assert_eq!(p.nonlinear.len(), 2);
        // x1^2 + x2^2 >= 1  ->  1 - (x1^2 + x2^2) <= 0
        assert!((p.nonlinear[1].eval(&[1.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        let g = p.nonlinear[1].gradient(&[1.0, 1.0]).unwrap();
        assert!((g[0] + 2.0).abs() < 1e-6);
        assert!(matches!(
            load_problem(&parse_problem_file(&doc).unwrap(), &BlackBoxRegistry::new()),
            Err(Error::UnknownIdentifier(_))
        ));
    }
}
