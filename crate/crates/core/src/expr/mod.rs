//! Scalar expressions over decision variables.
//!
//! Expressions are parsed from text (see [`parse_expr`]), evaluated in IEEE
//! double precision with explicit domain checks, and differentiated in reverse
//! mode over a flattened tape.

mod parser;
pub mod problem_file;

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::Evaluator;

pub use parser::parse_expr;
pub use problem_file::{load_problem, parse_problem_file, BlackBoxRegistry, ProblemFile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "exp" => UnaryOp::Exp,
            "ln" | "log" => UnaryOp::Ln,
            "sqrt" => UnaryOp::Sqrt,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> Result<f64> {
        let out = match self {
            UnaryOp::Neg => -v,
            UnaryOp::Exp => v.exp(),
            UnaryOp::Ln => {
                if v <= 0.0 {
                    return Err(Error::Domain(format!("ln of nonpositive value {v}")));
                }
                v.ln()
            }
            UnaryOp::Sqrt => {
                if v < 0.0 {
                    return Err(Error::Domain(format!("sqrt of negative value {v}")));
                }
                v.sqrt()
            }
            UnaryOp::Sin => v.sin(),
            UnaryOp::Cos => v.cos(),
            UnaryOp::Abs => v.abs(),
        };
        finite(out)
    }

    /// Derivative at `v` given the output `out`.
    fn derivative(self, v: f64, out: f64) -> Result<f64> {
        Ok(match self {
            UnaryOp::Neg => -1.0,
            UnaryOp::Exp => out,
            UnaryOp::Ln => 1.0 / v,
            UnaryOp::Sqrt => {
                if out == 0.0 {
                    return Err(Error::Domain("sqrt is not differentiable at 0".into()));
                }
                0.5 / out
            }
            UnaryOp::Sin => v.cos(),
            UnaryOp::Cos => -v.sin(),
            // subgradient 0 at the kink
            UnaryOp::Abs => v.signum() * (v != 0.0) as u8 as f64,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }

    fn apply(self, a: f64, b: f64) -> Result<f64> {
        let out = match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => {
                if b == 0.0 {
                    return Err(Error::Domain("division by zero".into()));
                }
                a / b
            }
            BinaryOp::Pow => {
                if a < 0.0 && b.fract() != 0.0 {
                    return Err(Error::Domain(format!("negative base {a} with fractional exponent {b}")));
                }
                if a == 0.0 && b < 0.0 {
                    return Err(Error::Domain("zero raised to a negative power".into()));
                }
                a.powf(b)
            }
        };
        finite(out)
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("non-finite intermediate value {v}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn unary(op: UnaryOp, e: Expr) -> Expr {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn vars(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(i) => {
                out.insert(*i);
            }
            Expr::Unary(_, e) => e.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(_) => false,
            Expr::Unary(_, e) => e.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(i) => x
                .get(*i)
                .copied()
                .ok_or_else(|| Error::Evaluation(format!("variable index {i} out of range"))),
            Expr::Unary(op, e) => op.apply(e.eval(x)?),
            Expr::Binary(op, a, b) => op.apply(a.eval(x)?, b.eval(x)?),
        }
    }

    /// Reverse-mode gradient with respect to all `n` variables.
    pub fn grad(&self, x: &[f64], n: usize) -> Result<Vec<f64>> {
        Ok(self.eval_grad(x, n)?.1)
    }

    pub fn eval_grad(&self, x: &[f64], n: usize) -> Result<(f64, Vec<f64>)> {
        let mut tape = Tape::default();
        let root = tape.record(self, x)?;
        let mut adj = vec![0.0; tape.nodes.len()];
        adj[root] = 1.0;
        let mut g = vec![0.0; n];
        for k in (0..tape.nodes.len()).rev() {
            let a = adj[k];
            if a == 0.0 {
                continue;
            }
            match tape.nodes[k] {
                TapeNode::Const => {}
                TapeNode::Var(i) => {
                    if i < n {
                        g[i] += a;
                    }
                }
                TapeNode::Unary(op, c) => {
                    adj[c] += a * op.derivative(tape.values[c], tape.values[k])?;
                }
                TapeNode::Binary(op, l, r, r_const) => {
                    let (u, v, out) = (tape.values[l], tape.values[r], tape.values[k]);
                    let (dl, dr) = match op {
                        BinaryOp::Add => (1.0, 1.0),
                        BinaryOp::Sub => (1.0, -1.0),
                        BinaryOp::Mul => (v, u),
                        BinaryOp::Div => (1.0 / v, -u / (v * v)),
                        BinaryOp::Pow => {
                            let dl = if v == 0.0 { 0.0 } else { v * u.powf(v - 1.0) };
                            let dr = if r_const {
                                0.0
                            } else if u > 0.0 {
                                out * u.ln()
                            } else {
                                return Err(Error::Domain("variable exponent needs a positive base".into()));
                            };
                            (dl, dr)
                        }
                    };
                    if !dl.is_finite() || !dr.is_finite() {
                        return Err(Error::Domain(format!("derivative of {} is not finite", op.symbol())));
                    }
                    adj[l] += a * dl;
                    adj[r] += a * dr;
                }
            }
        }
        Ok((tape.values[root], g))
    }

    /// Replaces every variable-free subtree by its value.
    pub fn fold_constants(&self) -> Result<Expr> {
        Ok(match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, e) => {
                let e = e.fold_constants()?;
                match e {
                    Expr::Const(c) => Expr::Const(op.apply(c)?),
                    e => Expr::unary(*op, e),
                }
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.fold_constants()?, b.fold_constants()?);
                match (&a, &b) {
                    (Expr::Const(p), Expr::Const(q)) => Expr::Const(op.apply(*p, *q)?),
                    _ => Expr::binary(*op, a, b),
                }
            }
        })
    }

    /// `(coeffs, constant)` when the expression is affine in the variables.
    pub fn linear_form(&self, n: usize) -> Option<(Vec<f64>, f64)> {
        match self {
            Expr::Const(c) => Some((vec![0.0; n], *c)),
            Expr::Var(i) => {
                let mut a = vec![0.0; n];
                *a.get_mut(*i)? = 1.0;
                Some((a, 0.0))
            }
            Expr::Unary(UnaryOp::Neg, e) => {
                let (a, c) = e.linear_form(n)?;
                Some((a.into_iter().map(|v| -v).collect(), -c))
            }
            Expr::Unary(..) => {
                let c = self.eval(&[]).ok()?;
                self.is_constant().then(|| (vec![0.0; n], c))
            }
            Expr::Binary(op, l, r) => {
                if self.is_constant() {
                    return Some((vec![0.0; n], self.eval(&[]).ok()?));
                }
                let (la, lc) = l.linear_form(n)?;
                let (ra, rc) = r.linear_form(n)?;
                let scale = |a: Vec<f64>, c: f64, s: f64| Some((a.into_iter().map(|v| v * s).collect(), c * s));
                match op {
                    BinaryOp::Add => Some((la.iter().zip(&ra).map(|(p, q)| p + q).collect(), lc + rc)),
                    BinaryOp::Sub => Some((la.iter().zip(&ra).map(|(p, q)| p - q).collect(), lc - rc)),
                    BinaryOp::Mul if r.is_constant() => scale(la, lc, rc),
                    BinaryOp::Mul if l.is_constant() => scale(ra, rc, lc),
                    BinaryOp::Div if r.is_constant() && rc != 0.0 => scale(la, lc, 1.0 / rc),
                    _ => None,
                }
            }
        }
    }

    /// Prints with variable names, fully parenthesized so that parsing the
    /// output reproduces the same tree.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |e| ExprDisplay { expr: e, names: self.names };
        match self.expr {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => match self.names.get(*i) {
                Some(name) => write!(f, "{name}"),
                None => write!(f, "x{i}"),
            },
            Expr::Unary(UnaryOp::Neg, e) => write!(f, "(-({}))", sub(e)),
            Expr::Unary(op, e) => write!(f, "{}({})", op.name(), sub(e)),
            Expr::Binary(op, a, b) => write!(f, "({} {} {})", sub(a), op.symbol(), sub(b)),
        }
    }
}

#[derive(Clone, Copy)]
enum TapeNode {
    Const,
    Var(usize),
    Unary(UnaryOp, usize),
    /// operator, left, right, whether the right operand is variable-free
    Binary(BinaryOp, usize, usize, bool),
}

#[derive(Default)]
struct Tape {
    nodes: Vec<TapeNode>,
    values: Vec<f64>,
}

impl Tape {
    fn push(&mut self, node: TapeNode, value: f64) -> usize {
        self.nodes.push(node);
        self.values.push(value);
        self.nodes.len() - 1
    }

    fn record(&mut self, e: &Expr, x: &[f64]) -> Result<usize> {
        match e {
            Expr::Const(c) => Ok(self.push(TapeNode::Const, *c)),
            Expr::Var(i) => {
                let v = e.eval(x)?;
                Ok(self.push(TapeNode::Var(*i), v))
            }
            Expr::Unary(op, inner) => {
                let c = self.record(inner, x)?;
                let v = op.apply(self.values[c])?;
                Ok(self.push(TapeNode::Unary(*op, c), v))
            }
            Expr::Binary(op, a, b) => {
                let l = self.record(a, x)?;
                let r = self.record(b, x)?;
                let v = op.apply(self.values[l], self.values[r])?;
                Ok(self.push(TapeNode::Binary(*op, l, r, b.is_constant()), v))
            }
        }
    }
}

/// An expression bound to a problem dimension, usable as a constraint or
/// objective evaluator with exact gradients.
#[derive(Clone, Debug)]
pub struct ExprEvaluator {
    pub expr: Expr,
    pub dim: usize,
}

impl Evaluator for ExprEvaluator {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.expr.eval(x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.expr.grad(x, self.dim)
    }
}
