//! Built-in benchmark problems.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expr::{load_problem, parse_problem_file, BinaryOp, BlackBoxRegistry, Expr, ExprEvaluator, UnaryOp};
use crate::model::{ConstraintKind, NonlinearConstraint, Objective, Problem, VarSpec};

pub const ILLUSTRATIVE: &str = include_str!("../../data/illustrative.prob");
pub const SPEED_REDUCER: &str = include_str!("../../data/speed_reducer.prob");

/// Best known objective values.
pub const ILLUSTRATIVE_OPTIMUM: f64 = -1.1497;
pub const SPEED_REDUCER_OPTIMUM: f64 = 2994.36;

fn load(text: &str) -> Problem {
    let doc = parse_problem_file(text).expect("bundled problem parses");
    load_problem(&doc, &BlackBoxRegistry::new()).expect("bundled problem loads")
}

/// Two-variable nonconvex problem with two logarithmic constraints.
pub fn illustrative() -> Problem {
    load(ILLUSTRATIVE)
}

/// Seven-variable gearbox design with one integral variable.
pub fn speed_reducer() -> Problem {
    load(SPEED_REDUCER)
}

/// Coefficients of a quadratic-sigmoid instance: `min c . x` over
/// `[-2, 2]^n` with `Q_i(x) = x' A_i x + d_i . x + f_i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticSigmoid {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub c: Vec<f64>,
    pub a: Vec<Vec<Vec<f64>>>,
    pub d: Vec<Vec<f64>>,
    pub f: Vec<f64>,
}

impl QuadraticSigmoid {
    pub fn generate(n: usize, m: usize, seed: u64) -> QuadraticSigmoid {
        assert!(n >= 1 && m >= 1, "need at least one variable and one constraint");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = || rng.random_range(-1.0..=1.0);
        let c: Vec<f64> = (0..n).map(|_| u()).collect();
        let (mut a_all, mut d_all, mut f_all) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..m {
            let mut a = vec![vec![0.0; n]; n];
            for j in 0..n {
                for k in j..n {
                    let v = u() / n as f64;
                    a[j][k] = v;
                    a[k][j] = v;
                }
            }
            d_all.push((0..n).map(|_| u()).collect());
            f_all.push(u());
            a_all.push(a);
        }
        QuadraticSigmoid { n, m, seed, c, a: a_all, d: d_all, f: f_all }
    }

    pub fn is_sigmoid_form(&self, i: usize) -> bool {
        i < self.m / 2
    }

    pub fn to_problem(&self) -> Problem {
        let n = self.n;
        let vars = (0..n).map(|i| VarSpec::continuous(format!("x{}", i + 1), i, -2.0, 2.0)).collect();
        let nonlinear = (0..self.m)
            .map(|i| {
                let q = quadratic(&self.a[i], &self.d[i], self.f[i]);
                let sig = Expr::binary(
                    BinaryOp::Div,
                    Expr::Const(1.0),
                    Expr::binary(BinaryOp::Add, Expr::Const(1.0), Expr::unary(UnaryOp::Exp, Expr::unary(UnaryOp::Neg, q.clone()))),
                );
                let (name, g) = if self.is_sigmoid_form(i) {
                    (format!("sigmoid_{}", i + 1), Expr::binary(BinaryOp::Sub, sig, Expr::Const(0.5)))
                } else {
                    (
                        format!("ratio_{}", i + 1),
                        Expr::binary(BinaryOp::Sub, Expr::Const(-0.5), Expr::binary(BinaryOp::Mul, q, sig)),
                    )
                };
                NonlinearConstraint::new(
                    name,
                    Arc::new(ExprEvaluator { expr: g, dim: n }),
                    ConstraintKind::Inequality,
                    (0..n).collect(),
                )
            })
            .collect();
        Problem {
            name: format!("qsigmoid_n{n}_m{}_s{}", self.m, self.seed),
            vars,
            objective: Objective::Linear { coeffs: self.c.clone(), constant: 0.0 },
            linear: Vec::new(),
            nonlinear,
        }
    }
}

/// Random problem `min c.x` over `[-2, 2]^n` with `m` constraints built on
/// quadratics `Q_i(x) = x'A_i x + d_i.x + f_i`. The first `floor(m/2)` read
/// `sigmoid(Q_i) <= 0.5`, the rest `Q_i * sigmoid(Q_i) >= -0.5`.
///
/// `c`, `d_i`, `f_i` and the entries of the symmetric `A_i` (divided by `n`)
/// are uniform on `[-1, 1]`.
pub fn generate_quadratic_sigmoid(n: usize, m: usize, seed: u64) -> Problem {
    QuadraticSigmoid::generate(n, m, seed).to_problem()
}

fn quadratic(a: &[Vec<f64>], d: &[f64], f: f64) -> Expr {
    let n = d.len();
    let mut e = Expr::Const(f);
    let term = |coef: f64, body: Expr| Expr::binary(BinaryOp::Mul, Expr::Const(coef), body);
    for j in 0..n {
        for k in j..n {
            let coef = if j == k { a[j][k] } else { 2.0 * a[j][k] };
            let body = Expr::binary(BinaryOp::Mul, Expr::Var(j), Expr::Var(k));
            e = Expr::binary(BinaryOp::Add, e, term(coef, body));
        }
        e = Expr::binary(BinaryOp::Add, e, term(d[j], Expr::Var(j)));
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_problems_load() {
        let p = illustrative();
        assert_eq!((p.dim(), p.nonlinear.len(), p.linear.len()), (2, 2, 2));
        let p = speed_reducer();
        assert_eq!(p.dim(), 7);
        assert_eq!(p.nonlinear.len() + p.linear.len(), 11);
        assert!(p.vars[2].integral && !p.objective.is_linear());
    }

    #[test]
    fn speed_reducer_reference_point() {
        let p = speed_reducer();
        let x = [3.5, 0.7, 17.0, 7.3, 7.7153, 3.3502, 5.2867];
        let f = p.objective.eval(&x).unwrap();
        assert!((f - 2994.36).abs() < 0.5, "{f}");
        // the rounded published point sits on the stress boundaries
        assert!(p.max_violation(&x) < 0.5, "{:?}", p.constraint_violations(&x));
    }

    #[test]
    fn quadratic_sigmoid_shapes() {
        let p = generate_quadratic_sigmoid(1, 1, 3);
        assert_eq!(p.nonlinear.len(), 1);
        assert!(p.nonlinear[0].name.starts_with("ratio"));
        let p = generate_quadratic_sigmoid(10, 2, 3);
        assert_eq!(p.nonlinear[0].name, "sigmoid_1");
        assert_eq!(p.nonlinear[1].name, "ratio_2");
        let again = generate_quadratic_sigmoid(10, 2, 3);
        let x: Vec<f64> = (0..10).map(|i| 0.1 * i as f64 - 0.5).collect();
        for (a, b) in p.nonlinear.iter().zip(&again.nonlinear) {
            assert_eq!(a.eval(&x).unwrap(), b.eval(&x).unwrap());
        }
        assert_eq!(p.objective.eval(&x).unwrap(), again.objective.eval(&x).unwrap());
    }

    #[test]
    fn sigmoid_boundary_at_zero_quadratic() {
        // Q = f when x = 0, so pick f through a one-variable instance
        let p = generate_quadratic_sigmoid(1, 2, 11);
        let g = &p.nonlinear[0];
        // value at a root of Q is exactly zero
        let q = |x: f64| g.eval(&[x]).unwrap();
        let (mut lo, mut hi) = (-2.0, 2.0);
        if q(lo).signum() != q(hi).signum() {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if q(mid).signum() == q(lo).signum() { lo = mid } else { hi = mid }
            }
            assert!(q(0.5 * (lo + hi)).abs() < 1e-12);
        }
    }
}
