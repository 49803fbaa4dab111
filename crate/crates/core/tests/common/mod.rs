//! Helpers shared by the integration tests.

#![allow(dead_code)]

use goml::expr::{BinaryOp, Expr, UnaryOp};
use goml::milp::{solve_lp, LpStatus, MilpModel, VarKind};
use goml::model::Sense;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random model with `nb` binaries and a few bounded continuous variables.
pub fn random_model(rng: &mut ChaCha8Rng, nb: usize) -> MilpModel {
    let mut m = MilpModel::new();
    let nc = rng.random_range(1..4);
    for i in 0..nb {
        m.add_binary(format!("b{i}"));
    }
    for i in 0..nc {
        m.add_continuous(format!("c{i}"), rng.random_range(-2.0..0.0), rng.random_range(0.0..2.0));
    }
    let n = nb + nc;
    for r in 0..rng.random_range(2..8) {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.6) {
                coeffs.push((j, rng.random_range(-3.0..3.0)));
            }
        }
        let sense = if rng.random_bool(0.2) { Sense::Ge } else { Sense::Le };
        let rhs = rng.random_range(-1.0..3.0);
        m.add_row(format!("r{r}"), coeffs, sense, rhs);
    }
    m.objective = (0..n).map(|j| (j, rng.random_range(-2.0..2.0))).collect();
    m.minimize = rng.random_bool(0.5);
    m
}

/// Best objective over all binary assignments, or `None` when infeasible.
pub fn enumerate(m: &MilpModel) -> Option<f64> {
    let bins: Vec<usize> = (0..m.num_vars()).filter(|&j| m.vars[j].kind == VarKind::Binary).collect();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << bins.len()) {
        let mut fixed = m.clone();
        for (k, &j) in bins.iter().enumerate() {
            let v = ((mask >> k) & 1) as f64;
            fixed.vars[j].lower = v;
            fixed.vars[j].upper = v;
        }
        let sol = solve_lp(&fixed.relaxation().unwrap()).unwrap();
        if sol.status == LpStatus::Optimal {
            let v = fixed.objective_value(&sol.x);
            best = Some(match best {
                None => v,
                Some(b) if m.minimize => b.min(v),
                Some(b) => b.max(v),
            });
        }
    }
    best
}

/// Random smooth expression over `n` variables. Arguments of `ln`, `sqrt`
/// and denominators are kept away from zero, and `exp` only sees bounded
/// arguments, so the result is finite on `[-2, 2]^n`.
pub fn random_expr(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.2) {
        return if rng.random_bool(0.7) {
            Expr::Var(rng.random_range(0..n))
        } else {
            Expr::Const(rng.random_range(-2.0..2.0))
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_expr(rng, n, depth - 1);
    // 1 + e^2, strictly positive
    let positive = |e: Expr| {
        Expr::binary(BinaryOp::Add, Expr::Const(1.0), Expr::binary(BinaryOp::Pow, e, Expr::Const(2.0)))
    };
    match rng.random_range(0..10) {
        0 => Expr::binary(BinaryOp::Add, sub(rng), sub(rng)),
        1 => Expr::binary(BinaryOp::Sub, sub(rng), sub(rng)),
        2 => Expr::binary(BinaryOp::Mul, sub(rng), sub(rng)),
        3 => Expr::binary(BinaryOp::Div, sub(rng), positive(sub(rng))),
        4 => Expr::unary(UnaryOp::Exp, Expr::unary(UnaryOp::Sin, sub(rng))),
        5 => Expr::unary(UnaryOp::Ln, positive(sub(rng))),
        6 => Expr::unary(UnaryOp::Sqrt, positive(sub(rng))),
        7 => Expr::unary(UnaryOp::Sin, sub(rng)),
        8 => Expr::unary(UnaryOp::Cos, sub(rng)),
        _ => Expr::binary(BinaryOp::Pow, sub(rng), Expr::Const(rng.random_range(2..4) as f64)),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
