use super::*;
use crate::expr::{load_problem, parse_problem_file, BlackBoxRegistry};
use crate::model::{LinearConstraint, Objective, VarSpec};

fn illustrative() -> Problem {
    let doc = parse_problem_file(include_str!("../../data/illustrative.prob")).unwrap();
    load_problem(&doc, &BlackBoxRegistry::new()).unwrap()
}

#[test]
fn projection_examples() {
    let free = [false, false];
    let inf = [f64::INFINITY; 2];
    let ninf = [f64::NEG_INFINITY; 2];
    let row = HalfSpace::new(vec![1.0, 0.0], 1.0, false);
    assert_eq!(project(&[0.5, 0.0], &[row.clone()], &ninf, &inf, &free).unwrap(), vec![0.5, 0.0]);
    let y = project(&[2.0, 0.0], &[row], &ninf, &inf, &free).unwrap();
    assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
    let y = project(
        &[2.0, 2.0],
        &[HalfSpace::new(vec![1.0, 1.0], 2.0, false)],
        &[0.0; 2],
        &[3.0; 2],
        &free,
    )
    .unwrap();
    assert!((y[0] - 1.0).abs() < 1e-9 && (y[1] - 1.0).abs() < 1e-9);
}

#[test]
fn fixed_coordinates_do_not_move() {
    let y = project(
        &[2.0, 2.0],
        &[HalfSpace::new(vec![1.0, 1.0], 2.0, false)],
        &[0.0; 2],
        &[3.0; 2],
        &[true, false],
    )
    .unwrap();
    assert_eq!(y[0], 2.0);
    assert!(y[1].abs() < 1e-9);
}

#[test]
fn illustrative_reaches_global_optimum() {
    let p = illustrative();
    let out = pgd_improve(&p, &[1.108, 0.937], &PgdConfig::default()).unwrap();
    assert!((out.objective + 1.1497).abs() < 1e-3, "{out:?}");
    assert!((out.x[0] - 1.1497).abs() < 1e-3 && (out.x[1] - 0.875).abs() < 1e-3, "{out:?}");
    assert!(p.max_violation(&out.x) < 1e-6);
}

fn quadratic_bowl() -> Problem {
    let f = crate::model::FnEvaluator(|x: &[f64]| Ok((x[0] - 0.3).powi(2) + (x[1] + 0.2).powi(2)));
    Problem {
        name: "bowl".into(),
        vars: vec![VarSpec::continuous("a", 0, -1.0, 1.0), VarSpec::continuous("b", 1, -1.0, 1.0)],
        objective: Objective::Nonlinear {
            evaluator: std::sync::Arc::new(f),
            support: vec![0, 1],
        },
        linear: Vec::new(),
        nonlinear: Vec::new(),
    }
}

#[test]
fn local_optimum_is_kept() {
    let out = pgd_improve(&quadratic_bowl(), &[0.3, -0.2], &PgdConfig::default()).unwrap();
    assert_eq!(out.x, vec![0.3, -0.2]);
}

#[test]
fn linear_objective_descends_to_a_face() {
    let p = Problem {
        name: "lin".into(),
        vars: vec![VarSpec::continuous("a", 0, 0.0, 4.0), VarSpec::continuous("b", 1, 0.0, 4.0)],
        objective: Objective::Linear { coeffs: vec![-1.0, -0.5], constant: 0.0 },
        linear: vec![LinearConstraint::new(vec![1.0, 1.0], Sense::Le, 3.0)],
        nonlinear: Vec::new(),
    };
    let cfg = PgdConfig { momentum: 0.0, ..Default::default() };
    let out = pgd_improve(&p, &[0.5, 0.5], &cfg).unwrap();
    assert!((out.x[0] + out.x[1] - 3.0).abs() < 1e-8, "{out:?}");
    assert!(out.merit < -1.5 + 1e-9);
}

#[test]
fn never_worse_than_start() {
    let p = illustrative();
    for start in [[0.6, 1.5], [1.4, 0.4], [0.9, 0.9], [1.2, 0.8]] {
        let s0 = merit_state(&p, &start, 1e3).unwrap();
        let out = pgd_improve(&p, &start, &PgdConfig::default()).unwrap();
        assert!(out.merit <= s0.merit);
    }
}
