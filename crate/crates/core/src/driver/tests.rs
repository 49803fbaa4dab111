use super::*;
use crate::model::{LinearConstraint, Objective, Sense, VarSpec};

#[test]
fn illustrative_reaches_global_optimum() {
    let cfg = RunConfig { seed: 7, ..RunConfig::default() };
    let r = solve_global(bench::illustrative(), &cfg).unwrap();
    assert_eq!(r.status, RunStatus::Feasible);
    assert!((r.objective + 1.1497).abs() < 1e-3, "{}", r.objective);
    assert_eq!(r.training_runs, 2);
}

#[test]
fn linear_problem_is_a_single_solve() {
    let p = Problem {
        name: "lp".into(),
        vars: vec![VarSpec::continuous("x", 0, 0.0, 4.0), VarSpec::integer("y", 1, 0.0, 4.0)],
        objective: Objective::Linear { coeffs: vec![-1.0, -1.0], constant: 0.0 },
        linear: vec![LinearConstraint::new(vec![1.0, 2.0], Sense::Le, 5.5)],
        nonlinear: vec![],
    };
    let r = solve_global(p, &RunConfig::default()).unwrap();
    assert_eq!(r.cells.len(), 1);
    assert_eq!(r.training_runs, 0);
    assert!((r.objective + 4.5).abs() < 1e-9, "{:?}", r.x);
}

#[test]
fn toggles_shrink_the_grid() {
    let cfg = RunConfig { robustness: false, relaxation: false, ..RunConfig::default() };
    assert_eq!(cfg.cells(), vec![(0.0, None)]);
    assert_eq!(RunConfig::default().cells().len(), 12);
    assert!(RunConfig { rho_grid: vec![], ..RunConfig::default() }.validate().is_err());
}

#[test]
fn report_serializes_and_cells_are_sorted() {
    let cfg = RunConfig { seed: 1, ..RunConfig::default() };
    let r = solve_global(bench::illustrative(), &cfg).unwrap();
    assert_eq!(r.cells.len(), 12);
    for w in r.cells.windows(2) {
        assert!(w[0].rho <= w[1].rho);
    }
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["status"], "feasible");
    assert_eq!(r.status.exit_code(), 0);
}
