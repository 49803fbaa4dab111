mod common;

use common::{enumerate, random_model};
use goml::milp::{solve_milp, MilpStatus, SolveOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn branch_and_bound_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut feasible = 0;
    for _ in 0..60 {
        let nb = rng.random_range(1..=12);
        let m = random_model(&mut rng, nb);
        let s = solve_milp(&m, &SolveOptions::default()).unwrap();
        match enumerate(&m) {
            Some(v) => {
                feasible += 1;
                assert_eq!(s.status, MilpStatus::Optimal);
                assert!((s.objective - v).abs() < 1e-6, "bnb {} vs enum {v}", s.objective);
                assert!(m.max_violation(&s.x) < 1e-6);
                assert!(m.max_integrality_violation(&s.x) < 1e-6);
            }
            None => assert_eq!(s.status, MilpStatus::Infeasible),
        }
    }
    assert!(feasible > 20, "only {feasible} feasible models");
}
