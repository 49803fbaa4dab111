mod common;

use goml::encoder::big_m_value;
use goml::model::central_difference;
use goml::sampler::{hit_and_run, lh_sample, HalfSpace, Polyhedron};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn latin_hypercube_hits_every_stratum(n in 1usize..40, dim in 1usize..6, seed in any::<u64>()) {
        let lower = vec![-3.0; dim];
        let upper = vec![5.0; dim];
        let pts = lh_sample(&lower, &upper, n, seed);
        prop_assert_eq!(pts.len(), n);
        for j in 0..dim {
            let mut strata: Vec<usize> = pts
                .iter()
                .map(|p| (((p[j] + 3.0) / 8.0 * n as f64).floor() as usize).min(n - 1))
                .collect();
            strata.sort_unstable();
            prop_assert_eq!(strata, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn hit_and_run_stays_inside(a in prop::collection::vec(-1.0f64..1.0, 3), seed in any::<u64>()) {
        // the origin is strictly inside a.x <= 0.5 within the unit box around it
        let rows = vec![HalfSpace::new(a.clone(), 0.5, false)];
        let poly = Polyhedron::new(rows, vec![-1.0; 3], vec![1.0; 3]);
        let pts = hit_and_run(&poly, &[0.0; 3], 200, 10, seed).unwrap();
        for p in &pts {
            let lhs: f64 = a.iter().zip(p).map(|(x, y)| x * y).sum();
            prop_assert!(lhs <= 0.5 + 1e-9);
            prop_assert!(p.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn big_m_bounds_the_row(
        a in prop::collection::vec(-5.0f64..5.0, 1..5),
        b in -5.0f64..5.0,
        t in prop::collection::vec(0.0f64..=1.0, 5),
    ) {
        let n = a.len();
        let lower = vec![-2.0; n];
        let upper = vec![3.0; n];
        let m = big_m_value(&a, b, &lower, &upper);
        let x: Vec<f64> = (0..n).map(|j| lower[j] + t[j] * (upper[j] - lower[j])).collect();
        let r: f64 = a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - b;
        prop_assert!(r.abs() <= m);
    }

    #[test]
    fn reverse_mode_matches_finite_differences(seed in any::<u64>(), x in prop::collection::vec(-2.0f64..2.0, 3)) {
        let mut rng = common::rng(seed);
        let e = common::random_expr(&mut rng, 3, 3);
        if let (Ok(ad), Ok(fd)) = (e.grad(&x, 3), central_difference(|p| e.eval(p), &x)) {
            let scale = fd.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (p, q) in ad.iter().zip(&fd) {
                prop_assert!((p - q).abs() <= 1e-5 * scale, "{} vs {}", p, q);
            }
        }
    }
}
