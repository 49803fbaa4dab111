//! Projected gradient refinement on the true functions, from perturbed
//! starting points of a quadratic-sigmoid instance.
//!
//!     cargo run --example refine

use goml::driver::bench;
use goml::refiner::{merit_state, pgd_improve, PgdConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> goml::Result<()> {
    let p = bench::generate_quadratic_sigmoid(4, 2, 3);
    let cfg = PgdConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..5 {
        let x0: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let start = merit_state(&p, &x0, cfg.penalty)?;
        let end = pgd_improve(&p, &x0, &cfg)?;
        println!(
            "merit {:>10.4} -> {:>10.4}   objective {:>8.4} -> {:>8.4}   max violation {:.2e} -> {:.2e}",
            start.merit,
            end.merit,
            start.objective,
            end.objective,
            start.violations.iter().copied().fold(0.0, f64::max),
            end.violations.iter().copied().fold(0.0, f64::max),
        );
    }
    Ok(())
}
