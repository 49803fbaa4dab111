//! The full pipeline on the two-variable illustrative problem, with the
//! per-cell breakdown of the grid search.
//!
//!     cargo run --example illustrative [seed]

use goml::driver::{bench, solve_global, RunConfig};

fn main() -> goml::Result<()> {
    let seed = std::env::args().nth(1).map_or(Ok(0), |s| s.parse()).expect("seed must be an integer");
    let r = solve_global(bench::illustrative(), &RunConfig { seed, ..RunConfig::default() })?;
    println!("{:?}: objective {:.6} at {:.6?} (known optimum {})", r.status, r.objective, r.x, bench::ILLUSTRATIVE_OPTIMUM);
    for s in &r.surrogates {
        println!("  {} -> {:?}, holdout {:.4}, {} samples", s.constraint, s.family, s.validation_score, s.samples);
    }
    println!("  rho     lambda  milp status      milp objective  refined  feasible");
    for c in &r.cells {
        println!(
            "  {:<7} {:<7} {:<16} {:<15.5} {:<8.5} {}",
            c.rho,
            c.lambda.map_or("none".to_string(), |l| format!("{l:e}")),
            c.milp_status.map_or("-".to_string(), |s| format!("{s:?}")),
            c.milp_objective,
            c.refined.as_ref().map_or(f64::NAN, |s| s.objective),
            c.feasible
        );
    }
    let t = &r.times;
    println!("training ran {} times; grid {:.3}s of {:.3}s total", r.training_runs, t.grid(), t.total());
    Ok(())
}
