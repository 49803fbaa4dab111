//! The seven-variable speed reducer design problem with one integer
//! variable and a nonlinear objective.
//!
//!     cargo run --release --example speed_reducer

use goml::driver::{bench, solve_global, RunConfig};

fn main() -> goml::Result<()> {
    let r = solve_global(bench::speed_reducer(), &RunConfig::default())?;
    println!("{:?}: objective {:.4} (best known {})", r.status, r.objective, bench::SPEED_REDUCER_OPTIMUM);
    println!("x = {:.4?}", r.x);
    println!("max violation {:.2e}, winning cell rho {} lambda {:?}", r.max_violation, r.best_rho, r.best_lambda);
    println!("{:.1}s total, {:.1}s in the grid", r.times.total(), r.times.grid());
    Ok(())
}
