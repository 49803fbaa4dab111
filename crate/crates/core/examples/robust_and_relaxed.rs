//! How the robustness radius and the relaxation penalty change the
//! approximation MILP of the illustrative problem.
//!
//!     cargo run --example robust_and_relaxed

use goml::driver::{bench, encode_options, sample_all, train_all, RunConfig};
use goml::encoder::assemble;
use goml::milp::{solve_milp, SolveOptions};
use goml::model::standardize;

fn main() -> goml::Result<()> {
    let cfg = RunConfig::default();
    let sp = standardize(bench::illustrative())?;
    let (datasets, obj) = sample_all(&sp, &cfg)?;
    let approx = train_all(&datasets, obj.as_ref(), &cfg)?;

    // the robust feasible sets shrink as rho grows, so the optimum can only get worse
    for rho in [0.0, 0.01, 0.1, 1.0] {
        let asm = assemble(&sp, &approx.constraints, None, &encode_options(rho, None, &cfg))?;
        let sol = solve_milp(&asm.milp, &SolveOptions::default())?;
        println!("rho {rho:<5} unrelaxed: {:?} objective {:.4}", sol.status, sol.objective);
        if !sol.has_incumbent() {
            for lambda in [1e2, 1e4] {
                let asm = assemble(&sp, &approx.constraints, None, &encode_options(rho, Some(lambda), &cfg))?;
                let sol = solve_milp(&asm.milp, &SolveOptions::default())?;
                println!(
                    "          lambda {lambda:e}: {:?} objective {:.4}, total slack {:.4}",
                    sol.status,
                    sol.objective,
                    asm.total_relaxation(&sol.x)
                );
            }
        }
    }
    Ok(())
}
