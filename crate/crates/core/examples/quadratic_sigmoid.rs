//! Random quadratic-sigmoid instances of growing size.
//!
//!     cargo run --release --example quadratic_sigmoid

use goml::driver::{bench, solve_global, RunConfig};

fn main() -> goml::Result<()> {
    for (n, m) in [(2, 1), (5, 2), (10, 2)] {
        let p = bench::generate_quadratic_sigmoid(n, m, 0);
        let r = solve_global(p, &RunConfig::default())?;
        let fams: Vec<String> = r.surrogates.iter().map(|s| format!("{:?}", s.family)).collect();
        println!(
            "n={n:<3} m={m}: {:?} objective {:.4}, violation {:.1e}, {:.1}s, surrogates {}",
            r.status,
            r.objective,
            r.max_violation,
            r.times.total(),
            fams.join(" ")
        );
    }
    Ok(())
}
