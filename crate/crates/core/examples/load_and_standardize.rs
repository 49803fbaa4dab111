//! Load a problem file, infer missing bounds and label sample points.
//!
//!     cargo run --example load_and_standardize [path/to/problem.prob]

use goml::expr::problem_file::load_problem_path;
use goml::model::{label, standardize};

fn main() -> goml::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/illustrative.prob").to_string());
    let (problem, doc) = load_problem_path(&path)?;
    println!("{}: {} variables, {} linear rows, {} nonlinear constraints", doc.name, problem.dim(), problem.linear.len(), problem.nonlinear.len());

    let sp = standardize(problem)?;
    for (v, (lo, hi)) in sp.vars.iter().zip(&sp.provenance) {
        println!("  {:<4} [{}, {}]  bounds from {lo:?} / {hi:?}", v.name, v.lower, v.upper);
    }

    for x in [[1.1497, 0.875], [0.6, 1.5], [1.4, 0.4]] {
        let labels: Vec<u8> = sp
            .nonlinear
            .iter()
            .map(|c| label(c, &x, 0.0))
            .collect::<goml::Result<_>>()?;
        println!("  x = {x:?}: labels {labels:?} (1 = feasible)");
    }
    Ok(())
}
