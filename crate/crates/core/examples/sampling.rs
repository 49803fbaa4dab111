//! The sampling stages: Latin hypercube, hit-and-run in a polytope, and the
//! full per-constraint pipeline with its stage counts.
//!
//!     cargo run --example sampling

use goml::driver::bench;
use goml::model::standardize;
use goml::sampler::{find_interior_point, hit_and_run, lh_sample, sample_constraint, HalfSpace, Polyhedron, SamplerConfig};

fn main() -> goml::Result<()> {
    // one point per stratum in every dimension
    let pts = lh_sample(&[0.0, 0.0], &[1.0, 1.0], 5, 3);
    println!("Latin hypercube, 5 points:");
    for p in &pts {
        println!("  ({:.3}, {:.3})", p[0], p[1]);
    }

    // uniform points in the triangle x + y <= 1 of the unit square
    let poly = Polyhedron::new(vec![HalfSpace::new(vec![1.0, 1.0], 1.0, false)], vec![0.0, 0.0], vec![1.0, 1.0]);
    let (x0, radius) = find_interior_point(&poly)?;
    let chain = hit_and_run(&poly, &x0, 5000, 100, 1)?;
    let mean = |j: usize| chain.iter().map(|p| p[j]).sum::<f64>() / chain.len() as f64;
    println!("hit-and-run: start {x0:.3?} (radius {radius:.3}), mean ({:.3}, {:.3}), expected (0.333, 0.333)", mean(0), mean(1));

    let sp = standardize(bench::illustrative())?;
    let cfg = SamplerConfig::default();
    for con in &sp.nonlinear {
        let ds = sample_constraint(&sp, con, &cfg)?;
        let stages: Vec<String> = ds.stages.iter().map(|s| format!("{} {}", s.stage, s.total)).collect();
        println!("{}: {} samples, {} feasible; {}", ds.name, ds.len(), ds.feasible_count(), stages.join(", "));
    }
    Ok(())
}
