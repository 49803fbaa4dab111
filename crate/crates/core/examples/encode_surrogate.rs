//! Embed a trained oblique tree in a MILP, check that fixing the inputs
//! reproduces its prediction, then optimize over its feasible leaves.
//!
//!     cargo run --example encode_surrogate

use goml::encoder::{encode_surrogate, EncodeOptions};
use goml::learners::{train_tree, Surrogate, SurrogateModel, Task, TreeConfig};
use goml::milp::{solve_milp, MilpModel, SolveOptions};
use goml::model::Sense;
use goml::sampler::lh_sample;

fn main() -> goml::Result<()> {
    // feasible inside the disc of radius 0.8
    let pts = lh_sample(&[-1.0, -1.0], &[1.0, 1.0], 400, 5);
    let labels: Vec<f64> = pts.iter().map(|p| (p[0] * p[0] + p[1] * p[1] <= 0.64) as u8 as f64).collect();
    let tree = train_tree(&pts, &labels, Task::Classification, &TreeConfig::default())?;
    let s = Surrogate {
        model: SurrogateModel::Tree(tree),
        task: Task::Classification,
        threshold: 0.5,
        validation_score: f64::NAN,
        constraint_id: "disc".into(),
        inputs: vec![0, 1],
    };

    let mut base = MilpModel::new();
    base.add_continuous("x", -1.0, 1.0);
    base.add_continuous("y", -1.0, 1.0);
    let mut m = base.clone();
    let enc = encode_surrogate(&s, &mut m, "disc", &EncodeOptions::default())?;
    let out = enc.output.expect("trees have an output variable");
    println!("tree encoding: {} variables, {} binaries, {} rows", m.num_vars(), m.num_binaries(), m.rows.len());

    for x in [[0.0, 0.0], [0.7, 0.7], [-0.5, 0.2]] {
        let mut probe = m.clone();
        for (j, v) in x.iter().enumerate() {
            probe.add_row(format!("fix{j}"), vec![(j, 1.0)], Sense::Eq, *v);
        }
        let sol = solve_milp(&probe, &SolveOptions::default())?;
        println!("  x = {x:?}: predict {} milp {}", s.predict(&x), sol.x[out]);
    }

    // maximize x + y over the leaves the tree calls feasible
    m.add_row("feasible", vec![(out, 1.0)], Sense::Ge, s.threshold);
    m.objective = vec![(0, 1.0), (1, 1.0)];
    m.minimize = false;
    let sol = solve_milp(&m, &SolveOptions::default())?;
    println!("max x + y over the tree: {:.4} at ({:.4}, {:.4})", sol.objective, sol.x[0], sol.x[1]);
    // the leaf polyhedra only approximate the disc; refinement repairs this in the full pipeline
    println!(
        "x^2 + y^2 there is {:.4} (limit 0.64); over the true disc the optimum is {:.4}",
        sol.x[0].powi(2) + sol.x[1].powi(2),
        0.8 * 2f64.sqrt()
    );
    Ok(())
}
