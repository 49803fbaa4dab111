//! The built-in branch-and-bound on a small knapsack, plus an LP file round
//! trip.
//!
//!     cargo run --example milp_solver

use goml::milp::lp_file::{parse_lp, write_lp};
use goml::milp::{solve_milp, MilpModel, SolveOptions};
use goml::model::Sense;

fn main() -> goml::Result<()> {
    let values = [10.0, 13.0, 7.0, 8.0, 12.0, 4.0];
    let weights = [5.0, 7.0, 3.0, 4.0, 6.0, 2.0];
    let mut m = MilpModel::new();
    let items: Vec<usize> = (0..values.len()).map(|i| m.add_binary(format!("take{i}"))).collect();
    m.add_row("capacity", items.iter().zip(&weights).map(|(&j, &w)| (j, w)).collect(), Sense::Le, 15.0);
    m.objective = items.iter().zip(&values).map(|(&j, &v)| (j, v)).collect();
    m.minimize = false;

    let sol = solve_milp(&m, &SolveOptions::default())?;
    let chosen: Vec<usize> = items.iter().filter(|&&j| sol.x[j] > 0.5).copied().collect();
    println!("{:?}: value {} with items {chosen:?}, {} nodes", sol.status, sol.objective, sol.nodes);

    let text = write_lp(&m);
    println!("--- LP file ---\n{text}---------------");
    let back = parse_lp(&text)?;
    let again = solve_milp(&back, &SolveOptions::default())?;
    println!("re-read model solves to {}", again.objective);
    Ok(())
}
