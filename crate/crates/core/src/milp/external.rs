//! Dispatch between the built-in solver and an external command.
//!
//! When `GOML_EXTERNAL_SOLVER_CMD` is set, the model is written as an LP file
//! and the command is run as `sh -c "<cmd> <lp-file> <solution-file>"`, with
//! `GOML_TIME_LIMIT` set to the time budget in seconds. The solution file is
//! plain text, one entry per line:
//!
//! ```text
//! status optimal        # optimal | feasible | infeasible | unbounded | time_limit
//! objective 1.25
//! x0 0.5
//! z0 1
//! ```
//!
//! Variables use the LP file names; unlisted variables read as zero.
//! `feasible` maps to a time-limit status with an incumbent.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::milp::bnb::{gap, solve_milp, MilpSolution, MilpStatus, SolveOptions};
use crate::milp::lp_file::{lp_names, write_lp};
use crate::milp::model::MilpModel;

pub const SOLVER_ENV: &str = "GOML_EXTERNAL_SOLVER_CMD";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solver {
    Builtin,
    External(String),
}

impl Solver {
    /// The external command from the environment, or the built-in solver.
    pub fn from_env() -> Solver {
        match std::env::var(SOLVER_ENV) {
            Ok(cmd) if !cmd.trim().is_empty() => Solver::External(cmd),
            _ => Solver::Builtin,
        }
    }
}

pub fn solve(model: &MilpModel, opts: &SolveOptions, solver: &Solver) -> Result<MilpSolution> {
    match solver {
        Solver::Builtin => solve_milp(model, opts),
        Solver::External(cmd) => solve_external(model, opts, cmd),
    }
}

static RUN: AtomicUsize = AtomicUsize::new(0);

fn scratch_dir() -> Result<PathBuf> {
    let dir = std::env::temp_dir().join(format!(
        "goml-{}-{}",
        std::process::id(),
        RUN.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub fn solve_external(model: &MilpModel, opts: &SolveOptions, cmd: &str) -> Result<MilpSolution> {
    let dir = scratch_dir()?;
    let lp_path = dir.join("model.lp");
    let sol_path = dir.join("model.sol");
    std::fs::write(&lp_path, write_lp(model))?;
    let status = Command::new("sh")
        .arg("-c")
        .arg(format!("{cmd} \"{}\" \"{}\"", lp_path.display(), sol_path.display()))
        .env("GOML_TIME_LIMIT", format!("{}", opts.time_limit.as_secs_f64()))
        .status()?;
    let text = std::fs::read_to_string(&sol_path);
    let _ = std::fs::remove_dir_all(&dir);
    if !status.success() {
        return Err(Error::NumericalFailure(format!("external solver exited with {status}")));
    }
    parse_solution(model, &text?)
}

pub fn parse_solution(model: &MilpModel, text: &str) -> Result<MilpSolution> {
    let names = lp_names(model);
    let mut x = vec![0.0; model.num_vars()];
    let mut status = None;
    let mut objective = None;
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(key), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Schema(format!("bad solution line `{line}`")));
        };
        match key {
            "status" => {
                status = Some(match value {
                    "optimal" => MilpStatus::Optimal,
                    "feasible" | "time_limit" => MilpStatus::TimeLimit,
                    "infeasible" => MilpStatus::Infeasible,
                    "unbounded" => MilpStatus::Unbounded,
                    other => return Err(Error::Schema(format!("unknown status `{other}`"))),
                });
            }
            _ => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| Error::Schema(format!("bad value in `{line}`")))?;
                if key == "objective" {
                    objective = Some(v);
                } else {
                    let j = names
                        .iter()
                        .position(|n| n == key)
                        .ok_or_else(|| Error::Schema(format!("unknown variable `{key}`")))?;
                    x[j] = v;
                }
            }
        }
    }
    let status = status.ok_or_else(|| Error::Schema("solution file has no status".into()))?;
    let has_point = matches!(status, MilpStatus::Optimal) || (status == MilpStatus::TimeLimit && objective.is_some());
    if !has_point {
        x.clear();
    }
    let objective = if has_point {
        objective.unwrap_or_else(|| model.objective_value(&x))
    } else {
        f64::NAN
    };
    Ok(MilpSolution {
        status,
        x,
        objective,
        bound: if status == MilpStatus::Optimal { objective } else { f64::NAN },
        gap: if status == MilpStatus::Optimal { gap(objective, objective) } else { f64::INFINITY },
        nodes: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    fn knapsack() -> MilpModel {
        let mut m = MilpModel::new();
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        m.add_row("cap", vec![(a, 1.0), (b, 1.0)], Sense::Le, 1.0);
        m.objective = vec![(a, 1.0), (b, 2.0)];
        m.minimize = false;
        m
    }

    #[test]
    fn parses_solution_file() {
        let s = parse_solution(&knapsack(), "status optimal\nobjective 2\nz1 1\n").unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert_eq!(s.x, vec![0.0, 1.0]);
        assert!(parse_solution(&knapsack(), "objective 2\n").is_err());
        assert!(parse_solution(&knapsack(), "status optimal\nq9 1\n").is_err());
    }

    #[test]
    fn runs_a_shell_command() {
        // a stand-in "solver" that checks the LP file exists and writes a fixed answer
        let cmd = "f() { test -s \"$1\" && printf 'status optimal\\nobjective 2\\nz0 0\\nz1 1\\n' > \"$2\"; }; f";
        let s = solve(&knapsack(), &SolveOptions::default(), &Solver::External(cmd.into())).unwrap();
        let builtin = solve(&knapsack(), &SolveOptions::default(), &Solver::Builtin).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!((s.objective - builtin.objective).abs() < 1e-9);
    }
}
