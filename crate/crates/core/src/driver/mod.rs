//! End-to-end pipeline: sampling, model selection, the (rho, lambda) grid of
//! MILP approximations and gradient refinement.

pub mod bench;

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::encoder::{assemble, Assembled, EncodeOptions, Norm, RobustConfig};
use crate::error::{Error, Result};
use crate::learners::{
    select_surrogate, Family, ObliqueTree, Surrogate, SurrogateModel, Task, SelectConfig,
};
use crate::milp::{solve, MilpSolution, MilpStatus, SolveOptions, Solver};
use crate::model::{standardize, Problem, StandardProblem};
use crate::refiner::{merit_state, pgd_improve, MeritState, PgdConfig};
use crate::sampler::{
    derive_seed, sample_constraint, sample_objective, Dataset, SamplerConfig, StageCount,
};

/// Maximum violation under which a refined point counts as feasible.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub sampler: SamplerConfig,
    pub select: SelectConfig,
    pub rho_grid: Vec<f64>,
    /// `None` is the unrelaxed model.
    pub lambda_grid: Vec<Option<f64>>,
    /// Uncertainty-set norm; robust rows use its dual.
    pub norm: Norm,
    pub time_limit: Duration,
    pub seed: u64,
    pub oct_sampling: bool,
    pub robustness: bool,
    pub relaxation: bool,
    pub momentum: bool,
    pub pgd: PgdConfig,
    pub solver: Solver,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sampler: SamplerConfig::default(),
            select: SelectConfig::default(),
            rho_grid: vec![0.0, 0.01, 0.1, 1.0],
            lambda_grid: vec![None, Some(1e2), Some(1e4)],
            norm: Norm::L1,
            time_limit: Duration::from_secs(1500),
            seed: 0,
            oct_sampling: true,
            robustness: true,
            relaxation: true,
            momentum: true,
            pgd: PgdConfig::default(),
            solver: Solver::from_env(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rho_grid.is_empty() || self.lambda_grid.is_empty() {
            return Err(Error::Schema("grids must be nonempty".into()));
        }
        if self.rho_grid.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Schema("rho values must be finite and nonnegative".into()));
        }
        if self.lambda_grid.iter().flatten().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::Schema("lambda values must be finite and positive".into()));
        }
        if self.time_limit.is_zero() {
            return Err(Error::Schema("time limit must be positive".into()));
        }
        self.sampler.validate()?;
        self.pgd.validate()
    }

    /// Grid after applying the enhancement toggles.
    pub fn cells(&self) -> Vec<(f64, Option<f64>)> {
        let rhos = if self.robustness { self.rho_grid.clone() } else { vec![0.0] };
        let lambdas = if self.relaxation { self.lambda_grid.clone() } else { vec![None] };
        let mut out = Vec::new();
        for &r in &rhos {
            for &l in &lambdas {
                if !out.contains(&(r, l)) {
                    out.push((r, l));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Feasible,
    Infeasible,
    TimeLimit,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Feasible => 0,
            RunStatus::Infeasible => 2,
            RunStatus::TimeLimit => 3,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PhaseTimes {
    pub sampling: f64,
    pub training: f64,
    pub encoding: f64,
    pub solving: f64,
    pub refining: f64,
}

impl PhaseTimes {
    pub fn grid(&self) -> f64 {
        self.encoding + self.solving + self.refining
    }

    pub fn total(&self) -> f64 {
        self.sampling + self.training + self.grid()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SurrogateSummary {
    pub constraint: String,
    /// `None` when every sample was feasible and the constraint was dropped.
    pub family: Option<Family>,
    pub validation_score: f64,
    pub samples: usize,
    pub feasible_samples: usize,
    pub stages: Vec<StageCount>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellReport {
    pub rho: f64,
    pub lambda: Option<f64>,
    pub milp_status: Option<MilpStatus>,
    pub relaxed: bool,
    pub relaxation: f64,
    pub nodes: usize,
    /// MILP incumbent restricted to the problem variables.
    pub milp_x: Vec<f64>,
    pub milp_objective: f64,
    pub refined: Option<MeritState>,
    pub feasible: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub problem: String,
    pub status: RunStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub merit: f64,
    pub max_violation: f64,
    pub violations: Vec<(String, f64)>,
    /// Winning cell; NaN when no cell finished before the time limit.
    pub best_rho: f64,
    pub best_lambda: Option<f64>,
    pub times: PhaseTimes,
    pub surrogates: Vec<SurrogateSummary>,
    pub cells: Vec<CellReport>,
    /// Model selections performed; one per approximated function.
    pub training_runs: usize,
    pub seed: u64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Trained approximations of a problem, reusable across grid cells.
#[derive(Clone, Debug)]
pub struct Approximation {
    pub constraints: Vec<Option<Surrogate>>,
    pub objective: Option<Surrogate>,
    pub summaries: Vec<SurrogateSummary>,
    pub training_runs: usize,
}

/// Samples every nonlinear constraint (one thread each) and the objective.
pub fn sample_all(sp: &StandardProblem, cfg: &RunConfig) -> Result<(Vec<Dataset>, Option<Dataset>)> {
    let per_con: Vec<SamplerConfig> = (0..sp.nonlinear.len())
        .map(|k| SamplerConfig {
            seed: derive_seed(cfg.seed, 10 + k as u64),
            oct_sampling: cfg.oct_sampling,
            ..cfg.sampler.clone()
        })
        .collect();
    let datasets = std::thread::scope(|s| {
        let handles: Vec<_> = sp
            .nonlinear
            .iter()
            .zip(&per_con)
            .map(|(con, sc)| s.spawn(move || sample_constraint(sp, con, sc)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::NumericalFailure("sampler thread panicked".into()))))
            .collect::<Result<Vec<_>>>()
    })?;
    let obj_cfg = SamplerConfig {
        seed: derive_seed(cfg.seed, 9),
        ..cfg.sampler.clone()
    };
    let objective = sample_objective(sp, &obj_cfg)?;
    Ok((datasets, objective))
}

/// Selects one surrogate per dataset.
pub fn train_all(datasets: &[Dataset], objective: Option<&Dataset>, cfg: &RunConfig) -> Result<Approximation> {
    let mut runs = 0;
    let fit = |ds: &Dataset, stream: u64, runs: &mut usize| -> Result<Option<Surrogate>> {
        let sel = SelectConfig {
            seed: derive_seed(cfg.seed, stream),
            ..cfg.select.clone()
        };
        if ds.task == Task::Classification && !crate::learners::has_both_labels(&ds.targets) {
            if ds.targets.first().is_some_and(|&t| t >= 0.5) {
                return Ok(None);
            }
            // nothing feasible was seen: a constant model rejecting everything
            return Ok(Some(Surrogate {
                model: SurrogateModel::Tree(ObliqueTree::constant(ds.inputs.len(), 0.0)),
                task: Task::Classification,
                threshold: 0.5,
                validation_score: 1.0,
                constraint_id: ds.name.clone(),
                inputs: ds.inputs.clone(),
            }));
        }
        *runs += 1;
        let mut s = select_surrogate(&ds.points, &ds.targets, ds.task, &sel)?;
        s.constraint_id = ds.name.clone();
        s.inputs = ds.inputs.clone();
        Ok(Some(s))
    };
    let mut constraints = Vec::with_capacity(datasets.len());
    let mut summaries = Vec::with_capacity(datasets.len());
    for (k, ds) in datasets.iter().enumerate() {
        let s = fit(ds, 1000 + k as u64, &mut runs)?;
        summaries.push(SurrogateSummary {
            constraint: ds.name.clone(),
            family: s.as_ref().map(|s| s.family()),
            validation_score: s.as_ref().map_or(1.0, |s| s.validation_score),
            samples: ds.len(),
            feasible_samples: if ds.task == Task::Classification { ds.feasible_count() } else { 0 },
            stages: ds.stages.clone(),
        });
        constraints.push(s);
    }
    let objective = match objective {
        Some(ds) => {
            let s = fit(ds, 999, &mut runs)?;
            summaries.push(SurrogateSummary {
                constraint: "objective".into(),
                family: s.as_ref().map(|s| s.family()),
                validation_score: s.as_ref().map_or(1.0, |s| s.validation_score),
                samples: ds.len(),
                feasible_samples: 0,
                stages: ds.stages.clone(),
            });
            s
        }
        None => None,
    };
    Ok(Approximation {
        constraints,
        objective,
        summaries,
        training_runs: runs,
    })
}

/// Encoder options of grid cell `(rho, lambda)`.
pub fn encode_options(rho: f64, lambda: Option<f64>, cfg: &RunConfig) -> EncodeOptions {
    EncodeOptions {
        robust: (rho > 0.0).then(|| RobustConfig::new(rho, cfg.norm)),
        relax_lambda: lambda,
        ..EncodeOptions::default()
    }
}

/// Rounds integral coordinates and clips to the box.
fn snap(sp: &StandardProblem, x: &[f64]) -> Vec<f64> {
    sp.vars
        .iter()
        .zip(x)
        .map(|(v, &xi)| {
            let xi = if v.integral { xi.round() } else { xi };
            xi.clamp(v.lower, v.upper)
        })
        .collect()
}

struct Solved {
    asm: Assembled,
    sol: MilpSolution,
}

/// Runs the whole pipeline on `p`.
pub fn solve_global(p: Problem, cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let deadline = start + cfg.time_limit;
    let sp = standardize(p)?;
    let mut times = PhaseTimes::default();

    let t = Instant::now();
    let (datasets, obj_ds) = sample_all(&sp, cfg)?;
    times.sampling = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let approx = train_all(&datasets, obj_ds.as_ref(), cfg)?;
    times.training = t.elapsed().as_secs_f64();

    let mut report = solve_grid(&sp, &approx, cfg, deadline)?;
    report.times.sampling = times.sampling;
    report.times.training = times.training;
    Ok(report)
}

/// Grid search over fixed surrogates.
pub fn solve_grid(sp: &StandardProblem, approx: &Approximation, cfg: &RunConfig, deadline: Instant) -> Result<RunReport> {
    let mut cells = if sp.nonlinear.is_empty() {
        // nothing to robustify or relax
        vec![(0.0, None)]
    } else {
        cfg.cells()
    };
    // largest rho first; cells are re-sorted for the report
    cells.sort_by(|a, b| b.0.total_cmp(&a.0).then(cmp_lambda(a.1, b.1)));
    let pgd = PgdConfig {
        momentum: if cfg.momentum { cfg.pgd.momentum } else { 0.0 },
        ..cfg.pgd.clone()
    };
    let mut times = PhaseTimes::default();
    let mut out = Vec::with_capacity(cells.len());
    let mut unrelaxed: Vec<(f64, Solved)> = Vec::new();
    let mut relaxed_infeasible: Vec<u64> = Vec::new();
    let mut timed_out = false;
    for (ci, &(rho, lambda)) in cells.iter().enumerate() {
        let now = Instant::now();
        if now >= deadline {
            timed_out = true;
            break;
        }
        let budget = (deadline - now) / (cells.len() - ci) as u32;
        let opts = SolveOptions {
            gap_tol: 1e-4,
            ..SolveOptions::with_time_limit(budget)
        };
        let mut cell = CellReport {
            rho,
            lambda,
            milp_status: None,
            relaxed: false,
            relaxation: 0.0,
            nodes: 0,
            milp_x: Vec::new(),
            milp_objective: f64::NAN,
            refined: None,
            feasible: false,
            error: None,
        };
        let res = (|| -> Result<()> {
            // feasibility first: the unrelaxed model is shared by every lambda
            let idx = match unrelaxed.iter().position(|(r, _)| *r == rho) {
                Some(i) => i,
                None => {
                    let t = Instant::now();
                    let asm = assemble(sp, &approx.constraints, approx.objective.as_ref(), &encode_options(rho, None, cfg))?;
                    times.encoding += t.elapsed().as_secs_f64();
                    let t = Instant::now();
                    let sol = solve(&asm.milp, &opts, &cfg.solver)?;
                    times.solving += t.elapsed().as_secs_f64();
                    unrelaxed.push((rho, Solved { asm, sol }));
                    unrelaxed.len() - 1
                }
            };
            let mut relaxed_solve = None;
            if !unrelaxed[idx].1.sol.has_incumbent() {
                // lambda only prices the slack, so one infeasible relaxed model
                // settles every lambda at this rho
                if relaxed_infeasible.contains(&rho.to_bits()) {
                    cell.milp_status = Some(MilpStatus::Infeasible);
                    cell.relaxed = true;
                    return Ok(());
                }
                if let Some(l) = lambda {
                    let t = Instant::now();
                    let asm = assemble(sp, &approx.constraints, approx.objective.as_ref(), &encode_options(rho, Some(l), cfg))?;
                    times.encoding += t.elapsed().as_secs_f64();
                    let t = Instant::now();
                    let sol = solve(&asm.milp, &opts, &cfg.solver)?;
                    times.solving += t.elapsed().as_secs_f64();
                    if sol.status == MilpStatus::Infeasible {
                        relaxed_infeasible.push(rho.to_bits());
                    }
                    relaxed_solve = Some(Solved { asm, sol });
                }
            }
            let relaxed = relaxed_solve.is_some();
            let solved = relaxed_solve.as_ref().unwrap_or(&unrelaxed[idx].1);
            cell.milp_status = Some(solved.sol.status);
            cell.relaxed = relaxed;
            cell.nodes = solved.sol.nodes;
            if !solved.sol.has_incumbent() {
                return Ok(());
            }
            cell.relaxation = solved.asm.total_relaxation(&solved.sol.x);
            cell.milp_objective = solved.sol.objective;
            let x0 = snap(sp, &solved.sol.x[..solved.asm.n]);
            cell.milp_x = x0.clone();
            let t = Instant::now();
            let refined = pgd_improve(sp, &x0, &pgd)?;
            times.refining += t.elapsed().as_secs_f64();
            cell.feasible = refined.violations.iter().all(|v| *v <= FEAS_TOL);
            cell.refined = Some(refined);
            Ok(())
        })();
        if let Err(e) = res {
            log::warn!("cell rho={rho} lambda={lambda:?}: {e}");
            cell.error = Some(e.to_string());
        }
        out.push(cell);
    }

    out.sort_by(|a, b| a.rho.total_cmp(&b.rho).then(cmp_lambda(a.lambda, b.lambda)));
    // best feasible cell by merit; cells are in lexicographic order so the
    // strict comparison breaks ties toward smaller (rho, lambda)
    let pick = |feasible_only: bool| {
        let mut best: Option<usize> = None;
        for (i, c) in out.iter().enumerate() {
            let Some(r) = &c.refined else { continue };
            if feasible_only && !c.feasible {
                continue;
            }
            if best.is_none_or(|b| r.merit < out[b].refined.as_ref().unwrap().merit) {
                best = Some(i);
            }
        }
        best
    };
    let (best, status) = match (pick(true), pick(false)) {
        (Some(b), _) => (b, if timed_out { RunStatus::TimeLimit } else { RunStatus::Feasible }),
        (None, Some(b)) => (b, if timed_out { RunStatus::TimeLimit } else { RunStatus::Infeasible }),
        (None, None) if timed_out && out.is_empty() => {
            // nothing finished: report the box midpoint
            let mid: Vec<f64> = snap(sp, &sp.vars.iter().map(|v| 0.5 * (v.lower + v.upper)).collect::<Vec<_>>());
            let st = merit_state(sp, &mid, pgd.penalty)?;
            return Ok(finish(sp, approx, cfg, st, (f64::NAN, None), RunStatus::TimeLimit, times, out));
        }
        (None, None) => return Err(Error::InfeasibleApproximation),
    };
    let st = out[best].refined.clone().unwrap();
    let key = (out[best].rho, out[best].lambda);
    Ok(finish(sp, approx, cfg, st, key, status, times, out))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    sp: &StandardProblem,
    approx: &Approximation,
    cfg: &RunConfig,
    st: MeritState,
    key: (f64, Option<f64>),
    status: RunStatus,
    times: PhaseTimes,
    cells: Vec<CellReport>,
) -> RunReport {
    let names = sp
        .nonlinear
        .iter()
        .map(|c| c.name.clone())
        .chain((0..sp.linear.len()).map(|k| format!("lin{k}")));
    let per = sp.constraint_violations(&st.x);
    RunReport {
        problem: sp.name.clone(),
        status,
        max_violation: per.iter().copied().fold(0.0, f64::max),
        violations: names.zip(per).collect(),
        x: st.x,
        objective: st.objective,
        merit: st.merit,
        best_rho: key.0,
        best_lambda: key.1,
        times,
        surrogates: approx.summaries.clone(),
        cells,
        training_runs: approx.training_runs,
        seed: cfg.seed,
    }
}

fn cmp_lambda(a: Option<f64>, b: Option<f64>) -> std::cmp::Ordering {
    // the unrelaxed model sorts first
    match (a, b) {
        (None, None) => std::cmp::Ordering::Equal,
        (None, Some(_)) => std::cmp::Ordering::Less,
        (Some(_), None) => std::cmp::Ordering::Greater,
        (Some(x), Some(y)) => x.total_cmp(&y),
    }
}

#[cfg(test)]
mod tests;
