//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the criteria execute
//! sequentially and the wall-clock ratios are not distorted by other tests.
//!
//!     cargo test --test acceptance

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use goml::driver::bench::{self, ILLUSTRATIVE_OPTIMUM, SPEED_REDUCER_OPTIMUM};
use goml::driver::{sample_all, solve_global, solve_grid, train_all, Approximation, RunConfig, RunReport, RunStatus};
use goml::encoder::{encode_surrogate, EncodeOptions, Encoded, Norm, RobustConfig};
use goml::expr::{parse_expr, ExprEvaluator};
use goml::learners::{train_family, train_tree, Family, LinearModel, SelectConfig, Surrogate, SurrogateModel, Task, TreeConfig};
use goml::milp::{solve_milp, MilpModel, MilpStatus, SolveOptions};
use goml::model::{
    central_difference, standardize, ConstraintKind, LinearConstraint, NonlinearConstraint, Objective, Problem, Sense,
    StandardProblem, VarSpec,
};
use goml::refiner::{merit_state, pgd_improve, PgdConfig};
use goml::sampler::{
    committee_votes, hit_and_run, lh_sample, oct_adaptive_sample, sample_constraint, Dataset, HalfSpace, Polyhedron,
    SamplerConfig,
};
use rand::Rng;
use serde::Deserialize;

const ORACLE: &str = include_str!("data/qsigmoid_n10_m2_s0.json");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: &str, title: &str, started: Instant, o: Outcome| {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("{id:<5} {verdict}  {title}: {} [{:.1}s]", o.detail, started.elapsed().as_secs_f64());
    };

    let t = Instant::now();
    let runs = illustrative_runs();
    report("AC1", "illustrative global optimum", t, ac1(&runs));
    let t = Instant::now();
    report("AC2", "pre-refinement incumbent at rho 0.1", t, ac2(&runs));
    let t = Instant::now();
    report("AC3", "speed reducer", t, ac3());
    let t = Instant::now();
    report("AC4", "encoding fidelity", t, ac4());
    let t = Instant::now();
    report("AC5", "relaxation guarantee", t, ac5());
    let t = Instant::now();
    report("AC6", "robust nestedness", t, ac6());
    let t = Instant::now();
    report("AC7", "hit-and-run containment and coverage", t, ac7());
    let t = Instant::now();
    report("AC8", "Latin hypercube stratification", t, ac8());
    let t = Instant::now();
    report("AC9", "committee sampling discordance", t, ac9());
    let t = Instant::now();
    report("AC10", "MILP against enumeration", t, ac10());
    let t = Instant::now();
    report("AC11", "gradient correctness", t, ac11());
    let t = Instant::now();
    report("AC12", "PGD non-degradation", t, ac12());
    let t = Instant::now();
    report("AC13", "quadratic-sigmoid against multistart", t, ac13());
    let t = Instant::now();
    report("AC14", "surrogate reuse and grid share", t, ac14(&runs));

    if failed == 0 {
        println!("all 14 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} of 14 criteria failed");
        ExitCode::FAILURE
    }
}

struct Run {
    seed: u64,
    report: RunReport,
    elapsed: f64,
    cfg: RunConfig,
}

fn illustrative_runs() -> Vec<Run> {
    (0..10)
        .map(|seed| {
            let cfg = RunConfig { seed, ..RunConfig::default() };
            let t = Instant::now();
            let report = solve_global(bench::illustrative(), &cfg).expect("illustrative run");
            Run { seed, report, elapsed: t.elapsed().as_secs_f64(), cfg }
        })
        .collect()
}

fn ac1(runs: &[Run]) -> Outcome {
    let good: Vec<u64> = runs
        .iter()
        .filter(|r| {
            let x = &r.report.x;
            r.report.status == RunStatus::Feasible
                && (r.report.objective - ILLUSTRATIVE_OPTIMUM).abs() <= 1e-3
                && (x[0] - 1.1497).abs() <= 1e-2
                && (x[1] - 0.875).abs() <= 1e-2
                && r.elapsed < 60.0
        })
        .map(|r| r.seed)
        .collect();
    let slowest = runs.iter().map(|r| r.elapsed).fold(0.0, f64::max);
    let worst = runs.iter().map(|r| (r.report.objective - ILLUSTRATIVE_OPTIMUM).abs()).fold(0.0, f64::max);
    outcome(
        good.len() >= 8,
        format!("{}/10 seeds at -1.1497 +- 1e-3, worst error {worst:.2e}, slowest {slowest:.2}s", good.len()),
    )
}

fn accepts(s: &Surrogate, x: &[f64]) -> bool {
    let y = s.predict_full(x);
    match s.task {
        Task::Classification => y >= s.threshold,
        Task::Regression => y <= 0.0,
    }
}

fn ac2(runs: &[Run]) -> Outcome {
    let mut close = 0;
    let mut objs = Vec::new();
    for r in runs {
        let Some(cell) = r.report.cells.iter().find(|c| c.rho == 0.1 && c.lambda.is_none()) else { continue };
        if cell.milp_x.is_empty() {
            continue;
        }
        // training is deterministic in the seed, so this recovers the run's surrogates
        let sp = standardize(bench::illustrative()).unwrap();
        let (ds, od) = sample_all(&sp, &r.cfg).unwrap();
        let approx = train_all(&ds, od.as_ref(), &r.cfg).unwrap();
        let feasible = approx.constraints.iter().flatten().all(|s| accepts(s, &cell.milp_x));
        objs.push(cell.milp_objective);
        if feasible && (cell.milp_objective + 1.108).abs() <= 0.1 {
            close += 1;
        }
    }
    let lo = objs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = objs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        close * 2 >= runs.len(),
        format!("{close}/{} seeds surrogate-feasible within 0.1 of -1.108 (range {lo:.4} to {hi:.4})", runs.len()),
    )
}

fn ac3() -> Outcome {
    let t = Instant::now();
    let r = match solve_global(bench::speed_reducer(), &RunConfig::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let secs = t.elapsed().as_secs_f64();
    let rel = (r.objective - SPEED_REDUCER_OPTIMUM).abs() / SPEED_REDUCER_OPTIMUM;
    let integral = (r.x[2] - r.x[2].round()).abs() < 1e-9;
    let worst = r.violations.iter().map(|v| v.1).fold(0.0, f64::max);
    outcome(
        r.objective <= 2994.47 && rel <= 0.005 && integral && worst <= 1e-6 && secs < 600.0,
        format!("objective {:.4} ({:.3}% off), x3 = {}, max violation {worst:.1e}, {secs:.1}s", r.objective, 100.0 * rel, r.x[2]),
    )
}

fn box_model(sp: &StandardProblem) -> MilpModel {
    let mut m = MilpModel::new();
    for v in &sp.vars {
        m.add_continuous(&v.name, v.lower, v.upper);
    }
    m
}

fn fix(m: &MilpModel, x: &[f64]) -> MilpModel {
    let mut m = m.clone();
    for (v, &xi) in m.vars.iter_mut().zip(x) {
        v.lower = xi;
        v.upper = xi;
    }
    m
}

fn random_points(sp: &StandardProblem, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = common::rng(seed);
    (0..n)
        .map(|_| sp.vars.iter().map(|v| rng.random_range(v.lower..=v.upper)).collect())
        .collect()
}

fn surrogate(model: SurrogateModel, task: Task, ds: &Dataset) -> Surrogate {
    let threshold = match (task, model.family()) {
        (Task::Regression, _) => 0.0,
        (_, f) => goml::learners::default_threshold(f),
    };
    Surrogate {
        model,
        task,
        threshold,
        validation_score: f64::NAN,
        constraint_id: ds.name.clone(),
        inputs: ds.inputs.clone(),
    }
}

fn ac4() -> Outcome {
    let sp = standardize(bench::illustrative()).unwrap();
    let ds = sample_constraint(&sp, &sp.nonlinear[0], &SamplerConfig::default()).unwrap();
    let finite: Vec<usize> = (0..ds.len()).filter(|&i| ds.values[i].is_finite()).collect();
    let reg_x: Vec<Vec<f64>> = finite.iter().map(|&i| ds.points[i].clone()).collect();
    let reg_y: Vec<f64> = finite.iter().map(|&i| ds.values[i]).collect();
    let points = random_points(&sp, 100, 4);
    let cfg = SelectConfig::default();
    let mut mismatches = Vec::new();
    let mut worst_reg: f64 = 0.0;
    let mut solves = 0;
    for family in Family::ALL {
        for task in [Task::Classification, Task::Regression] {
            let model = match task {
                Task::Classification => train_family(family, &ds.points, &ds.targets, task, &cfg),
                Task::Regression => train_family(family, &reg_x, &reg_y, task, &cfg),
            };
            let s = surrogate(model.expect("family trains"), task, &ds);
            let mut m = box_model(&sp);
            let enc = encode_surrogate(&s, &mut m, "s", &EncodeOptions::default()).unwrap();
            let mut bad = 0;
            for x in &points {
                let sol = solve_milp(&fix(&m, x), &SolveOptions::default()).unwrap();
                solves += 1;
                let pred = s.predict_full(x);
                match (task, enc.output) {
                    (Task::Classification, Some(y)) => {
                        if sol.status != MilpStatus::Optimal || (sol.x[y] >= s.threshold) != (pred >= s.threshold) {
                            bad += 1;
                        }
                    }
                    // linear classifiers carry the threshold as a row
                    (Task::Classification, None) => {
                        if (sol.status == MilpStatus::Optimal) != (pred >= s.threshold) {
                            bad += 1;
                        }
                    }
                    (Task::Regression, y) => {
                        let err = match (sol.status, y) {
                            (MilpStatus::Optimal, Some(y)) => (sol.x[y] - pred).abs(),
                            _ => f64::INFINITY,
                        };
                        worst_reg = worst_reg.max(err);
                        if err > 1e-6 {
                            bad += 1;
                        }
                    }
                }
            }
            if bad > 0 {
                mismatches.push(format!("{family:?}/{task:?}: {bad}"));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{solves} fixed-x solves over 4 families x 2 tasks, worst regression error {worst_reg:.1e}{}",
            if mismatches.is_empty() { String::new() } else { format!(", mismatches {}", mismatches.join(" ")) }
        ),
    )
}

fn constraint(src: &str, names: &[String]) -> NonlinearConstraint {
    let expr = parse_expr(src, names).unwrap();
    NonlinearConstraint::new(
        src,
        Arc::new(ExprEvaluator { expr, dim: names.len() }),
        ConstraintKind::Inequality,
        (0..names.len()).collect(),
    )
}

fn ac5() -> Outcome {
    // x <= 0.3 and x >= 0.7 cannot both hold; the linear core 0 <= x <= 1 is fine
    let names = vec!["x".to_string()];
    let p = Problem {
        name: "contradiction".into(),
        vars: vec![VarSpec::continuous("x", 0, 0.0, 1.0)],
        objective: Objective::Linear { coeffs: vec![1.0], constant: 0.0 },
        linear: vec![LinearConstraint::new(vec![1.0], Sense::Le, 1.0)],
        nonlinear: vec![constraint("x - 0.3", &names), constraint("0.7 - x", &names)],
    };
    let sp = standardize(p).unwrap();
    let svc = |beta0: f64, beta: f64, name: &str| Surrogate {
        model: SurrogateModel::Linear(LinearModel { beta0, beta: vec![beta] }),
        task: Task::Classification,
        threshold: 0.0,
        validation_score: 1.0,
        constraint_id: name.into(),
        inputs: vec![0],
    };
    let approx = Approximation {
        constraints: vec![Some(svc(0.3, -1.0, "low")), Some(svc(-0.7, 1.0, "high"))],
        objective: None,
        summaries: Vec::new(),
        training_runs: 0,
    };
    let deadline = || Instant::now() + Duration::from_secs(60);
    let relaxed_cfg = RunConfig { rho_grid: vec![0.0], lambda_grid: vec![None, Some(1e2)], ..RunConfig::default() };
    let relaxed = match solve_grid(&sp, &approx, &relaxed_cfg, deadline()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("relaxed grid failed: {e}")),
    };
    let cell = relaxed.cells.iter().find(|c| c.lambda == Some(1e2)).unwrap();
    let relaxed_ok = cell.relaxed && cell.milp_status == Some(MilpStatus::Optimal) && cell.relaxation > 0.0;
    let strict_cfg = RunConfig { relaxation: false, ..relaxed_cfg };
    let strict = solve_grid(&sp, &approx, &strict_cfg, deadline());
    let strict_ok = matches!(strict, Err(goml::Error::InfeasibleApproximation));
    outcome(
        relaxed_ok && strict_ok,
        format!(
            "lambda 1e2: {:?} with total slack {:.3}; relaxation off: {}",
            cell.milp_status,
            cell.relaxation,
            match strict {
                Err(e) => e.to_string(),
                Ok(r) => format!("unexpected {:?}", r.status),
            }
        ),
    )
}

/// Single-surrogate model with its threshold enforced.
fn threshold_model(sp: &StandardProblem, s: &Surrogate, robust: Option<RobustConfig>) -> MilpModel {
    let mut m = box_model(sp);
    let opts = EncodeOptions { robust, ..EncodeOptions::default() };
    let Encoded { output, .. } = encode_surrogate(s, &mut m, "s", &opts).unwrap();
    if let Some(y) = output {
        m.add_row("thr", vec![(y, 1.0)], Sense::Ge, s.threshold);
    }
    m
}

fn ac6() -> Outcome {
    let sp = standardize(bench::illustrative()).unwrap();
    let cfg = SelectConfig::default();
    let points = random_points(&sp, 100, 6);
    let mut violations = 0;
    let mut identical = true;
    let mut counts = [0usize; 3];
    for con in &sp.nonlinear {
        let ds = sample_constraint(&sp, con, &SamplerConfig::default()).unwrap();
        for family in Family::ALL {
            let model = train_family(family, &ds.points, &ds.targets, Task::Classification, &cfg).unwrap();
            let s = surrogate(model, Task::Classification, &ds);
            for norm in [Norm::L1, Norm::Linf] {
                let plain = threshold_model(&sp, &s, None);
                let zero = threshold_model(&sp, &s, Some(RobustConfig::new(0.0, norm)));
                identical &= plain.rows == zero.rows && plain.vars == zero.vars;
                let models: Vec<MilpModel> = [0.1, 0.01]
                    .iter()
                    .map(|&rho| threshold_model(&sp, &s, Some(RobustConfig::new(rho, norm))))
                    .chain([plain])
                    .collect();
                for x in &points {
                    let ok: Vec<bool> = models
                        .iter()
                        .map(|m| solve_milp(&fix(m, x), &SolveOptions::default()).unwrap().status == MilpStatus::Optimal)
                        .collect();
                    for (c, &o) in counts.iter_mut().zip(&ok) {
                        *c += o as usize;
                    }
                    if (ok[0] && !ok[1]) || (ok[1] && !ok[2]) {
                        violations += 1;
                    }
                }
            }
        }
    }
    outcome(
        violations == 0 && identical,
        format!(
            "{violations} nesting violations over 1600 point checks; feasible at rho 0.1/0.01/0: {}/{}/{}; rho 0 rows {}",
            counts[0],
            counts[1],
            counts[2],
            if identical { "identical to plain" } else { "DIFFER from plain" }
        ),
    )
}

fn ac7() -> Outcome {
    let rows = vec![
        HalfSpace::new(vec![1.0, 0.0], 1.0, false),
        HalfSpace::new(vec![-1.0, 0.0], 0.0, false),
        HalfSpace::new(vec![0.0, 1.0], 1.0, false),
        HalfSpace::new(vec![0.0, -1.0], 0.0, false),
    ];
    let poly = Polyhedron::new(rows.clone(), vec![0.0, 0.0], vec![1.0, 1.0]);
    let pts = match hit_and_run(&poly, &[0.5, 0.5], 10_000, 100, 7) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    let worst = pts
        .iter()
        .flat_map(|x| rows.iter().map(move |r| r.a.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - r.b))
        .fold(f64::NEG_INFINITY, f64::max);
    let mean = |j: usize| pts.iter().map(|p| p[j]).sum::<f64>() / pts.len() as f64;
    let (m0, m1) = (mean(0), mean(1));
    let within = |m: f64| (0.45..=0.55).contains(&m);
    outcome(
        pts.len() == 10_000 && worst <= 1e-9 && within(m0) && within(m1),
        format!("{} samples, worst row residual {worst:.1e}, means ({m0:.4}, {m1:.4})", pts.len()),
    )
}

fn ac8() -> Outcome {
    let mut checked = 0;
    let mut bad = 0;
    for n in [1usize, 4, 16] {
        for dim in 1..=5 {
            for seed in 0..5 {
                let lower = vec![-1.0; dim];
                let upper = vec![3.0; dim];
                let pts = lh_sample(&lower, &upper, n, seed);
                for j in 0..dim {
                    let mut hits = vec![0; n];
                    for p in &pts {
                        let k = (((p[j] - lower[j]) / (upper[j] - lower[j])) * n as f64).floor() as usize;
                        hits[k.min(n - 1)] += 1;
                    }
                    checked += 1;
                    if pts.len() != n || hits.iter().any(|&h| h != 1) {
                        bad += 1;
                    }
                }
            }
        }
    }
    outcome(bad == 0, format!("{checked} (n, dimension, seed) strata checks, {bad} failures"))
}

fn ac9() -> Outcome {
    let sp = standardize(bench::illustrative()).unwrap();
    let mut polys = 0;
    let mut points = 0;
    let mut bad = 0;
    for (k, con) in sp.nonlinear.iter().enumerate() {
        let cfg = SamplerConfig { oct_sampling: false, seed: 90 + k as u64, ..SamplerConfig::default() };
        let ds = sample_constraint(&sp, con, &cfg).unwrap();
        let tree_cfg = TreeConfig { max_depth: cfg.committee_depth, ..TreeConfig::default() };
        let round = oct_adaptive_sample(&ds.points, &ds.targets, &ds.lower, &ds.upper, &cfg, |x, y| {
            train_tree(x, y, Task::Classification, &tree_cfg)
        })
        .unwrap();
        let limit = round.committee.len() as f64 * cfg.tau;
        polys += round.polyhedra.len();
        points += round.points.len();
        for x in &round.points {
            let (p, n) = committee_votes(&round.committee, x);
            if (p as f64 - n as f64).abs() > limit {
                bad += 1;
            }
        }
    }
    outcome(
        bad == 0 && points > 0,
        format!("{points} points from {polys} polyhedra, {bad} outside the K tau margin"),
    )
}

fn ac10() -> Outcome {
    let mut rng = common::rng(2024);
    let mut worst: f64 = 0.0;
    let mut wrong = 0;
    let mut feasible = 0;
    for _ in 0..50 {
        let nb = rng.random_range(1..=12);
        let m = common::random_model(&mut rng, nb);
        let sol = solve_milp(&m, &SolveOptions::default()).unwrap();
        match common::enumerate(&m) {
            Some(v) => {
                feasible += 1;
                let err = if sol.status == MilpStatus::Optimal { (sol.objective - v).abs() } else { f64::INFINITY };
                worst = worst.max(err);
                if err > 1e-6 {
                    wrong += 1;
                }
            }
            None => {
                if sol.status != MilpStatus::Infeasible {
                    wrong += 1;
                }
            }
        }
    }
    outcome(
        wrong == 0,
        format!("50 models ({feasible} feasible), {wrong} disagreements, worst objective error {worst:.1e}"),
    )
}

fn ac11() -> Outcome {
    let mut rng = common::rng(11);
    let n = 3;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 100 {
        let e = common::random_expr(&mut rng, n, 4);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let Ok(ad) = e.grad(&x, n) else { continue };
        let Ok(fd) = central_difference(|p| e.eval(p), &x) else { continue };
        let scale = fd.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let err = ad.iter().zip(&fd).map(|(a, f)| (a - f).abs()).fold(0.0, f64::max) / scale;
        worst = worst.max(err);
        checked += 1;
    }
    outcome(worst < 1e-5, format!("{checked} expressions, worst relative error {worst:.1e}"))
}

fn ac12() -> Outcome {
    let cfg = PgdConfig::default();
    let mut rng = common::rng(12);
    let mut worse = 0;
    let mut improved = 0;
    for k in 0..50 {
        let p = bench::generate_quadratic_sigmoid(5, 2, k);
        let x0: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let start = merit_state(&p, &x0, cfg.penalty).unwrap();
        let end = pgd_improve(&p, &x0, &cfg).unwrap();
        if end.merit > start.merit {
            worse += 1;
        } else if end.merit < start.merit {
            improved += 1;
        }
    }
    outcome(worse == 0, format!("50 starts: {worse} degraded, {improved} strictly improved"))
}

#[derive(Deserialize)]
struct Oracle {
    objective: f64,
    restarts: usize,
}

fn ac13() -> Outcome {
    let oracle: Oracle = serde_json::from_str(ORACLE).expect("oracle file parses");
    let r = match solve_global(bench::generate_quadratic_sigmoid(10, 2, 0), &RunConfig::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let rel = (r.objective - oracle.objective).abs() / oracle.objective.abs();
    outcome(
        r.status == RunStatus::Feasible && rel <= 0.05,
        format!(
            "objective {:.6} vs {}-restart oracle {:.6} ({:.2}% off)",
            r.objective,
            oracle.restarts,
            oracle.objective,
            100.0 * rel
        ),
    )
}

fn ac14(runs: &[Run]) -> Outcome {
    let once = runs.iter().all(|r| r.report.cells.len() == 12 && r.report.training_runs == r.report.surrogates.len());
    let grid: f64 = runs.iter().map(|r| r.report.times.grid()).sum();
    let total: f64 = runs.iter().map(|r| r.report.times.total()).sum();
    let ratios: Vec<String> = runs
        .iter()
        .map(|r| format!("{:.2}", r.report.times.grid() / r.report.times.total()))
        .collect();
    let share = grid / total;
    outcome(
        once && share < 0.25,
        format!(
            "one training per function over 12 cells: {once}; grid share {:.1}% over the 10 runs (per seed {})",
            100.0 * share,
            ratios.join(" ")
        ),
    )
}
