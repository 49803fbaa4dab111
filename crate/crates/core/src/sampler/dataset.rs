use serde::Serialize;

use super::*;
use crate::learners::{train_tree, Task, TreeConfig};
use crate::model::{ConstraintKind, NonlinearConstraint, Objective, StandardProblem};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageCount {
    pub stage: String,
    /// Dataset size after the stage.
    pub total: usize,
}

/// Samples of one constraint (or the objective) in the local coordinates of
/// its support.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub task: Task,
    /// Problem variable index of each local coordinate.
    pub inputs: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Raw function values; `+inf` marks a failed evaluation.
    pub values: Vec<f64>,
    /// Feasibility labels (classification) or function values (regression).
    pub targets: Vec<f64>,
    pub stages: Vec<StageCount>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn feasible_count(&self) -> usize {
        self.targets.iter().filter(|&&t| t >= 0.5).count()
    }

    fn mark(&mut self, stage: &str) {
        self.stages.push(StageCount { stage: stage.into(), total: self.len() });
    }
}

struct Local<'a> {
    base: Vec<f64>,
    inputs: &'a [usize],
    integral: Vec<bool>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Local<'_> {
    fn embed(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.base.clone();
        for (&i, v) in self.inputs.iter().zip(z) {
            x[i] = *v;
        }
        x
    }

    fn round(&self, pts: &mut [Vec<f64>]) {
        round_integral(pts, &self.integral, &self.lower, &self.upper);
    }
}

fn local_frame<'a>(sp: &StandardProblem, inputs: &'a [usize]) -> Local<'a> {
    let base = sp
        .vars
        .iter()
        .map(|v| match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) => 0.5 * (v.lower + v.upper),
            (true, false) => v.lower,
            (false, true) => v.upper,
            (false, false) => 0.0,
        })
        .collect();
    Local {
        base,
        inputs,
        integral: inputs.iter().map(|&i| sp.vars[i].integral).collect(),
        lower: inputs.iter().map(|&i| sp.vars[i].lower).collect(),
        upper: inputs.iter().map(|&i| sp.vars[i].upper).collect(),
    }
}

/// Runs every sampling stage for one nonlinear constraint. Inequalities get
/// a feasibility-labeled dataset; equalities a regression dataset of `h`.
pub fn sample_constraint(sp: &StandardProblem, con: &NonlinearConstraint, cfg: &SamplerConfig) -> Result<Dataset> {
    let frame = local_frame(sp, &con.support);
    let task = match con.kind {
        ConstraintKind::Inequality => Task::Classification,
        ConstraintKind::Equality => Task::Regression,
    };
    let mut ds = Dataset {
        name: con.name.clone(),
        task,
        inputs: con.support.clone(),
        lower: frame.lower.clone(),
        upper: frame.upper.clone(),
        points: Vec::new(),
        values: Vec::new(),
        targets: Vec::new(),
        stages: Vec::new(),
    };
    let add = |ds: &mut Dataset, pts: Vec<Vec<f64>>| {
        for z in pts {
            let v = match con.eval(&frame.embed(&z)) {
                Ok(v) if v.is_finite() => v,
                _ => f64::INFINITY,
            };
            let t = match task {
                Task::Classification => (v <= FEAS_TOL) as u8 as f64,
                Task::Regression if v.is_finite() => v,
                Task::Regression => continue,
            };
            ds.points.push(z);
            ds.values.push(v);
            ds.targets.push(t);
        }
    };

    let mut pts = boundary_sample(&frame.lower, &frame.upper, cfg.corner_cap, derive_seed(cfg.seed, 1));
    frame.round(&mut pts);
    add(&mut ds, pts);
    ds.mark("boundary");

    let mut pts = lh_sample(&frame.lower, &frame.upper, cfg.n_lh, derive_seed(cfg.seed, 2));
    frame.round(&mut pts);
    add(&mut ds, pts);
    ds.mark("latin_hypercube");

    if ds.inputs.is_empty() {
        return Ok(ds);
    }
    match knn_boundary_sample(&ds.points, &ds.values, cfg.knn_k, &ds.lower, &ds.upper, cfg.knn_max_new) {
        Ok(mut pts) => {
            frame.round(&mut pts);
            add(&mut ds, pts);
        }
        Err(e) => log::debug!("{}: secant stage skipped: {e}", con.name),
    }
    ds.mark("knn");

    if cfg.oct_sampling && task == Task::Classification {
        let tree_cfg = TreeConfig {
            max_depth: cfg.committee_depth,
            oblique: true,
            min_leaf: 1,
        };
        for round in 0..cfg.oct_rounds {
            if !crate::learners::has_both_labels(&ds.targets) {
                break;
            }
            let round_cfg = SamplerConfig {
                seed: derive_seed(cfg.seed, 100 + round as u64),
                ..cfg.clone()
            };
            let out = oct_adaptive_sample(&ds.points, &ds.targets, &ds.lower, &ds.upper, &round_cfg, |x, y| {
                train_tree(x, y, Task::Classification, &tree_cfg)
            })?;
            let mut pts = out.points;
            frame.round(&mut pts);
            add(&mut ds, pts);
            ds.mark("oct");
        }
    }
    Ok(ds)
}

/// Regression samples of a nonlinear objective (corners and a Latin
/// hypercube). Returns `None` for a linear objective.
pub fn sample_objective(sp: &StandardProblem, cfg: &SamplerConfig) -> Result<Option<Dataset>> {
    let Objective::Nonlinear { evaluator, support } = &sp.objective else {
        return Ok(None);
    };
    let frame = local_frame(sp, support);
    let mut ds = Dataset {
        name: "objective".into(),
        task: Task::Regression,
        inputs: support.clone(),
        lower: frame.lower.clone(),
        upper: frame.upper.clone(),
        points: Vec::new(),
        values: Vec::new(),
        targets: Vec::new(),
        stages: Vec::new(),
    };
    let stages = [
        ("boundary", boundary_sample(&frame.lower, &frame.upper, cfg.corner_cap, derive_seed(cfg.seed, 1))),
        ("latin_hypercube", lh_sample(&frame.lower, &frame.upper, cfg.n_lh, derive_seed(cfg.seed, 2))),
    ];
    for (name, mut pts) in stages {
        frame.round(&mut pts);
        for z in pts {
            if let Ok(v) = evaluator.eval(&frame.embed(&z)) {
                if v.is_finite() {
                    ds.points.push(z);
                    ds.values.push(v);
                    ds.targets.push(v);
                }
            }
        }
        ds.mark(name);
    }
    Ok(Some(ds))
}
