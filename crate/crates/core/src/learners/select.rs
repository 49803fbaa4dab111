use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::*;
use crate::error::{Error, Result};

/// Surrogate families in tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Svm,
    Tree,
    Gbm,
    Mlp,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Svm, Family::Tree, Family::Gbm, Family::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Family::Svm => "svm",
            Family::Tree => "tree",
            Family::Gbm => "gbm",
            Family::Mlp => "mlp",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SelectConfig {
    pub candidates: Vec<Family>,
    /// Training fraction of the stratified split.
    pub split_ratio: f64,
    pub seed: u64,
    pub svc: SvcConfig,
    pub svr: SvrConfig,
    pub tree: TreeConfig,
    pub gbm: GbmConfig,
    pub mlp: MlpConfig,
    /// Retrain the winner on the whole dataset after selection.
    pub refit: bool,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            candidates: Family::ALL.to_vec(),
            split_ratio: 0.7,
            seed: 0,
            svc: SvcConfig::default(),
            svr: SvrConfig::default(),
            tree: TreeConfig::default(),
            gbm: GbmConfig::default(),
            mlp: MlpConfig::default(),
            refit: true,
        }
    }
}

pub fn train_family(
    family: Family,
    points: &[Vec<f64>],
    targets: &[f64],
    task: Task,
    cfg: &SelectConfig,
) -> Result<SurrogateModel> {
    Ok(match family {
        Family::Svm => SurrogateModel::Linear(match task {
            Task::Classification => train_svc(points, targets, &SvcConfig { seed: cfg.seed, ..cfg.svc.clone() })?,
            Task::Regression => train_svr(points, targets, &cfg.svr)?,
        }),
        Family::Tree => SurrogateModel::Tree(train_tree(points, targets, task, &cfg.tree)?),
        Family::Gbm => SurrogateModel::Gbm(train_gbm(points, targets, task, &cfg.gbm)?),
        Family::Mlp => SurrogateModel::Mlp(train_mlp(points, targets, task, &MlpConfig { seed: cfg.seed, ..cfg.mlp.clone() })?),
    })
}

/// Accuracy for classifiers, R^2 for regressors.
pub fn score(model: &SurrogateModel, points: &[Vec<f64>], targets: &[f64], task: Task) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    match task {
        Task::Classification => {
            let a = default_threshold(model.family());
            let hits = points
                .iter()
                .zip(targets)
                .filter(|(p, &t)| (model.predict(p) >= a) == (t >= 0.5))
                .count();
            hits as f64 / points.len() as f64
        }
        Task::Regression => {
            let mean = targets.iter().sum::<f64>() / targets.len() as f64;
            let sst: f64 = targets.iter().map(|t| (t - mean).powi(2)).sum();
            let sse: f64 = points.iter().zip(targets).map(|(p, t)| (model.predict(p) - t).powi(2)).sum();
            if sst <= 1e-300 {
                if sse <= 1e-12 { 1.0 } else { 0.0 }
            } else {
                1.0 - sse / sst
            }
        }
    }
}

/// Deterministic stratified split: returns (train, validation) indices.
pub fn stratified_split(targets: &[f64], task: Task, ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<Vec<usize>> = match task {
        Task::Classification => {
            let (pos, neg): (Vec<usize>, Vec<usize>) = (0..targets.len()).partition(|&i| targets[i] >= 0.5);
            vec![neg, pos]
        }
        Task::Regression => vec![(0..targets.len()).collect()],
    };
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for mut g in groups {
        g.shuffle(&mut rng);
        let k = ((g.len() as f64) * ratio).round() as usize;
        let k = k.clamp(g.len().min(1), g.len());
        train.extend_from_slice(&g[..k]);
        val.extend_from_slice(&g[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Trains every candidate family on a stratified split, keeps the best
/// validation score (ties go to the earlier family in [`Family::ALL`]) and,
/// when `refit` is set, retrains it on the full dataset.
pub fn select_surrogate(points: &[Vec<f64>], targets: &[f64], task: Task, cfg: &SelectConfig) -> Result<Surrogate> {
    check_dataset(points, targets)?;
    if points.len() < 10 {
        return Err(Error::DegenerateDataset(format!("{} samples, need at least 10", points.len())));
    }
    if task == Task::Classification && !has_both_labels(targets) {
        return Err(Error::DegenerateDataset("classifier needs both labels".into()));
    }
    let (tr, va) = stratified_split(targets, task, cfg.split_ratio, cfg.seed);
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        (idx.iter().map(|&i| points[i].clone()).collect(), idx.iter().map(|&i| targets[i]).collect())
    };
    let (xt, yt) = pick(&tr);
    let (xv, yv) = pick(&va);
    let mut candidates = cfg.candidates.clone();
    candidates.sort();
    candidates.dedup();
    let mut best: Option<(f64, SurrogateModel)> = None;
    for fam in candidates {
        match train_family(fam, &xt, &yt, task, cfg) {
            Ok(m) => {
                let s = score(&m, &xv, &yv, task);
                log::debug!("{} validation score {s:.4}", fam.name());
                if best.as_ref().is_none_or(|(b, _)| s > *b) {
                    best = Some((s, m));
                }
            }
            Err(e) => log::debug!("{} skipped: {e}", fam.name()),
        }
    }
    let Some((s, mut model)) = best else {
        return Err(Error::DegenerateDataset("no candidate family could be trained".into()));
    };
    if cfg.refit {
        if let Ok(m) = train_family(model.family(), points, targets, task, cfg) {
            model = m;
        }
    }
    let threshold = match task {
        Task::Classification => default_threshold(model.family()),
        Task::Regression => 0.0,
    };
    Ok(Surrogate {
        model,
        task,
        threshold,
        validation_score: s,
        constraint_id: String::new(),
        inputs: Vec::new(),
    })
}
