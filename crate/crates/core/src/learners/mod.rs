//! Surrogate model families and model selection.
//!
//! All trainers work on features rescaled to `[0, 1]` using the data range
//! and fold the scaling back, so trained models act on raw coordinates.

mod gbm;
mod linear;
mod mlp;
mod select;
mod tree;

use serde::{Deserialize, Serialize};

pub use gbm::{train_gbm, GbmConfig, GbmEnsemble};
pub use linear::{train_svc, train_svr, LinearModel, SvcConfig, SvrConfig};
pub use mlp::{train_mlp, Layer, Mlp, MlpConfig};
pub use select::{score, select_surrogate, stratified_split, train_family, Family, SelectConfig};
pub use tree::{is_axis_parallel, train_tree, LeafPath, ObliqueTree, TreeConfig, TreeNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SurrogateModel {
    Linear(LinearModel),
    Tree(ObliqueTree),
    Gbm(GbmEnsemble),
    Mlp(Mlp),
}

impl SurrogateModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            SurrogateModel::Linear(m) => m.predict(x),
            SurrogateModel::Tree(t) => t.predict(x),
            SurrogateModel::Gbm(g) => g.predict(x),
            SurrogateModel::Mlp(m) => m.predict(x),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            SurrogateModel::Linear(_) => Family::Svm,
            SurrogateModel::Tree(_) => Family::Tree,
            SurrogateModel::Gbm(_) => Family::Gbm,
            SurrogateModel::Mlp(_) => Family::Mlp,
        }
    }
}

/// A trained model standing in for one constraint or the objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub model: SurrogateModel,
    pub task: Task,
    /// Classification decision: feasible iff output >= threshold.
    pub threshold: f64,
    pub validation_score: f64,
    /// Constraint name, or `objective`.
    pub constraint_id: String,
    /// Problem variable index of each model input.
    pub inputs: Vec<usize>,
}

impl Surrogate {
    /// Model output at a local input vector (one entry per `inputs`).
    pub fn predict(&self, z: &[f64]) -> f64 {
        self.model.predict(z)
    }

    /// Model output at a full problem vector.
    pub fn predict_full(&self, x: &[f64]) -> f64 {
        let z: Vec<f64> = self.inputs.iter().map(|&i| x[i]).collect();
        self.predict(&z)
    }

    pub fn is_feasible(&self, z: &[f64]) -> bool {
        self.predict(z) >= self.threshold
    }

    pub fn family(&self) -> Family {
        self.model.family()
    }
}

/// Threshold `a_i` of a classifier of the given family.
pub fn default_threshold(family: Family) -> f64 {
    match family {
        Family::Svm | Family::Mlp => 0.0,
        Family::Tree | Family::Gbm => 0.5,
    }
}

/// Affine map `z = (x - lower) / width` onto the unit cube.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Scaler {
    pub lower: Vec<f64>,
    pub width: Vec<f64>,
}

impl Scaler {
    pub fn fit(points: &[Vec<f64>]) -> Scaler {
        let d = points.first().map_or(0, |p| p.len());
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in points {
            for j in 0..d {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        let width = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| if h - l > 1e-12 { h - l } else { 1.0 })
            .collect();
        Scaler { lower: lo, width }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.width))
            .map(|(v, (l, w))| (v - l) / w)
            .collect()
    }

    pub fn apply_all(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        points.iter().map(|p| self.apply(p)).collect()
    }

    /// Converts `a . z <= b` in scaled space into raw-space `(a', b')`.
    pub fn unscale_affine(&self, a: &[f64], b: f64) -> (Vec<f64>, f64) {
        let mut shift = 0.0;
        let raw = a
            .iter()
            .enumerate()
            .map(|(j, aj)| {
                shift += aj * self.lower[j] / self.width[j];
                aj / self.width[j]
            })
            .collect();
        (raw, b + shift)
    }
}

pub(crate) fn check_dataset(points: &[Vec<f64>], targets: &[f64]) -> crate::Result<usize> {
    if points.is_empty() || points.len() != targets.len() {
        return Err(crate::Error::DegenerateDataset(format!(
            "{} points with {} targets",
            points.len(),
            targets.len()
        )));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(crate::Error::DegenerateDataset("inconsistent point dimensions".into()));
    }
    Ok(d)
}

pub fn has_both_labels(labels: &[f64]) -> bool {
    labels.iter().any(|&y| y >= 0.5) && labels.iter().any(|&y| y < 0.5)
}
