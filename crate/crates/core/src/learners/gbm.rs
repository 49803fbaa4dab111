use serde::{Deserialize, Serialize};

use super::tree::{train_tree, ObliqueTree, TreeConfig};
use super::{check_dataset, Task};
use crate::error::Result;

/// `base + sum_i weights[i] * trees[i](x)`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbmEnsemble {
    pub base: f64,
    pub trees: Vec<ObliqueTree>,
    pub weights: Vec<f64>,
}

impl GbmEnsemble {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base
            + self
                .trees
                .iter()
                .zip(&self.weights)
                .map(|(t, w)| w * t.predict(x))
                .sum::<f64>()
    }
}

#[derive(Clone, Debug)]
pub struct GbmConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub oblique: bool,
}

impl Default for GbmConfig {
    fn default() -> Self {
        GbmConfig {
            n_trees: 10,
            learning_rate: 0.3,
            max_depth: 2,
            oblique: true,
        }
    }
}

/// Stagewise least-squares boosting. Classification fits the `{0, 1}` labels
/// as regression targets.
pub fn train_gbm(points: &[Vec<f64>], targets: &[f64], task: Task, cfg: &GbmConfig) -> Result<GbmEnsemble> {
    check_dataset(points, targets)?;
    let y: Vec<f64> = match task {
        Task::Classification => targets.iter().map(|&t| (t >= 0.5) as u8 as f64).collect(),
        Task::Regression => targets.to_vec(),
    };
    let base = y.iter().sum::<f64>() / y.len() as f64;
    let mut pred = vec![base; y.len()];
    let tree_cfg = TreeConfig {
        max_depth: cfg.max_depth,
        oblique: cfg.oblique,
        min_leaf: 1,
    };
    let mut ens = GbmEnsemble { base, trees: Vec::new(), weights: Vec::new() };
    for _ in 0..cfg.n_trees {
        let resid: Vec<f64> = y.iter().zip(&pred).map(|(t, p)| t - p).collect();
        let tree = train_tree(points, &resid, Task::Regression, &tree_cfg)?;
        for (p, x) in pred.iter_mut().zip(points) {
            *p += cfg.learning_rate * tree.predict(x);
        }
        ens.trees.push(tree);
        ens.weights.push(cfg.learning_rate);
    }
    Ok(ens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![i as f64 / (n - 1) as f64, ((i * 7) % n) as f64 / n as f64]).collect()
    }

    #[test]
    fn single_tree_ensemble() {
        let x = grid(50);
        let y: Vec<f64> = x.iter().map(|p| p[0] * p[0] + p[1]).collect();
        let cfg = GbmConfig { n_trees: 1, learning_rate: 1.0, ..Default::default() };
        let g = train_gbm(&x, &y, Task::Regression, &cfg).unwrap();
        for p in &x {
            assert!((g.predict(p) - (g.base + g.trees[0].predict(p))).abs() < 1e-12);
        }
    }

    #[test]
    fn step_function_classification() {
        let x = grid(100);
        let y: Vec<f64> = x.iter().map(|p| (p[0] >= 0.5) as u8 as f64).collect();
        let g = train_gbm(&x, &y, Task::Classification, &GbmConfig::default()).unwrap();
        let acc = x.iter().zip(&y).filter(|(p, l)| ((g.predict(p) >= 0.5) as u8 as f64) == **l).count();
        assert!(acc >= 95, "{acc}");
    }

    #[test]
    fn training_error_non_increasing() {
        let x = grid(80);
        let y: Vec<f64> = x.iter().map(|p| (3.0 * p[0]).sin() + p[1] * p[1]).collect();
        let g = train_gbm(&x, &y, Task::Regression, &GbmConfig::default()).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=g.trees.len() {
            let partial = GbmEnsemble {
                base: g.base,
                trees: g.trees[..k].to_vec(),
                weights: g.weights[..k].to_vec(),
            };
            let sse: f64 = x.iter().zip(&y).map(|(p, t)| (partial.predict(p) - t).powi(2)).sum();
            assert!(sse <= prev + 1e-9);
            prev = sse;
        }
    }

    #[test]
    fn constant_trees() {
        let g = GbmEnsemble {
            base: 0.0,
            trees: vec![ObliqueTree::constant(1, 1.0), ObliqueTree::constant(1, 1.0)],
            weights: vec![0.5, 0.5],
        };
        assert_eq!(g.predict(&[0.2]), 1.0);
    }
}
