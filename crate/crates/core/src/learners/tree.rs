use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_dataset, Scaler, Task};
use crate::error::Result;
use crate::sampler::HalfSpace;

/// Node of a binary tree with hyperplane splits. A point goes left iff
/// `a . x <= b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split { a: Vec<f64>, b: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObliqueTree {
    pub dim: usize,
    /// `nodes[0]` is the root.
    pub nodes: Vec<TreeNode>,
}

/// Route from the root to one leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafPath {
    pub node: usize,
    pub value: f64,
    /// `(split node, went left)` from the root down.
    pub splits: Vec<(usize, bool)>,
}

impl ObliqueTree {
    pub fn constant(dim: usize, value: f64) -> ObliqueTree {
        ObliqueTree {
            dim,
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    /// Index of the leaf node containing `x`.
    pub fn leaf_of(&self, x: &[f64]) -> usize {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                TreeNode::Leaf { .. } => return k,
                TreeNode::Split { a, b, left, right } => {
                    k = if dot(a, x) <= *b { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match &self.nodes[self.leaf_of(x)] {
            TreeNode::Leaf { value } => *value,
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    /// All leaves, left subtrees first.
    pub fn leaves(&self) -> Vec<LeafPath> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((k, splits)) = stack.pop() {
            match &self.nodes[k] {
                TreeNode::Leaf { value } => out.push(LeafPath {
                    node: k,
                    value: *value,
                    splits,
                }),
                TreeNode::Split { left, right, .. } => {
                    let mut r = splits.clone();
                    r.push((k, false));
                    stack.push((*right, r));
                    let mut l = splits;
                    l.push((k, true));
                    stack.push((*left, l));
                }
            }
        }
        out
    }

    pub fn split(&self, node: usize) -> (&[f64], f64) {
        match &self.nodes[node] {
            TreeNode::Split { a, b, .. } => (a, *b),
            TreeNode::Leaf { .. } => panic!("node {node} is a leaf"),
        }
    }

    /// Halfspaces of the leaf polyhedron: `a . x <= b` on the left side and
    /// the strict `-a . x < -b` on the right side.
    pub fn leaf_rows(&self, path: &LeafPath) -> Vec<HalfSpace> {
        path.splits
            .iter()
            .map(|&(k, went_left)| {
                let (a, b) = self.split(k);
                if went_left {
                    HalfSpace::new(a.to_vec(), b, false)
                } else {
                    HalfSpace::new(a.iter().map(|v| -v).collect(), -b, true)
                }
            })
            .collect()
    }

    pub fn depth(&self) -> usize {
        self.leaves().iter().map(|l| l.splits.len()).max().unwrap_or(0)
    }
}

/// True iff `a` has exactly one nonzero coefficient equal to 1.
pub fn is_axis_parallel(a: &[f64]) -> bool {
    a.iter().filter(|v| **v != 0.0).count() == 1 && a.iter().any(|v| *v == 1.0)
}

#[derive(Clone, Debug)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub oblique: bool,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 4,
            oblique: true,
            min_leaf: 1,
        }
    }
}

/// Greedy top-down tree. Each node considers the best axis-parallel
/// threshold and, when `oblique`, the best threshold along the direction of a
/// least-squares linear fit to the node's data. Splits minimize weighted Gini
/// impurity (classification) or squared error (regression); ties keep the
/// axis-parallel split.
pub fn train_tree(points: &[Vec<f64>], targets: &[f64], task: Task, cfg: &TreeConfig) -> Result<ObliqueTree> {
    let d = check_dataset(points, targets)?;
    let scaler = Scaler::fit(points);
    let z = scaler.apply_all(points);
    let mut tree = ObliqueTree { dim: d, nodes: Vec::new() };
    let idx: Vec<usize> = (0..z.len()).collect();
    grow(&mut tree, &z, targets, task, cfg, &scaler, idx, 0);
    Ok(tree)
}

struct Candidate {
    /// direction in scaled space
    w: Vec<f64>,
    threshold: f64,
    impurity: f64,
    axis: Option<usize>,
}

#[allow(clippy::too_many_arguments)]
fn grow(
    tree: &mut ObliqueTree,
    z: &[Vec<f64>],
    y: &[f64],
    task: Task,
    cfg: &TreeConfig,
    scaler: &Scaler,
    idx: Vec<usize>,
    depth: usize,
) -> usize {
    let me = tree.nodes.len();
    tree.nodes.push(TreeNode::Leaf { value: leaf_value(y, &idx, task) });
    if depth >= cfg.max_depth || idx.len() < 2 * cfg.min_leaf.max(1) || is_pure(y, &idx, task) {
        return me;
    }
    let d = tree.dim;
    let mut best: Option<Candidate> = None;
    for j in 0..d {
        let proj: Vec<f64> = idx.iter().map(|&i| z[i][j]).collect();
        if let Some((t, imp)) = best_threshold(&proj, y, &idx, task, cfg.min_leaf) {
            if best.as_ref().is_none_or(|b| imp < b.impurity - 1e-12) {
                let mut w = vec![0.0; d];
                w[j] = 1.0;
                best = Some(Candidate { w, threshold: t, impurity: imp, axis: Some(j) });
            }
        }
    }
    if cfg.oblique && d > 1 {
        if let Some(w) = linear_direction(z, y, &idx, task) {
            let proj: Vec<f64> = idx.iter().map(|&i| dot(&w, &z[i])).collect();
            if let Some((t, imp)) = best_threshold(&proj, y, &idx, task, cfg.min_leaf) {
                if best.as_ref().is_none_or(|b| imp < b.impurity - 1e-9 * (1.0 + b.impurity.abs())) {
                    best = Some(Candidate { w, threshold: t, impurity: imp, axis: None });
                }
            }
        }
    }
    let Some(c) = best else {
        return me;
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.iter().partition(|&&i| dot(&c.w, &z[i]) <= c.threshold);
    if left_idx.is_empty() || right_idx.is_empty() {
        return me;
    }
    let (a, b) = match c.axis {
        Some(j) => {
            let mut a = vec![0.0; d];
            a[j] = 1.0;
            (a, scaler.lower[j] + c.threshold * scaler.width[j])
        }
        None => {
            let (a, b) = scaler.unscale_affine(&c.w, c.threshold);
            let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            (a.iter().map(|v| v / norm).collect(), b / norm)
        }
    };
    let left = grow(tree, z, y, task, cfg, scaler, left_idx, depth + 1);
    let right = grow(tree, z, y, task, cfg, scaler, right_idx, depth + 1);
    tree.nodes[me] = TreeNode::Split { a, b, left, right };
    me
}

fn leaf_value(y: &[f64], idx: &[usize], task: Task) -> f64 {
    let n = idx.len().max(1) as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    match task {
        Task::Regression => mean,
        Task::Classification => {
            let pos = idx.iter().filter(|&&i| y[i] >= 0.5).count() as f64;
            if pos / n >= 0.5 {
                1.0
            } else {
                0.0
            }
        }
    }
}

fn is_pure(y: &[f64], idx: &[usize], task: Task) -> bool {
    match task {
        Task::Classification => {
            let pos = idx.iter().filter(|&&i| y[i] >= 0.5).count();
            pos == 0 || pos == idx.len()
        }
        Task::Regression => {
            let first = y[idx[0]];
            idx.iter().all(|&i| (y[i] - first).abs() <= 1e-12 * (1.0 + first.abs()))
        }
    }
}

/// Best `proj <= t` split as `(t, impurity)`; impurity is the weighted Gini
/// sum or the total squared error of both sides.
fn best_threshold(proj: &[f64], y: &[f64], idx: &[usize], task: Task, min_leaf: usize) -> Option<(f64, f64)> {
    let n = idx.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| proj[p].total_cmp(&proj[q]));
    let target = |k: usize| y[idx[order[k]]];
    let (mut sum_l, mut sq_l) = (0.0, 0.0);
    let (tot, tot_sq) = (0..n).fold((0.0, 0.0), |(s, q), k| {
        let v = target(k);
        let v = if task == Task::Classification { (v >= 0.5) as u8 as f64 } else { v };
        (s + v, q + v * v)
    });
    let min_leaf = min_leaf.max(1);
    let mut best: Option<(f64, f64)> = None;
    for k in 0..n - 1 {
        let mut v = target(k);
        if task == Task::Classification {
            v = (v >= 0.5) as u8 as f64;
        }
        sum_l += v;
        sq_l += v * v;
        let nl = (k + 1) as f64;
        let nr = (n - k - 1) as f64;
        if k + 1 < min_leaf || n - k - 1 < min_leaf {
            continue;
        }
        let (lo, hi) = (proj[order[k]], proj[order[k + 1]]);
        if hi - lo <= 1e-9 {
            continue;
        }
        let sum_r = tot - sum_l;
        let impurity = match task {
            Task::Classification => {
                let pl = sum_l / nl;
                let pr = sum_r / nr;
                nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr)
            }
            Task::Regression => (sq_l - sum_l * sum_l / nl) + ((tot_sq - sq_l) - sum_r * sum_r / nr),
        };
        if best.is_none_or(|(_, b)| impurity < b - 1e-12) {
            best = Some((0.5 * (lo + hi), impurity));
        }
    }
    best
}

/// Coefficients of a least-squares fit of the node targets (classification
/// labels mapped to +-1) on the scaled features.
fn linear_direction(z: &[Vec<f64>], y: &[f64], idx: &[usize], task: Task) -> Option<Vec<f64>> {
    let d = z[0].len();
    if idx.len() < d + 2 {
        return None;
    }
    let n = idx.len();
    let x = DMatrix::from_fn(n, d + 1, |r, c| if c == 0 { 1.0 } else { z[idx[r]][c - 1] });
    let t = DVector::from_iterator(
        n,
        idx.iter().map(|&i| match task {
            Task::Classification => {
                if y[i] >= 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
            Task::Regression => y[i],
        }),
    );
    let mut h = x.transpose() * &x;
    for k in 1..=d {
        h[(k, k)] += 1e-8;
    }
    let theta = h.cholesky()?.solve(&(x.transpose() * t));
    let w: Vec<f64> = theta.iter().skip(1).copied().collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 1e-10) || !norm.is_finite() {
        return None;
    }
    Some(w.iter().map(|v| v / norm).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| vec![rng.random_range(0.51..1.5), rng.random_range(0.3..1.6)])
            .collect()
    }

    #[test]
    fn single_threshold_recovered() {
        let x = uniform(400, 1);
        let y: Vec<f64> = x.iter().map(|p| (p[1] >= 0.9319) as u8 as f64).collect();
        let cfg = TreeConfig { max_depth: 1, ..Default::default() };
        let t = train_tree(&x, &y, Task::Classification, &cfg).unwrap();
        let TreeNode::Split { a, b, .. } = &t.nodes[0] else { panic!() };
        assert!(is_axis_parallel(a) && a[1] == 1.0);
        assert!((b - 0.9319).abs() < 0.01, "{b}");
    }

    #[test]
    fn pure_data_single_leaf() {
        let t = train_tree(&uniform(20, 2), &[1.0; 20], Task::Classification, &TreeConfig::default()).unwrap();
        assert_eq!(t.nodes, vec![TreeNode::Leaf { value: 1.0 }]);
    }

    #[test]
    fn xor_depth_two() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let y = vec![0.0, 0.0, 1.0, 1.0];
        let cfg = TreeConfig { max_depth: 2, ..Default::default() };
        let t = train_tree(&x, &y, Task::Classification, &cfg).unwrap();
        for (p, l) in x.iter().zip(&y) {
            assert_eq!(t.predict(p), *l);
        }
    }

    #[test]
    fn oblique_split_for_diagonal_boundary() {
        let x = uniform(300, 3);
        let y: Vec<f64> = x.iter().map(|p| (p[0] + p[1] >= 1.8) as u8 as f64).collect();
        let cfg = TreeConfig { max_depth: 1, ..Default::default() };
        let t = train_tree(&x, &y, Task::Classification, &cfg).unwrap();
        let acc = x.iter().zip(&y).filter(|(p, l)| t.predict(p) == **l).count() as f64 / 300.0;
        assert!(acc > 0.95, "{acc}");
        let TreeNode::Split { a, .. } = &t.nodes[0] else { panic!() };
        assert!(!is_axis_parallel(a));
    }

    #[test]
    fn leaves_partition_the_box() {
        let x = uniform(300, 4);
        let y: Vec<f64> = x.iter().map(|p| ((p[0] - 1.0).powi(2) + (p[1] - 1.0).powi(2) <= 0.1) as u8 as f64).collect();
        let t = train_tree(&x, &y, Task::Classification, &TreeConfig::default()).unwrap();
        let leaves = t.leaves();
        for p in uniform(1000, 5) {
            let inside: Vec<&LeafPath> = leaves
                .iter()
                .filter(|l| t.leaf_rows(l).iter().all(|h| h.contains(&p, 0.0)))
                .collect();
            assert_eq!(inside.len(), 1);
            assert_eq!(inside[0].node, t.leaf_of(&p));
            assert_eq!(inside[0].value, t.predict(&p));
        }
    }
}
