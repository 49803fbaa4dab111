use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dataset, has_both_labels, Scaler};
use crate::error::{Error, Result};

/// `beta0 + beta . x`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub beta0: f64,
    pub beta: Vec<f64>,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.beta0 + self.beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    fn unscale(beta0: f64, beta: &[f64], scaler: &Scaler) -> LinearModel {
        let mut b0 = beta0;
        let raw = beta
            .iter()
            .enumerate()
            .map(|(j, b)| {
                b0 -= b * scaler.lower[j] / scaler.width[j];
                b / scaler.width[j]
            })
            .collect();
        LinearModel { beta0: b0, beta: raw }
    }
}

#[derive(Clone, Debug)]
pub struct SvcConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvcConfig {
    fn default() -> Self {
        SvcConfig {
            lambda: 1e-4,
            epochs: 200,
            seed: 0,
        }
    }
}

/// Linear soft-margin classifier: Pegasos-style stochastic subgradient
/// descent on the L2-regularized hinge loss, returning the averaged iterate
/// of the second half of training. Labels are `{0, 1}`.
pub fn train_svc(points: &[Vec<f64>], labels: &[f64], cfg: &SvcConfig) -> Result<LinearModel> {
    let d = check_dataset(points, labels)?;
    if !has_both_labels(labels) {
        return Err(Error::DegenerateDataset("classifier needs both labels".into()));
    }
    if points.iter().all(|p| p == &points[0]) {
        return Err(Error::DegenerateDataset("all points share the same features".into()));
    }
    let scaler = Scaler::fit(points);
    let z = scaler.apply_all(points);
    let y: Vec<f64> = labels.iter().map(|&l| if l >= 0.5 { 1.0 } else { -1.0 }).collect();
    let n = z.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; d];
    let mut avg_b = 0.0;
    let mut avg_count = 0.0;
    let lambda = cfg.lambda;
    // offset keeps the first steps at unit length
    let mut t = 1.0 / lambda;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1.0;
            let eta = 1.0 / (lambda * t);
            let margin = y[i] * (b + dot(&w, &z[i]));
            for wj in w.iter_mut() {
                *wj *= 1.0 - eta * lambda;
            }
            if margin < 1.0 {
                for (wj, zj) in w.iter_mut().zip(&z[i]) {
                    *wj += eta * y[i] * zj;
                }
                b += eta * y[i];
            }
            if epoch >= cfg.epochs / 2 {
                avg_count += 1.0;
                for (a, wj) in avg_w.iter_mut().zip(&w) {
                    *a += (wj - *a) / avg_count;
                }
                avg_b += (b - avg_b) / avg_count;
            }
        }
    }
    if avg_count == 0.0 {
        avg_w = w;
        avg_b = b;
    }
    Ok(LinearModel::unscale(avg_b, &avg_w, &scaler))
}

#[derive(Clone, Debug)]
pub struct SvrConfig {
    /// Insensitivity as a fraction of the target standard deviation.
    pub epsilon_frac: f64,
    /// Weight of the plain least-squares term that selects a unique fit
    /// inside the insensitive tube.
    pub ls_weight: f64,
    pub ridge: f64,
}

impl Default for SvrConfig {
    fn default() -> Self {
        SvrConfig {
            epsilon_frac: 0.01,
            ls_weight: 1e-3,
            ridge: 1e-8,
        }
    }
}

/// Linear support vector regression with the squared epsilon-insensitive
/// loss, solved by a generalized Newton method.
pub fn train_svr(points: &[Vec<f64>], targets: &[f64], cfg: &SvrConfig) -> Result<LinearModel> {
    let d = check_dataset(points, targets)?;
    if points.len() < d + 1 {
        return Err(Error::DegenerateDataset(format!(
            "{} samples cannot determine {} coefficients",
            points.len(),
            d + 1
        )));
    }
    let scaler = Scaler::fit(points);
    let z = scaler.apply_all(points);
    let n = z.len();
    let mean = targets.iter().sum::<f64>() / n as f64;
    let std = (targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let eps = cfg.epsilon_frac * std;

    // design matrix with a leading bias column
    let x = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { z[i][j - 1] });
    let y = DVector::from_column_slice(targets);
    let mut theta = DVector::zeros(d + 1);
    theta[0] = mean;
    let mut reg = DMatrix::identity(d + 1, d + 1) * cfg.ridge;
    reg[(0, 0)] = 0.0;

    let mut active_prev: Vec<i8> = Vec::new();
    for _ in 0..100 {
        let r = &x * &theta - &y;
        let active: Vec<i8> = r
            .iter()
            .map(|&ri| if ri > eps { 1 } else if ri < -eps { -1 } else { 0 })
            .collect();
        // minimize sum_active (|r| - eps)^2 + ls * sum r^2 + ridge |beta|^2
        let mut h = reg.clone() + x.transpose() * &x * cfg.ls_weight;
        let mut rhs = x.transpose() * &y * cfg.ls_weight;
        for i in 0..n {
            if active[i] != 0 {
                let row = x.row(i);
                h += row.transpose() * row;
                rhs += row.transpose() * (y[i] + active[i] as f64 * eps);
            }
        }
        let next = match h.clone().cholesky() {
            Some(c) => c.solve(&rhs),
            None => h
                .pseudo_inverse(1e-12)
                .map_err(|e| Error::NumericalFailure(e.to_string()))?
                * rhs,
        };
        let converged = active == active_prev && (&next - &theta).norm() <= 1e-12 * (1.0 + theta.norm());
        theta = next;
        if converged {
            break;
        }
        active_prev = active;
    }
    let beta: Vec<f64> = theta.iter().skip(1).copied().collect();
    Ok(LinearModel::unscale(theta[0], &beta, &scaler))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}
