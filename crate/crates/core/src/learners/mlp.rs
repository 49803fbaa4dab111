use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dataset, Scaler, Task};
use crate::error::Result;

/// Dense layer, `weights[i][j]` maps input `j` to output `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Layer {
        Layer {
            weights: vec![vec![0.0; inputs]; outputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, |r| r.len())
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(v).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }
}

/// ReLU network with a single linear output (a value or a logit).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut v = x.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            v = layer.apply(&v);
            if k + 1 < self.layers.len() {
                v.iter_mut().for_each(|a| *a = a.max(0.0));
            }
        }
        v[0]
    }

    /// Post-activation values of every hidden layer.
    pub fn hidden_activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        let mut v = x.to_vec();
        for layer in &self.layers[..self.layers.len() - 1] {
            v = layer.apply(&v);
            v.iter_mut().for_each(|a| *a = a.max(0.0));
            out.push(v.clone());
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![8],
            epochs: 300,
            learning_rate: 0.01,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// Adam on mean squared error (regression, standardized targets) or binary
/// cross-entropy on the output logit (classification). Inputs are mapped to
/// `[-1, 1]` during training; both affine maps are folded into the returned
/// weights.
pub fn train_mlp(points: &[Vec<f64>], targets: &[f64], task: Task, cfg: &MlpConfig) -> Result<Mlp> {
    let d = check_dataset(points, targets)?;
    let scaler = Scaler::fit(points);
    let z: Vec<Vec<f64>> = scaler
        .apply_all(points)
        .into_iter()
        .map(|p| p.into_iter().map(|v| 2.0 * v - 1.0).collect())
        .collect();
    let n = z.len();
    let (mu, sigma) = match task {
        Task::Regression => {
            let mu = targets.iter().sum::<f64>() / n as f64;
            let var = targets.iter().map(|t| (t - mu).powi(2)).sum::<f64>() / n as f64;
            (mu, if var > 1e-24 { var.sqrt() } else { 1.0 })
        }
        Task::Classification => (0.0, 1.0),
    };
    let y: Vec<f64> = match task {
        Task::Regression => targets.iter().map(|t| (t - mu) / sigma).collect(),
        Task::Classification => targets.iter().map(|&t| (t >= 0.5) as u8 as f64).collect(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sizes = vec![d];
    sizes.extend(&cfg.hidden);
    sizes.push(1);
    let mut layers: Vec<Layer> = sizes
        .windows(2)
        .map(|w| {
            let limit = (6.0 / w[0].max(1) as f64).sqrt();
            let mut l = Layer::zeros(w[0], w[1]);
            for row in l.weights.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.random_range(-limit..limit);
                }
            }
            l
        })
        .collect();

    let mut adam = Adam::new(&layers, cfg.learning_rate);
    let mut order: Vec<usize> = (0..n).collect();
    let batch = cfg.batch_size.max(1);
    let mut grads: Vec<Layer> = layers.iter().map(|l| Layer::zeros(l.inputs(), l.outputs())).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            for g in grads.iter_mut() {
                g.weights.iter_mut().for_each(|r| r.fill(0.0));
                g.bias.fill(0.0);
            }
            for &i in chunk {
                backprop(&layers, &z[i], y[i], task, &mut grads);
            }
            let scale = 1.0 / chunk.len() as f64;
            adam.step(&mut layers, &grads, scale);
        }
    }

    // fold input scaling: u = W (2 (x - l) / w - 1) + b
    let first = &mut layers[0];
    for (row, b) in first.weights.iter_mut().zip(first.bias.iter_mut()) {
        for j in 0..d {
            let wj = row[j];
            *b -= wj * (2.0 * scaler.lower[j] / scaler.width[j] + 1.0);
            row[j] = 2.0 * wj / scaler.width[j];
        }
    }
    let last = layers.last_mut().unwrap();
    for v in last.weights[0].iter_mut() {
        *v *= sigma;
    }
    last.bias[0] = last.bias[0] * sigma + mu;
    Ok(Mlp { layers })
}

fn backprop(layers: &[Layer], x: &[f64], y: f64, task: Task, grads: &mut [Layer]) {
    let mut acts = vec![x.to_vec()];
    let mut pre = Vec::with_capacity(layers.len());
    for (k, layer) in layers.iter().enumerate() {
        let u = layer.apply(acts.last().unwrap());
        let v = if k + 1 < layers.len() {
            u.iter().map(|a| a.max(0.0)).collect()
        } else {
            u.clone()
        };
        pre.push(u);
        acts.push(v);
    }
    let out = acts.last().unwrap()[0];
    let mut delta = vec![match task {
        Task::Regression => out - y,
        Task::Classification => sigmoid(out) - y,
    }];
    for k in (0..layers.len()).rev() {
        let input = &acts[k];
        for (i, di) in delta.iter().enumerate() {
            grads[k].bias[i] += di;
            for (g, a) in grads[k].weights[i].iter_mut().zip(input) {
                *g += di * a;
            }
        }
        if k == 0 {
            break;
        }
        let mut next = vec![0.0; layers[k].inputs()];
        for (i, di) in delta.iter().enumerate() {
            for (j, w) in layers[k].weights[i].iter().enumerate() {
                next[j] += di * w;
            }
        }
        for (j, nj) in next.iter_mut().enumerate() {
            if pre[k - 1][j] <= 0.0 {
                *nj = 0.0;
            }
        }
        delta = next;
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

struct Adam {
    lr: f64,
    t: i32,
    m: Vec<Layer>,
    v: Vec<Layer>,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;

    fn new(layers: &[Layer], lr: f64) -> Adam {
        let zeros: Vec<Layer> = layers.iter().map(|l| Layer::zeros(l.inputs(), l.outputs())).collect();
        Adam { lr, t: 0, m: zeros.clone(), v: zeros }
    }

    fn step(&mut self, layers: &mut [Layer], grads: &[Layer], scale: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let lr = self.lr;
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            let g = g * scale;
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + 1e-8);
        };
        for k in 0..layers.len() {
            for i in 0..layers[k].outputs() {
                for j in 0..layers[k].inputs() {
                    update(
                        &mut layers[k].weights[i][j],
                        grads[k].weights[i][j],
                        &mut self.m[k].weights[i][j],
                        &mut self.v[k].weights[i][j],
                    );
                }
                update(&mut layers[k].bias[i], grads[k].bias[i], &mut self.m[k].bias[i], &mut self.v[k].bias[i]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_regression_one_hidden_node() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 49.0]).collect();
        let y: Vec<f64> = x.iter().map(|p| p[0]).collect();
        let cfg = MlpConfig { hidden: vec![1], epochs: 500, ..Default::default() };
        let m = train_mlp(&x, &y, Task::Regression, &cfg).unwrap();
        let mse: f64 = (0..=20)
            .map(|i| {
                let t = i as f64 / 20.0;
                (m.predict(&[t]) - t).powi(2)
            })
            .sum::<f64>()
            / 21.0;
        assert!(mse < 1e-2, "{mse}");
    }

    #[test]
    fn separable_classifier() {
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|i| vec![(i % 20) as f64 / 19.0, (i / 20) as f64 / 9.0])
            .collect();
        let y: Vec<f64> = pts.iter().map(|p| (p[0] + p[1] >= 1.0) as u8 as f64).collect();
        let (train, val) = pts.split_at(140);
        let m = train_mlp(train, &y[..140], Task::Classification, &MlpConfig::default()).unwrap();
        let acc = val.iter().zip(&y[140..]).filter(|(p, l)| ((m.predict(p) >= 0.0) as u8 as f64) == **l).count();
        assert!(acc as f64 / 60.0 >= 0.9, "{acc}");
    }

    #[test]
    fn deterministic_and_zero_weight_identity() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|p| p[0] - 0.01 * p[1]).collect();
        let cfg = MlpConfig { epochs: 20, ..Default::default() };
        assert_eq!(
            train_mlp(&x, &y, Task::Regression, &cfg).unwrap(),
            train_mlp(&x, &y, Task::Regression, &cfg).unwrap()
        );
        let mut zero = Mlp { layers: vec![Layer::zeros(2, 3), Layer::zeros(3, 1)] };
        zero.layers[1].bias[0] = 3.0;
        assert_eq!(zero.predict(&[5.0, -2.0]), 3.0);
    }
}
