//! Feasibility datasets for nonlinear constraints.
//!
//! Stages run in order and each only adds points: box corners, a Latin
//! hypercube, secant points between opposite-label neighbours, and tree
//! committee sampling of the regions where the committee disagrees.

mod dataset;
mod oct;
mod polytope;

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::FEAS_TOL;

pub use dataset::{sample_constraint, sample_objective, Dataset, StageCount};
pub use oct::{committee_votes, oct_adaptive_sample, sample_disagreement, OctRound};
pub use polytope::{find_interior_point, hit_and_run, HalfSpace, Polyhedron, STRICT_MARGIN};

#[derive(Clone, Debug)]
pub struct SamplerConfig {
    /// At most this many box corners.
    pub corner_cap: usize,
    pub n_lh: usize,
    pub knn_k: usize,
    /// Upper limit on secant points added per constraint.
    pub knn_max_new: usize,
    /// Committee size K.
    pub committee: usize,
    /// Subset size C per committee tree; `None` uses `min(|D|, max(50, |D|/2))`.
    pub subset_size: Option<usize>,
    /// Discordance threshold tau.
    pub tau: f64,
    pub committee_depth: usize,
    pub per_polyhedron: usize,
    pub burn_in: usize,
    pub max_polyhedra: usize,
    pub oct_rounds: usize,
    pub oct_sampling: bool,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            corner_cap: 1 << 10,
            n_lh: 1000,
            knn_k: 5,
            knn_max_new: 500,
            committee: 5,
            subset_size: None,
            tau: 0.5,
            committee_depth: 4,
            per_polyhedron: 10,
            burn_in: 20,
            max_polyhedra: 100,
            oct_rounds: 1,
            oct_sampling: true,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Schema(format!("tau = {} outside [0, 1]", self.tau)));
        }
        if self.n_lh == 0 || self.knn_k == 0 || self.committee < 2 || self.per_polyhedron == 0 {
            return Err(Error::Schema("sampler counts must be positive and K >= 2".into()));
        }
        Ok(())
    }
}

/// SplitMix64 step, used to derive independent seeds from a master seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Corners of the box. With more than `cap` corners, `cap` distinct corners
/// are drawn uniformly and the box center is appended.
pub fn boundary_sample(lower: &[f64], upper: &[f64], cap: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = lower.len();
    let corner = |bits: &dyn Fn(usize) -> bool| -> Vec<f64> {
        (0..n).map(|j| if bits(j) { upper[j] } else { lower[j] }).collect()
    };
    if n < 63 && (1u64 << n) <= cap as u64 {
        return (0..1u64 << n).map(|m| corner(&|j| m >> j & 1 == 1)).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let mut out = Vec::with_capacity(cap + 1);
    while out.len() < cap {
        let bits: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        if seen.insert(bits.clone()) {
            out.push(corner(&|j| bits[j]));
        }
    }
    out.push(lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect());
    out
}

/// Latin hypercube: along every axis the `n` points fall in `n` distinct
/// equal-width strata.
pub fn lh_sample(lower: &[f64], upper: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = lower.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = vec![vec![0.0; d]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..d {
        strata.shuffle(&mut rng);
        let w = upper[j] - lower[j];
        for (p, &s) in pts.iter_mut().zip(&strata) {
            let u: f64 = rng.random();
            p[j] = (lower[j] + (s as f64 + u) / n as f64 * w).min(upper[j]);
        }
    }
    pts
}

/// Secant zero-crossings between opposite-label nearest neighbours.
///
/// `values` are constraint values `g(x)` (label 1 iff `g <= FEAS_TOL`);
/// non-finite values mark failed evaluations and are never used as secant
/// endpoints. Distances are measured after scaling each axis by the box
/// width. When more than `max_new` distinct points result, the ones from the
/// closest pairs are kept.
pub fn knn_boundary_sample(
    points: &[Vec<f64>],
    values: &[f64],
    k: usize,
    lower: &[f64],
    upper: &[f64],
    max_new: usize,
) -> Result<Vec<Vec<f64>>> {
    let feasible = |v: f64| v <= FEAS_TOL;
    if !(values.iter().any(|&v| feasible(v)) && values.iter().any(|&v| !feasible(v))) {
        return Err(Error::DegenerateDataset("secant sampling needs both labels".into()));
    }
    let d = lower.len();
    let scale: Vec<f64> = (0..d)
        .map(|j| {
            let w = upper[j] - lower[j];
            if w.is_finite() && w > 0.0 { 1.0 / w } else { 1.0 }
        })
        .collect();
    let dist = |p: &[f64], q: &[f64]| -> f64 {
        p.iter().zip(q).zip(&scale).map(|((a, b), s)| ((a - b) * s).powi(2)).sum()
    };
    let n = points.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    let mut seen_pairs = HashSet::new();
    let mut nbrs: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        nbrs.clear();
        nbrs.extend((0..n).filter(|&j| j != i).map(|j| (dist(&points[i], &points[j]), j)));
        let kk = k.min(nbrs.len());
        if kk == 0 {
            continue;
        }
        nbrs.select_nth_unstable_by(kk - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(dd, j) in &nbrs[..kk] {
            let (gi, gj) = (values[i], values[j]);
            if !gi.is_finite() || !gj.is_finite() || feasible(gi) == feasible(gj) || gi == gj {
                continue;
            }
            if seen_pairs.insert((i.min(j), i.max(j))) {
                pairs.push((dd, i.min(j), i.max(j)));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (_, i, j) in pairs {
        if out.len() >= max_new {
            break;
        }
        let (gi, gj) = (values[i], values[j]);
        let t = gi / (gi - gj);
        let x: Vec<f64> = (0..d)
            .map(|c| (points[i][c] + t * (points[j][c] - points[i][c])).clamp(lower[c], upper[c]))
            .collect();
        let dup = |q: &Vec<f64>| q.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-7);
        if !out.iter().any(dup) && !points.iter().any(dup) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Rounds the flagged coordinates to the nearest integer inside the bounds.
pub fn round_integral(points: &mut [Vec<f64>], integral: &[bool], lower: &[f64], upper: &[f64]) {
    for p in points.iter_mut() {
        for j in 0..p.len() {
            if integral[j] {
                p[j] = p[j].round().clamp(lower[j].ceil(), upper[j].floor());
            }
        }
    }
}

/// `k` distinct indices out of `n`, in increasing order.
pub(crate) fn subset(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx = index::sample(rng, n, k.min(n)).into_vec();
    idx.sort_unstable();
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_of_small_boxes() {
        let c = boundary_sample(&[0.51, 0.3], &[1.5, 1.6], 1024, 0);
        assert_eq!(c.len(), 4);
        assert!(c.contains(&vec![0.51, 1.6]) && c.contains(&vec![1.5, 0.3]));
        assert_eq!(boundary_sample(&[0.0], &[1.0], 1024, 0), vec![vec![0.0], vec![1.0]]);
    }

    #[test]
    fn capped_corners_are_distinct() {
        let pts = boundary_sample(&[0.0; 20], &[1.0; 20], 100, 9);
        assert_eq!(pts.len(), 101);
        let set: HashSet<Vec<u64>> = pts[..100].iter().map(|p| p.iter().map(|v| v.to_bits()).collect()).collect();
        assert_eq!(set.len(), 100);
        assert_eq!(pts[100], vec![0.5; 20]);
    }

    #[test]
    fn latin_hypercube_strata() {
        for n in [1, 4, 16] {
            let pts = lh_sample(&[0.0, -2.0], &[1.0, 2.0], n, 5);
            for j in 0..2 {
                let (lo, w) = if j == 0 { (0.0, 1.0) } else { (-2.0, 4.0) };
                let mut hit = vec![0; n];
                for p in &pts {
                    hit[(((p[j] - lo) / w * n as f64) as usize).min(n - 1)] += 1;
                }
                assert!(hit.iter().all(|&h| h == 1));
            }
        }
        assert_eq!(lh_sample(&[0.0], &[1.0], 8, 3), lh_sample(&[0.0], &[1.0], 8, 3));
    }

    #[test]
    fn secant_points() {
        let got = knn_boundary_sample(&[vec![0.0], vec![1.0]], &[-0.5, 0.5], 1, &[0.0], &[1.0], 10).unwrap();
        assert_eq!(got, vec![vec![0.5]]);
        let got = knn_boundary_sample(&[vec![0.0], vec![1.0]], &[-1.0, 3.0], 1, &[0.0], &[1.0], 10).unwrap();
        assert_eq!(got, vec![vec![0.25]]);
        assert!(matches!(
            knn_boundary_sample(&[vec![0.0], vec![1.0]], &[-1.0, -3.0], 1, &[0.0], &[1.0], 10),
            Err(Error::DegenerateDataset(_))
        ));
    }
}
