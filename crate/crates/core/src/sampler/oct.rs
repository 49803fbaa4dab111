use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{derive_seed, find_interior_point, hit_and_run, subset, Polyhedron, SamplerConfig};
use crate::error::{Error, Result};
use crate::learners::ObliqueTree;

/// Result of one round of committee sampling.
#[derive(Clone, Debug)]
pub struct OctRound {
    pub committee: Vec<ObliqueTree>,
    /// Leaf node of each committee tree, one tuple per sampled polyhedron.
    pub leaf_tuples: Vec<Vec<usize>>,
    pub polyhedra: Vec<Polyhedron>,
    /// New points, not yet labeled.
    pub points: Vec<Vec<f64>>,
    /// Index into `polyhedra` for each new point.
    pub source: Vec<usize>,
}

/// `(P, N)`: how many committee trees predict feasible and infeasible at `x`.
pub fn committee_votes(committee: &[ObliqueTree], x: &[f64]) -> (usize, usize) {
    let p = committee.iter().filter(|t| t.predict(x) >= 0.5).count();
    (p, committee.len() - p)
}

/// One round of committee sampling.
///
/// Trains `cfg.committee` trees on random subsets, keeps the samples where
/// the vote margin `|P - N|` is at most `K tau`, intersects the leaf
/// polyhedra containing each such sample, and runs hit-and-run inside every
/// distinct intersection. Emitted points always land in the same leaves as
/// the sample that produced their polyhedron.
pub fn oct_adaptive_sample<F>(
    points: &[Vec<f64>],
    labels: &[f64],
    lower: &[f64],
    upper: &[f64],
    cfg: &SamplerConfig,
    trainer: F,
) -> Result<OctRound>
where
    F: Fn(&[Vec<f64>], &[f64]) -> Result<ObliqueTree>,
{
    let k = cfg.committee;
    if k < 2 {
        return Err(Error::Schema("committee needs at least two trees".into()));
    }
    let n = points.len();
    let c = cfg.subset_size.unwrap_or_else(|| n.min(50.max(n / 2))).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut committee = Vec::with_capacity(k);
    for _ in 0..k {
        let idx = subset(n, c, &mut rng);
        let xs: Vec<Vec<f64>> = idx.iter().map(|&i| points[i].clone()).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| labels[i]).collect();
        committee.push(trainer(&xs, &ys)?);
    }
    Ok(sample_disagreement(committee, points, lower, upper, cfg))
}

/// Steps after committee training; exposed so hand-built committees can be
/// sampled directly.
pub fn sample_disagreement(
    committee: Vec<ObliqueTree>,
    points: &[Vec<f64>],
    lower: &[f64],
    upper: &[f64],
    cfg: &SamplerConfig,
) -> OctRound {
    let k = committee.len() as f64;
    let mut seen = HashSet::new();
    let mut round = OctRound {
        committee,
        leaf_tuples: Vec::new(),
        polyhedra: Vec::new(),
        points: Vec::new(),
        source: Vec::new(),
    };
    for x in points {
        if round.polyhedra.len() >= cfg.max_polyhedra {
            break;
        }
        let (p, q) = committee_votes(&round.committee, x);
        if (p as f64 - q as f64).abs() > k * cfg.tau {
            continue;
        }
        let tuple: Vec<usize> = round.committee.iter().map(|t| t.leaf_of(x)).collect();
        if !seen.insert(tuple.clone()) {
            continue;
        }
        let mut rows = Vec::new();
        for (t, &leaf) in round.committee.iter().zip(&tuple) {
            let path = t.leaves().into_iter().find(|l| l.node == leaf).expect("leaf exists");
            rows.extend(t.leaf_rows(&path));
        }
        let poly = Polyhedron::new(rows, lower.to_vec(), upper.to_vec());
        let id = round.polyhedra.len();
        round.polyhedra.push(poly);
        round.leaf_tuples.push(tuple.clone());
        let poly = &round.polyhedra[id];
        let start = match find_interior_point(poly) {
            Ok((c, _)) => c,
            Err(e) => {
                log::debug!("skipping polyhedron {id}: {e}");
                continue;
            }
        };
        let seed = derive_seed(cfg.seed, id as u64 + 1);
        match hit_and_run(poly, &start, cfg.per_polyhedron, cfg.burn_in, seed) {
            Ok(pts) => {
                for y in pts {
                    let same = round.committee.iter().zip(&tuple).all(|(t, &leaf)| t.leaf_of(&y) == leaf);
                    if same {
                        round.points.push(y);
                        round.source.push(id);
                    }
                }
            }
            Err(e) => log::debug!("skipping polyhedron {id}: {e}"),
        }
    }
    round
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::TreeNode;

    fn stump(b: f64) -> ObliqueTree {
        ObliqueTree {
            dim: 1,
            nodes: vec![
                TreeNode::Split { a: vec![1.0], b, left: 1, right: 2 },
                TreeNode::Leaf { value: 0.0 },
                TreeNode::Leaf { value: 1.0 },
            ],
        }
    }

    #[test]
    fn identical_committee_adds_nothing() {
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 19.0]).collect();
        let round = sample_disagreement(vec![stump(0.5); 5], &pts, &[0.0], &[1.0], &SamplerConfig::default());
        assert!(round.polyhedra.is_empty() && round.points.is_empty());
    }

    #[test]
    fn disagreement_region_is_sampled() {
        // stumps split at 0.4 and 0.6 disagree only on (0.4, 0.6]
        let pts = vec![vec![0.1], vec![0.5], vec![0.9]];
        let round = sample_disagreement(vec![stump(0.4), stump(0.6)], &pts, &[0.0], &[1.0], &SamplerConfig::default());
        assert_eq!(round.polyhedra.len(), 1);
        assert_eq!(round.points.len(), 10);
        for (x, &s) in round.points.iter().zip(&round.source) {
            assert!(x[0] > 0.4 && x[0] <= 0.6);
            assert!(round.polyhedra[s].min_slack(x) >= -1e-9);
            let (p, n) = committee_votes(&round.committee, x);
            assert!((p as f64 - n as f64).abs() <= 2.0 * 0.5);
        }
    }
}
