use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::milp::{solve_lp, LpProblem, LpStatus};
use crate::model::Sense;

/// Margin used to close strict rows: `a . x < b` becomes `a . x <= b - 1e-7`.
pub const STRICT_MARGIN: f64 = 1e-7;

/// `a . x <= b`, or `a . x < b` when `strict`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpace {
    pub a: Vec<f64>,
    pub b: f64,
    pub strict: bool,
}

impl HalfSpace {
    pub fn new(a: Vec<f64>, b: f64, strict: bool) -> Self {
        HalfSpace { a, b, strict }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).map(|(p, q)| p * q).sum()
    }

    /// Membership with the violation allowance `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let v = self.lhs(x);
        if self.strict {
            v < self.b + tol
        } else {
            v <= self.b + tol
        }
    }

    /// Right-hand side of the closed version used for sampling.
    pub fn closed_rhs(&self) -> f64 {
        if self.strict {
            self.b - STRICT_MARGIN
        } else {
            self.b
        }
    }
}

/// Intersection of halfspaces and a box (bounds may be infinite).
#[derive(Clone, Debug, PartialEq)]
pub struct Polyhedron {
    pub rows: Vec<HalfSpace>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Polyhedron {
    pub fn new(rows: Vec<HalfSpace>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Polyhedron { rows, lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
            && self.rows.iter().all(|h| h.contains(x, tol))
    }

    /// Smallest slack over closed rows and box sides.
    pub fn min_slack(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|h| h.closed_rhs() - h.lhs(x));
        let sides = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .flat_map(|(v, (l, u))| [v - l, u - v]);
        rows.chain(sides).fold(f64::INFINITY, f64::min)
    }
}

/// Chebyshev center of the closed polyhedron: maximizes the radius `r` of a
/// ball that fits inside every row and the box.
pub fn find_interior_point(poly: &Polyhedron) -> Result<(Vec<f64>, f64)> {
    let n = poly.dim();
    let mut lp = LpProblem::new(n + 1);
    for j in 0..n {
        lp.lower[j] = f64::NEG_INFINITY;
        lp.upper[j] = f64::INFINITY;
        if poly.lower[j].is_finite() {
            lp.add_row(vec![(j, 1.0), (n, -1.0)], Sense::Ge, poly.lower[j]);
        }
        if poly.upper[j].is_finite() {
            lp.add_row(vec![(j, 1.0), (n, 1.0)], Sense::Le, poly.upper[j]);
        }
    }
    for h in &poly.rows {
        let norm = h.a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            if h.closed_rhs() < 0.0 {
                return Err(Error::EmptyPolyhedron);
            }
            continue;
        }
        let mut coeffs: Vec<(usize, f64)> = h.a.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
        coeffs.push((n, norm));
        lp.add_row(coeffs, Sense::Le, h.closed_rhs());
    }
    lp.objective[n] = 1.0;
    lp.minimize = false;
    lp.lower[n] = 0.0;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Infeasible => Err(Error::EmptyPolyhedron),
        LpStatus::Unbounded => Err(Error::NumericalFailure("polyhedron is unbounded".into())),
        LpStatus::Optimal => {
            let r = sol.x[n];
            if r <= 1e-12 {
                return Err(Error::EmptyPolyhedron);
            }
            Ok((sol.x[..n].to_vec(), r))
        }
    }
}

/// Hit-and-run chain from `x0`: after `burn_in` discarded moves, returns the
/// next `n` states. Directions are Gaussian, stretched by the box widths.
pub fn hit_and_run(poly: &Polyhedron, x0: &[f64], n: usize, burn_in: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let d = poly.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stretch: Vec<f64> = (0..d)
        .map(|j| {
            let w = poly.upper[j] - poly.lower[j];
            if w.is_finite() && w > 0.0 { w } else { 1.0 }
        })
        .collect();
    let mut x = x0.to_vec();
    let total = n + burn_in;
    let mut out = Vec::with_capacity(total);
    let mut collapsed = 0;
    let mut u = vec![0.0; d];
    while out.len() < total {
        loop {
            for (uj, s) in u.iter_mut().zip(&stretch) {
                *uj = rng.sample::<f64, _>(StandardNormal) * s;
            }
            if u.iter().any(|v| *v != 0.0) {
                break;
            }
        }
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut clip = |au: f64, slack: f64| {
            if au > 1e-300 {
                hi = hi.min(slack / au);
            } else if au < -1e-300 {
                lo = lo.max(slack / au);
            }
        };
        for j in 0..d {
            clip(u[j], poly.upper[j] - x[j]);
            clip(-u[j], x[j] - poly.lower[j]);
        }
        for h in &poly.rows {
            clip(h.lhs(&u), h.closed_rhs() - h.lhs(&x));
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NumericalFailure("hit-and-run chord is unbounded".into()));
        }
        let (lo, hi) = (lo.min(0.0), hi.max(0.0));
        if hi - lo < 1e-12 {
            collapsed += 1;
            if collapsed >= 100 {
                return Err(Error::NumericalCollapse);
            }
            continue;
        }
        collapsed = 0;
        let lam = rng.random_range(lo..=hi);
        for j in 0..d {
            x[j] = (x[j] + lam * u[j]).clamp(poly.lower[j], poly.upper[j]);
        }
        out.push(x.clone());
    }
    Ok(out.split_off(burn_in))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polyhedron {
        Polyhedron::new(Vec::new(), vec![0.0; 2], vec![1.0; 2])
    }

    #[test]
    fn chebyshev_centers() {
        let (c, r) = find_interior_point(&unit_square()).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-9 && (c[1] - 0.5).abs() < 1e-9 && (r - 0.5).abs() < 1e-9);
        let tri = Polyhedron::new(
            vec![
                HalfSpace::new(vec![-1.0, 0.0], 0.0, false),
                HalfSpace::new(vec![0.0, -1.0], 0.0, false),
                HalfSpace::new(vec![1.0, 1.0], 1.0, false),
            ],
            vec![f64::NEG_INFINITY; 2],
            vec![f64::INFINITY; 2],
        );
        let (c, r) = find_interior_point(&tri).unwrap();
        let want = 1.0 / (2.0 + 2f64.sqrt());
        assert!((r - want).abs() < 1e-9 && (c[0] - want).abs() < 1e-9 && (c[1] - want).abs() < 1e-9);
        let empty = Polyhedron::new(
            vec![HalfSpace::new(vec![1.0], 0.0, false), HalfSpace::new(vec![-1.0], -1.0, false)],
            vec![-5.0],
            vec![5.0],
        );
        assert_eq!(find_interior_point(&empty), Err(Error::EmptyPolyhedron));
    }

    #[test]
    fn chain_stays_inside_and_covers() {
        let pts = hit_and_run(&unit_square(), &[0.5, 0.5], 10_000, 0, 11).unwrap();
        assert_eq!(pts.len(), 10_000);
        for j in 0..2 {
            assert!(pts.iter().all(|p| p[j] >= -1e-9 && p[j] <= 1.0 + 1e-9));
            let mean = pts.iter().map(|p| p[j]).sum::<f64>() / 1e4;
            assert!((0.45..=0.55).contains(&mean), "{mean}");
        }
    }

    #[test]
    fn point_box_collapses() {
        let poly = Polyhedron::new(Vec::new(), vec![0.3, 0.3], vec![0.3, 0.3]);
        assert_eq!(hit_and_run(&poly, &[0.3, 0.3], 5, 0, 1), Err(Error::NumericalCollapse));
    }
}
