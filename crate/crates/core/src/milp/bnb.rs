//! Branch-and-bound over the dense simplex.
//!
//! Nodes are solved by dual-simplex re-optimization from a cached ancestor
//! tableau (or the root). The search dives depth-first until the first
//! incumbent is found and then switches to best-bound selection.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::time::{Duration, Instant};

use crate::error::Result;
use crate::milp::lp::{solve_lp, LpProblem, LpSolution, LpStatus, Simplex};
use crate::milp::model::MilpModel;

const INT_TOL: f64 = 1e-6;
const FEAS_TOL: f64 = 1e-6;
const CACHE_SIZE: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
}

#[derive(Clone, Debug)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Empty when no feasible point was found.
    pub x: Vec<f64>,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
}

impl MilpSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.x.is_empty()
    }

    fn empty(status: MilpStatus, nodes: usize) -> Self {
        MilpSolution {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            bound: f64::NAN,
            gap: f64::INFINITY,
            nodes,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub time_limit: Duration,
    pub gap_tol: f64,
    pub node_limit: usize,
    /// Known feasible point used as the first incumbent when it checks out.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            time_limit: Duration::from_secs(3600),
            gap_tol: 1e-6,
            node_limit: 1_000_000,
            warm_start: None,
        }
    }
}

impl SolveOptions {
    pub fn with_time_limit(time_limit: Duration) -> Self {
        SolveOptions {
            time_limit,
            ..Default::default()
        }
    }
}

pub fn gap(objective: f64, bound: f64) -> f64 {
    if objective.is_finite() && bound.is_finite() {
        (objective - bound).abs() / objective.abs().max(1.0)
    } else {
        f64::INFINITY
    }
}

struct Node {
    id: usize,
    parent: usize,
    depth: usize,
    /// Lower bound on the minimization objective (the parent's LP value).
    bound: f64,
    /// Cumulative `(var, lower, upper)` tightenings from the root.
    bounds: Vec<(usize, f64, f64)>,
    /// Branching that created this node: variable, up side, distance moved.
    branched: Option<(usize, bool, f64)>,
}

/// Per-variable average objective gain per unit of rounding, one side each.
struct Pseudocosts {
    sum: Vec<[f64; 2]>,
    count: Vec<[u32; 2]>,
}

impl Pseudocosts {
    fn new(n: usize) -> Self {
        Pseudocosts {
            sum: vec![[0.0; 2]; n],
            count: vec![[0; 2]; n],
        }
    }

    fn record(&mut self, j: usize, up: bool, dist: f64, gain: f64) {
        if dist > INT_TOL && gain.is_finite() {
            let s = up as usize;
            self.sum[j][s] += gain.max(0.0) / dist;
            self.count[j][s] += 1;
        }
    }

    fn side_mean(&self, s: usize) -> f64 {
        let (t, c) = self
            .sum
            .iter()
            .zip(&self.count)
            .fold((0.0, 0), |(t, c), (sm, ct)| (t + sm[s], c + ct[s]));
        if c == 0 {
            1.0
        } else {
            t / c as f64
        }
    }

    /// Product score; uninitialized sides use the mean over all variables.
    fn score(&self, j: usize, frac: f64, means: [f64; 2]) -> f64 {
        let est = |s: usize| {
            if self.count[j][s] == 0 {
                means[s]
            } else {
                self.sum[j][s] / self.count[j][s] as f64
            }
        };
        let down = est(0) * frac;
        let up = est(1) * (1.0 - frac);
        down.max(1e-6) * up.max(1e-6)
    }
}

struct HeapEntry(Node);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // max-heap: smallest bound first, then deepest, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then(self.0.depth.cmp(&other.0.depth))
            .then(other.0.id.cmp(&self.0.id))
    }
}

/// Small LRU cache of solved node tableaux keyed by node id.
struct TableauCache {
    order: VecDeque<usize>,
    map: HashMap<usize, Simplex>,
}

impl TableauCache {
    fn new() -> Self {
        TableauCache {
            order: VecDeque::new(),
            map: HashMap::new(),
        }
    }

    fn get(&self, id: usize) -> Option<&Simplex> {
        self.map.get(&id)
    }

    fn insert(&mut self, id: usize, sx: Simplex) {
        if self.order.len() >= CACHE_SIZE {
            if let Some(old) = self.order.pop_front() {
                self.map.remove(&old);
            }
        }
        self.order.push_back(id);
        self.map.insert(id, sx);
    }
}

/// Solves `model` with the built-in branch-and-bound.
pub fn solve_milp(model: &MilpModel, opts: &SolveOptions) -> Result<MilpSolution> {
    model.validate()?;
    let start = Instant::now();
    let sign = if model.minimize { 1.0 } else { -1.0 };
    let root_lp = model.relaxation()?;
    let n = model.num_vars();
    let integral: Vec<usize> = (0..n).filter(|&j| model.is_integral(j)).collect();
    let constant = sign * model.objective_constant;

    let (root_sol, root_sx) = Simplex::solve(&root_lp)?;
    match root_sol.status {
        LpStatus::Infeasible => return Ok(MilpSolution::empty(MilpStatus::Infeasible, 1)),
        LpStatus::Unbounded => return Ok(MilpSolution::empty(MilpStatus::Unbounded, 1)),
        LpStatus::Optimal => {}
    }
    let root_sx = root_sx.expect("optimal root has a tableau");

    let mut incumbent: Option<(Vec<f64>, f64)> = opts.warm_start.as_ref().and_then(|x| {
        let ok = x.len() == n
            && integral.iter().all(|&j| (x[j] - x[j].round()).abs() <= INT_TOL)
            && root_lp.max_violation(x) <= FEAS_TOL;
        ok.then(|| {
            let v = root_lp.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + constant;
            (x.clone(), v)
        })
    });
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let mut dive: Vec<Node> = Vec::new();
    let mut cache = TableauCache::new();
    let mut pseudo = Pseudocosts::new(n);
    let mut next_id = 1;
    let mut nodes = 0;
    let mut timed_out = false;
    // Smallest bound among nodes pruned without being explored (time/node limit).
    let mut open_bound = f64::INFINITY;

    let mut pending = Some((
        Node {
            id: 0,
            parent: usize::MAX,
            depth: 0,
            bound: f64::NEG_INFINITY,
            bounds: Vec::new(),
            branched: None,
        },
        Some((root_sol, root_sx.clone())),
    ));

    loop {
        let (node, presolved) = match pending.take() {
            Some(p) => p,
            None => {
                let next = if incumbent.is_none() {
                    dive.pop().or_else(|| heap.pop().map(|e| e.0))
                } else {
                    heap.pop().map(|e| e.0)
                };
                match next {
                    Some(nd) => (nd, None),
                    None => break,
                }
            }
        };
        if let Some((_, inc)) = &incumbent {
            if node.bound >= inc - opts.gap_tol * inc.abs().max(1.0) {
                continue;
            }
        }
        if start.elapsed() >= opts.time_limit || nodes >= opts.node_limit {
            timed_out = true;
            open_bound = open_bound.min(node.bound);
            for e in heap.drain() {
                open_bound = open_bound.min(e.0.bound);
            }
            for nd in dive.drain(..) {
                open_bound = open_bound.min(nd.bound);
            }
            break;
        }
        nodes += 1;

        let (sol, sx) = match presolved {
            Some((sol, sx)) => (sol, Some(sx)),
            None => solve_node(&root_lp, &root_sx, &cache, &node)?,
        };
        if sol.status != LpStatus::Optimal {
            continue;
        }
        let value = sol.objective + constant;
        if let Some((j, up, dist)) = node.branched {
            pseudo.record(j, up, dist, value - node.bound);
        }
        if let Some((_, inc)) = &incumbent {
            if value >= inc - opts.gap_tol * inc.abs().max(1.0) {
                continue;
            }
        }

        // best pseudocost score, ties to the lowest index
        let means = [pseudo.side_mean(0), pseudo.side_mean(1)];
        let mut branch: Option<(usize, f64)> = None;
        let mut best_score = f64::NEG_INFINITY;
        for &j in &integral {
            let f = sol.x[j] - sol.x[j].floor();
            if f.min(1.0 - f) <= INT_TOL {
                continue;
            }
            let sc = pseudo.score(j, f, means);
            if sc > best_score * (1.0 + 1e-12) {
                best_score = sc;
                branch = Some((j, sol.x[j]));
            }
        }

        match branch {
            None => {
                if let Some((x, v)) = polish_integral(&root_lp, &node, &sol, &integral, constant)? {
                    if incumbent.as_ref().is_none_or(|(_, inc)| v < *inc) {
                        log::debug!("incumbent {:.9} at node {}", sign * v, nodes);
                        incumbent = Some((x, v));
                        for nd in dive.drain(..) {
                            heap.push(HeapEntry(nd));
                        }
                    }
                }
            }
            Some((j, xj)) => {
                if let Some(sx) = sx {
                    cache.insert(node.id, sx);
                }
                let (lo, hi) = current_bounds(&root_lp, &node, j);
                let mut down = node.bounds.clone();
                down.push((j, lo, xj.floor()));
                let mut up = node.bounds.clone();
                up.push((j, xj.ceil(), hi));
                let mk = |bounds, id, branched| Node {
                    id,
                    parent: node.id,
                    depth: node.depth + 1,
                    bound: value,
                    bounds,
                    branched: Some(branched),
                };
                let down = mk(down, next_id, (j, false, xj - xj.floor()));
                let up = mk(up, next_id + 1, (j, true, xj.ceil() - xj));
                next_id += 2;
                if incumbent.is_none() {
                    // explore the rounding direction first
                    if xj - xj.floor() >= 0.5 {
                        dive.push(down);
                        dive.push(up);
                    } else {
                        dive.push(up);
                        dive.push(down);
                    }
                } else {
                    heap.push(HeapEntry(down));
                    heap.push(HeapEntry(up));
                }
            }
        }

        if let Some((_, inc)) = &incumbent {
            let best_open = heap.peek().map(|e| e.0.bound).unwrap_or(f64::INFINITY);
            if best_open >= inc - opts.gap_tol * inc.abs().max(1.0) {
                heap.clear();
            }
        }
    }

    Ok(match incumbent {
        Some((x, v)) => {
            let bound = if timed_out { open_bound.min(v) } else { v };
            let g = gap(v, bound);
            MilpSolution {
                status: if timed_out && g > opts.gap_tol { MilpStatus::TimeLimit } else { MilpStatus::Optimal },
                x,
                objective: sign * v,
                bound: sign * bound,
                gap: g,
                nodes,
            }
        }
        None if timed_out => {
            let mut s = MilpSolution::empty(MilpStatus::TimeLimit, nodes);
            s.bound = sign * open_bound;
            s
        }
        None => MilpSolution::empty(MilpStatus::Infeasible, nodes),
    })
}

fn current_bounds(lp: &LpProblem, node: &Node, j: usize) -> (f64, f64) {
    let mut lo = lp.lower[j];
    let mut hi = lp.upper[j];
    for &(k, l, h) in &node.bounds {
        if k == j {
            lo = l;
            hi = h;
        }
    }
    (lo, hi)
}

fn node_lp(root: &LpProblem, bounds: &[(usize, f64, f64)]) -> LpProblem {
    let mut lp = root.clone();
    for &(j, lo, hi) in bounds {
        lp.lower[j] = lo;
        lp.upper[j] = hi;
    }
    lp
}

fn solve_node(
    root_lp: &LpProblem,
    root_sx: &Simplex,
    cache: &TableauCache,
    node: &Node,
) -> Result<(LpSolution, Option<Simplex>)> {
    let mut sx = cache.get(node.parent).unwrap_or(root_sx).clone();
    if let Ok(res) = sx.reoptimize(&node.bounds, root_lp) {
        match res {
            Some(sol) if node_violation(root_lp, &node.bounds, &sol.x) <= 1e-7 => return Ok((sol, Some(sx))),
            None => {
                return Ok((
                    LpSolution {
                        status: LpStatus::Infeasible,
                        x: Vec::new(),
                        objective: f64::NAN,
                    },
                    None,
                ))
            }
            Some(_) => log::debug!("warm start residual too large, solving node from scratch"),
        }
    }
    Simplex::solve(&node_lp(root_lp, &node.bounds))
}

/// Violation of the root rows plus the node's tightened bounds.
fn node_violation(root: &LpProblem, bounds: &[(usize, f64, f64)], x: &[f64]) -> f64 {
    bounds
        .iter()
        .map(|&(j, lo, hi)| (lo - x[j]).max(x[j] - hi))
        .fold(root.max_violation(x), f64::max)
}

/// Rounds the integer coordinates and, if the rounded point drifts off the
/// rows, re-solves the LP with integers fixed.
fn polish_integral(
    root_lp: &LpProblem,
    node: &Node,
    sol: &LpSolution,
    integral: &[usize],
    constant: f64,
) -> Result<Option<(Vec<f64>, f64)>> {
    let mut lp = node_lp(root_lp, &node.bounds);
    let mut x = sol.x.clone();
    for &j in integral {
        x[j] = x[j].round();
    }
    if lp.max_violation(&x) <= FEAS_TOL {
        let v = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>() + constant;
        return Ok(Some((x, v)));
    }
    for &j in integral {
        lp.lower[j] = x[j];
        lp.upper[j] = x[j];
    }
    let fixed = solve_lp(&lp)?;
    if fixed.status != LpStatus::Optimal || lp.max_violation(&fixed.x) > FEAS_TOL {
        return Ok(None);
    }
    Ok(Some((fixed.x, fixed.objective + constant)))
}
