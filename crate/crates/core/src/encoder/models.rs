use super::{big_m_value, range, Norm, RobustConfig};
use crate::error::Result;
use crate::learners::{GbmEnsemble, LinearModel, Mlp, ObliqueTree, Task};
use crate::milp::{MilpModel, RegistryEntry, SocRow, VarKind};
use crate::model::Sense;

/// Where an encoded model ends up in the MILP.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Encoded {
    /// Continuous output variable, if one was created.
    pub output: Option<usize>,
    /// Row already enforcing the classifier threshold (linear classifiers).
    pub threshold_row: Option<usize>,
}

/// Linear terms equal to `||a (.) x||_q` over the given `(milp var, a_k)`
/// terms, an upper bound on the norm, and the auxiliary variables created.
/// Coordinates whose sign is fixed by their bounds enter directly as
/// `|a_k| x_k` instead of through a magnitude variable.
fn robust_norm(milp: &mut MilpModel, label: &str, terms: &[(usize, f64)], q: Norm) -> (Vec<(usize, f64)>, f64, Vec<usize>) {
    let mags: Vec<(usize, f64, f64, Option<f64>)> = terms
        .iter()
        .filter(|t| t.1 != 0.0)
        .map(|&(j, a)| {
            let v = &milp.vars[j];
            let sign = if v.lower >= 0.0 {
                Some(a.signum())
            } else if v.upper <= 0.0 {
                Some(-a.signum())
            } else {
                None
            };
            (j, a, (a * v.lower).abs().max((a * v.upper).abs()), sign)
        })
        .collect();
    match q {
        Norm::Linf => {
            let cap = mags.iter().map(|m| m.2).fold(0.0, f64::max);
            let t = milp.add_continuous(format!("{label}_tinf"), 0.0, cap);
            for &(j, a, _, sign) in &mags {
                if sign != Some(-1.0) {
                    milp.add_row(format!("{label}_tinf_p{j}"), vec![(t, 1.0), (j, -a)], Sense::Ge, 0.0);
                }
                if sign != Some(1.0) {
                    milp.add_row(format!("{label}_tinf_m{j}"), vec![(t, 1.0), (j, a)], Sense::Ge, 0.0);
                }
            }
            (vec![(t, 1.0)], cap, vec![t])
        }
        Norm::L1 => {
            let mut out = Vec::new();
            let mut aux = Vec::new();
            let mut cap = 0.0;
            for &(j, a, m, sign) in &mags {
                cap += m;
                if let Some(s) = sign {
                    out.push((j, s * a));
                    continue;
                }
                let t = milp.add_continuous(format!("{label}_t1_{j}"), 0.0, m);
                milp.add_row(format!("{label}_t1_p{j}"), vec![(t, 1.0), (j, -a)], Sense::Ge, 0.0);
                milp.add_row(format!("{label}_t1_m{j}"), vec![(t, 1.0), (j, a)], Sense::Ge, 0.0);
                out.push((t, 1.0));
                aux.push(t);
            }
            (out, cap, aux)
        }
        Norm::L2 => {
            let cap = mags.iter().map(|m| m.2 * m.2).sum::<f64>().sqrt();
            let t = milp.add_continuous(format!("{label}_t2"), 0.0, cap);
            milp.cones.push(SocRow {
                name: format!("{label}_soc"),
                t,
                terms: mags.iter().map(|&(j, a, _, _)| (j, a)).collect(),
            });
            (vec![(t, 1.0)], cap, vec![t])
        }
    }
}

fn active(robust: Option<&RobustConfig>) -> Option<&RobustConfig> {
    robust.filter(|r| r.rho > 0.0)
}

fn output_var(milp: &mut MilpModel, label: &str, lo: f64, hi: f64) -> usize {
    milp.add_continuous(format!("{label}_y"), lo, hi)
}

/// Regression: `y = beta0 + beta . x`. Classification: the row
/// `beta0 + beta . x - rho ||beta (.) x||_q >= 0`.
pub fn encode_linear_model(
    m: &LinearModel,
    task: Task,
    milp: &mut MilpModel,
    inputs: &[usize],
    label: &str,
    robust: Option<&RobustConfig>,
) -> Result<Encoded> {
    let terms: Vec<(usize, f64)> = inputs.iter().copied().zip(m.beta.iter().copied()).collect();
    let mut entry = RegistryEntry { label: label.into(), ..Default::default() };
    let enc = match task {
        Task::Regression => {
            let (lo, hi) = range(milp, &terms);
            let y = output_var(milp, label, m.beta0 + lo, m.beta0 + hi);
            let mut row = terms.clone();
            row.push((y, -1.0));
            milp.add_row(format!("{label}_def"), row, Sense::Eq, -m.beta0);
            entry.output = Some(y);
            Encoded { output: Some(y), threshold_row: None }
        }
        Task::Classification => {
            let mut row = terms.clone();
            if let Some(r) = active(robust).filter(|r| r.linear) {
                let q = r.p.dual();
                r.check_builtin(q)?;
                let (norm, _, aux) = robust_norm(milp, label, &terms, q);
                entry.auxiliary.extend(aux);
                row.extend(norm.iter().map(|&(t, c)| (t, -r.rho * c)));
            }
            let k = milp.add_row(format!("{label}_svc"), row, Sense::Ge, -m.beta0);
            Encoded { output: None, threshold_row: Some(k) }
        }
    };
    milp.registry.push(entry);
    Ok(enc)
}

/// One binary per leaf; the selected leaf's split rows are enforced with
/// big-M constants, everything else is switched off. Output is
/// `sum_i p_i z_i`.
pub fn encode_tree(
    t: &ObliqueTree,
    milp: &mut MilpModel,
    inputs: &[usize],
    label: &str,
    robust: Option<&RobustConfig>,
    strict_eps: f64,
) -> Result<Encoded> {
    let mut entry = RegistryEntry { label: label.into(), ..Default::default() };
    let leaves = t.leaves();
    if leaves.len() == 1 {
        let p = leaves[0].value;
        let y = output_var(milp, label, p, p);
        entry.output = Some(y);
        milp.registry.push(entry);
        return Ok(Encoded { output: Some(y), threshold_row: None });
    }
    let rob = active(robust).filter(|r| r.trees);
    if let Some(r) = rob {
        r.check_builtin(r.p.dual())?;
    }
    let (pmin, pmax) = leaves
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| (lo.min(l.value), hi.max(l.value)));
    let y = output_var(milp, label, pmin, pmax);
    entry.output = Some(y);
    let z: Vec<usize> = (0..leaves.len())
        .map(|i| milp.add_binary(format!("{label}_z{i}")))
        .collect();
    entry.binaries = z.clone();
    milp.add_row(format!("{label}_one"), z.iter().map(|&v| (v, 1.0)).collect(), Sense::Eq, 1.0);
    let mut def: Vec<(usize, f64)> = z.iter().zip(&leaves).map(|(&v, l)| (v, l.value)).collect();
    def.push((y, -1.0));
    milp.add_row(format!("{label}_def"), def, Sense::Eq, 0.0);

    let lower: Vec<f64> = inputs.iter().map(|&j| milp.vars[j].lower).collect();
    let upper: Vec<f64> = inputs.iter().map(|&j| milp.vars[j].upper).collect();
    // robust magnitude variables are shared by all leaves below a split
    let mut norms: Vec<Option<(Vec<(usize, f64)>, f64)>> = vec![None; t.nodes.len()];
    for (i, leaf) in leaves.iter().enumerate() {
        for &(node, went_left) in &leaf.splits {
            let (a, b) = t.split(node);
            let terms: Vec<(usize, f64)> = inputs.iter().copied().zip(a.iter().copied()).collect();
            let mut row = terms.clone();
            let mut extra = 0.0;
            if let Some(r) = rob {
                if norms[node].is_none() {
                    let (nt, cap, aux) = robust_norm(milp, &format!("{label}_n{node}"), &terms, r.p.dual());
                    entry.auxiliary.extend(aux);
                    norms[node] = Some((nt, cap));
                }
                let (nt, cap) = norms[node].as_ref().unwrap();
                let sign = if went_left { 1.0 } else { -1.0 };
                row.extend(nt.iter().map(|&(v, c)| (v, sign * r.rho * c)));
                extra = 1.01 * r.rho * cap;
            }
            let norm_a = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let eps = strict_eps * norm_a;
            let m = big_m_value(a, b, &lower, &upper) + extra + eps;
            entry.big_m.push(m);
            if went_left {
                // a.x (+ rho t) <= b + M (1 - z)
                row.push((z[i], m));
                milp.add_row(format!("{label}_l{i}_{node}"), row, Sense::Le, b + m);
            } else {
                // a.x (- rho t) >= b + eps - M (1 - z)
                row.push((z[i], -m));
                milp.add_row(format!("{label}_r{i}_{node}"), row, Sense::Ge, b + eps - m);
            }
        }
    }
    milp.registry.push(entry);
    Ok(Encoded { output: Some(y), threshold_row: None })
}

/// Each tree encoded as a regressor, linked by `y = base + sum a_i y_i`.
pub fn encode_gbm(
    g: &GbmEnsemble,
    milp: &mut MilpModel,
    inputs: &[usize],
    label: &str,
    robust: Option<&RobustConfig>,
    strict_eps: f64,
) -> Result<Encoded> {
    let mut link = Vec::new();
    let (mut lo, mut hi) = (g.base, g.base);
    for (k, (t, &w)) in g.trees.iter().zip(&g.weights).enumerate() {
        let e = encode_tree(t, milp, inputs, &format!("{label}_t{k}"), robust, strict_eps)?;
        let yk = e.output.expect("trees always have an output");
        let (a, b) = (w * milp.vars[yk].lower, w * milp.vars[yk].upper);
        lo += a.min(b);
        hi += a.max(b);
        link.push((yk, w));
    }
    let y = output_var(milp, label, lo, hi);
    link.push((y, -1.0));
    milp.add_row(format!("{label}_def"), link, Sense::Eq, -g.base);
    milp.registry.push(RegistryEntry {
        label: label.into(),
        output: Some(y),
        ..Default::default()
    });
    Ok(Encoded { output: Some(y), threshold_row: None })
}

/// Big-M ReLU encoding with per-neuron constants from interval bounds of the
/// pre-activations. Neurons that are provably inactive are dropped and
/// provably active ones become linear.
pub fn encode_mlp(m: &Mlp, milp: &mut MilpModel, inputs: &[usize], label: &str) -> Result<Encoded> {
    let mut entry = RegistryEntry { label: label.into(), ..Default::default() };
    // current layer values as affine forms over MILP variables
    let mut values: Vec<(Vec<(usize, f64)>, f64)> = inputs.iter().map(|&j| (vec![(j, 1.0)], 0.0)).collect();
    let nl = m.layers.len();
    for (l, layer) in m.layers.iter().enumerate() {
        let mut next = Vec::with_capacity(layer.outputs());
        for (i, (w, &b)) in layer.weights.iter().zip(&layer.bias).enumerate() {
            let mut terms = Vec::new();
            let mut c = b;
            for (wj, (vt, vc)) in w.iter().zip(&values) {
                if *wj == 0.0 {
                    continue;
                }
                c += wj * vc;
                terms.extend(vt.iter().map(|&(j, a)| (j, wj * a)));
            }
            let terms = crate::milp::model::merge_terms(terms);
            if l + 1 == nl {
                next.push((terms, c));
                continue;
            }
            let (lo, hi) = range(milp, &terms);
            let (lo, hi) = (lo + c, hi + c);
            let name = format!("{label}_h{l}_{i}");
            if hi <= 0.0 {
                next.push((Vec::new(), 0.0));
            } else if lo >= 0.0 {
                next.push((terms, c));
            } else {
                let u = milp.add_continuous(&name, 0.0, hi);
                let z = milp.add_var(format!("{name}_z"), VarKind::Binary, 0.0, 1.0);
                entry.auxiliary.push(u);
                entry.binaries.push(z);
                let (m_up, m_lo) = (1.01 * hi, -1.01 * lo);
                entry.big_m.push(m_up.max(m_lo));
                let mut r = terms.clone();
                r.push((u, -1.0));
                // u >= pre
                milp.add_row(format!("{name}_ge"), r.clone(), Sense::Le, -c);
                // u <= pre + M (1 - z)
                let mut r2: Vec<(usize, f64)> = r.iter().map(|&(j, a)| (j, -a)).collect();
                r2.push((z, m_lo));
                milp.add_row(format!("{name}_le"), r2, Sense::Le, c + m_lo);
                // u <= M z
                milp.add_row(format!("{name}_on"), vec![(u, 1.0), (z, -m_up)], Sense::Le, 0.0);
                next.push((vec![(u, 1.0)], 0.0));
            }
        }
        values = next;
    }
    let (terms, c) = values.into_iter().next().expect("single output");
    let (lo, hi) = range(milp, &terms);
    let y = output_var(milp, label, lo + c, hi + c);
    let mut row = terms;
    row.push((y, -1.0));
    milp.add_row(format!("{label}_def"), row, Sense::Eq, -c);
    entry.output = Some(y);
    milp.registry.push(entry);
    Ok(Encoded { output: Some(y), threshold_row: None })
}
