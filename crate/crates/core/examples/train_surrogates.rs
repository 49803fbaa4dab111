//! Fit every surrogate family to one constraint and let holdout selection
//! pick the winner.
//!
//!     cargo run --example train_surrogates

use goml::driver::bench;
use goml::learners::{score, select_surrogate, stratified_split, train_family, Family, SelectConfig};
use goml::model::standardize;
use goml::sampler::{sample_constraint, SamplerConfig};

fn main() -> goml::Result<()> {
    let sp = standardize(bench::illustrative())?;
    let ds = sample_constraint(&sp, &sp.nonlinear[0], &SamplerConfig::default())?;
    let cfg = SelectConfig::default();

    let (train, test) = stratified_split(&ds.targets, ds.task, cfg.split_ratio, cfg.seed);
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        (idx.iter().map(|&i| ds.points[i].clone()).collect(), idx.iter().map(|&i| ds.targets[i]).collect())
    };
    let (xtr, ytr) = pick(&train);
    let (xte, yte) = pick(&test);
    println!("{}: {} training and {} holdout points", ds.name, xtr.len(), xte.len());
    for family in Family::ALL {
        match train_family(family, &xtr, &ytr, ds.task, &cfg) {
            Ok(m) => println!("  {family:?}: holdout accuracy {:.4}", score(&m, &xte, &yte, ds.task)),
            Err(e) => println!("  {family:?}: {e}"),
        }
    }

    let s = select_surrogate(&ds.points, &ds.targets, ds.task, &cfg)?;
    println!("selected {:?} with score {:.4}", s.family(), s.validation_score);
    Ok(())
}
