//! Surrogate-based global optimization.
//!
//! Nonlinear constraints (and a nonlinear objective, if present) of a bounded
//! mixed-integer nonlinear program are sampled, approximated with trained
//! models that admit a mixed-integer linear representation (linear SVMs,
//! oblique decision trees, gradient boosted trees and ReLU networks), and
//! embedded into a single MILP. The MILP is optionally robustified against
//! parameter uncertainty and relaxed when infeasible, solved by a built-in
//! branch-and-bound, and the incumbent is polished with projected gradient
//! descent on the true functions.
//!
//! The crate is organized by pipeline stage:
//!
//! - [`model`]: problem representation, standard form, bound inference, labeling
//! - [`expr`]: expression parser, evaluation, reverse-mode gradients, problem files
//! - [`sampler`]: boundary, Latin hypercube, kNN secant and tree-committee sampling
//! - [`learners`]: the four surrogate families and model selection
//! - [`encoder`]: MILP encodings, robust counterparts and relaxation
//! - [`milp`]: dense simplex, branch-and-bound, LP files, external solver seam
//! - [`refiner`]: projected gradient descent with conditional momentum
//! - [`driver`]: end-to-end pipeline, grid search, benchmarks and reports
//!
//! Runnable walkthroughs of each stage live in the `examples/` directory.

pub mod driver;
pub mod encoder;
pub mod error;
pub mod expr;
pub mod learners;
pub mod milp;
pub mod model;
pub mod refiner;
pub mod sampler;

pub use error::{Error, Result};
