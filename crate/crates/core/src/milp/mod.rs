//! Mixed-integer linear programming: simplex, branch-and-bound, LP files and
//! the external solver seam.

pub mod bnb;
pub mod external;
pub mod lp;
pub mod lp_file;
pub mod model;

pub use bnb::{solve_milp, MilpSolution, MilpStatus, SolveOptions};
pub use external::{solve, Solver};
pub use lp::{solve_lp, LpProblem, LpSolution, LpStatus};
pub use model::{MilpModel, MilpRow, MilpVar, RegistryEntry, SocRow, VarKind};
