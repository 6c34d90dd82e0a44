//! Interior-point solver for conic programs over products of nonnegative
//! orthants and three-dimensional power cones.
//!
//! ```
//! use htensor_conic::{solve, ConicProblem, PowerCone3, SolveStatus, SolverConfig};
//!
//! // maximize z  s.t.  x1 = 4, x2 = 9, sqrt(x1 x2) >= |z|
//! let mut p = ConicProblem::new();
//! let v = p.add_vars(3);
//! p.add_power(PowerCone3::new(0.5).unwrap(), v[0], v[1], v[2]);
//! p.add_eq(vec![(v[0], 1.0)], 4.0);
//! p.add_eq(vec![(v[1], 1.0)], 9.0);
//! p.add_objective(v[2], 1.0);
//! let res = solve(&p, &SolverConfig::default()).unwrap();
//! assert_eq!(res.status, SolveStatus::Optimal);
//! assert!((res.obj - 6.0).abs() < 1e-6);
//! ```

mod cone;
mod error;
mod ldl;
mod presolve;
mod problem;
mod solver;
pub mod tower;

pub use cone::PowerCone3;
pub use error::ConicError;
pub use problem::{check_solution, ConeBlock, ConeKind, ConicProblem, EqRow, ResidualReport};
pub use solver::{solve, IterateRecord, PowerMode, Residuals, SolveResult, SolveStatus, SolverConfig};
