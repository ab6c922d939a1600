//! Time-certified solver for box-constrained quadratic programs.
//!
//! The solver is a feasible predictor-corrector interior-point method
//! whose worst-case iteration count is a closed-form function of the
//! problem dimension and the stopping tolerance alone — no problem data
//! enters the bound, which is what makes it usable as an execution-time
//! certificate for real-time control. Alongside the solver the crate
//! ships:
//!
//! * [`certify`] — the closed-form bound calculators;
//! * [`oracle`] — slow, exhaustive reference solvers used to validate the
//!   fast path;
//! * [`bench`] — a reproducible random-instance benchmark harness;
//! * [`mpc`] — a condensed linear-MPC closed-loop harness driving the
//!   solver the way a receding-horizon controller does;
//! * a `boxqp` command-line front end over all of the above.

pub mod bench;
pub mod certify;
pub mod ipm;
pub mod linalg;
pub mod mpc;
pub mod oracle;
pub mod problem;

pub use certify::{iteration_bound, reference_iteration_bound, CertificateQuery};
pub use ipm::{solve, SolveResult, SolveStatus};
pub use linalg::{DenseVector, SymMatrix};
pub use problem::{parse_bqp, random_boxqp, serialize_bqp, BoxQp, GeneratorConfig};
