//! Descent methods for interval-valued functions.
//!
//! Functions `F: R^n -> K(R)` map real vectors to compact intervals. Their
//! gradient boxes are built from the partial derivatives of the two endpoint
//! functions, and a descent sequence is generated under the strict interval
//! order `[a, b] < [c, d] iff a < c and b < d`.
//!
//! ```
//! use ivdescent::{IvFunction, SolverConfig, solver};
//!
//! let f = IvFunction::example();
//! let trace = solver::run(&f, &[1.0, 1.0], &SolverConfig::default()).unwrap();
//! assert!(trace.termination.converged());
//! ```

pub mod descent;
pub mod error;
pub mod interval;
pub mod ivfunc;
pub mod linesearch;
pub mod solver;

pub use descent::{certify, criticality_oracle, is_critical, DescentCertificate, TStrategy};
pub use error::{Error, Result};
pub use interval::{Interval, IntervalBox};
pub use ivfunc::{GradientMethod, IvFunction};
pub use linesearch::LineSearchParams;
pub use solver::{SolverConfig, Termination, Trace};
