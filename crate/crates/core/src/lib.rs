//! Search for a marked item with a single parity query.
//!
//! Every register of an `eta`-fold equal superposition is phase-kicked by one
//! evaluation of the parity query `f~(T) = |{x in T : f(x) = 1}| mod 2` on the
//! incidence vector of the register contents, then inverted about its average.
//! Measuring all registers and taking the most frequent value finds a marked
//! item with high probability once `eta` is of order `N (log N)^2`.
//!
//! Modules:
//! - [`oracle`]: predicates, incidence vectors, the parity query and the
//!   identity that makes the phase factorize.
//! - [`statevector`]: the dense simulator.
//! - [`circuit`]: the gate list, its execution, measurement and majority vote.
//! - [`analytic`]: closed-form amplitudes and success probabilities.
//! - [`complexity`]: gate counts and query-count comparison.
//! - [`cli`]: configuration and result documents behind the binary.

pub mod analytic;
pub mod circuit;
pub mod cli;
pub mod complexity;
mod error;
pub mod oracle;
pub mod statevector;

pub use error::{Error, Result};
