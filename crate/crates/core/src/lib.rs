//! Time-evolution operators of time-dependent finite-dimensional
//! Hamiltonians by the generalized adiabatic product expansion.
//!
//! The generic engine lives in [`expansion`]; [`twolevel`], [`oscillator`]
//! and [`stark`] hold closed forms for the exactly tractable families, and
//! [`oracle`] is an independent Runge–Kutta propagator used as ground truth.

pub mod error;
pub mod expansion;
pub mod expr;
pub mod grid;
pub mod linops;
pub mod oracle;
pub mod oscillator;
pub mod signal;
pub mod stark;
pub mod twolevel;

pub use error::{Error, Result};
pub use grid::Grid;
pub use linops::{CMatrix, C64};
pub use signal::{HamiltonianSignal, PropagatorTable};
