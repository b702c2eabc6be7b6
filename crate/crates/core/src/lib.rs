//! A toolkit for quadratic unconstrained binary optimization (QUBO):
//! instance generation and analysis, clamping via partial assignments,
//! persistency-based size reduction, dynamic-range reduction, Gibbs-
//! distribution analysis, and exact and heuristic solvers.
//!
//! An instance is an upper-triangular weight matrix; the energy of a binary
//! vector `x` is `sum_{i<=j} Q[i][j] x_i x_j` and solvers minimize it. One
//! bit-order convention binds everything: position `p` of a bit string is
//! variable `x_p`, and the integer index of a vector reads `x_0` as the
//! least significant bit.

pub mod assignment;
pub mod bitvec;
pub mod error;
pub mod instance;
pub mod preprocessing;
pub mod probability;
pub mod qbfile;
pub mod sampling;
pub mod solving;

mod walk;

pub use bitvec::{BitMatrix, BitVector};
pub use error::{Error, Result};
pub use instance::{IsingModel, QuboInstance, Solution, WeightDistribution};
