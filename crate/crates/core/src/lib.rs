//! Orthogonal polynomials, Fourier sums, Marcinkiewicz-Zygmund inequalities, Lagrange and
//! Hermite interpolation, and the finite Hilbert transform for generalized Jacobi weights
//! with logarithmic factors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod conditions;
pub mod fourier;
pub mod hilbert;
pub mod interp;
pub mod mz;
pub mod orthopoly;
pub mod quad;
pub mod sampling;
pub mod weights;
