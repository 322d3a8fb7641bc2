//! Discrete laboratory for generalized p-Laplacian energies
//! `I(u) = int (1/p) H(|grad u|^p) - G(x, u)`: P1 meshes, energy and
//! gradient assembly, descent solvers, the q-power interpolation path and
//! its convexity diagnostics, and cone classification of computed
//! solutions.

// `!(x > 0.0)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod cli;
pub mod energy;
pub mod grid;
pub mod model;
pub mod par;
pub mod paths;
pub mod solve;
