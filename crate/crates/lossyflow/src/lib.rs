//! Lossy generalized network flow solved by a dual path-following
//! interior-point method that tolerates approximate linear-system solves.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`] — sparse symmetric matrices, two-nonzero factors, the matrix
//!   norm, diagonal-dominance tests, and the approximate-solver contract with
//!   interchangeable iterative (PCG) and direct backends.
//! * [`mmatrix`] — linear systems in symmetric M-matrices given a factor
//!   `M = A Aᵀ`, reduced by randomized diagonal scaling to diagonally
//!   dominant systems, plus the Schur/Sherman–Morrison solver for the
//!   augmented matrices the interior-point method produces.
//! * [`ipm`] — the short-step dual path-following method, generic over a
//!   pluggable linear-system backend.
//! * [`genflow`] — generalized (lossy) max-flow and min-cost flow: network
//!   preprocessing, LP construction, the structured system backend, and
//!   approximate-to-exact flow repair.
//! * [`exactflow`] — exact standard (unit-multiplier) max-flow and min-cost
//!   flow via cost perturbation and rounding, with combinatorial oracles.

pub mod exactflow;
pub mod genflow;
pub mod ipm;
pub mod linalg;
pub mod mmatrix;
