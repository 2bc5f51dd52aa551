//! Sparse recovery by constrained ℓ1 minimization, with dual certificates,
//! closed-form error bounds and a seeded Monte Carlo harness that checks
//! those bounds empirically.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod certificates;
pub mod experiments;
pub mod numerics;
pub mod solver;
pub mod sparse_model;
