//! Exact line solutions of the compressible Euler and Euler-Poisson
//! equations with multiple γ-law pressure, and tools to verify them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eos;
pub mod exact;
pub mod fvsolver;
pub mod numerics;
pub mod profiles;
pub mod residual;
