//! Fractional Laplacian (−Δ)^s and logarithmic Laplacian L_Δ: pointwise
//! operators, quadratic forms, Galerkin discretizations and Dirichlet
//! eigenproblems, together with a harness for the small-order asymptotics
//! λ_{k,s} = 1 + s·λ_{k,L} + o(s).

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod fem;
pub mod forms;
pub mod harness;
pub mod operators;
pub mod quadrature;
pub mod spectra;
pub mod special;
pub mod testlab;

pub use error::{Error, Result};
