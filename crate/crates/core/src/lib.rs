//! Surface-code fidelity under a correlated bosonic bath.
//!
//! The pipeline runs bath correlators → effective Ising couplings → exact
//! restricted partition sums → fidelity curves, with cluster mean-field
//! threshold estimates on top.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod cam;
pub mod cli;
pub mod lattice;
pub mod spinmodel;
