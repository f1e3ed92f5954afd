//! Local Bayesian-network structure models.
//!
//! This crate compiles declarative local-structure specifications (parent
//! partitions, deterministic gates, mechanism CPTs, weights) into fully
//! materialized conditional probability tables, and verifies them through
//! a brute-force joint-distribution oracle, d-separation checks and
//! parameter accounting.
//!
//! The crate is `no_std` (with `alloc`); all IO and file formats live in
//! the companion `sici-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod compile;
pub mod error;
pub mod gates;
pub mod oracle;
pub mod spec;
pub mod state;
pub mod structure;

#[cfg(feature = "testgen")]
pub mod testgen;

pub use compile::compile;
pub use error::Error;
pub use gates::{Gate, GateFn};
pub use oracle::{oracle_cpt, MiniBn};
pub use spec::{LocalSpec, Variant};
pub use state::{ConfigIndexer, Cpt, StateSpace, VarKind, VariableDecl};
pub use structure::{Dag, Surjection};

/// Row-sum tolerance used throughout when none is given explicitly.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Tolerance for comparing stochastic compilation routes against each other.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-12;

pub(crate) fn fabs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}
