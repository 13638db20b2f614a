// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact population kinetics for open quantum networks at their
//! nonequilibrium steady state.
//!
//! A network is a Lindblad Liouvillian plus a partition of its Hilbert space
//! into orthogonal projectors. The rate engine folds every coherence and
//! intra-component degree of freedom into a complement projector and returns
//! the time-independent rate matrix `k` that governs component populations
//! near the steady state, `dp/dt = k p`.

// negated comparisons are NaN guards
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod ness;
pub mod operator;
pub mod output;
pub mod partition;
pub mod rates;
pub mod runner;
pub mod spinboson;
pub mod vsystem;

pub use error::{Error, Result};
pub use ness::{solve_ness, NessResult};
pub use operator::{
    assemble_liouvillian, commutator_generator, devectorize, dissipator, lindblad_pair, vectorize, HilbertSpace,
    Operator, SuperOperator,
};
pub use partition::{LiouvillePartition, Partition};
pub use rates::{balance_report, qlq_restricted_solve, rate_matrix, BalanceReport, RateMatrix, Route};

/// Boltzmann constant in hartree per kelvin.
pub const BOLTZMANN_HARTREE_PER_KELVIN: f64 = 3.166811563e-6;
