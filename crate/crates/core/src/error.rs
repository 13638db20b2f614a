// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Every failure mode surfaced by the library.
///
/// Display strings are the diagnostic texts the CLI prints, so they are kept
/// short and stable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("incomplete partition: max |sum P_n - I| = {residual:.3e}")]
    IncompletePartition { residual: f64 },

    #[error("overlapping components: max |P_{m} P_{n} - delta P_n| = {residual:.3e}")]
    OverlappingComponents { m: usize, n: usize, residual: f64 },

    #[error("degenerate component: unpopulated projector '{name}' (tr P rho_s = {population:.3e})")]
    DegenerateComponent { name: String, population: f64 },

    #[error("steady state not unique: numerical nullity {null_dim}")]
    SteadyStateNotUnique { null_dim: usize },

    #[error("non-physical steady state: min eigenvalue {min_eig:.3e}")]
    NonPhysicalSteadyState { min_eig: f64 },

    #[error("complement operator singular: reciprocal condition {rcond:.3e}")]
    ComplementSingular { rcond: f64 },

    #[error("non-real rate: imaginary residue {residue:.3e} exceeds {bound:.3e}")]
    NonRealRate { residue: f64, bound: f64 },

    #[error("beta undefined: Gamma* = 0 with Delta = 0 and J != 0")]
    BetaUndefined,

    #[error("grouped rate undefined: vanishing denominator")]
    GroupedRateUndefined,

    #[error("no crossing between minima")]
    NoCrossing,

    #[error("cutoff too aggressive: truncated dimension {dim} < 4")]
    CutoffTooAggressive { dim: usize },

    #[error("ill-conditioned truncation: overlap condition number {cond:.3e}")]
    IllConditionedTruncation { cond: f64 },

    #[error("excitation series not converged after {terms} terms")]
    SeriesNotConverged { terms: usize },

    #[error("propagation failed: {0}")]
    PropagationFailed(String),

    #[error("unstable generator: eigenvalue with real part {re:.3e} > 0")]
    UnstableGenerator { re: f64 },

    #[error("empty window [{start:.3e}, {end:.3e}]")]
    EmptyWindow { start: f64, end: f64 },

    #[error("degenerate population trajectories: Gram condition number {cond:.3e}")]
    DegenerateTrajectories { cond: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("missing column '{column}' in {file}")]
    MissingColumn { column: String, file: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

impl From<lax::error::Error> for Error {
    fn from(e: lax::error::Error) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
