// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the library layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("length mismatch for {what}: expected {expected}, got {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("operator is not Hermitian: max |M - M^†| = {deviation:e} > {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("negative rate {value} for jump channel {channel}")]
    NegativeRate { channel: usize, value: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration aborted at t = {t}: {reason} (reduce the step size)")]
    IntegrationFailure { t: f64, reason: String },

    #[error(
        "ill-separated spectrum: block {block} spreads {spread:e} > cluster_tol/2 = {half_tol:e}"
    )]
    AmbiguousClustering {
        block: usize,
        spread: f64,
        half_tol: f64,
    },

    #[error("invalid block selection: {0}")]
    InvalidSelection(String),

    #[error("selected blocks carry zero weight (Tr[P rho P] = {0:e})")]
    ZeroWeight(f64),

    #[error("block crossing at t = {t}: selected eigenvalues approach the rest within {gap:e}")]
    BlockCrossing { t: f64, gap: f64 },

    #[error(
        "finite-difference step too coarse at t = {t}: anti-Hermitian part {deviation:e} > {tol:e}"
    )]
    StepTooCoarse { t: f64, deviation: f64, tol: f64 },

    #[error("invalid multiplicity signature: {0}")]
    InvalidSignature(String),

    #[error("coordinate mode {mode} incompatible with dimension {n}: {reason}")]
    ModeIncompatible {
        mode: &'static str,
        n: usize,
        reason: &'static str,
    },

    #[error("base point incompatible with the manifold: {0}")]
    IncompatibleBasePoint(String),

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error(
        "unsupported vector field of degree {0}: the closure engine handles linear fields only"
    )]
    UnsupportedDegree(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
