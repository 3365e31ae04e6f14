// SPDX-License-Identifier: Apache-2.0

//! Open-system simulation and geometry of decoherence-free manifolds.
//!
//! Everything numerical is generic over the real scalar ([`scalar::Real`],
//! `f32` or `f64`); the aliases below fix it to `f64`.

pub mod bloch;
pub mod claims;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod lindblad;
pub mod presets;
pub mod reach;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};

pub type ComplexMatrix = linalg::ComplexMatrix<f64>;
pub type RealMatrix = linalg::RealMatrix<f64>;
pub type Hermitian = linalg::Hermitian<f64>;
pub type DensityMatrix = linalg::DensityMatrix<f64>;
pub type LindbladModel = lindblad::LindbladModel<f64>;
pub type Trajectory = lindblad::Trajectory<f64>;
pub type ControlSchedule = lindblad::ControlSchedule<f64>;
pub type Signal = lindblad::Signal<f64>;
pub type BlockSpectrum = spectral::BlockSpectrum<f64>;
pub type EigenframePath = spectral::EigenframePath<f64>;
pub type BilinearModel = bloch::BilinearModel<f64>;
pub type MatrixSpan = reach::MatrixSpan<f64>;
pub type ClosureReport = reach::ClosureReport<f64>;
