//! Spectral simulator and integrable-structure analyzer for the quadratic
//! Szegő equation
//!
//! ```text
//! i ∂ₜu = 2J Π(|u|²) + J̄ u²,    J = (u²|u),
//! ```
//!
//! on the circle, with `u` in the Hardy space `L²₊(𝕋)`.
//!
//! * [`spectrum`]: truncated Fourier coefficient arithmetic and the
//!   conserved quantities `Q`, `M`, `E`.
//! * [`hankel`]: Hankel, shifted-Hankel and Toeplitz finite sections and
//!   their singular spectra.
//! * [`flow`]: the Galerkin-truncated flow and its audits (conservation,
//!   Lax residual, L² Lipschitz ratio).
//! * [`l1`]: the reduced dynamics on `L(1)` and the turbulence criterion.
//! * [`lab`]: configuration, experiment orchestration and output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod conv;
pub mod error;
pub mod fit;
pub mod flow;
pub mod hankel;
pub mod integrate;
pub mod l1;
pub mod lab;
pub mod spectrum;

pub use error::{Error, Result};
pub use flow::{FlowConfig, TrajectoryRecord, TrajectoryRow};
pub use integrate::Integrator;
pub use l1::RationalState;
pub use spectrum::{ConservedSet, SpectrumPlus, TwoSidedSpectrum, C64};
