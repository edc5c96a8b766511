//! Maximum-likelihood logistic regression in high dimension.
//!
//! The crate bundles the numerical pieces needed to study when the logistic
//! MLE exists and how fast it converges:
//!
//! - [`logistic`]: stable sigmoid/loss primitives and empirical risk derivatives;
//! - [`spectral`]: the structured whitening matrix `H = B⁻³u*u*ᵀ + B⁻¹(I − u*u*ᵀ)`;
//! - [`gaussian`]: Gaussian Fisher-information components `c0(β)`, `c1(β)`;
//! - [`designs`]: design samplers and label mechanisms;
//! - [`separation`], [`newton`], [`localization`]: existence detection, fitting
//!   and the localization certificate;
//! - [`theory`]: `ψ`, the phase boundary `h(β)`, statistical dimension and
//!   population risks;
//! - [`audit`]: Monte Carlo auditors for design regularity and deviation
//!   experiments.

pub mod audit;
pub mod data;
pub mod designs;
pub mod error;
mod fastmath;
pub mod gaussian;
pub mod linalg;
pub mod localization;
pub mod logistic;
pub mod newton;
pub mod quad;
pub mod rng;
pub mod separation;
pub mod simplex;
pub mod spectral;
pub mod stats;
mod sweep;
pub mod theory;

pub use data::{Dataset, DesignMatrix};
pub use designs::{DesignKind, DesignSpec, LabelLaw};
pub use error::{Error, Result};
pub use logistic::ModelParams;
pub use newton::{fit_mle, FitOptions, FitResult, FitStatus};
pub use rng::SeededRng;
pub use separation::{check_separation, SeparationResult, SeparationStatus};
pub use spectral::StructuredSpectralMatrix;

/// Euler's number; the floor of the signal strength `B = max{e, ‖θ*‖}`.
pub const E: f64 = std::f64::consts::E;

/// Signal strength convention shared by every consumer.
pub fn signal_strength(theta_norm: f64) -> f64 {
    theta_norm.max(E)
}
