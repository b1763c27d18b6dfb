//! Numerical laboratory for superdiffusive tracer dynamics in two-dimensional
//! random environments.
//!
//! Three closely related models are covered, all of them diffusions whose
//! effective drift is a stationary, mean-zero, divergence-free (or gradient)
//! Gaussian vector field obtained by mollifying white noise or a Gaussian free
//! field:
//!
//! * `srbp`: the self-repelling Brownian polymer, dX = -(grad V * L_t)(X) dt + dB,
//!   where L_t is the occupation measure of the path itself;
//! * `srbp_aniso`: the same self-interaction acting only through coordinate 1;
//! * `dcgf`: a passive tracer in the curl of a mollified Gaussian free field,
//!   dX = F(X) dt + dB with F = curl (V * GFF) frozen in time.
//!
//! The crate provides (a) exact spectral sampling of the three stationary
//! environments on a periodic grid, (b) Euler-Maruyama integration of the
//! dynamics with an occupation-time grid for the self-interaction, (c)
//! deterministic quadrature of the variational resolvent bounds that control
//! the super-diffusive rates, and (d) the scaling consistency machinery
//! (exponent tables, residual regression, Laplace transforms of mean squared
//! displacement series, exponent fitting).

pub mod covariance;
pub mod dynamics;
pub mod error;
pub(crate) mod fft;
pub mod field;
pub mod mollifier;
pub mod quad;
pub mod scaling;
pub mod stats;
pub mod variational;

pub use covariance::{real_space_covariance, spectral_covariance, CovarianceSpec, EnvModel};
pub use dynamics::{SimConfig, SimModel};
pub use error::{CoreError, Result};
pub use field::{evaluate_field, sample_field, FieldSample};
pub use mollifier::Mollifier;
pub use quad::QuadConfig;
pub use variational::{BoundQuery, FunctionalValues, TestFunction};
