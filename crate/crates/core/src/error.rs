//! Error type shared by all modules.
//!
//! Four failure classes matter downstream: bad configuration (caller mistakes,
//! caught before any work), domain errors (arguments outside the mathematical
//! domain of an operation), numeric failures (quadrature that did not converge
//! to the requested tolerance), and dynamical instability (a time step that moved
//! a particle further than a quarter box, which means dt is too large for the
//! realized drift).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Invalid configuration detected before any computation started.
    #[error("configuration: {0}")]
    Config(String),

    /// Argument outside the mathematical domain of the operation.
    #[error("domain: {0}")]
    Domain(String),

    /// A numeric procedure failed to reach its tolerance; the message carries
    /// the achieved value and error estimate.
    #[error("numeric: {0}")]
    Numeric(String),

    /// A single Euler step moved the tracer further than box_size / 4.
    #[error("instability at step {step}: displacement {displacement:.6e} exceeds box_size/4 = {limit:.6e} (trajectory {trajectory})")]
    Instability {
        trajectory: usize,
        step: usize,
        displacement: f64,
        limit: f64,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
