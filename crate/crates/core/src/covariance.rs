//! Spectral and real-space covariances of the three stationary environments.
//!
//! Each environment is a mean-zero stationarily correlated Gaussian vector
//! field omega on R^2 with matrix spectral density K_hat:
//!
//! * gradient GFF (SRBP drift field):  K_hat_kl(p) = p_k p_l |p|^-2 v_hat(p),
//! * curl GFF (DCGF drift field):      K_hat_kl(p) = pt_k pt_l |p|^-2 v_hat(p)
//!   with pt = (p_2, -p_1),
//! * scalar anisotropic field:         K_hat_kl(p) = v_hat(p) delta_k1 delta_l1.
//!
//! The first two are rank-one projections of the white-noise density v_hat I
//! onto the longitudinal and transverse directions, so they sum to v_hat I
//! pointwise (isotropy link). The real-space covariance is the inverse Fourier
//! transform K(x) = (2 pi)^-2 integral K_hat(p) exp(-i p.x) dp, computed here
//! by polar quadrature.

use crate::error::{CoreError, Result};
use crate::mollifier::Mollifier;
use crate::quad::{self, QuadConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvModel {
    GradientGff,
    CurlGff,
    ScalarAniso,
}

impl EnvModel {
    pub fn name(&self) -> &'static str {
        match self {
            EnvModel::GradientGff => "gradient_gff",
            EnvModel::CurlGff => "curl_gff",
            EnvModel::ScalarAniso => "scalar_aniso",
        }
    }

    /// Stable numeric id used in the binary grid format.
    pub fn id(&self) -> u32 {
        match self {
            EnvModel::GradientGff => 0,
            EnvModel::CurlGff => 1,
            EnvModel::ScalarAniso => 2,
        }
    }

    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            0 => Ok(EnvModel::GradientGff),
            1 => Ok(EnvModel::CurlGff),
            2 => Ok(EnvModel::ScalarAniso),
            _ => Err(CoreError::Config(format!(
                "unknown environment model id {id}"
            ))),
        }
    }

    /// Unit polarization direction of the (rank-one) spectral density at p.
    /// The scalar model is polarized along e1 irrespective of p.
    pub fn direction(&self, p: [f64; 2]) -> [f64; 2] {
        match self {
            EnvModel::GradientGff => {
                let n = p[0].hypot(p[1]);
                [p[0] / n, p[1] / n]
            }
            EnvModel::CurlGff => {
                let n = p[0].hypot(p[1]);
                [p[1] / n, -p[0] / n]
            }
            EnvModel::ScalarAniso => [1.0, 0.0],
        }
    }
}

/// Environment model plus mollifier: everything the covariance depends on.
#[derive(Clone, Debug)]
pub struct CovarianceSpec {
    pub model: EnvModel,
    pub mollifier: Mollifier,
}

impl CovarianceSpec {
    pub fn new(model: EnvModel, mollifier: Mollifier) -> Self {
        CovarianceSpec { model, mollifier }
    }
}

/// Matrix spectral density K_hat(p). For the two GFF-derived models p = 0 is
/// outside the domain (the projection p p^T / |p|^2 has no limit there).
pub fn spectral_covariance(spec: &CovarianceSpec, p: [f64; 2]) -> Result<[[f64; 2]; 2]> {
    let v = spec.mollifier.v_hat(p);
    match spec.model {
        EnvModel::ScalarAniso => Ok([[v, 0.0], [0.0, 0.0]]),
        model => {
            let n2 = p[0] * p[0] + p[1] * p[1];
            if n2 == 0.0 {
                return Err(CoreError::Domain(format!(
                    "spectral covariance of {} is undefined at p = 0",
                    model.name()
                )));
            }
            let d = model.direction(p);
            Ok([
                [v * d[0] * d[0], v * d[0] * d[1]],
                [v * d[1] * d[0], v * d[1] * d[1]],
            ])
        }
    }
}

/// Real-space covariance matrix K(x) by polar quadrature of the inverse
/// Fourier transform. K_hat is even in p, so the integrand reduces to
/// K_hat(p) cos(p.x).
pub fn real_space_covariance(
    spec: &CovarianceSpec,
    x: [f64; 2],
    cfg: &QuadConfig,
) -> Result<[[f64; 2]; 2]> {
    let p_max = spec.mollifier.spectral_cutoff(1e-13);
    let norm = 1.0 / (std::f64::consts::TAU * std::f64::consts::TAU);
    let entry = |k: usize, l: usize| -> Result<f64> {
        let f = |r: f64, t: f64| {
            let p = [r * t.cos(), r * t.sin()];
            let d = spec.model.direction(p);
            let v = spec.mollifier.v_hat_radial(r);
            v * d[k] * d[l] * (p[0] * x[0] + p[1] * x[1]).cos()
        };
        Ok(quad::polar(&f, 0.0, p_max, cfg)?.value * norm)
    };
    let k11 = entry(0, 0)?;
    let k12 = entry(0, 1)?;
    let k22 = entry(1, 1)?;
    Ok([[k11, k12], [k12, k22]])
}
