//! The approximate identity V used to mollify the white-noise environments,
//! together with its Fourier transform v_hat and spectral square root u_hat.
//!
//! Convention: v_hat(p) = integral of exp(i p.x) V(x) dx, so the inverse is
//! V(x) = (2 pi)^-2 integral of exp(-i p.x) v_hat(p) dp. The default kernel is
//! the unit-mass Gaussian
//!
//!   V(x) = exp(-|x|^2 / (2 sigma^2)) / (2 pi sigma^2),
//!   v_hat(p) = exp(-sigma^2 |p|^2 / 2),
//!
//! which is radial, positive, and positive definite. A flat spectral window
//! (v_hat = 1 on |p| < radius) is also provided; it has closed-form resolvent
//! integrals and is used as an oracle kernel in tests.

use crate::error::{CoreError, Result};
use crate::quad::{self, QuadConfig};

#[derive(Clone, Debug)]
pub enum Mollifier {
    /// Unit-mass Gaussian of width sigma.
    Gaussian { sigma: f64 },
    /// v_hat = 1 for |p| < radius, 0 otherwise. Closed-form test kernel; not
    /// smooth in real space.
    SpectralDisk { radius: f64 },
}

impl Mollifier {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(CoreError::Config(format!(
                "mollifier width sigma = {sigma} must be positive"
            )));
        }
        Ok(Mollifier::Gaussian { sigma })
    }

    pub fn spectral_disk(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(CoreError::Config(format!(
                "spectral disk radius = {radius} must be positive"
            )));
        }
        Ok(Mollifier::SpectralDisk { radius })
    }

    /// Characteristic real-space length of the kernel.
    pub fn length_scale(&self) -> f64 {
        match self {
            Mollifier::Gaussian { sigma } => *sigma,
            Mollifier::SpectralDisk { radius } => 1.0 / radius,
        }
    }

    /// v_hat as a function of |p| (the kernel is radial).
    pub fn v_hat_radial(&self, r: f64) -> f64 {
        match self {
            Mollifier::Gaussian { sigma } => (-0.5 * sigma * sigma * r * r).exp(),
            Mollifier::SpectralDisk { radius } => {
                if r < *radius {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn v_hat(&self, p: [f64; 2]) -> f64 {
        self.v_hat_radial(p[0].hypot(p[1]))
    }

    /// u_hat = sqrt(v_hat), the spectral amplitude of the half kernel U with
    /// U * U = V.
    pub fn u_hat_radial(&self, r: f64) -> f64 {
        self.v_hat_radial(r).sqrt()
    }

    /// Real-space kernel value.
    pub fn v(&self, x: [f64; 2]) -> f64 {
        match self {
            Mollifier::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                let r2 = x[0] * x[0] + x[1] * x[1];
                (-0.5 * r2 / s2).exp() / (std::f64::consts::TAU * s2)
            }
            Mollifier::SpectralDisk { .. } => {
                // (2 pi)^-2 integral over the disk of cos(p.x); radial reduction.
                let r = x[0].hypot(x[1]);
                let cfg = QuadConfig::default();
                let inner = |q: f64| q * quad::periodic(&|t: f64| (q * r * t.cos()).cos(), 128);
                let val = quad::adaptive(&inner, 0.0, self.spectral_cutoff(1e-13), &cfg)
                    .map(|q| q.value)
                    .unwrap_or(f64::NAN);
                val / (std::f64::consts::TAU * std::f64::consts::TAU)
            }
        }
    }

    /// Gradient of V. Analytic for the Gaussian; central differences for the
    /// spectral disk (only used in tests).
    pub fn grad_v(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            Mollifier::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                let v = self.v(x);
                [-x[0] / s2 * v, -x[1] / s2 * v]
            }
            Mollifier::SpectralDisk { .. } => {
                let h = 1e-5;
                [
                    (self.v([x[0] + h, x[1]]) - self.v([x[0] - h, x[1]])) / (2.0 * h),
                    (self.v([x[0], x[1] + h]) - self.v([x[0], x[1] - h])) / (2.0 * h),
                ]
            }
        }
    }

    /// Radius beyond which v_hat stays below the threshold. Used to truncate
    /// spectral integrals.
    pub fn spectral_cutoff(&self, threshold: f64) -> f64 {
        match self {
            Mollifier::Gaussian { sigma } => (-2.0 * threshold.ln()).sqrt() / sigma,
            Mollifier::SpectralDisk { radius } => *radius,
        }
    }
}
