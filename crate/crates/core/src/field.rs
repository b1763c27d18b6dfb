//! Exact spectral sampling of the stationary Gaussian environments on a
//! periodic box [0, L)^2 with an N x N grid.
//!
//! The continuum field has matrix spectral density K_hat(p); on the torus only
//! the lattice momenta p_k = (2 pi / L) k contribute, each carrying covariance
//! K_hat(p_k) / L^2 (the Riemann weight (dp / 2 pi)^2 = 1 / L^2 of the inverse
//! Fourier integral). All three densities are rank one, K_hat = v_hat d d^T
//! with a unit polarization d(p), so each mode is
//!
//!   omega_hat(p) = d(p) * (u_hat(|p|) / L) * zeta_p,
//!
//! with zeta_p a standard complex Gaussian, zeta_{-p} = conj(zeta_p) for a
//! real field, and zero at p = 0. Bins on the Nyquist rows (index N/2) have no
//! distinct negative partner and are dropped; choose N so that pi N / L is
//! well beyond the spectral support and their weight is negligible. Every mode
//! draws from its own counter-based RNG stream, so a sample is reproducible
//! from (seed, N, L, model) alone and modes can be audited individually.
//!
//! The divergence-free / curl-free constraints hold mode by mode: the curl
//! field has p . omega_hat(p) = 0 and the gradient field has
//! p^perp . omega_hat(p) = 0, both to rounding.

use crate::covariance::{CovarianceSpec, EnvModel};
use crate::error::{CoreError, Result};
use crate::fft::{signed_freq, Fft2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use std::io::{Read, Write};

/// One realization of an environment on the periodic grid.
#[derive(Clone, Debug)]
pub struct FieldSample {
    pub spec: CovarianceSpec,
    pub box_size: f64,
    pub grid_n: usize,
    pub seed: u64,
    /// Node values of the two components, row-major: index i * N + j holds
    /// the value at x = (i, j) * L / N.
    pub values: [Vec<f64>; 2],
    /// Retained Fourier coefficients (same layout, DFT bin order).
    pub modes: [Vec<Complex<f64>>; 2],
}

/// SplitMix64 step, used to derive RNG keys and stream tags from one seed.
pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministically mix a seed with a tag (trajectory index, purpose, ...).
pub(crate) fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut s = seed ^ tag.wrapping_mul(0xd1342543de82ef95);
    let a = splitmix64(&mut s);
    let b = splitmix64(&mut s);
    a ^ b.rotate_left(17)
}

/// 32-byte ChaCha key expanded from a 64-bit seed.
pub(crate) fn chacha_key(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

pub(crate) fn validate_grid(box_size: f64, grid_n: usize, spec: &CovarianceSpec) -> Result<()> {
    if !(box_size.is_finite() && box_size > 0.0) {
        return Err(CoreError::Config(format!(
            "box_size = {box_size} must be positive"
        )));
    }
    let scale = spec.mollifier.length_scale();
    if box_size <= 10.0 * scale {
        return Err(CoreError::Config(format!(
            "box_size = {box_size} must exceed 10 kernel lengths = {}",
            10.0 * scale
        )));
    }
    if grid_n < 16 || grid_n % 2 != 0 || grid_n > 8192 {
        return Err(CoreError::Config(format!(
            "grid_n = {grid_n} must be even and in [16, 8192]"
        )));
    }
    Ok(())
}

/// Draw one realization of the environment. Counter-based streams: mode
/// (m1, m2) draws from stream m1 * N + m2 of a ChaCha8 generator keyed by the
/// seed, so samples are independent of iteration order and reproducible.
pub fn sample_field(
    spec: &CovarianceSpec,
    box_size: f64,
    grid_n: usize,
    seed: u64,
) -> Result<FieldSample> {
    validate_grid(box_size, grid_n, spec)?;
    let n = grid_n;
    let key = chacha_key(seed);
    let two_pi_over_l = std::f64::consts::TAU / box_size;
    let inv_l = 1.0 / box_size;

    let mut modes = [
        vec![Complex::new(0.0, 0.0); n * n],
        vec![Complex::new(0.0, 0.0); n * n],
    ];
    let half = 1.0 / std::f64::consts::SQRT_2;

    for m1 in 0..n {
        for m2 in 0..n {
            if m1 == 0 && m2 == 0 {
                continue; // zero mode: field has spatial mean zero
            }
            if m1 == n / 2 || m2 == n / 2 {
                // Nyquist bins have no negative partner on the lattice, which
                // would break the mode-wise polarization constraints; they are
                // dropped. Their weight v_hat(pi N / L) is negligible for any
                // grid that resolves the kernel.
                continue;
            }
            let neg = ((n - m1) % n, (n - m2) % n);
            let this = (m1, m2);
            if this > neg {
                continue; // filled by its conjugate partner
            }
            let p = [
                two_pi_over_l * signed_freq(m1, n) as f64,
                two_pi_over_l * signed_freq(m2, n) as f64,
            ];
            let amp = spec.mollifier.u_hat_radial(p[0].hypot(p[1])) * inv_l;
            if amp == 0.0 {
                continue;
            }
            let d = spec.model.direction(p);
            debug_assert!(this != neg, "self-conjugate bins are all excluded");
            let mut rng = ChaCha8Rng::from_seed(key);
            rng.set_stream((m1 * n + m2) as u64);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let coeff = Complex::new(re * half, im * half) * amp;
            let idx = m1 * n + m2;
            let nidx = neg.0 * n + neg.1;
            for c in 0..2 {
                modes[c][idx] = coeff * d[c];
                modes[c][nidx] = coeff.conj() * d[c];
            }
        }
    }

    let fft = Fft2::new(n);
    let mut values = [Vec::new(), Vec::new()];
    for c in 0..2 {
        let mut buf = modes[c].clone();
        fft.inverse(&mut buf);
        let max_im = buf.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let max_re = buf.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        if max_im > 1e-8 * max_re.max(1e-300) {
            return Err(CoreError::Numeric(format!(
                "synthesized field is not real: max imaginary part {max_im:.3e}"
            )));
        }
        values[c] = buf.iter().map(|z| z.re).collect();
    }

    Ok(FieldSample {
        spec: spec.clone(),
        box_size,
        grid_n: n,
        seed,
        values,
        modes,
    })
}

/// Bilinear interpolation of the sampled field at any point of the torus.
pub fn evaluate_field(sample: &FieldSample, x: [f64; 2]) -> [f64; 2] {
    let n = sample.grid_n;
    let dx = sample.box_size / n as f64;
    let u = x[0].rem_euclid(sample.box_size) / dx;
    let v = x[1].rem_euclid(sample.box_size) / dx;
    let i0 = (u.floor() as usize) % n;
    let j0 = (v.floor() as usize) % n;
    let i1 = (i0 + 1) % n;
    let j1 = (j0 + 1) % n;
    let fu = u - u.floor();
    let fv = v - v.floor();
    let mut out = [0.0; 2];
    for c in 0..2 {
        let g = &sample.values[c];
        out[c] = (1.0 - fu) * (1.0 - fv) * g[i0 * n + j0]
            + fu * (1.0 - fv) * g[i1 * n + j0]
            + (1.0 - fu) * fv * g[i0 * n + j1]
            + fu * fv * g[i1 * n + j1];
    }
    out
}

impl FieldSample {
    /// Build a sample from explicit node values (modes by forward transform).
    /// Used by tests and by the binary reader.
    pub fn from_values(
        spec: CovarianceSpec,
        box_size: f64,
        grid_n: usize,
        seed: u64,
        values: [Vec<f64>; 2],
    ) -> Result<Self> {
        validate_grid(box_size, grid_n, &spec)?;
        let n = grid_n;
        if values[0].len() != n * n || values[1].len() != n * n {
            return Err(CoreError::Config("value arrays must be N x N".into()));
        }
        let fft = Fft2::new(n);
        let norm = 1.0 / (n * n) as f64;
        let mut modes = [Vec::new(), Vec::new()];
        for c in 0..2 {
            let mut buf: Vec<Complex<f64>> =
                values[c].iter().map(|&v| Complex::new(v, 0.0)).collect();
            fft.forward(&mut buf);
            for z in buf.iter_mut() {
                *z *= norm;
            }
            modes[c] = buf;
        }
        Ok(FieldSample {
            spec,
            box_size,
            grid_n,
            seed,
            values,
            modes,
        })
    }

    pub fn grid_spacing(&self) -> f64 {
        self.box_size / self.grid_n as f64
    }

    /// Node value of component c at grid index (i, j).
    pub fn node(&self, c: usize, i: usize, j: usize) -> f64 {
        self.values[c][i * self.grid_n + j]
    }

    /// Lattice momentum of DFT bin (m1, m2).
    pub fn momentum(&self, m1: usize, m2: usize) -> [f64; 2] {
        let s = std::f64::consts::TAU / self.box_size;
        [
            s * signed_freq(m1, self.grid_n) as f64,
            s * signed_freq(m2, self.grid_n) as f64,
        ]
    }

    /// max over modes of |p . omega_hat(p)| (zero for the curl field).
    pub fn max_divergence_mode(&self) -> f64 {
        self.max_constraint(false)
    }

    /// max over modes of |p^perp . omega_hat(p)| (zero for the gradient field).
    pub fn max_rotation_mode(&self) -> f64 {
        self.max_constraint(true)
    }

    fn max_constraint(&self, rotation: bool) -> f64 {
        let n = self.grid_n;
        let mut worst = 0.0f64;
        for m1 in 0..n {
            for m2 in 0..n {
                if m1 == 0 && m2 == 0 {
                    continue;
                }
                let p = self.momentum(m1, m2);
                let idx = m1 * n + m2;
                let z = if rotation {
                    self.modes[0][idx] * p[1] - self.modes[1][idx] * p[0]
                } else {
                    self.modes[0][idx] * p[0] + self.modes[1][idx] * p[1]
                };
                worst = worst.max(z.norm());
            }
        }
        worst
    }

    /// CSV dump: header plus one row per node, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x1,x2,omega1,omega2")?;
        let n = self.grid_n;
        let dx = self.grid_spacing();
        for i in 0..n {
            for j in 0..n {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{:.16e}",
                    i as f64 * dx,
                    j as f64 * dx,
                    self.values[0][i * n + j],
                    self.values[1][i * n + j]
                )?;
            }
        }
        Ok(())
    }

    /// Compact binary dump: magic, model id, mollifier, L, N, seed, values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"SDFG")?;
        w.write_all(&1u32.to_le_bytes())?; // format version
        w.write_all(&self.spec.model.id().to_le_bytes())?;
        let (mkind, mparam) = match &self.spec.mollifier {
            crate::mollifier::Mollifier::Gaussian { sigma } => (0u32, *sigma),
            crate::mollifier::Mollifier::SpectralDisk { radius } => (1u32, *radius),
        };
        w.write_all(&mkind.to_le_bytes())?;
        w.write_all(&mparam.to_le_bytes())?;
        w.write_all(&self.box_size.to_le_bytes())?;
        w.write_all(&(self.grid_n as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for c in 0..2 {
            for v in &self.values[c] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Read a binary dump produced by `write_binary`; modes are reconstructed
    /// by a forward transform.
    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| CoreError::Config(format!("grid read failed: {e}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != b"SDFG" {
            return Err(CoreError::Config(
                "not a field grid file (bad magic)".into(),
            ));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4).map_err(io)?;
        let version = u32::from_le_bytes(b4);
        if version != 1 {
            return Err(CoreError::Config(format!(
                "unsupported grid format version {version}"
            )));
        }
        r.read_exact(&mut b4).map_err(io)?;
        let model = EnvModel::from_id(u32::from_le_bytes(b4))?;
        r.read_exact(&mut b4).map_err(io)?;
        let mkind = u32::from_le_bytes(b4);
        r.read_exact(&mut b8).map_err(io)?;
        let mparam = f64::from_le_bytes(b8);
        let mollifier = match mkind {
            0 => crate::mollifier::Mollifier::gaussian(mparam)?,
            1 => crate::mollifier::Mollifier::spectral_disk(mparam)?,
            k => return Err(CoreError::Config(format!("unknown mollifier kind {k}"))),
        };
        r.read_exact(&mut b8).map_err(io)?;
        let box_size = f64::from_le_bytes(b8);
        r.read_exact(&mut b8).map_err(io)?;
        let grid_n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8).map_err(io)?;
        let seed = u64::from_le_bytes(b8);
        let mut values = [Vec::new(), Vec::new()];
        for c in 0..2 {
            let mut buf = vec![0.0f64; grid_n * grid_n];
            for v in buf.iter_mut() {
                r.read_exact(&mut b8).map_err(io)?;
                *v = f64::from_le_bytes(b8);
            }
            values[c] = buf;
        }
        FieldSample::from_values(
            CovarianceSpec::new(model, mollifier),
            box_size,
            grid_n,
            seed,
            values,
        )
    }
}
