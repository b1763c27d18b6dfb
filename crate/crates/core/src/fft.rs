//! Thin 2D FFT helpers over rustfft. Row-major n x n complex grids; the
//! transforms are unnormalized (forward sums exp(-i...), inverse sums
//! exp(+i...)), matching the spectral synthesis convention used in `field`
//! and `dynamics`.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

/// Cached plans for one grid size.
pub(crate) struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            forward: planner.plan_fft(n, FftDirection::Forward),
            inverse: planner.plan_fft(n, FftDirection::Inverse),
        }
    }

    fn run(&self, data: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        // Rows are contiguous.
        for row in data.chunks_exact_mut(n) {
            plan.process(row);
        }
        // Columns via gather/scatter.
        let mut col = vec![Complex::default(); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }

    /// Unnormalized forward transform: X_k = sum_j x_j exp(-2 pi i j.k / n).
    pub fn forward(&self, data: &mut [Complex<f64>]) {
        self.run(data, &self.forward);
    }

    /// Unnormalized inverse transform: x_j = sum_k X_k exp(+2 pi i j.k / n).
    /// Divide by n^2 to invert `forward`.
    pub fn inverse(&self, data: &mut [Complex<f64>]) {
        self.run(data, &self.inverse);
    }
}

/// Signed frequency index of a DFT bin: m in [0, n) maps to m for m < n/2 and
/// m - n otherwise, so even n yields k in [-n/2, n/2).
pub(crate) fn signed_freq(m: usize, n: usize) -> i64 {
    let m = m as i64;
    let n = n as i64;
    if m < (n + 1) / 2 {
        m
    } else {
        m - n
    }
}
