//! Scaling self-consistency machinery: the exponent table produced by the
//! mode-coupling argument, a numerical residual check of the consistency
//! equation it solves, Laplace transforms of measured mean-squared
//! displacement series, and log-correction exponent fits.
//!
//! The argument couples two asymptotic expressions for the variance
//! E(t) ~ alpha(t)^2 of the tracer with scaling function
//! alpha(t) = t^nu (log t)^gamma: a Gaussian-profile ansatz for the
//! displacement density and the Green-Kubo representation
//! E(t) ~ t int^t alpha(s)^{-d} ds (isotropic; the anisotropic variant
//! integrates (alpha(s) s^{1/2})^{-1}). Requiring the two to match pins
//! (nu, gamma) per dimension; `aw_residual` verifies the match numerically by
//! regressing the log-ratio of the two sides on log log t, where any exponent
//! mismatch shows up as a nonzero slope.

use crate::error::{CoreError, Result};
use crate::quad::{self, QuadConfig};
use crate::stats;

/// A scaling ansatz alpha(t) = t^nu (log t)^gamma in dimension d.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingAnsatz {
    pub nu: f64,
    pub gamma: f64,
    pub d: u32,
    pub isotropic: bool,
}

impl ScalingAnsatz {
    pub fn new(nu: f64, gamma: f64, d: u32, isotropic: bool) -> Result<Self> {
        if !(nu.is_finite() && (0.5..1.0).contains(&nu)) {
            return Err(CoreError::Domain(format!(
                "scaling exponent nu = {nu} must lie in [1/2, 1)"
            )));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(CoreError::Domain(format!(
                "log exponent gamma = {gamma} must be >= 0"
            )));
        }
        if !(1..=3).contains(&d) {
            return Err(CoreError::Domain(format!(
                "dimension d = {d} not in {{1, 2, 3}}"
            )));
        }
        if !isotropic && d != 2 {
            return Err(CoreError::Domain(format!(
                "the anisotropic consistency integrand is defined for d = 2 only, got d = {d}"
            )));
        }
        Ok(ScalingAnsatz {
            nu,
            gamma,
            d,
            isotropic,
        })
    }

    /// The table ansatz for (d, isotropy).
    pub fn from_table(d: u32, isotropic: bool) -> Result<Self> {
        let (nu, gamma) = aw_exponents(d, isotropic)?;
        ScalingAnsatz::new(nu, gamma, d, isotropic)
    }

    /// alpha(t) = t^nu (log t)^gamma, defined for t > 1.
    pub fn alpha(&self, t: f64) -> f64 {
        t.powf(self.nu) * t.ln().powf(self.gamma)
    }
}

/// The exponent pairs (nu, gamma) solving the self-consistency equation:
/// d = 1 -> (2/3, 0); d = 2 isotropic -> (1/2, 1/4);
/// d = 2 anisotropic -> (1/2, 1/3); d = 3 -> (1/2, 0).
pub fn aw_exponents(d: u32, isotropic: bool) -> Result<(f64, f64)> {
    match (d, isotropic) {
        (1, true) => Ok((2.0 / 3.0, 0.0)),
        (2, true) => Ok((0.5, 0.25)),
        (2, false) => Ok((0.5, 1.0 / 3.0)),
        (3, true) => Ok((0.5, 0.0)),
        (d, false) if (1..=3).contains(&d) => Err(CoreError::Domain(format!(
            "the anisotropic exponent table covers d = 2 only, got d = {d}"
        ))),
        _ => Err(CoreError::Domain(format!(
            "dimension d = {d} not in {{1, 2, 3}}"
        ))),
    }
}

/// Regression report of the consistency residual.
#[derive(Clone, Debug)]
pub struct AwReport {
    /// Slope of log(L/R) against log log t; zero iff the ansatz solves the
    /// consistency equation.
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// The regression points (log log t, log(L/R)).
    pub points: Vec<(f64, f64)>,
    /// R(t)/t along the grid (constant when the consistency integral
    /// converges, as in d = 3).
    pub r_over_t: Vec<f64>,
}

/// Antiderivative A(t) of the consistency integrand s^{a-1} (log s)^{-b},
/// with the integration constant chosen so that only the asymptotically
/// relevant part survives:
///
/// * a = 0 (critical): the antiderivative vanishing at t = 1, i.e.
///   (log t)^{1-b}/(1-b) (log log t at b = 1; the convergent limit for b > 1);
/// * a > 0 (diverging): from s = 2; the lower constant is relatively O(t^-a);
/// * a < 0 (converging): the full limit integral over [2, infinity), so that
///   R(t) = t A is exactly proportional to t.
///
/// A literal running integral from s = 2 would add a constant that decays
/// only like (log t)^{-(1-b)} relative to the leading term in the critical
/// case and *is* the leading behaviour in the convergent case; over any
/// finite grid that constant masquerades as a spurious slope several times
/// the detection threshold, while the statement being checked is asymptotic
/// and insensitive to the lower limit.
fn consistency_antiderivative(a: f64, b: f64, t: f64, cfg: &QuadConfig) -> Result<f64> {
    let ln2 = std::f64::consts::LN_2;
    if a.abs() <= 1e-9 {
        let u = t.ln();
        if (b - 1.0).abs() <= 1e-9 {
            Ok(u.ln())
        } else if b < 1.0 {
            Ok(u.powf(1.0 - b) / (1.0 - b))
        } else {
            Ok(ln2.powf(1.0 - b) / (b - 1.0))
        }
    } else if a > 0.0 {
        if b.abs() <= 1e-12 {
            Ok(t.powf(a) / a)
        } else {
            // int_{log 2}^{log t} e^{a u} u^{-b} du, smooth on a bounded range.
            let q = quad::adaptive(&|u: f64| (a * u).exp() * u.powf(-b), ln2, t.ln(), cfg)?;
            Ok(q.value)
        }
    } else {
        // Substituting z = -a u maps the limit integral to
        // (-a)^{b-1} int_{-a log 2}^{infinity} e^{-z} z^{-b} dz, truncated
        // where e^{-z} is below 1e-26 relative.
        let z0 = -a * ln2;
        let q = quad::adaptive(&|z: f64| (-z).exp() * z.powf(-b), z0, z0 + 60.0, cfg)?;
        Ok(((b - 1.0) * (-a).ln()).exp() * q.value)
    }
}

/// Evaluates both sides of the consistency equation, L(t) = alpha(t)^2 and
/// R(t) = t * A(t) with A the consistency antiderivative, and regresses
/// log(L/R) on log log t over the grid.
pub fn aw_residual(ansatz: &ScalingAnsatz, t_grid: &[f64]) -> Result<AwReport> {
    if t_grid.len() < 8 {
        return Err(CoreError::Config(format!(
            "residual grid needs at least 8 points, got {}",
            t_grid.len()
        )));
    }
    let e = std::f64::consts::E;
    for w in t_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(CoreError::Config(
                "residual grid must be strictly increasing".into(),
            ));
        }
    }
    let (t_min, t_max) = (t_grid[0], t_grid[t_grid.len() - 1]);
    if !(t_min > e) {
        return Err(CoreError::Domain(format!(
            "residual grid must start above e, got t_min = {t_min}"
        )));
    }
    if t_max / t_min < 1e6 {
        return Err(CoreError::Config(format!(
            "residual grid must span at least 6 decades, got {:.2}",
            (t_max / t_min).log10()
        )));
    }
    // Exponents of the integrand s^{a-1} (log s)^{-b}.
    let (a, b) = if ansatz.isotropic {
        (
            1.0 - ansatz.d as f64 * ansatz.nu,
            ansatz.d as f64 * ansatz.gamma,
        )
    } else {
        (0.5 - ansatz.nu, ansatz.gamma)
    };
    let cfg = QuadConfig::default().with_rel_tol(1e-10);
    let mut points = Vec::with_capacity(t_grid.len());
    let mut r_over_t = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let alpha = ansatz.alpha(t);
        let l = alpha * alpha;
        let a_t = consistency_antiderivative(a, b, t, &cfg)?;
        if !(a_t.is_finite() && a_t > 0.0) {
            return Err(CoreError::Numeric(format!(
                "consistency integral not positive at t = {t:.3e}: {a_t}"
            )));
        }
        let r = t * a_t;
        points.push((t.ln().ln(), (l / r).ln()));
        r_over_t.push(a_t);
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = stats::line_fit(&xs, &ys, None)?;
    Ok(AwReport {
        slope: fit.slope,
        intercept: fit.intercept,
        slope_se: fit.slope_se,
        points,
        r_over_t,
    })
}

/// A measured mean-squared displacement series E(t) with standard errors.
#[derive(Clone, Debug)]
pub struct MsdSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    stderr: Vec<f64>,
}

impl MsdSeries {
    /// Times must be strictly increasing and > 1; values positive and finite;
    /// standard errors (if given) nonnegative. Missing errors are stored as
    /// zeros, which the fitting ops treat as "unweighted".
    pub fn new(times: Vec<f64>, values: Vec<f64>, stderr: Option<Vec<f64>>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(CoreError::Config(format!(
                "series needs matching nonempty times/values, got {} and {}",
                times.len(),
                values.len()
            )));
        }
        let stderr = stderr.unwrap_or_else(|| vec![0.0; times.len()]);
        if stderr.len() != times.len() {
            return Err(CoreError::Config(format!(
                "series needs {} standard errors, got {}",
                times.len(),
                stderr.len()
            )));
        }
        if !(times[0] > 1.0) {
            return Err(CoreError::Domain(format!(
                "series times must exceed 1 (log log scale), got t[0] = {}",
                times[0]
            )));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CoreError::Domain(
                    "series times must be strictly increasing".into(),
                ));
            }
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(CoreError::Domain(format!(
                    "series value E(t) must be positive and finite, got {v} at index {i}"
                )));
            }
        }
        for (i, &s) in stderr.iter().enumerate() {
            if !(s.is_finite() && s >= 0.0) {
                return Err(CoreError::Domain(format!(
                    "series standard error must be >= 0, got {s} at index {i}"
                )));
            }
        }
        Ok(MsdSeries {
            times,
            values,
            stderr,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stderr(&self) -> &[f64] {
        &self.stderr
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().expect("series is nonempty")
    }

    /// The same series with every value (and error) scaled by k > 0.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(CoreError::Domain(format!(
                "scale factor k = {k} must be positive"
            )));
        }
        MsdSeries::new(
            self.times.clone(),
            self.values.iter().map(|v| k * v).collect(),
            Some(self.stderr.iter().map(|s| k * s).collect()),
        )
    }
}

/// Laplace transform of a measured series at one lambda.
#[derive(Clone, Copy, Debug)]
pub struct LaplaceValue {
    /// E_hat(lambda) = int_0^infinity E(t) e^{-lambda t} dt, on the raw scale
    /// (no lambda^{-2} prefactor).
    pub value: f64,
    /// Share of the value contributed by the extrapolated tail.
    pub tail_fraction: f64,
}

/// Trapezoidal Laplace transform of the series with a linear-in-t tail,
/// E(t) = a t on [t_max, infinity), the coefficient fitted by least squares
/// through the origin on the last decade of the series. The tail model is
/// deliberately free of log corrections: the correction exponent is what the
/// series is used to measure.
pub fn laplace_msd(series: &MsdSeries, lambda: f64) -> Result<LaplaceValue> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(CoreError::Domain(format!(
            "laplace parameter lambda = {lambda} must be > 0"
        )));
    }
    let t_max = series.t_max();
    if lambda * t_max < 5.0 {
        return Err(CoreError::Domain(format!(
            "lambda = {lambda:.3e} too small for the series horizon t_max = {t_max:.3e}; \
             need lambda >= 5/t_max = {:.3e}",
            5.0 / t_max
        )));
    }
    // Trapezoid over the series with (0, 0) prepended: E(0) = 0 exactly.
    let mut prev_t = 0.0;
    let mut prev_f = 0.0;
    let mut integral = 0.0;
    for (&t, &v) in series.times().iter().zip(series.values()) {
        let f = v * (-lambda * t).exp();
        integral += (t - prev_t) * (prev_f + f) / 2.0;
        prev_t = t;
        prev_f = f;
    }
    // Tail coefficient: least squares of E = a t through the origin over the
    // last decade, a = sum(E t) / sum(t^2).
    let mut num = 0.0;
    let mut den = 0.0;
    for (&t, &v) in series.times().iter().zip(series.values()) {
        if t >= t_max / 10.0 {
            num += v * t;
            den += t * t;
        }
    }
    let a = num / den;
    // int_T^infinity a t e^{-lambda t} dt = a e^{-lambda T} (T/lambda + 1/lambda^2).
    let tail = a * (-lambda * t_max).exp() * (t_max / lambda + 1.0 / (lambda * lambda));
    let value = integral + tail;
    Ok(LaplaceValue {
        value,
        tail_fraction: tail / value,
    })
}

/// Weighted least-squares fit of the log-correction exponent.
#[derive(Clone, Copy, Debug)]
pub struct ExponentFit {
    /// Fitted gamma in E(t) = a t (log t)^gamma.
    pub gamma: f64,
    pub gamma_se: f64,
    /// 95% confidence interval for gamma.
    pub gamma_ci: (f64, f64),
    /// Fitted amplitude a.
    pub amplitude: f64,
    pub amplitude_se: f64,
}

/// Fits E(t) = a t (log t)^gamma by weighted least squares of log(E/t)
/// against log log t. Weights are (E/se)^2 — the inverse variance of log E —
/// when every standard error is positive; otherwise the fit is unweighted.
pub fn fit_exponents(series: &MsdSeries) -> Result<ExponentFit> {
    let n = series.times().len();
    if n < 10 {
        return Err(CoreError::Config(format!(
            "exponent fit needs at least 10 points, got {n}"
        )));
    }
    let span = series.t_max() / series.times()[0];
    if span < 100.0 {
        return Err(CoreError::Config(format!(
            "exponent fit needs at least 2 decades of times, got {:.2}",
            span.log10()
        )));
    }
    let xs: Vec<f64> = series.times().iter().map(|&t| t.ln().ln()).collect();
    let ys: Vec<f64> = series
        .values()
        .iter()
        .zip(series.times())
        .map(|(&v, &t)| (v / t).ln())
        .collect();
    let weights: Option<Vec<f64>> = if series.stderr().iter().all(|&s| s > 0.0) {
        Some(
            series
                .values()
                .iter()
                .zip(series.stderr())
                .map(|(&v, &s)| (v / s) * (v / s))
                .collect(),
        )
    } else {
        None
    };
    let fit = stats::line_fit(&xs, &ys, weights.as_deref())?;
    let amplitude = fit.intercept.exp();
    Ok(ExponentFit {
        gamma: fit.slope,
        gamma_se: fit.slope_se,
        gamma_ci: (
            fit.slope - 1.96 * fit.slope_se,
            fit.slope + 1.96 * fit.slope_se,
        ),
        amplitude,
        amplitude_se: amplitude * fit.intercept_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        quad::log_space(a, b, n)
    }

    #[test]
    fn exponent_table_is_exact() {
        assert_eq!(aw_exponents(1, true).unwrap(), (2.0 / 3.0, 0.0));
        assert_eq!(aw_exponents(2, true).unwrap(), (0.5, 0.25));
        assert_eq!(aw_exponents(2, false).unwrap(), (0.5, 1.0 / 3.0));
        assert_eq!(aw_exponents(3, true).unwrap(), (0.5, 0.0));
        assert!(aw_exponents(4, true).is_err());
        assert!(aw_exponents(0, true).is_err());
        assert!(aw_exponents(1, false).is_err());
        assert!(aw_exponents(3, false).is_err());
    }

    #[test]
    fn ansatz_validation() {
        assert!(ScalingAnsatz::new(0.4, 0.0, 2, true).is_err());
        assert!(ScalingAnsatz::new(1.0, 0.0, 2, true).is_err());
        assert!(ScalingAnsatz::new(0.5, -0.1, 2, true).is_err());
        assert!(ScalingAnsatz::new(0.5, 0.0, 5, true).is_err());
        assert!(ScalingAnsatz::new(0.5, 0.0, 1, false).is_err());
        let a = ScalingAnsatz::from_table(2, true).unwrap();
        assert_eq!((a.nu, a.gamma), (0.5, 0.25));
    }

    #[test]
    fn residual_vanishes_on_every_table_entry() {
        let grid = log_grid(1e2, 1e14, 60);
        for (d, iso) in [(1, true), (2, true), (3, true), (2, false)] {
            let ansatz = ScalingAnsatz::from_table(d, iso).unwrap();
            let rep = aw_residual(&ansatz, &grid).unwrap();
            assert!(
                rep.slope.abs() < 0.02,
                "d = {d}, isotropic = {iso}: slope {}",
                rep.slope
            );
        }
    }

    #[test]
    fn residual_detects_perturbed_gamma() {
        // gamma = 0.35 instead of 1/4 drifts the ratio like (log t)^{0.4}.
        let grid = log_grid(1e2, 1e14, 60);
        let ansatz = ScalingAnsatz::new(0.5, 0.35, 2, true).unwrap();
        let rep = aw_residual(&ansatz, &grid).unwrap();
        assert!(rep.slope.abs() > 0.05, "slope {}", rep.slope);
        // L/R = 0.3 (log t)^{0.4}, so the slope is 0.4.
        assert!((rep.slope - 0.4).abs() < 0.02, "slope {}", rep.slope);
    }

    #[test]
    fn convergent_case_has_constant_r_over_t() {
        // d = 3: the consistency integral converges to int_2^inf s^{-3/2} ds
        // = sqrt(2), so R(t)/t is that constant and the slope is zero.
        let grid = log_grid(1e2, 1e14, 60);
        let ansatz = ScalingAnsatz::from_table(3, true).unwrap();
        let rep = aw_residual(&ansatz, &grid).unwrap();
        assert!(rep.slope.abs() < 1e-9, "slope {}", rep.slope);
        let sqrt2 = std::f64::consts::SQRT_2;
        for &r in &rep.r_over_t {
            assert!((r - sqrt2).abs() < 1e-9 * sqrt2, "{r} vs {sqrt2}");
        }
    }

    #[test]
    fn residual_grid_validation() {
        let ansatz = ScalingAnsatz::from_table(2, true).unwrap();
        assert!(aw_residual(&ansatz, &log_grid(1e2, 1e5, 30)).is_err()); // 3 decades
        assert!(aw_residual(&ansatz, &log_grid(2.0, 1e12, 30)).is_err()); // min < e
        assert!(aw_residual(&ansatz, &log_grid(1e2, 1e14, 5)).is_err()); // too few
        let mut bad = log_grid(1e2, 1e14, 30);
        bad.swap(3, 4);
        assert!(aw_residual(&ansatz, &bad).is_err());
    }

    #[test]
    fn msd_series_validation() {
        assert!(MsdSeries::new(vec![2.0, 3.0], vec![1.0, 2.0], None).is_ok());
        assert!(MsdSeries::new(vec![0.5, 3.0], vec![1.0, 2.0], None).is_err()); // t <= 1
        assert!(MsdSeries::new(vec![3.0, 2.0], vec![1.0, 2.0], None).is_err()); // decreasing
        assert!(MsdSeries::new(vec![2.0, 3.0], vec![1.0, -2.0], None).is_err()); // negative E
        assert!(MsdSeries::new(vec![2.0, 3.0], vec![1.0, 0.0], None).is_err()); // zero E
        assert!(MsdSeries::new(vec![2.0, 3.0], vec![1.0], None).is_err()); // length
        assert!(MsdSeries::new(vec![2.0, 3.0], vec![1.0, 2.0], Some(vec![0.1, -0.1])).is_err());
    }

    #[test]
    fn laplace_brownian_oracle() {
        // E(t) = 4t exactly: E_hat = 4/lambda^2, recovered within 1% at
        // lambda t_max = 10.
        let times = log_grid(1.5, 1e4, 400);
        let values: Vec<f64> = times.iter().map(|&t| 4.0 * t).collect();
        let s = MsdSeries::new(times, values, None).unwrap();
        let lambda = 1e-3;
        let v = laplace_msd(&s, lambda).unwrap();
        let exact = 4.0 / (lambda * lambda);
        assert!(
            (v.value - exact).abs() < 0.01 * exact,
            "{} vs {exact} (rel {:.2e})",
            v.value,
            (v.value - exact).abs() / exact
        );
        assert!(v.tail_fraction > 0.0 && v.tail_fraction < 1.0);
    }

    #[test]
    fn laplace_t_log_t_asymptotics() {
        // E(t) = t log t: lambda^2 E_hat / |log lambda| -> 1 from above,
        // within 10% across three decades of lambda.
        let times = log_grid(1.2, 5e6, 900);
        let values: Vec<f64> = times.iter().map(|&t| t * t.ln()).collect();
        let s = MsdSeries::new(times, values, None).unwrap();
        for &lambda in &[1e-3, 1e-4, 1e-5] {
            let v = laplace_msd(&s, lambda).unwrap();
            let ratio = v.value * lambda * lambda / lambda.ln().abs();
            assert!(
                (ratio - 1.0).abs() < 0.10,
                "lambda = {lambda:.0e}: ratio {ratio}"
            );
        }
    }

    #[test]
    fn laplace_is_linear() {
        let times = log_grid(2.0, 1e4, 200);
        let e1: Vec<f64> = times.iter().map(|&t| 3.0 * t + t.sqrt()).collect();
        let e2: Vec<f64> = times.iter().map(|&t| t * (1.0 + t.ln())).collect();
        let combo: Vec<f64> = e1
            .iter()
            .zip(&e2)
            .map(|(&a, &b)| 0.7 * a + 1.3 * b)
            .collect();
        let lambda = 2e-3;
        let v1 = laplace_msd(&MsdSeries::new(times.clone(), e1, None).unwrap(), lambda)
            .unwrap()
            .value;
        let v2 = laplace_msd(&MsdSeries::new(times.clone(), e2, None).unwrap(), lambda)
            .unwrap()
            .value;
        let vc = laplace_msd(&MsdSeries::new(times, combo, None).unwrap(), lambda)
            .unwrap()
            .value;
        let expected = 0.7 * v1 + 1.3 * v2;
        assert!(
            (vc - expected).abs() <= 1e-12 * expected.abs(),
            "{vc} vs {expected}"
        );
    }

    #[test]
    fn laplace_rejects_small_lambda_naming_minimum() {
        let times = log_grid(2.0, 1e4, 50);
        let values: Vec<f64> = times.iter().map(|&t| 4.0 * t).collect();
        let s = MsdSeries::new(times, values, None).unwrap();
        let err = laplace_msd(&s, 1e-5).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("5.000e-4"),
            "message should name 5/t_max: {msg}"
        );
    }

    #[test]
    fn fit_recovers_synthetic_exponents() {
        let times = log_grid(10.0, 1e5, 40);
        let v1: Vec<f64> = times.iter().map(|&t| 3.0 * t * t.ln().sqrt()).collect();
        let f1 = fit_exponents(&MsdSeries::new(times.clone(), v1, None).unwrap()).unwrap();
        assert!((f1.gamma - 0.5).abs() < 0.01, "{}", f1.gamma);
        assert!((f1.amplitude - 3.0).abs() < 0.01, "{}", f1.amplitude);
        assert!(f1.gamma_ci.0 <= f1.gamma && f1.gamma <= f1.gamma_ci.1);

        let v2: Vec<f64> = times.iter().map(|&t| 4.0 * t).collect();
        let f2 = fit_exponents(&MsdSeries::new(times.clone(), v2, None).unwrap()).unwrap();
        assert!(f2.gamma.abs() < 0.01, "{}", f2.gamma);
        assert!((f2.amplitude - 4.0).abs() < 0.01, "{}", f2.amplitude);

        // With visible scatter the interval must cover the true exponent.
        let v3: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let jitter = if i % 2 == 0 { 1.005 } else { 0.995 };
                3.0 * t * t.ln().sqrt() * jitter
            })
            .collect();
        let f3 = fit_exponents(&MsdSeries::new(times, v3, None).unwrap()).unwrap();
        assert!(
            f3.gamma_ci.0 <= 0.5 && 0.5 <= f3.gamma_ci.1,
            "ci {:?} misses 0.5",
            f3.gamma_ci
        );
        assert!(f3.gamma_se > 0.0);
    }

    #[test]
    fn fit_is_scale_equivariant() {
        let times = log_grid(5.0, 1e4, 25);
        let values: Vec<f64> = times.iter().map(|&t| 2.0 * t * t.ln().powf(0.3)).collect();
        let errs: Vec<f64> = values.iter().map(|&v| 0.02 * v).collect();
        let s = MsdSeries::new(times, values, Some(errs)).unwrap();
        let base = fit_exponents(&s).unwrap();
        let scaled = fit_exponents(&s.scaled(7.5).unwrap()).unwrap();
        assert!(
            (base.gamma - scaled.gamma).abs() <= 1e-10 * (1.0 + base.gamma.abs()),
            "{} vs {}",
            base.gamma,
            scaled.gamma
        );
        assert!(
            (scaled.amplitude - 7.5 * base.amplitude).abs() <= 1e-10 * scaled.amplitude,
            "{} vs {}",
            scaled.amplitude,
            7.5 * base.amplitude
        );
    }

    #[test]
    fn fit_preconditions() {
        // Too few points.
        let times = log_grid(10.0, 1e5, 9);
        let values: Vec<f64> = times.iter().map(|&t| t).collect();
        assert!(fit_exponents(&MsdSeries::new(times, values, None).unwrap()).is_err());
        // Not enough decades.
        let times = log_grid(10.0, 500.0, 20);
        let values: Vec<f64> = times.iter().map(|&t| t).collect();
        assert!(fit_exponents(&MsdSeries::new(times, values, None).unwrap()).is_err());
    }
}
