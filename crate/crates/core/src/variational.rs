//! Variational resolvent bounds for the three models, evaluated by
//! deterministic quadrature.
//!
//! The resolvent form (phi, R_lambda phi) of the environment process admits a
//! variational lower bound over the first Gaussian chaos,
//!
//!   (phi, R_lambda phi) >= sup_v [ 2 J1(v) - J2(v) - J3(v) ],
//!
//! where the test function is parametrized by a scalar antisymmetric spectral
//! profile v_hat (isotropic models) or an even profile u_hat (anisotropic
//! model), and
//!
//!   J1(v) = int V_hat(p) (p_a / |p|^2) v_hat(p) dp      (axis a per model)
//!   J2(v) = int V_hat(p) (lambda + |p|^2)/|p|^2 v_hat(p)^2 dp
//!   J3(v) = int int V_hat(p) V_hat(q) K(p,q)
//!               (v_hat(p) - v_hat(q))^2 / (lambda + |p-q|^2) dq dp,
//!
//! with K = (p.q)^2/(|p|^2|q|^2) for the self-repelling model and
//! K = (p x q)^2/(|p|^2|q|^2) for the curl model. The anisotropic model uses
//! J1 = int V_hat u_hat, J2 = int V_hat (lambda + |p|^2) u_hat^2, and the
//! same J3 with K = 1 and v_hat(p) = p_1 u_hat(p).
//!
//! J3 is controlled through Schwarz decoupling: J3(v) <= int V_hat D v_hat^2
//! with a radial kernel D(lambda, |p|) obtained by integrating out q.  For
//! the self-repelling model the decoupling is applied only on
//! |p - q| >= |p|/3 (giving J31), while the near-diagonal part is bounded by
//! the sup form J32' = 1/4 int V_hat |p|^2 sup_{|r-p|<|p|/3} |grad v_hat(r)|^2.
//!
//! Everything returns values on the resolvent scale; the Laplace-transform
//! prefactor lambda^{-2} is never folded in here (the CLI applies it on
//! request).  All operations are pure functions of their arguments: same
//! inputs, same floating point outputs.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use crate::dynamics::SimModel;
use crate::error::{CoreError, Result};
use crate::mollifier::Mollifier;
use crate::quad::{self, CubicSpline, QuadConfig, Quadrature};

/// h(x) = 1 / (x log(x + 1/x)), the radial profile of the self-repelling
/// test function. Defined for x > 0; note x + 1/x >= 2 so the log never
/// vanishes.
pub fn h_func(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(CoreError::Domain(format!("h(x) needs x > 0, got x = {x}")));
    }
    Ok(1.0 / (x * (x + 1.0 / x).ln()))
}

/// Analytic derivative of h. With L(x) = log(x + 1/x),
/// h'(x) = -(L + (x^2-1)/(x^2+1)) / (x L)^2 / ... laid out below.
pub fn h_prime(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(CoreError::Domain(format!("h'(x) needs x > 0, got x = {x}")));
    }
    let l = (x + 1.0 / x).ln();
    // d/dx [x L] = L + x L' with x L'(x) = (x^2 - 1)/(x^2 + 1).
    let xlp = (x * x - 1.0) / (x * x + 1.0);
    Ok(-(l + xlp) / (x * x * l * l))
}

/// Closed form of the angular integral
///   int_0^{2pi} sin^2 t / (a - b cos t) dt = 2 pi (a - sqrt(a^2-b^2)) / b^2
/// for a > |b| >= 0, with a series branch where the closed form cancels.
pub fn angular_sin2(a: f64, b: f64) -> f64 {
    debug_assert!(a > b.abs());
    let x = b / a;
    if x.abs() < 1e-2 {
        // (2 pi / a) (1 - sqrt(1-x^2)) / x^2 expanded in u = x^2.
        let u = x * x;
        (TAU / a) * (0.5 + u / 8.0 + u * u / 16.0 + 5.0 * u * u * u / 128.0)
    } else {
        TAU * (a - (a * a - b * b).sqrt()) / (b * b)
    }
}

/// Closed form of int_0^{2pi} dalpha / (a + b cos^2 alpha) = 2 pi / sqrt(a(a+b))
/// for a > 0, a + b > 0.
pub fn angular_quadratic(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && a + b > 0.0) {
        return Err(CoreError::Domain(format!(
            "angular closed form needs a > 0 and a + b > 0, got a = {a}, b = {b}"
        )));
    }
    Ok(TAU / (a * (a + b)).sqrt())
}

/// Flat-window closed form for the curl kernel after the angular pairing
/// bound: int_{|q|<2} dq / (lambda + p^2 + |q|^2)
///      = pi [log(lambda + p^2 + 4) - log(lambda + p^2)].
pub fn flat_window_dcgf_bound(lambda: f64, p_abs: f64) -> f64 {
    let s = lambda + p_abs * p_abs;
    PI * ((s + 4.0).ln() - s.ln())
}

/// The same integral by 2D polar quadrature, used as a mutual oracle.
pub fn flat_window_dcgf_bound_quad(
    lambda: f64,
    p_abs: f64,
    cfg: &QuadConfig,
) -> Result<Quadrature> {
    let s = lambda + p_abs * p_abs;
    quad::polar(&|r: f64, _t: f64| 1.0 / (s + r * r), 0.0, 2.0, cfg)
}

/// Flat-window closed form for the self-repelling annulus integral:
///   4 int_{p/3}^{2} x / (lambda + x^2) dx
///      = 2 [log(lambda + 4) - log(lambda + p^2/9)].
pub fn flat_window_srbp_shell(lambda: f64, p_abs: f64) -> f64 {
    2.0 * ((lambda + 4.0).ln() - (lambda + p_abs * p_abs / 9.0).ln())
}

/// The same integral by adaptive quadrature.
pub fn flat_window_srbp_shell_quad(
    lambda: f64,
    p_abs: f64,
    cfg: &QuadConfig,
) -> Result<Quadrature> {
    let q = quad::adaptive(&|x: f64| 4.0 * x / (lambda + x * x), p_abs / 3.0, 2.0, cfg)?;
    Ok(q)
}

fn check_kernel_args(lambda: f64, p_abs: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(CoreError::Domain(format!(
            "kernel needs lambda > 0, got {lambda}"
        )));
    }
    if !(p_abs.is_finite() && p_abs > 0.0) {
        return Err(CoreError::Domain(format!(
            "kernel needs |p| > 0, got {p_abs}"
        )));
    }
    Ok(())
}

/// Schwarz kernel of the curl model:
///   D(lambda, |p|) = 4 int V_hat(q) (p x q)^2 / (|p|^2 |q|^2)
///                        / (lambda + |p-q|^2) dq,
/// with p on axis 1 by rotational symmetry. The angular integral has the
/// closed form `angular_sin2`, leaving one adaptive radial integral.
pub fn d_dcgf(lambda: f64, p_abs: f64, moll: &Mollifier, cfg: &QuadConfig) -> Result<Quadrature> {
    check_kernel_args(lambda, p_abs)?;
    let r_max = moll.spectral_cutoff(1e-16);
    let f = |r: f64| {
        let a = lambda + p_abs * p_abs + r * r;
        let b = 2.0 * p_abs * r;
        r * moll.v_hat_radial(r) * angular_sin2(a, b)
    };
    let q = quad::adaptive(&f, 0.0, r_max, cfg)?;
    Ok(Quadrature {
        value: 4.0 * q.value,
        error: 4.0 * q.error,
    })
}

/// Angular average of V_hat over the circle |p - w e^{it}|, p on axis 1:
/// int_0^{2pi} V_hat(sqrt(p^2 + w^2 - 2 p w cos t)) dt.
fn angular_vhat(moll: &Mollifier, p_abs: f64, w: f64, panels: usize) -> f64 {
    let s = p_abs * p_abs + w * w;
    let b = 2.0 * p_abs * w;
    quad::periodic(
        &|t: f64| moll.v_hat_radial((s - b * t.cos()).max(0.0).sqrt()),
        panels,
    )
}

/// Schwarz kernel of the self-repelling model:
///   D(lambda, |p|) = 4 int V_hat(q) 1{|p-q| >= |p|/3} / (lambda + |p-q|^2) dq,
/// reduced to a radial integral in w = |p - q| with the angular V_hat average
/// done by uniform panels (the integrand is smooth and periodic in angle).
pub fn d_srbp(lambda: f64, p_abs: f64, moll: &Mollifier, cfg: &QuadConfig) -> Result<Quadrature> {
    check_kernel_args(lambda, p_abs)?;
    let w_max = p_abs + moll.spectral_cutoff(1e-16);
    let f = |w: f64| w / (lambda + w * w) * angular_vhat(moll, p_abs, w, cfg.angular_panels);
    let q = quad::adaptive(&f, p_abs / 3.0, w_max, cfg)?;
    Ok(Quadrature {
        value: 4.0 * q.value,
        error: 4.0 * q.error,
    })
}

/// Schwarz kernel of the anisotropic model: the self-repelling kernel without
/// the annulus restriction, D = 4 int V_hat(q) / (lambda + |p-q|^2) dq.
pub fn d_aniso(lambda: f64, p_abs: f64, moll: &Mollifier, cfg: &QuadConfig) -> Result<Quadrature> {
    check_kernel_args(lambda, p_abs)?;
    let w_max = p_abs + moll.spectral_cutoff(1e-16);
    let f = |w: f64| w / (lambda + w * w) * angular_vhat(moll, p_abs, w, cfg.angular_panels);
    let q = quad::adaptive(&f, 0.0, w_max, cfg)?;
    Ok(Quadrature {
        value: 4.0 * q.value,
        error: 4.0 * q.error,
    })
}

/// Which Schwarz kernel a radial interpolant carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum KernelKind {
    Dcgf,
    Srbp,
    Aniso,
}

/// Radial interpolant of a Schwarz kernel D(lambda, .): log-log cubic spline
/// through 64 direct evaluations, clamped to the end values outside the node
/// range (D flattens both as |p| -> 0 and past the spectral cutoff).
///
/// Node quadrature runs at a fixed relative tolerance of 1e-8 regardless of
/// the caller's config, so that tightening the outer tolerance does not move
/// the interpolant and self-consistency checks see only the outer quadrature.
#[derive(Clone, Debug)]
pub struct RadialKernel {
    spline: CubicSpline,
    nodes: Vec<(f64, f64)>,
}

const KERNEL_NODES: usize = 64;
const KERNEL_R_LO: f64 = 1e-5;

impl RadialKernel {
    fn build(
        kind: KernelKind,
        lambda: f64,
        moll: &Mollifier,
        cfg: &QuadConfig,
        r_hi: f64,
    ) -> Result<Self> {
        if !(r_hi.is_finite() && r_hi > KERNEL_R_LO * 10.0) {
            return Err(CoreError::Config(format!(
                "kernel interpolation range needs r_hi well above {KERNEL_R_LO}, got {r_hi}"
            )));
        }
        let node_cfg = QuadConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            ..cfg.clone()
        };
        let rs = quad::log_space(KERNEL_R_LO, r_hi, KERNEL_NODES);
        let mut nodes = Vec::with_capacity(KERNEL_NODES);
        let mut lx = Vec::with_capacity(KERNEL_NODES);
        let mut ly = Vec::with_capacity(KERNEL_NODES);
        for &r in &rs {
            let d = match kind {
                KernelKind::Dcgf => d_dcgf(lambda, r, moll, &node_cfg)?,
                KernelKind::Srbp => d_srbp(lambda, r, moll, &node_cfg)?,
                KernelKind::Aniso => d_aniso(lambda, r, moll, &node_cfg)?,
            };
            if !(d.value.is_finite() && d.value > 0.0) {
                return Err(CoreError::Numeric(format!(
                    "kernel node D({lambda:.3e}, {r:.3e}) = {} is not positive",
                    d.value
                )));
            }
            nodes.push((r, d.value));
            lx.push(r.ln());
            ly.push(d.value.ln());
        }
        let spline = CubicSpline::new(lx, ly)?;
        Ok(RadialKernel { spline, nodes })
    }

    pub fn dcgf(lambda: f64, moll: &Mollifier, cfg: &QuadConfig, r_hi: f64) -> Result<Self> {
        Self::build(KernelKind::Dcgf, lambda, moll, cfg, r_hi)
    }

    pub fn srbp(lambda: f64, moll: &Mollifier, cfg: &QuadConfig, r_hi: f64) -> Result<Self> {
        Self::build(KernelKind::Srbp, lambda, moll, cfg, r_hi)
    }

    pub fn aniso(lambda: f64, moll: &Mollifier, cfg: &QuadConfig, r_hi: f64) -> Result<Self> {
        Self::build(KernelKind::Aniso, lambda, moll, cfg, r_hi)
    }

    /// Interpolated D(lambda, r).
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.nodes[0].1;
        }
        self.spline.eval(r.ln()).exp()
    }

    /// The (r, D) pairs evaluated directly at the interpolation nodes.
    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }
}

/// Parameters of one bound evaluation: the resolvent parameter, the model,
/// the mollifier, quadrature budgets, the radial cutoff of all spectral
/// integrals, and the test-function amplitude used where one is needed.
#[derive(Clone, Debug)]
pub struct BoundQuery {
    pub lambda: f64,
    pub model: SimModel,
    pub mollifier: Mollifier,
    pub quad: QuadConfig,
    /// Radial cutoff of the spectral integrals; must leave v_hat below 1e-12.
    pub p_max: f64,
    /// Amplitude of the self-repelling test function.
    pub c: f64,
}

impl BoundQuery {
    pub fn new(lambda: f64, model: SimModel, mollifier: Mollifier) -> Result<Self> {
        let p_max = mollifier.spectral_cutoff(1e-13);
        let q = BoundQuery {
            lambda,
            model,
            mollifier,
            quad: QuadConfig::default(),
            p_max,
            c: 0.1,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(CoreError::Domain(format!(
                "the asymptotic regime needs 0 < lambda < 1, got lambda = {}",
                self.lambda
            )));
        }
        if !(self.p_max.is_finite() && self.p_max > 0.0) {
            return Err(CoreError::Config(format!(
                "radial cutoff p_max = {} must be positive",
                self.p_max
            )));
        }
        let tail = self.mollifier.v_hat_radial(self.p_max);
        if !(tail < 1e-12) {
            return Err(CoreError::Config(format!(
                "radial cutoff p_max = {} leaves v_hat = {tail:.3e}; need < 1e-12",
                self.p_max
            )));
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(CoreError::Config(format!(
                "test-function amplitude c = {} must be >= 0",
                self.c
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFunctionKind {
    /// v_hat(p) = c p_1 h(lambda + |p|^2).
    SrbpChoice,
    /// v_hat(p) = p_2 / (lambda + (1 + D(lambda,|p|)) |p|^2).
    OptimalDcgf,
    /// u_hat(p) = 1 / (lambda + |p|^2 + C p_1^2 |log lambda|).
    AnisoOptimal,
    Custom,
}

type ScalarFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// A first-chaos test function: the scalar spectral profile (v_hat for the
/// isotropic models, u_hat for the anisotropic one) and its gradient.
/// Isotropic profiles must be antisymmetric, v_hat(-p) = -v_hat(p); the
/// anisotropic parametrization v_hat(p) = p_1 u_hat(p) is antisymmetric
/// exactly when u_hat is even, so even parity is enforced there instead.
/// Parity is checked at construction on a fixed probe set; square
/// integrability against V_hat |p|^{-2} is enforced by the functional
/// quadratures themselves, which fail loudly when it is violated.
#[derive(Clone)]
pub struct TestFunction {
    kind: TestFunctionKind,
    value: ScalarFn,
    gradient: GradFn,
    even: bool,
    pub c: f64,
    pub lambda: f64,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("kind", &self.kind)
            .field("even", &self.even)
            .field("c", &self.c)
            .field("lambda", &self.lambda)
            .finish()
    }
}

fn fd_gradient(value: ScalarFn) -> GradFn {
    Arc::new(move |p: [f64; 2]| {
        let scale = 1e-6 * (1.0 + p[0].hypot(p[1]));
        [
            (value([p[0] + scale, p[1]]) - value([p[0] - scale, p[1]])) / (2.0 * scale),
            (value([p[0], p[1] + scale]) - value([p[0], p[1] - scale])) / (2.0 * scale),
        ]
    })
}

impl TestFunction {
    /// The self-repelling choice v_hat(p) = c p_1 h(lambda + |p|^2), with its
    /// analytic gradient.
    pub fn srbp_choice(lambda: f64, c: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(CoreError::Domain(format!(
                "test function needs lambda > 0, got {lambda}"
            )));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(CoreError::Config(format!(
                "amplitude c = {c} must be finite and >= 0"
            )));
        }
        let value: ScalarFn = Arc::new(move |p: [f64; 2]| {
            let x = lambda + p[0] * p[0] + p[1] * p[1];
            c * p[0] / (x * (x + 1.0 / x).ln())
        });
        let gradient: GradFn = Arc::new(move |p: [f64; 2]| {
            let x = lambda + p[0] * p[0] + p[1] * p[1];
            let h = h_func(x).expect("x = lambda + |p|^2 > 0");
            let hp = h_prime(x).expect("x = lambda + |p|^2 > 0");
            [c * (h + 2.0 * p[0] * p[0] * hp), c * 2.0 * p[0] * p[1] * hp]
        });
        let f = TestFunction {
            kind: TestFunctionKind::SrbpChoice,
            value,
            gradient,
            even: false,
            c,
            lambda,
        };
        f.check_parity()?;
        Ok(f)
    }

    /// The curl-model optimizer v_hat(p) = p_2 / (lambda + (1+D)|p|^2), with
    /// D carried by a radial interpolant.
    pub fn optimal_dcgf(lambda: f64, kernel: Arc<RadialKernel>) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(CoreError::Domain(format!(
                "test function needs lambda > 0, got {lambda}"
            )));
        }
        let k = kernel.clone();
        let value: ScalarFn = Arc::new(move |p: [f64; 2]| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            let d = k.eval(r2.sqrt());
            p[1] / (lambda + (1.0 + d) * r2)
        });
        let gradient = fd_gradient(value.clone());
        let f = TestFunction {
            kind: TestFunctionKind::OptimalDcgf,
            value,
            gradient,
            even: false,
            c: 1.0,
            lambda,
        };
        f.check_parity()?;
        Ok(f)
    }

    /// The anisotropic optimizer u_hat(p) = 1/(lambda + |p|^2 + C p_1^2 |log lambda|)
    /// with a fitted constant C >= 0.
    pub fn aniso_optimal(lambda: f64, c_fit: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0 && lambda < 1.0) {
            return Err(CoreError::Domain(format!(
                "anisotropic optimizer needs 0 < lambda < 1, got {lambda}"
            )));
        }
        if !(c_fit.is_finite() && c_fit >= 0.0) {
            return Err(CoreError::Config(format!(
                "fitted constant C = {c_fit} must be >= 0"
            )));
        }
        let log_abs = lambda.ln().abs();
        let value: ScalarFn = Arc::new(move |p: [f64; 2]| {
            1.0 / (lambda + p[0] * p[0] + p[1] * p[1] + c_fit * p[0] * p[0] * log_abs)
        });
        let gradient = fd_gradient(value.clone());
        let f = TestFunction {
            kind: TestFunctionKind::AnisoOptimal,
            value,
            gradient,
            even: true,
            c: 1.0,
            lambda,
        };
        f.check_parity()?;
        Ok(f)
    }

    /// A caller-supplied profile. `even = false` declares an antisymmetric
    /// v_hat (isotropic models), `even = true` an even u_hat (anisotropic).
    /// Without an explicit gradient a centered finite difference is used.
    pub fn custom(
        lambda: f64,
        value: ScalarFn,
        gradient: Option<GradFn>,
        even: bool,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(CoreError::Domain(format!(
                "test function needs lambda > 0, got {lambda}"
            )));
        }
        let gradient = gradient.unwrap_or_else(|| fd_gradient(value.clone()));
        let f = TestFunction {
            kind: TestFunctionKind::Custom,
            value,
            gradient,
            even,
            c: 1.0,
            lambda,
        };
        f.check_parity()?;
        Ok(f)
    }

    /// The reflected profile p -> -v(-p) (identical for exactly antisymmetric
    /// profiles; used to check that the functionals cannot see orientation).
    pub fn reflected(&self) -> Self {
        let v = self.value.clone();
        let g = self.gradient.clone();
        let (value, gradient): (ScalarFn, GradFn) = if self.even {
            (
                Arc::new(move |p: [f64; 2]| v([-p[0], -p[1]])),
                Arc::new(move |p: [f64; 2]| {
                    let d = g([-p[0], -p[1]]);
                    [-d[0], -d[1]]
                }),
            )
        } else {
            (
                Arc::new(move |p: [f64; 2]| -v([-p[0], -p[1]])),
                Arc::new(move |p: [f64; 2]| g([-p[0], -p[1]])),
            )
        };
        TestFunction {
            kind: TestFunctionKind::Custom,
            value,
            gradient,
            even: self.even,
            c: self.c,
            lambda: self.lambda,
        }
    }

    pub fn kind(&self) -> TestFunctionKind {
        self.kind
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        (self.value)(p)
    }

    pub fn grad(&self, p: [f64; 2]) -> [f64; 2] {
        (self.gradient)(p)
    }

    /// Parity and finiteness on a fixed deterministic probe set.
    fn check_parity(&self) -> Result<()> {
        let radii: [f64; 5] = [1e-4, 0.05, 0.31, 1.1, 2.7];
        let angles: [f64; 6] = [0.3, 1.1, 2.0, 2.9, 4.1, 5.5];
        for &r in &radii {
            for &t in &angles {
                let p = [r * t.cos(), r * t.sin()];
                let a = self.eval(p);
                let b = self.eval([-p[0], -p[1]]);
                if !(a.is_finite() && b.is_finite()) {
                    return Err(CoreError::Config(format!(
                        "test function is not finite at p = ({:.3e}, {:.3e})",
                        p[0], p[1]
                    )));
                }
                let mismatch = if self.even {
                    (a - b).abs()
                } else {
                    (a + b).abs()
                };
                if mismatch > 1e-9 * (1.0 + a.abs()) {
                    let want = if self.even { "even" } else { "antisymmetric" };
                    return Err(CoreError::Config(format!(
                        "test function is not {want}: f({:.3}, {:.3}) = {a:.6e}, f(-p) = {b:.6e}",
                        p[0], p[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The reduced functionals of one (query, test function) pair, with the
/// Schwarz-kernel probes and summed quadrature error estimates. The bound
/// fields are left empty here and filled by callers that pair a functional
/// evaluation with the matching bound sweep.
#[derive(Clone, Debug, Default)]
pub struct FunctionalValues {
    pub j1: f64,
    pub j2: f64,
    /// Schwarz-bounded J3 (curl and anisotropic models).
    pub j3: Option<f64>,
    /// Self-repelling split: far-diagonal Schwarz part.
    pub j31_bound: Option<f64>,
    /// Self-repelling split: near-diagonal sup form.
    pub j32_prime: Option<f64>,
    /// (|p|, D(lambda,|p|)) along the kernel interpolation nodes.
    pub d_at_probes: Vec<(f64, f64)>,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    /// Sum of the component quadrature error estimates.
    pub err: f64,
}

impl FunctionalValues {
    /// Total J3-type contribution, whichever split is present.
    pub fn j3_total(&self) -> f64 {
        self.j3
            .unwrap_or(self.j31_bound.unwrap_or(0.0) + self.j32_prime.unwrap_or(0.0))
    }

    /// The variational combination 2 J1 - J2 - J3.
    pub fn combination(&self) -> f64 {
        2.0 * self.j1 - self.j2 - self.j3_total()
    }
}

/// Largest |grad f|^2 over the probe disc |r - p| < |p|/3: the center plus
/// 16 angles at radii |p|/6 and 0.99 |p|/3. The sup is only probed, but the
/// radial monotone envelope (34 h^2 for the self-repelling choice) is exact
/// and is cross-checked in tests.
fn ring_sup_grad_sq(f: &TestFunction, p: [f64; 2]) -> f64 {
    let norm = |g: [f64; 2]| g[0] * g[0] + g[1] * g[1];
    let r = p[0].hypot(p[1]);
    let mut best = norm(f.grad(p));
    for &frac in &[1.0 / 6.0, 0.99 / 3.0] {
        let rho = r * frac;
        for k in 0..16 {
            let t = TAU * k as f64 / 16.0;
            let q = [p[0] + rho * t.cos(), p[1] + rho * t.sin()];
            let g = norm(f.grad(q));
            if g > best {
                best = g;
            }
        }
    }
    best
}

fn require_parity(model: SimModel, f: &TestFunction) -> Result<()> {
    let want_even = model == SimModel::SrbpAniso;
    if f.is_even() != want_even {
        let (profile, parity) = if want_even {
            ("u_hat", "even")
        } else {
            ("v_hat", "antisymmetric")
        };
        return Err(CoreError::Config(format!(
            "model {} takes an {parity} {profile} profile; the supplied test function has the wrong parity",
            model.name()
        )));
    }
    Ok(())
}

/// Evaluates J1, J2 and the J3-type terms of the query's model at the given
/// test function. The Schwarz kernels are carried by a radial interpolant
/// whose direct node values are reported in `d_at_probes`.
pub fn functionals(query: &BoundQuery, f: &TestFunction) -> Result<FunctionalValues> {
    query.validate()?;
    require_parity(query.model, f)?;
    let moll = &query.mollifier;
    let cfg = &query.quad;
    let lambda = query.lambda;
    let p_max = query.p_max;
    let at = |r: f64, t: f64| [r * t.cos(), r * t.sin()];

    let mut out = FunctionalValues::default();
    match query.model {
        SimModel::Srbp | SimModel::Dcgf => {
            let axis = if query.model == SimModel::Srbp { 0 } else { 1 };
            // J1 = int V_hat (p_a/|p|^2) v_hat dp; the polar area element
            // cancels one power of r, leaving a plain dr dt integral.
            let j1_rad = |r: f64| {
                moll.v_hat_radial(r)
                    * quad::periodic(
                        &|t: f64| {
                            let p = at(r, t);
                            let dir = if axis == 0 { t.cos() } else { t.sin() };
                            dir * f.eval(p)
                        },
                        cfg.angular_panels,
                    )
            };
            let j1 = quad::adaptive(&j1_rad, 0.0, p_max, cfg)?;
            let j2 = quad::polar(
                &|r: f64, t: f64| {
                    let v = f.eval(at(r, t));
                    moll.v_hat_radial(r) * (lambda + r * r) / (r * r) * v * v
                },
                0.0,
                p_max,
                cfg,
            )?;
            out.j1 = j1.value;
            out.j2 = j2.value;
            out.err = j1.error + j2.error;
            if query.model == SimModel::Dcgf {
                let kernel = RadialKernel::dcgf(lambda, moll, cfg, p_max)?;
                let j3 = quad::polar(
                    &|r: f64, t: f64| {
                        let v = f.eval(at(r, t));
                        moll.v_hat_radial(r) * kernel.eval(r) * v * v
                    },
                    0.0,
                    p_max,
                    cfg,
                )?;
                out.j3 = Some(j3.value);
                out.err += j3.error;
                out.d_at_probes = kernel.nodes().to_vec();
            } else {
                let kernel = RadialKernel::srbp(lambda, moll, cfg, p_max)?;
                let j31 = quad::polar(
                    &|r: f64, t: f64| {
                        let v = f.eval(at(r, t));
                        moll.v_hat_radial(r) * kernel.eval(r) * v * v
                    },
                    0.0,
                    p_max,
                    cfg,
                )?;
                let j32 = quad::polar(
                    &|r: f64, t: f64| moll.v_hat_radial(r) * r * r * ring_sup_grad_sq(f, at(r, t)),
                    0.0,
                    p_max,
                    cfg,
                )?;
                out.j31_bound = Some(j31.value);
                out.j32_prime = Some(0.25 * j32.value);
                out.err += j31.error + 0.25 * j32.error;
                out.d_at_probes = kernel.nodes().to_vec();
            }
        }
        SimModel::SrbpAniso => {
            let j1 = quad::polar(
                &|r: f64, t: f64| moll.v_hat_radial(r) * f.eval(at(r, t)),
                0.0,
                p_max,
                cfg,
            )?;
            let j2 = quad::polar(
                &|r: f64, t: f64| {
                    let u = f.eval(at(r, t));
                    moll.v_hat_radial(r) * (lambda + r * r) * u * u
                },
                0.0,
                p_max,
                cfg,
            )?;
            let kernel = RadialKernel::aniso(lambda, moll, cfg, p_max)?;
            let j3 = quad::polar(
                &|r: f64, t: f64| {
                    let u = f.eval(at(r, t));
                    let p1 = r * t.cos();
                    moll.v_hat_radial(r) * kernel.eval(r) * p1 * p1 * u * u
                },
                0.0,
                p_max,
                cfg,
            )?;
            out.j1 = j1.value;
            out.j2 = j2.value;
            out.j3 = Some(j3.value);
            out.err = j1.error + j2.error + j3.error;
            out.d_at_probes = kernel.nodes().to_vec();
        }
    }
    Ok(out)
}

/// Direct tensor-rule evaluation of the double integral J3 (no Schwarz
/// decoupling), used as a low-resolution dominance cross-check against the
/// decoupled form. The error field is the difference against a half-resolution
/// grid.
pub fn j3_direct(query: &BoundQuery, f: &TestFunction) -> Result<Quadrature> {
    let full = j3_direct_at(query, f, 24, 32)?;
    let half = j3_direct_at(query, f, 12, 16)?;
    Ok(Quadrature {
        value: full,
        error: (full - half).abs(),
    })
}

fn j3_direct_at(query: &BoundQuery, f: &TestFunction, n_rad: usize, n_ang: usize) -> Result<f64> {
    query.validate()?;
    require_parity(query.model, f)?;
    let moll = &query.mollifier;
    let lambda = query.lambda;
    let radial = quad::gauss_legendre(n_rad, 0.0, query.p_max);
    let dt = TAU / n_ang as f64;
    // Profile entering the difference: v_hat for the isotropic models,
    // p_1 u_hat for the anisotropic one.
    let g = |p: [f64; 2]| {
        if query.model == SimModel::SrbpAniso {
            p[0] * f.eval(p)
        } else {
            f.eval(p)
        }
    };
    // Precompute the nodes.
    let mut pts = Vec::with_capacity(n_rad * n_ang);
    for &(r, wr) in &radial {
        let vr = moll.v_hat_radial(r);
        for k in 0..n_ang {
            let t = k as f64 * dt;
            let p = [r * t.cos(), r * t.sin()];
            pts.push((p, r * wr * dt * vr, g(p), t));
        }
    }
    let mut total = 0.0;
    for &(p, wp, gp, tp) in &pts {
        let mut inner = 0.0;
        for &(q, wq, gq, tq) in &pts {
            let kernel = match query.model {
                SimModel::Srbp => {
                    let c = (tp - tq).cos();
                    c * c
                }
                SimModel::Dcgf => {
                    let s = (tp - tq).sin();
                    s * s
                }
                SimModel::SrbpAniso => 1.0,
            };
            let dp0 = p[0] - q[0];
            let dp1 = p[1] - q[1];
            let diff = gp - gq;
            inner += wq * kernel * diff * diff / (lambda + dp0 * dp0 + dp1 * dp1);
        }
        total += wp * inner;
    }
    Ok(total)
}

/// Lower bound for the curl model,
///   (phi, R_lambda phi) >= int V_hat(p) / (lambda + (1+D(lambda,|p|))|p|^2) dp,
/// with D interpolated between direct evaluations.
pub fn lower_bound_dcgf(query: &BoundQuery) -> Result<Quadrature> {
    query.validate()?;
    let kernel = RadialKernel::dcgf(query.lambda, &query.mollifier, &query.quad, query.p_max)?;
    lower_bound_dcgf_with_kernel(query, |r| kernel.eval(r))
}

/// Same radial integral with a caller-supplied kernel; `|_| 0.0` recovers the
/// free-resolvent closed forms used as oracles.
pub fn lower_bound_dcgf_with_kernel(
    query: &BoundQuery,
    d: impl Fn(f64) -> f64,
) -> Result<Quadrature> {
    query.validate()?;
    let moll = &query.mollifier;
    let lambda = query.lambda;
    let f = |r: f64| TAU * r * moll.v_hat_radial(r) / (lambda + (1.0 + d(r)) * r * r);
    quad::adaptive(&f, 0.0, query.p_max, &query.quad)
}

/// Self-repelling lower bound: the variational combination at the choice
/// v_hat = c p_1 h(lambda + |p|^2), maximized over a log grid of amplitudes.
/// J1 is linear and the quadratic terms exactly quadratic in c, so the grid
/// search reuses one functional evaluation at c = 1.
#[derive(Clone, Debug)]
pub struct SrbpBound {
    /// Best value of 2 J1 - J2 - J31 - J32' over the amplitude grid.
    pub value: f64,
    /// The maximizing amplitude.
    pub c_star: f64,
    /// 2 J1 at c = 1 (linear coefficient).
    pub linear: f64,
    /// J2 + J31 + J32' at c = 1 (quadratic coefficient).
    pub quadratic: f64,
    /// Functionals at c = 1.
    pub parts: FunctionalValues,
    /// Error estimate propagated to the best point.
    pub err: f64,
}

impl SrbpBound {
    /// The combination at an arbitrary amplitude.
    pub fn value_at(&self, c: f64) -> f64 {
        self.linear * c - self.quadratic * c * c
    }
}

pub fn lower_bound_srbp(query: &BoundQuery) -> Result<SrbpBound> {
    query.validate()?;
    if query.model != SimModel::Srbp {
        return Err(CoreError::Config(format!(
            "self-repelling lower bound queried with model {}",
            query.model.name()
        )));
    }
    let unit = functionals(query, &TestFunction::srbp_choice(query.lambda, 1.0)?)?;
    let linear = 2.0 * unit.j1;
    let quadratic = unit.j2 + unit.j31_bound.unwrap_or(0.0) + unit.j32_prime.unwrap_or(0.0);
    let mut best = (0.0f64, 0.0f64);
    for c in quad::log_space(1e-4, 1.0, 17) {
        let v = linear * c - quadratic * c * c;
        if v > best.0 {
            best = (v, c);
        }
    }
    let (value, c_star) = best;
    let err = unit.err * (2.0 * c_star + c_star * c_star);
    Ok(SrbpBound {
        value,
        c_star,
        linear,
        quadratic,
        parts: unit,
        err,
    })
}

/// Fits the constant C of the anisotropic kernel bound
/// D(lambda,|p|) <= C |log lambda| on a coarse (lambda, |p|) grid over the
/// integration region |p| <= 1/2. The constant is a property of the
/// mollifier; it is never hard-coded.
///
/// Unlike the curl kernel, the anisotropic kernel has no angular factor
/// vanishing on the diagonal q = p, so its near-diagonal part contributes
/// a full |log lambda| at every p with V_hat(p) > 0; a bound in terms of
/// |log(lambda + |p|^2)| alone would not admit a stable constant.
pub fn fit_aniso_constant(moll: &Mollifier, cfg: &QuadConfig) -> Result<f64> {
    let mut c = 0.0f64;
    for &lambda in &[1e-2, 1e-4, 1e-6, 1e-8] {
        for &r in &[0.05, 0.1, 0.18, 0.28, 0.38, 0.5] {
            let d = d_aniso(lambda, r, moll, cfg)?;
            c = c.max(d.value / lambda.ln().abs());
        }
    }
    Ok(c)
}

/// Anisotropic lower bound and its polar cross-check.
#[derive(Clone, Debug)]
pub struct AnisoBound {
    /// 2D quadrature of int_{|p|<1/2} V_hat / (lambda + |p|^2 + C p_1^2 |log lambda|) dp.
    pub value: f64,
    pub err: f64,
    /// The fitted kernel constant C.
    pub c_fit: f64,
    /// The same integral with V_hat frozen at its |p| -> 0 value, by 2D quadrature...
    pub flat_2d: f64,
    /// ...and by the angular closed form reduced to one radial integral.
    pub flat_polar: f64,
}

pub fn lower_bound_aniso(query: &BoundQuery) -> Result<AnisoBound> {
    query.validate()?;
    if query.model != SimModel::SrbpAniso {
        return Err(CoreError::Config(format!(
            "anisotropic lower bound queried with model {}",
            query.model.name()
        )));
    }
    let moll = &query.mollifier;
    let lambda = query.lambda;
    let c_fit = fit_aniso_constant(moll, &query.quad)?;
    let log_abs = lambda.ln().abs();
    // The angular integrand 1/(a + b cos^2 t) sharpens as b/a = C|log lambda|
    // grows; uniform panels converge like exp(-n asinh(sqrt(a/b))), so scale
    // the panel count to keep that factor negligible.
    let spike = (1.0 / (c_fit * log_abs).max(1.0).sqrt()).asinh();
    let mut cfg = query.quad.clone();
    cfg.angular_panels = cfg.angular_panels.max((26.0 / spike).ceil() as usize);
    let r_hi = 0.5f64.min(query.p_max);
    let denom = |r: f64, t: f64| {
        let p1 = r * t.cos();
        lambda + r * r + c_fit * p1 * p1 * log_abs
    };
    let full = quad::polar(
        &|r: f64, t: f64| moll.v_hat_radial(r) / denom(r, t),
        0.0,
        r_hi,
        &cfg,
    )?;
    let v0 = moll.v_hat_radial(0.0);
    let flat_2d = quad::polar(&|r: f64, t: f64| v0 / denom(r, t), 0.0, r_hi, &cfg)?;
    // Angular closed form: int dalpha / (a + b cos^2 alpha) = 2 pi / sqrt(a(a+b))
    // with a = lambda + r^2 and b = C |log lambda| r^2.
    let flat_polar = quad::adaptive(
        &|r: f64| {
            let a = lambda + r * r;
            let b = c_fit * log_abs * r * r;
            v0 * r * TAU / (a * (a + b)).sqrt()
        },
        0.0,
        r_hi,
        &cfg,
    )?;
    Ok(AnisoBound {
        value: full.value,
        err: full.error,
        c_fit,
        flat_2d: flat_2d.value,
        flat_polar: flat_polar.value,
    })
}

/// Upper bound on the resolvent form: dropping the antisymmetric part of the
/// generator leaves the symmetrized resolvent, whose first-chaos value is
///   int V_hat(p) w(p) / (lambda + |p|^2) dp
/// with the axis weight w = p_1^2/|p|^2 (self-repelling), p_2^2/|p|^2 (curl),
/// or 1 (anisotropic).
pub fn upper_bound(query: &BoundQuery) -> Result<Quadrature> {
    query.validate()?;
    let moll = &query.mollifier;
    let lambda = query.lambda;
    let model = query.model;
    quad::polar(
        &|r: f64, t: f64| {
            let w = match model {
                SimModel::Srbp => t.cos() * t.cos(),
                SimModel::Dcgf => t.sin() * t.sin(),
                SimModel::SrbpAniso => 1.0,
            };
            moll.v_hat_radial(r) * w / (lambda + r * r)
        },
        0.0,
        query.p_max,
        &query.quad,
    )
}

/// Exact radial envelope of the self-repelling sup form: |grad v_hat*|^2 is
/// bounded by 34 c^2 h(lambda + |r|^2)^2, which is radial and decreasing, so
/// the sup over |r - p| < |p|/3 is attained at |r| = 2|p|/3:
///   J32'(v_hat*) <= (34 c^2 / 4) int V_hat(p) |p|^2 h(lambda + 4|p|^2/9)^2 dp.
pub fn srbp_sup_envelope(query: &BoundQuery) -> Result<Quadrature> {
    query.validate()?;
    let moll = &query.mollifier;
    let lambda = query.lambda;
    let c = query.c;
    let f = |r: f64| {
        let x = lambda + 4.0 * r * r / 9.0;
        let h = 1.0 / (x * (x + 1.0 / x).ln());
        TAU * r * moll.v_hat_radial(r) * r * r * h * h
    };
    let q = quad::adaptive(&f, 0.0, query.p_max, &query.quad)?;
    Ok(Quadrature {
        value: 8.5 * c * c * q.value,
        error: 8.5 * c * c * q.error,
    })
}
