//! Closed-form propagators of the three system classes, their quadratic-form
//! coefficients and the differential system those coefficients obey.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::action::{guarded_integral, BasisEnds};
use crate::classical::{ParticularSolution, ShiftedBasis};
use crate::error::{Error, Result};
use crate::quad::QuadOptions;
use crate::scenario::{Scenario, Variant};
use crate::states::StateFamily;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Width of the window around `t_a` where the drive integrand is replaced
/// by its leading-order series, relative to `t_b − t_a`.
const SERIES_WINDOW: f64 = 1e-7;

/// Quadrature settings for the kernel phase integrals; tighter than the
/// action defaults because `s` is differentiated numerically.
pub fn kernel_quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_depth: 40,
    }
}

/// Kernel of one system class for a fixed shifted basis and particular
/// solution; `t_a` is the basis anchor.
#[derive(Debug, Clone)]
pub struct Kernel {
    variant: Variant,
    shifted: ShiftedBasis,
    particular: Option<ParticularSolution>,
}

impl Kernel {
    /// `particular` must vanish at `t_a`; it is ignored for the undriven
    /// variant and may be omitted when the scenario has no drive.
    pub fn new(variant: Variant, shifted: &ShiftedBasis, particular: Option<&ParticularSolution>) -> Result<Self> {
        let particular = match (variant, particular) {
            (Variant::Undriven, _) => None,
            (_, Some(xp)) => {
                let (x0, xd0) = xp.state(shifted.t_a())?;
                if x0.abs() > 1e-12 * (1.0 + xd0.abs()) {
                    return Err(Error::Precondition(format!(
                        "particular solution must vanish at t_a = {}, got {x0:e}",
                        shifted.t_a()
                    )));
                }
                Some(xp.clone())
            }
            (_, None) => None,
        };
        Ok(Kernel {
            variant,
            shifted: shifted.clone(),
            particular,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn t_a(&self) -> f64 {
        self.shifted.t_a()
    }

    pub fn scenario(&self) -> &Scenario {
        self.shifted.scenario()
    }

    pub fn shifted(&self) -> &ShiftedBasis {
        &self.shifted
    }

    /// Everything that depends on `t_b` only.
    pub fn at(&self, t_b: f64) -> Result<KernelSlice> {
        let t_a = self.t_a();
        let ends = BasisEnds::new(&self.shifted, t_a, t_b)?;
        let sc = self.shifted.scenario();
        let hbar = sc.hbar();
        let (xpda, xpb, xpdb) = match &self.particular {
            Some(xp) => {
                let (x1, v1) = xp.state(t_b)?;
                (xp.velocity(t_a)?, x1, v1)
            }
            None => (0.0, 0.0, 0.0),
        };
        let drive_integral = match &self.particular {
            Some(xp) => drive_integral(&self.shifted, xp, t_b)?,
            None => 0.0,
        };
        let f_integral = match self.variant {
            Variant::General => guarded_integral(|z| Ok(sc.evaluate(z)?.f), t_a, t_b, &kernel_quad_options())?,
            _ => 0.0,
        };
        let ratio = ends.m_a * ends.vsd_a / (2.0 * PI * hbar * ends.vs_b);
        let prefactor = (Complex64::new(ratio, 0.0) / I).sqrt();
        let (ca, cb) = match self.variant {
            Variant::General => (sc.evaluate(t_a)?, sc.evaluate(t_b)?),
            _ => {
                let zero = sc.evaluate(t_a)?;
                let zero = crate::scenario::Coefficients { a: 0.0, b: 0.0, ..zero };
                (zero, zero)
            }
        };
        Ok(KernelSlice {
            variant: self.variant,
            t_a,
            t_b,
            hbar,
            ends,
            xpda,
            xpb,
            xpdb,
            a_a: ca.a,
            b_a: ca.b,
            a_b: cb.a,
            b_b: cb.b,
            drive_integral,
            f_integral,
            prefactor,
        })
    }

    pub fn value(&self, x_a: f64, x_b: f64, t_b: f64) -> Result<Complex64> {
        Ok(self.at(t_b)?.eval(x_a, x_b))
    }

    pub fn coefficients(&self, t_b: f64) -> Result<KernelCoefficients> {
        Ok(self.at(t_b)?.coefficients())
    }
}

/// `I = ∫_{t_a}^{t_b} M/v_s² (x_p v̇_s − ẋ_p v_s)² dt`.
///
/// Where `v_s` has a zero inside `(t_a, t_b)` the integrand is not
/// integrable; there the equivalent regular expression
/// `∫ M(ẋ_p² − w² x_p²) dt − M(t_b) v̇_s(t_b) x_p(t_b)² / v_s(t_b)` is used.
pub fn drive_integral(shifted: &ShiftedBasis, xp: &ParticularSolution, t_b: f64) -> Result<f64> {
    let t_a = shifted.t_a();
    let sc = shifted.scenario();
    if vs_changes_sign(shifted, t_b)? {
        let (vs, vsd) = shifted.vs_state(t_b)?;
        let (x, _) = xp.state(t_b)?;
        let lagr = 2.0 * (xp.lagrangian_integral(t_a, t_b)?);
        return Ok(lagr - sc.evaluate(t_b)?.mass * vsd / vs * x * x);
    }
    let span = t_b - t_a;
    let series = drive_series(shifted, xp)?;
    guarded_integral(
        |t| {
            let tau = t - t_a;
            if tau.abs() < SERIES_WINDOW * span {
                return Ok(series * tau * tau);
            }
            let (x, xd) = xp.state(t)?;
            let (vs, vsd) = shifted.vs_state(t)?;
            let m = sc.evaluate(t)?.mass;
            let w = x * vsd / vs - xd;
            Ok(m * w * w)
        },
        t_a,
        t_b,
        &kernel_quad_options(),
    )
}

/// Leading coefficient `c` of the drive integrand `≈ c (t − t_a)²`.
fn drive_series(shifted: &ShiftedBasis, xp: &ParticularSolution) -> Result<f64> {
    let t_a = shifted.t_a();
    let c = shifted.scenario().evaluate(t_a)?;
    let (x, xd) = xp.state(t_a)?;
    let (vs, vsd) = shifted.vs_state(t_a)?;
    let xdd = -(c.mass_dot / c.mass) * xd - c.freq_sq * x + c.drive / c.mass;
    let vsdd = -(c.mass_dot / c.mass) * vsd - c.freq_sq * vs;
    let k = 0.5 * (xd * vsdd - xdd * vsd) / vsd;
    Ok(c.mass * k * k)
}

fn vs_changes_sign(shifted: &ShiftedBasis, t_b: f64) -> Result<bool> {
    let t_a = shifted.t_a();
    let n = ((t_b - t_a) * 40.0).ceil().max(64.0) as usize;
    let sign0 = shifted.vs_state(t_b)?.0.signum();
    for i in 1..n {
        let t = t_a + (t_b - t_a) * i as f64 / n as f64;
        if shifted.vs_state(t)?.0.signum() != sign0 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Kernel data at a fixed `(t_a, t_b)`.
#[derive(Debug, Clone)]
pub struct KernelSlice {
    variant: Variant,
    t_a: f64,
    t_b: f64,
    hbar: f64,
    ends: BasisEnds,
    xpda: f64,
    xpb: f64,
    xpdb: f64,
    a_a: f64,
    b_a: f64,
    a_b: f64,
    b_b: f64,
    drive_integral: f64,
    f_integral: f64,
    prefactor: Complex64,
}

impl KernelSlice {
    pub fn t_a(&self) -> f64 {
        self.t_a
    }

    pub fn t_b(&self) -> f64 {
        self.t_b
    }

    /// `√(M(t_a) v̇_s(t_a) / (2πiħ v_s(t_b)))`, principal branch.
    pub fn prefactor(&self) -> Complex64 {
        self.prefactor
    }

    /// The closed-form kernel, term by term.
    pub fn eval(&self, x_a: f64, x_b: f64) -> Complex64 {
        let e = &self.ends;
        let r_b = e.vsd_b / e.vs_b;
        let db = x_b - self.xpb;
        let mut bracket = x_a * x_a * e.quad_a() + db * db * e.m_b * r_b
            - 2.0 * x_a * db * e.m_a * e.vsd_a / e.vs_b
            + 2.0 * e.m_b * self.xpdb * x_b
            - 2.0 * e.m_a * self.xpda * x_a
            - e.m_b * r_b * self.xpb * self.xpb
            - self.drive_integral;
        if self.variant == Variant::General {
            bracket += 2.0 * e.m_b * self.a_b * x_b * x_b - 2.0 * e.m_a * self.a_a * x_a * x_a + 2.0 * self.b_b * x_b
                - 2.0 * self.b_a * x_a
                + 2.0 * self.f_integral;
        }
        self.prefactor * (I * bracket / (2.0 * self.hbar)).exp()
    }

    /// Coefficients of `(i/ħ)(A x_a² + B x_b² + h x_a x_b + α x_a + β x_b + s)`.
    pub fn coefficients(&self) -> KernelCoefficients {
        let e = &self.ends;
        let r_b = e.vsd_b / e.vs_b;
        let h = -e.m_a * e.vsd_a / e.vs_b;
        let mut c = KernelCoefficients {
            variant: self.variant,
            t_a: self.t_a,
            t_b: self.t_b,
            hbar: self.hbar,
            a: 0.5 * e.quad_a(),
            b: 0.5 * e.m_b * r_b,
            h,
            alpha: -h * self.xpb - e.m_a * self.xpda,
            beta: -e.m_b * r_b * self.xpb + e.m_b * self.xpdb,
            s: Complex64::new(-0.5 * self.drive_integral, 0.0) + self.prefactor.ln() * self.hbar / I,
        };
        if self.variant == Variant::General {
            c.a -= e.m_a * self.a_a;
            c.b += e.m_b * self.a_b;
            c.alpha -= self.b_a;
            c.beta += self.b_b;
            c.s += self.f_integral;
        }
        c
    }
}

/// Quadratic-form data of a kernel at fixed `(t_a, t_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCoefficients {
    pub variant: Variant,
    pub t_a: f64,
    pub t_b: f64,
    pub hbar: f64,
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s: Complex64,
}

impl KernelCoefficients {
    pub fn eval(&self, x_a: f64, x_b: f64) -> Complex64 {
        let quad = self.a * x_a * x_a + self.b * x_b * x_b + self.h * x_a * x_b + self.alpha * x_a + self.beta * x_b;
        (I * (Complex64::new(quad, 0.0) + self.s) / self.hbar).exp()
    }
}

/// `K^S` at one point.
pub fn kernel_s(shifted: &ShiftedBasis, x_a: f64, x_b: f64, t_b: f64) -> Result<Complex64> {
    Kernel::new(Variant::Undriven, shifted, None)?.value(x_a, x_b, t_b)
}

/// `K^F` at one point; `x_p(t_a)` must vanish.
pub fn kernel_f(shifted: &ShiftedBasis, x_p: &ParticularSolution, x_a: f64, x_b: f64, t_b: f64) -> Result<Complex64> {
    Kernel::new(Variant::Driven, shifted, Some(x_p))?.value(x_a, x_b, t_b)
}

/// `K^G` at one point; `x_p(t_a)` must vanish.
pub fn kernel_g(shifted: &ShiftedBasis, x_p: &ParticularSolution, x_a: f64, x_b: f64, t_b: f64) -> Result<Complex64> {
    Kernel::new(Variant::General, shifted, Some(x_p))?.value(x_a, x_b, t_b)
}

pub fn kernel_coefficients(
    variant: Variant,
    shifted: &ShiftedBasis,
    x_p: Option<&ParticularSolution>,
    t_b: f64,
) -> Result<KernelCoefficients> {
    Kernel::new(variant, shifted, x_p)?.coefficients(t_b)
}

/// The free-particle form every kernel approaches as `t_b → t_a`.
pub fn short_time_kernel(scenario: &Scenario, x_a: f64, x_b: f64, t_a: f64, t_b: f64) -> Result<Complex64> {
    let m = scenario.evaluate(t_a)?.mass;
    let hbar = scenario.hbar();
    let dt = t_b - t_a;
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!("t_b = {t_b} must exceed t_a = {t_a}")));
    }
    let pre = (Complex64::new(m / (2.0 * PI * hbar * dt), 0.0) / I).sqrt();
    Ok(pre * (I * m * (x_a - x_b).powi(2) / (2.0 * hbar * dt)).exp())
}

/// Truncated expansion `Σ_{n ≤ n_max} ψ_n(x_b, t_b) ψ_n*(x_a, t_a)` over the
/// states of `family`.
pub fn kernel_spectral_sum(family: &StateFamily, n_max: usize, x_a: f64, x_b: f64, t_a: f64, t_b: f64) -> Result<Complex64> {
    if !(t_b > t_a) {
        return Err(Error::Precondition(format!(
            "spectral sum needs t_b > t_a, got t_a = {t_a}, t_b = {t_b}"
        )));
    }
    let bra = family.snapshot(t_a)?.psi_all(n_max, x_a)?;
    let ket = family.snapshot(t_b)?.psi_all(n_max, x_b)?;
    Ok(ket.iter().zip(&bra).map(|(k, b)| k * b.conj()).sum())
}

/// Maximum residual of each coefficient equation, absolute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixResiduals {
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
}

impl AppendixResiduals {
    pub fn max(&self) -> f64 {
        [self.a, self.b, self.h, self.alpha, self.beta, self.s]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn as_array(&self) -> [(&'static str, f64); 6] {
        [
            ("A", self.a),
            ("B", self.b),
            ("h", self.h),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("s", self.s),
        ]
    }

    fn merge(self, o: Self) -> Self {
        AppendixResiduals {
            a: self.a.max(o.a),
            b: self.b.max(o.b),
            h: self.h.max(o.h),
            alpha: self.alpha.max(o.alpha),
            beta: self.beta.max(o.beta),
            s: self.s.max(o.s),
        }
    }
}

/// Compares fourth-order central differences in `t_b` (step `h_t`) of the
/// coefficients against the right-hand sides of their evolution equations,
/// at every `t_b` in `window`.
pub fn check_appendix_odes(kernel: &Kernel, window: &[f64], h_t: f64) -> Result<AppendixResiduals> {
    let mut worst = AppendixResiduals {
        a: 0.0,
        b: 0.0,
        h: 0.0,
        alpha: 0.0,
        beta: 0.0,
        s: 0.0,
    };
    let sc = kernel.scenario();
    for &t in window {
        if t - 2.0 * h_t <= kernel.t_a() {
            return Err(Error::Precondition(format!(
                "stencil at t_b = {t} reaches t_a = {}",
                kernel.t_a()
            )));
        }
        let c: Vec<KernelCoefficients> = [-2.0, -1.0, 1.0, 2.0]
            .iter()
            .map(|k| kernel.coefficients(t + k * h_t))
            .collect::<Result<_>>()?;
        let c0 = kernel.coefficients(t)?;
        let d = |f: &dyn Fn(&KernelCoefficients) -> Complex64| {
            (f(&c[0]) - 8.0 * f(&c[1]) + 8.0 * f(&c[2]) - f(&c[3])) / (12.0 * h_t)
        };
        let re = |v: f64| Complex64::new(v, 0.0);
        let co = sc.evaluate(t)?;
        let dc = co.derived();
        let hbar = sc.hbar();
        let (m, a, b) = (co.mass, if kernel.variant() == Variant::General { co.a } else { 0.0 }, if kernel.variant() == Variant::General { co.b } else { 0.0 });
        // the drive and scalar terms only act in the variants that have them
        let (cc, dd, f) = match kernel.variant() {
            Variant::Undriven => (co.freq_sq, 0.0, 0.0),
            Variant::Driven => (co.freq_sq, -co.drive, 0.0),
            Variant::General => (dc.c, dc.d, co.f),
        };
        let k = c0;
        let r = AppendixResiduals {
            a: (d(&|c| re(c.a)) - re(-k.h * k.h / (2.0 * m))).norm(),
            b: (d(&|c| re(c.b)) - re(-2.0 * k.b * k.b / m + 4.0 * a * k.b - m * cc / 2.0)).norm(),
            h: (d(&|c| re(c.h)) - re(-2.0 * k.b * k.h / m + 2.0 * a * k.h)).norm(),
            alpha: (d(&|c| re(c.alpha)) - re(-k.h * k.beta / m + b * k.h / m)).norm(),
            beta: (d(&|c| re(c.beta))
                - re(-2.0 * k.b * k.beta / m + 2.0 * a * k.beta + 2.0 * b * k.b / m - dd))
                .norm(),
            s: (d(&|c| c.s)
                - (-(hbar / I) * k.b / m + re(-k.beta * k.beta / (2.0 * m) + b * k.beta / m - b * b / (2.0 * m) + f)
                    - I * hbar * a))
                .norm(),
        };
        worst = worst.merge(r);
    }
    Ok(worst)
}
