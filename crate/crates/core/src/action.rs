//! Closed-form classical actions and a quadrature oracle for `∫ L dt`.

use std::cell::RefCell;

use crate::classical::{ParticularSolution, ShiftedBasis};
use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::scenario::{Scenario, Variant};

/// Two space-time endpoints with `t_b > t_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoints {
    pub t_a: f64,
    pub t_b: f64,
    pub x_a: f64,
    pub x_b: f64,
}

impl Endpoints {
    pub fn new(t_a: f64, t_b: f64, x_a: f64, x_b: f64) -> Result<Self> {
        if !(t_b > t_a) {
            return Err(Error::Precondition(format!("t_b = {t_b} must exceed t_a = {t_a}")));
        }
        Ok(Endpoints { t_a, t_b, x_a, x_b })
    }
}

/// Values of `u`, `v_s`, their derivatives and `M` at both ends.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BasisEnds {
    pub u_a: f64,
    pub ud_a: f64,
    pub u_b: f64,
    pub ud_b: f64,
    pub vsd_a: f64,
    pub vs_b: f64,
    pub vsd_b: f64,
    pub m_a: f64,
    pub m_b: f64,
}

impl BasisEnds {
    pub(crate) fn new(shifted: &ShiftedBasis, t_a: f64, t_b: f64) -> Result<Self> {
        if t_a != shifted.t_a() {
            return Err(Error::Precondition(format!(
                "basis is shifted at t_a = {}, endpoints use t_a = {t_a}",
                shifted.t_a()
            )));
        }
        if !(t_b > t_a) {
            return Err(Error::Precondition(format!("t_b = {t_b} must exceed t_a = {t_a}")));
        }
        let (vs_b, vsd_b) = shifted.check_caustic(t_b)?;
        let (u_a, ud_a) = shifted.u_state(t_a)?;
        let (u_b, ud_b) = shifted.u_state(t_b)?;
        let (_, vsd_a) = shifted.vs_state(t_a)?;
        let sc = shifted.scenario();
        Ok(BasisEnds {
            u_a,
            ud_a,
            u_b,
            ud_b,
            vsd_a,
            vs_b,
            vsd_b,
            m_a: sc.evaluate(t_a)?.mass,
            m_b: sc.evaluate(t_b)?.mass,
        })
    }

    /// Coefficient of `x_a²/2` in the homogeneous action.
    pub(crate) fn quad_a(&self) -> f64 {
        self.m_a * (-self.ud_a / self.u_a + self.u_b * self.vsd_a / (self.u_a * self.vs_b))
    }

    /// Coefficient of `x_b²/2`.
    pub(crate) fn quad_b(&self) -> f64 {
        self.m_b * self.vsd_b / self.vs_b
    }

    /// Coefficient of `x_a x_b` in the simplified cross term.
    pub(crate) fn cross(&self) -> f64 {
        -self.m_a * self.vsd_a / self.vs_b
    }
}

/// Classical action of the undriven system, written exactly as the
/// endpoint quadratic form in `u`, `v_s`.
pub fn action_s(shifted: &ShiftedBasis, ep: &Endpoints) -> Result<f64> {
    let e = BasisEnds::new(shifted, ep.t_a, ep.t_b)?;
    let (xa, xb) = (ep.x_a, ep.x_b);
    let cross = e.m_b * (e.ud_b / e.u_a - e.u_b * e.vsd_b / (e.u_a * e.vs_b)) - e.m_a * e.vsd_a / e.vs_b;
    Ok(0.5 * xa * xa * e.quad_a() + 0.5 * xb * xb * e.quad_b() + 0.5 * xa * xb * cross)
}

/// `Y(t) = ∫_{t0}^{t} ½ x_p F dt'` by adaptive quadrature.
pub fn phase_integral_y(x_p: &ParticularSolution, t0: f64, t: f64, opts: &QuadOptions) -> Result<f64> {
    let sc = x_p.scenario();
    sc.evaluate(t0)?;
    sc.evaluate(t)?;
    guarded_integral(|z| Ok(0.5 * x_p.value(z)? * sc.evaluate(z)?.drive), t0, t, opts)
}

/// Runs the quadrature on a fallible integrand, surfacing the first error.
pub(crate) fn guarded_integral<F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let failure = RefCell::new(None);
    let value = quad::integrate(
        |z| match f(z) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        opts,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    value
}

/// Endpoint-dependent part of the driven action for a particular solution
/// `x_p` (which need not vanish at `t_a`).
pub fn action_f_tilde(shifted: &ShiftedBasis, x_p: &ParticularSolution, ep: &Endpoints) -> Result<f64> {
    let e = BasisEnds::new(shifted, ep.t_a, ep.t_b)?;
    let (xpa, xpda) = x_p.state(ep.t_a)?;
    let (xpb, xpdb) = x_p.state(ep.t_b)?;
    let da = ep.x_a - xpa;
    let db = ep.x_b - xpb;
    Ok(0.5 * da * da * e.quad_a() + 0.5 * db * db * e.quad_b() + da * db * e.cross() + e.m_b * xpdb * ep.x_b
        - e.m_a * xpda * ep.x_a)
}

/// Driven action plus the gauge terms `M a x² + b x` at both ends.
pub fn action_g_tilde(shifted: &ShiftedBasis, x_p: &ParticularSolution, ep: &Endpoints) -> Result<f64> {
    let sc = shifted.scenario();
    let ca = sc.evaluate(ep.t_a)?;
    let cb = sc.evaluate(ep.t_b)?;
    Ok(action_f_tilde(shifted, x_p, ep)? + cb.mass * cb.a * ep.x_b * ep.x_b - ca.mass * ca.a * ep.x_a * ep.x_a
        + cb.b * ep.x_b
        - ca.b * ep.x_a)
}

/// `ΔS₁(t) = ½ M ẋ_p x_p + Y(t)` with `Y` measured from `t0`.
pub fn delta_s1(x_p: &ParticularSolution, t0: f64, t: f64, opts: &QuadOptions) -> Result<f64> {
    let (x, xd) = x_p.state(t)?;
    let m = x_p.scenario().evaluate(t)?.mass;
    Ok(0.5 * m * xd * x + phase_integral_y(x_p, t0, t, opts)?)
}

/// Full classical action rebuilt from the tilde action and the
/// particular-solution bookkeeping. The `G` variant also adds `∫ f`.
pub fn action_classical(
    variant: Variant,
    shifted: &ShiftedBasis,
    x_p: &ParticularSolution,
    ep: &Endpoints,
    t0: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    // the tilde action carries `M ẋ_p x` at the ends rather than
    // `M ẋ_p (x − x_p)`, so that difference is removed here
    let end_term = |t: f64| -> Result<f64> {
        let (x, xd) = x_p.state(t)?;
        Ok(delta_s1(x_p, t0, t, opts)? - x_p.scenario().evaluate(t)?.mass * xd * x)
    };
    let bookkeeping = end_term(ep.t_b)? - end_term(ep.t_a)?;
    match variant {
        Variant::Undriven => action_s(shifted, ep),
        Variant::Driven => Ok(action_f_tilde(shifted, x_p, ep)? + bookkeeping),
        Variant::General => {
            let sc = shifted.scenario();
            let f_int = guarded_integral(|z| Ok(sc.evaluate(z)?.f), ep.t_a, ep.t_b, opts)?;
            Ok(action_g_tilde(shifted, x_p, ep)? + bookkeeping + f_int)
        }
    }
}

/// The chosen Lagrangian evaluated along a path `(x, ẋ)`.
pub fn lagrangian(variant: Variant, scenario: &Scenario, t: f64, x: f64, xd: f64) -> Result<f64> {
    let c = scenario.evaluate(t)?;
    let base = 0.5 * c.mass * xd * xd - 0.5 * c.mass * c.freq_sq * x * x;
    Ok(match variant {
        Variant::Undriven => base,
        Variant::Driven => base + c.drive * x,
        Variant::General => {
            let gauge = (c.mass_dot * c.a + c.mass * c.a_dot) * x * x + 2.0 * c.mass * c.a * x * xd + c.b_dot * x + c.b * xd;
            base + c.drive * x + gauge + c.f
        }
    })
}

/// `∫_{t_a}^{t_b} L(x, ẋ, t) dt` along an arbitrary path.
pub fn action_numeric<P>(
    scenario: &Scenario,
    path: P,
    t_a: f64,
    t_b: f64,
    variant: Variant,
    opts: &QuadOptions,
) -> Result<f64>
where
    P: Fn(f64) -> Result<(f64, f64)>,
{
    guarded_integral(
        |t| {
            let (x, xd) = path(t)?;
            lagrangian(variant, scenario, t, x, xd)
        },
        t_a,
        t_b,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{driven_path, shift_basis, solve_particular, ClassicalBasis};
    use crate::ode::IntegratorOptions;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn shifted(sc: &Scenario, t_a: f64) -> ShiftedBasis {
        let b = ClassicalBasis::standard(sc, 0.0, &IntegratorOptions::default()).unwrap();
        shift_basis(&b, t_a).unwrap()
    }

    fn q() -> QuadOptions {
        QuadOptions::default()
    }

    #[test]
    fn zero_endpoints_give_zero() {
        let sc = Scenario::sho(1.0, 1.0);
        let ep = Endpoints::new(0.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(action_s(&shifted(&sc, 0.0), &ep).unwrap(), 0.0);
    }

    #[test]
    fn sho_quarter_period() {
        let sc = Scenario::sho(1.0, 1.0);
        let ep = Endpoints::new(0.0, FRAC_PI_4, 0.0, 1.0).unwrap();
        let s = action_s(&shifted(&sc, 0.0), &ep).unwrap();
        assert!((s - 0.5).abs() < 1e-9);
        // textbook formula for generic endpoints
        let ep = Endpoints::new(0.0, 0.9, 0.4, -1.3).unwrap();
        let s = action_s(&shifted(&sc, 0.0), &ep).unwrap();
        let w = 0.9f64;
        let exact = ((0.16 + 1.69) * w.cos() - 2.0 * 0.4 * -1.3) / (2.0 * w.sin());
        assert!((s - exact).abs() < 1e-9);
    }

    #[test]
    fn caustic_propagates() {
        let sc = Scenario::sho(1.0, 1.0);
        let ep = Endpoints::new(0.0, PI, 0.3, 1.0).unwrap();
        assert!(matches!(action_s(&shifted(&sc, 0.0), &ep), Err(Error::Caustic { .. })));
    }

    #[test]
    fn caldirola_kanai_matches_quadrature() {
        let sc = Scenario::caldirola_kanai(1.0, 0.2, 1.0);
        let sb = shifted(&sc, 0.5);
        let ep = Endpoints::new(0.5, 2.1, 0.7, -0.4).unwrap();
        let closed = action_s(&sb, &ep).unwrap();
        let path = crate::classical::classical_path(&sb, ep.x_a, ep.x_b, ep.t_b).unwrap();
        let numeric = action_numeric(&sc, |t| path.state(t), ep.t_a, ep.t_b, Variant::Undriven, &q()).unwrap();
        assert!((closed - numeric).abs() < 1e-7 * closed.abs().max(1.0));
    }

    #[test]
    fn basis_invariance() {
        let sc = Scenario::paul_trap(1.0, 1.0, 0.3, 2.0);
        let sb = shifted(&sc, 0.2);
        let ep = Endpoints::new(0.2, 1.4, 0.9, 0.3).unwrap();
        let reference = action_s(&sb, &ep).unwrap();
        for (c, l, m) in [(0.7, 1.0, 1.0), (0.0, -2.5, 1.0), (-1.1, 0.3, 4.0)] {
            let s = action_s(&sb.transformed(c, l, m), &ep).unwrap();
            assert!((s - reference).abs() < 1e-9 * reference.abs());
        }
    }

    #[test]
    fn y_integral() {
        let sc = Scenario::driven_sho(1.0, 1.0, 1.0, 2.0);
        let xp = solve_particular(&sc, 0.0, (0.0, 10.0), &IntegratorOptions::default()).unwrap();
        assert_eq!(phase_integral_y(&xp, 0.7, 0.7, &q()).unwrap(), 0.0);
        let y = phase_integral_y(&xp, 0.0, 1.0, &q()).unwrap();
        let (s1, s3, s4) = (1f64.sin(), 3f64.sin(), 4f64.sin());
        let exact = (s1 - s3 / 3.0 - 0.5 + s4 / 8.0) / 6.0;
        assert!((y - exact).abs() < 1e-9);
        let undriven = Scenario::sho(1.0, 1.0);
        let xp0 = solve_particular(&undriven, 0.0, (0.0, 10.0), &IntegratorOptions::default()).unwrap();
        assert_eq!(phase_integral_y(&xp0, 0.0, 3.0, &q()).unwrap(), 0.0);
    }

    #[test]
    fn tilde_reduces_without_drive() {
        let sc = Scenario::caldirola_kanai(1.0, 0.2, 1.0);
        let sb = shifted(&sc, 0.0);
        let xp = solve_particular(&sc, 0.0, (0.0, 10.0), &IntegratorOptions::default()).unwrap();
        let ep = Endpoints::new(0.0, 1.3, 0.5, 1.5).unwrap();
        let s = action_s(&sb, &ep).unwrap();
        assert!((action_f_tilde(&sb, &xp, &ep).unwrap() - s).abs() < 1e-9);
        assert!((action_g_tilde(&sb, &xp, &ep).unwrap() - s).abs() < 1e-9);
    }

    #[test]
    fn tilde_on_particular_endpoints() {
        let sc = Scenario::driven_sho(1.0, 1.0, 1.0, 2.0);
        let sb = shifted(&sc, 0.0);
        let xp = solve_particular(&sc, 0.0, (0.0, 10.0), &IntegratorOptions::default()).unwrap();
        let (xpb, xpdb) = xp.state(2.0).unwrap();
        let ep = Endpoints::new(0.0, 2.0, 0.0, xpb).unwrap();
        let s = action_f_tilde(&sb, &xp, &ep).unwrap();
        assert!((s - xpdb * xpb).abs() < 1e-12);
    }

    #[test]
    fn particular_solution_invariance() {
        let sc = Scenario::driven_sho(1.0, 1.0, 1.0, 2.0);
        let opts = IntegratorOptions::default();
        let sb = shifted(&sc, 0.3);
        let ep = Endpoints::new(0.3, 2.2, -0.6, 0.8).unwrap();
        let xp = solve_particular(&sc, 0.3, (0.0, 10.0), &opts).unwrap();
        let reference = action_classical(Variant::Driven, &sb, &xp, &ep, 0.3, &q()).unwrap();
        // x_p + C u + D v_s, expressed through different initial data
        for (x0, v0, t0) in [(0.4, -0.2, 0.3), (-1.0, 0.9, 1.0), (0.0, 0.5, 0.0)] {
            let other = ParticularSolution::solve(&sc, 0.3, x0, v0, (0.0, 10.0), &opts).unwrap();
            let s = action_classical(Variant::Driven, &sb, &other, &ep, t0, &q()).unwrap();
            assert!((s - reference).abs() < 1e-7 * reference.abs().max(1.0), "{s} vs {reference}");
        }
        let path = driven_path(&sb, &xp, ep.x_a, ep.x_b, ep.t_b).unwrap();
        let numeric = action_numeric(&sc, |t| path.state(t), ep.t_a, ep.t_b, Variant::Driven, &q()).unwrap();
        assert!((numeric - reference).abs() < 1e-7 * reference.abs().max(1.0));
    }

    #[test]
    fn general_action_matches_quadrature() {
        let sc = Scenario::full_quadratic(1.0, 1.0);
        let opts = IntegratorOptions::default();
        let sb = shifted(&sc, 0.4);
        let xp = solve_particular(&sc, 0.4, (0.0, 10.0), &opts).unwrap();
        let ep = Endpoints::new(0.4, 1.9, 0.5, -0.7).unwrap();
        let closed = action_classical(Variant::General, &sb, &xp, &ep, 0.4, &q()).unwrap();
        let path = driven_path(&sb, &xp, ep.x_a, ep.x_b, ep.t_b).unwrap();
        let numeric = action_numeric(&sc, |t| path.state(t), ep.t_a, ep.t_b, Variant::General, &q()).unwrap();
        assert!((closed - numeric).abs() < 1e-7 * closed.abs().max(1.0), "{closed} vs {numeric}");
        let ep0 = Endpoints::new(0.4, 1.9, 0.0, 0.0).unwrap();
        assert_eq!(
            action_g_tilde(&sb, &xp, &ep0).unwrap(),
            action_f_tilde(&sb, &xp, &ep0).unwrap()
        );
    }

    #[test]
    fn classical_path_is_stationary() {
        let sc = Scenario::full_quadratic(1.0, 1.0);
        let opts = IntegratorOptions::default();
        let sb = shifted(&sc, 0.0);
        let xp = solve_particular(&sc, 0.0, (0.0, 10.0), &opts).unwrap();
        let (t_a, t_b) = (0.0, 1.5);
        let path = driven_path(&sb, &xp, 0.3, -0.2, t_b).unwrap();
        let bump = |t: f64| ((PI * (t - t_a) / (t_b - t_a)).sin(), PI / (t_b - t_a) * (PI * (t - t_a) / (t_b - t_a)).cos());
        let action = |eps: f64| {
            action_numeric(
                &sc,
                |t| {
                    let (x, xd) = path.state(t)?;
                    let (e, ed) = bump(t);
                    Ok((x + eps * e, xd + eps * ed))
                },
                t_a,
                t_b,
                Variant::General,
                &q(),
            )
            .unwrap()
        };
        let eps = 1e-2;
        let (sm, s0, sp) = (action(-eps), action(0.0), action(eps));
        let first = (sp - sm) / (2.0 * eps);
        let second = (sp - 2.0 * s0 + sm) / (eps * eps);
        assert!(first.abs() < 1e-7, "first variation {first}");
        assert!(second.abs() > 1e-2);
        assert!((sp - s0).abs() > 1e-6);
    }
}
