//! Matrix elements of `x`, `p` between sampled states, and the closed-form
//! uncertainty products of the exact states.
//!
//! Off-diagonal products `_n⟨(Δx)²⟩_m · _n⟨(Δp)²⟩_m` take `Δx = x − ⟨x⟩_m`
//! and `Δp = p − ⟨p⟩_m`, centred on the diagonal means of the ket.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ComplexGridFunction;
use crate::propagate::{EDGE_FRACTION, EDGE_MASS_WARN};
use crate::states::StateFamily;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Matrix elements `⟨bra|O|ket⟩` by trapezoid quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub overlap: Complex64,
    pub mean_x: Complex64,
    pub mean_x2: Complex64,
    pub mean_p: Complex64,
    pub mean_p2: Complex64,
    /// `⟨bra|(x − x̄)²|ket⟩`, `x̄` the ket's own mean.
    pub delta_x2: Complex64,
    /// `⟨bra|(p − p̄)²|ket⟩`, `p̄` the ket's own mean.
    pub delta_p2: Complex64,
}

impl MomentSet {
    pub fn product(&self) -> Complex64 {
        self.delta_x2 * self.delta_p2
    }
}

/// Moments between two sampled states. `p = −iħ∂_x` uses fourth-order
/// stencils.
pub fn moments(bra: &ComplexGridFunction, ket: &ComplexGridFunction, hbar: f64) -> Result<MomentSet> {
    bra.require_aligned(ket)?;
    for (name, g) in [("bra", bra), ("ket", ket)] {
        let edge = g.edge_mass(EDGE_FRACTION);
        if edge > EDGE_MASS_WARN {
            log::warn!("{name} state has edge mass {edge:e}; moments may be truncated");
        }
    }
    let xs = ket.xs();
    let d1 = ket.derivative();
    let d2 = ket.second_derivative();
    let times = |f: &dyn Fn(usize) -> Complex64| -> Result<Complex64> {
        bra.inner(&ket.with_values((0..xs.len()).map(f).collect())?)
    };
    let kv = ket.values();
    let overlap = bra.inner(ket)?;
    let mean_x = times(&|j| xs[j] * kv[j])?;
    let mean_x2 = times(&|j| xs[j] * xs[j] * kv[j])?;
    let mean_p = times(&|j| -I * hbar * d1[j])?;
    let mean_p2 = times(&|j| -hbar * hbar * d2[j])?;

    let norm = ket.norm_sq();
    if norm == 0.0 {
        return Err(Error::Precondition("ket state is identically zero".into()));
    }
    let ket_x = ket.inner(&ket.with_values((0..xs.len()).map(|j| xs[j] * kv[j]).collect())?)?.re / norm;
    let ket_p = ket.inner(&ket.with_values(d1.iter().map(|d| -I * hbar * d).collect())?)?.re / norm;
    Ok(MomentSet {
        overlap,
        mean_x,
        mean_x2,
        mean_p,
        mean_p2,
        delta_x2: mean_x2 - 2.0 * ket_x * mean_x + ket_x * ket_x * overlap,
        delta_p2: mean_p2 - 2.0 * ket_p * mean_p + ket_p * ket_p * overlap,
    })
}

/// Which parametrisation of a closed form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// In terms of `u`, `v` and the Wronskian `Ω`.
    Wronskian,
    /// In terms of `ρ`, `θ` and `θ̇`.
    Polar,
}

/// The classical data the closed forms need at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyContext {
    pub t: f64,
    pub hbar: f64,
    pub mass: f64,
    pub a: f64,
    pub omega: f64,
    pub u: f64,
    pub v: f64,
    pub rho: f64,
    pub rho_dot: f64,
    pub theta: f64,
    /// `(u v̇ − v u̇)/ρ²`, from the basis, not from `Ω`.
    pub theta_dot: f64,
    pub x_p: f64,
    pub p_p: f64,
}

impl UncertaintyContext {
    pub fn new(family: &StateFamily, t: f64) -> Result<Self> {
        let snap = family.snapshot(t)?;
        let basis = family.basis();
        Ok(UncertaintyContext {
            t,
            hbar: snap.hbar,
            mass: snap.mass,
            a: snap.a,
            omega: snap.omega,
            u: basis.u().value(t)?,
            v: basis.v().value(t)?,
            rho: snap.rho,
            rho_dot: snap.rho_dot,
            theta: snap.theta,
            theta_dot: family.rho_theta().theta_rate(t)?,
            x_p: snap.x_p,
            p_p: snap.momentum(),
        })
    }

    /// `2Ma + Mρ̇/ρ + iΩ/ρ²`
    fn z_wronskian(&self) -> Complex64 {
        let m = self.mass;
        Complex64::new(2.0 * m * self.a + m * self.rho_dot / self.rho, self.omega / (self.rho * self.rho))
    }

    /// `2a + ρ̇/ρ + iθ̇`
    fn z_polar(&self) -> Complex64 {
        Complex64::new(2.0 * self.a + self.rho_dot / self.rho, self.theta_dot)
    }
}

/// `_m⟨(Δx)²⟩_m · _m⟨(Δp)²⟩_m`.
pub fn uncertainty_diagonal(ctx: &UncertaintyContext, m: usize, form: Form) -> f64 {
    let level = (m as f64 + 0.5) * ctx.hbar;
    let bracket = match form {
        Form::Wronskian => {
            let q = 2.0 * ctx.mass * ctx.a * ctx.rho * ctx.rho + ctx.mass * ctx.rho * ctx.rho_dot;
            1.0 + q * q / (ctx.omega * ctx.omega)
        }
        Form::Polar => {
            let q = 2.0 * ctx.a + ctx.rho_dot / ctx.rho;
            1.0 + q * q / (ctx.theta_dot * ctx.theta_dot)
        }
    };
    level * level * bracket
}

/// `_{m+offset}⟨(Δx)²⟩_m · _{m+offset}⟨(Δp)²⟩_m` for `offset ∈ {1, 2}`.
pub fn uncertainty_offdiag(ctx: &UncertaintyContext, m: usize, offset: usize, form: Form) -> Result<Complex64> {
    let hbar = ctx.hbar;
    let m1 = m as f64 + 1.0;
    match (offset, form) {
        (1, Form::Wronskian) => {
            let w = Complex64::new(ctx.u, ctx.v);
            let z = ctx.z_wronskian();
            let drive = 2.0 * (2.0 * ctx.omega).sqrt() * ctx.x_p / ((m1 * hbar).sqrt() * w) - 1.0;
            let last = ctx.p_p - 0.5 * (m1 * hbar / (2.0 * ctx.omega)).sqrt() * w * z;
            Ok(std::f64::consts::FRAC_1_SQRT_2 * (m1 * hbar / ctx.omega).powf(1.5) * w.powi(3) * drive * z * last)
        }
        (1, Form::Polar) => {
            let rot = (-I * ctx.theta).exp();
            let z = ctx.z_polar();
            let first = 1.0 - 2.0 * (2.0 * ctx.mass * ctx.theta_dot).sqrt() / (m1 * hbar).sqrt() * ctx.x_p * rot;
            let last = z - 2.0 * (2.0 * ctx.theta_dot).sqrt() / (m1 * ctx.mass * hbar).sqrt() * ctx.p_p * rot;
            Ok(m1 * m1 / 4.0 * hbar * hbar * (4.0 * I * ctx.theta).exp() / (ctx.theta_dot * ctx.theta_dot)
                * first
                * z
                * last)
        }
        (2, Form::Wronskian) => {
            let w = Complex64::new(ctx.u, ctx.v);
            let k = hbar / (2.0 * ctx.omega);
            Ok((m1 + 1.0) * m1 * k * k * w.powi(4) * ctx.z_wronskian().powi(2))
        }
        (2, Form::Polar) => Ok((m1 + 1.0) * m1 / 4.0 * hbar * hbar * (4.0 * I * ctx.theta).exp()
            / (ctx.theta_dot * ctx.theta_dot)
            * ctx.z_polar().powi(2)),
        _ => Err(Error::Precondition(format!("offset must be 1 or 2, got {offset}"))),
    }
}

/// Half-width of the quadrature grid in oscillator lengths, per level.
fn half_width(n: usize) -> f64 {
    10.0 + (2.0 * n as f64 + 1.0).sqrt()
}

/// The product of `Δ`-moments between `ψ_{m+offset}` and `ψ_m` on a grid
/// centred on `x_p(t)`.
pub fn quadrature_product(family: &StateFamily, m: usize, offset: usize, t: f64, n_points: usize) -> Result<Complex64> {
    let snap = family.snapshot(t)?;
    let w = half_width(m + offset) * snap.length();
    let (lo, hi) = (snap.x_p - w, snap.x_p + w);
    let bra = family.psi_grid(m + offset, lo, hi, n_points, t)?;
    let ket = if offset == 0 {
        bra.clone()
    } else {
        family.psi_grid(m, lo, hi, n_points, t)?
    };
    Ok(moments(&bra, &ket, snap.hbar)?.product())
}

/// One line of the uncertainty report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyRow {
    pub t: f64,
    pub m: usize,
    pub offset: usize,
    pub closed: Complex64,
    /// The other parametrisation of the same closed form.
    pub closed_polar: Complex64,
    pub quad: Complex64,
    /// `|closed − quad| / |closed|`
    pub rel_err: f64,
    /// `|closed − closed_polar| / |closed|`
    pub form_gap: f64,
}

/// Closed forms against quadrature for every `(t, m, offset)`.
pub fn uncertainty_report(
    family: &StateFamily,
    times: &[f64],
    levels: &[usize],
    offsets: &[usize],
    n_points: usize,
) -> Result<Vec<UncertaintyRow>> {
    let mut rows = Vec::new();
    for &t in times {
        let ctx = UncertaintyContext::new(family, t)?;
        for &m in levels {
            for &offset in offsets {
                let (closed, closed_polar) = if offset == 0 {
                    (
                        Complex64::new(uncertainty_diagonal(&ctx, m, Form::Wronskian), 0.0),
                        Complex64::new(uncertainty_diagonal(&ctx, m, Form::Polar), 0.0),
                    )
                } else {
                    (
                        uncertainty_offdiag(&ctx, m, offset, Form::Wronskian)?,
                        uncertainty_offdiag(&ctx, m, offset, Form::Polar)?,
                    )
                };
                let quad = quadrature_product(family, m, offset, t, n_points)?;
                let scale = closed.norm();
                rows.push(UncertaintyRow {
                    t,
                    m,
                    offset,
                    closed,
                    closed_polar,
                    quad,
                    rel_err: (closed - quad).norm() / scale,
                    form_gap: (closed - closed_polar).norm() / scale,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{solve_particular, ClassicalBasis};
    use crate::ode::IntegratorOptions;
    use crate::scenario::{Scenario, Variant};
    use std::f64::consts::PI;

    fn family(sc: &Scenario, c: f64, variant: Variant) -> StateFamily {
        let opts = IntegratorOptions::default();
        let b = ClassicalBasis::from_initial_data(sc, 0.0, (1.0, 0.0), (0.0, c), 0.0, &opts).unwrap();
        let xp = solve_particular(sc, 0.0, sc.interval(), &opts).unwrap();
        StateFamily::new(variant, &b, Some(&xp), 0.0).unwrap()
    }

    #[test]
    fn sho_textbook_moments() {
        let fam = family(&Scenario::sho(1.0, 1.0), 1.0, Variant::Undriven);
        let g0 = fam.psi_grid(0, -10.0, 10.0, 1024, 0.4).unwrap();
        let g1 = fam.psi_grid(1, -10.0, 10.0, 1024, 0.4).unwrap();
        let m0 = moments(&g0, &g0, 1.0).unwrap();
        assert!(m0.mean_x.norm() < 1e-12);
        assert!((m0.mean_x2.re - 0.5).abs() < 1e-10);
        assert!((m0.mean_p2.re - 0.5).abs() < 1e-7);
        let m1 = moments(&g1, &g1, 1.0).unwrap();
        assert!((m1.mean_x2.re - 1.5).abs() < 1e-10);
        assert!(m1.mean_x2.im.abs() < 1e-8 && m1.mean_p2.im.abs() < 1e-8);
    }

    #[test]
    fn minimum_uncertainty_and_first_excited() {
        let fam = family(&Scenario::sho(1.0, 1.0), 1.0, Variant::Undriven);
        let ctx = UncertaintyContext::new(&fam, 0.9).unwrap();
        for form in [Form::Wronskian, Form::Polar] {
            assert!((uncertainty_diagonal(&ctx, 0, form) - 0.25).abs() < 1e-10);
            assert!((uncertainty_diagonal(&ctx, 1, form) - 2.25).abs() < 1e-10);
        }
    }

    #[test]
    fn second_offdiag_sho() {
        let fam = family(&Scenario::sho(1.0, 1.0), 1.0, Variant::Undriven);
        let t = 0.35;
        let ctx = UncertaintyContext::new(&fam, t).unwrap();
        let expected = -0.5 * (4.0 * I * t).exp();
        for form in [Form::Wronskian, Form::Polar] {
            assert!((uncertainty_offdiag(&ctx, 0, 2, form).unwrap() - expected).norm() < 1e-9);
        }
        let q = quadrature_product(&fam, 0, 2, t, 2048).unwrap();
        assert!((q - expected).norm() < 1e-6 * expected.norm());
    }

    #[test]
    fn pulsating_basis_diagonal_matches_quadrature() {
        let fam = family(&Scenario::sho(1.0, 1.0), 2.0, Variant::Undriven);
        let t = PI / 8.0;
        let ctx = UncertaintyContext::new(&fam, t).unwrap();
        for m in [0, 1, 3] {
            let closed = uncertainty_diagonal(&ctx, m, Form::Wronskian);
            let q = quadrature_product(&fam, m, 0, t, 2048).unwrap();
            assert!((q.re - closed).abs() < 1e-5 * closed, "m = {m}: {} vs {closed}", q.re);
            assert!(closed >= (m as f64 + 0.5).powi(2));
        }
    }

    #[test]
    fn parametrisations_agree() {
        let sc = Scenario::full_quadratic(1.0, 1.0);
        let fam = family(&sc, 1.3, Variant::General);
        for t in [0.2, 1.1, 2.7] {
            let ctx = UncertaintyContext::new(&fam, t).unwrap();
            let d0 = uncertainty_diagonal(&ctx, 2, Form::Wronskian);
            let d1 = uncertainty_diagonal(&ctx, 2, Form::Polar);
            assert!((d0 - d1).abs() < 1e-9 * d0);
            for offset in [1, 2] {
                let a = uncertainty_offdiag(&ctx, 2, offset, Form::Wronskian).unwrap();
                let b = uncertainty_offdiag(&ctx, 2, offset, Form::Polar).unwrap();
                assert!((a - b).norm() < 1e-9 * a.norm(), "offset {offset}");
            }
        }
    }

    #[test]
    fn full_quadratic_mean_follows_xp() {
        let sc = Scenario::full_quadratic(1.0, 1.0);
        let fam = family(&sc, 1.0, Variant::General);
        let t = 1.4;
        let snap = fam.snapshot(t).unwrap();
        let w = 12.0 * snap.length();
        let g = fam.psi_grid(0, snap.x_p - w, snap.x_p + w, 2048, t).unwrap();
        let mo = moments(&g, &g, sc.hbar()).unwrap();
        assert!((mo.mean_x.re - snap.x_p).abs() < 1e-6);
        assert!((mo.mean_p.re - snap.momentum()).abs() < 1e-6);
    }

    #[test]
    fn bad_offset_rejected() {
        let fam = family(&Scenario::sho(1.0, 1.0), 1.0, Variant::Undriven);
        let ctx = UncertaintyContext::new(&fam, 0.1).unwrap();
        assert!(uncertainty_offdiag(&ctx, 0, 3, Form::Polar).is_err());
    }
}
