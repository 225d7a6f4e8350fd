//! Exact wave functions of the three system classes built from a classical
//! basis `{u, v}` and a particular solution `x_p`.

pub mod hermite;

use num_complex::Complex64;

use crate::action::guarded_integral;
use crate::classical::{rho_theta, ClassicalBasis, ParticularSolution, RhoTheta};
use crate::error::{Error, Result};
use crate::grid::ComplexGridFunction;
use crate::quad::QuadOptions;
use crate::scenario::{Scenario, Variant};

pub use hermite::{hermite, hermite_function, hermite_functions, N_MAX_SUPPORTED};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// The family `{ψ_n}` for one variant, basis, particular solution and
/// phase reference time `t0`.
#[derive(Debug, Clone)]
pub struct StateFamily {
    variant: Variant,
    rt: RhoTheta,
    particular: Option<ParticularSolution>,
    t0: f64,
    phase0: f64,
}

/// `(γ₁, γ₂, γ₂′)`; `γ₁′ = γ₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma2_prime: f64,
}

impl StateFamily {
    /// `basis` is reoriented so that `Ω > 0`. The driven and general
    /// variants need a particular solution; `t0` is the lower limit of the
    /// phase integrals.
    pub fn new(
        variant: Variant,
        basis: &ClassicalBasis,
        particular: Option<&ParticularSolution>,
        t0: f64,
    ) -> Result<Self> {
        let basis = basis.oriented();
        let particular = match variant {
            Variant::Undriven => None,
            _ => Some(
                particular
                    .ok_or_else(|| {
                        Error::Precondition(format!("variant {variant} needs a particular solution"))
                    })?
                    .clone(),
            ),
        };
        let phase0 = match &particular {
            Some(xp) => {
                let x0 = xp.value(t0)?;
                if x0 == 0.0 {
                    0.0
                } else {
                    let (v, vd) = basis.v().state(t0)?;
                    if v.abs() <= 1e-12 * vd.abs() {
                        return Err(Error::Precondition(format!(
                            "v vanishes at the phase reference time t0 = {t0} while x_p(t0) = {x0} is not zero"
                        )));
                    }
                    -0.5 * basis.scenario().evaluate(t0)?.mass * vd / v * x0 * x0
                }
            }
            None => 0.0,
        };
        Ok(StateFamily {
            variant,
            rt: rho_theta(&basis)?,
            particular,
            t0,
            phase0,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn basis(&self) -> &ClassicalBasis {
        self.rt.basis()
    }

    pub fn rho_theta(&self) -> &RhoTheta {
        &self.rt
    }

    pub fn particular(&self) -> Option<&ParticularSolution> {
        self.particular.as_ref()
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn scenario(&self) -> &Scenario {
        self.basis().scenario()
    }

    /// All time-dependent ingredients at `t`.
    pub fn snapshot(&self, t: f64) -> Result<StateSnapshot> {
        let sc = self.scenario();
        let c = sc.evaluate(t)?;
        let (rho, rho_dot) = self.rt.rho_and_rate(t)?;
        let theta = self.rt.theta(t)?;
        let (x_p, xd_p, phase) = match &self.particular {
            Some(xp) => {
                let (x, xd) = xp.state(t)?;
                let mut phase = self.phase0 - xp.lagrangian_integral(self.t0, t)?;
                if self.variant == Variant::General {
                    phase += xp.f_integral(self.t0, t)?;
                }
                (x, xd, phase)
            }
            None => (0.0, 0.0, 0.0),
        };
        let (a, b) = match self.variant {
            Variant::General => (c.a, c.b),
            _ => (0.0, 0.0),
        };
        Ok(StateSnapshot {
            t,
            hbar: sc.hbar(),
            omega: self.basis().omega(),
            mass: c.mass,
            a,
            b,
            rho,
            rho_dot,
            theta,
            x_p,
            xd_p,
            phase,
        })
    }

    pub fn psi(&self, n: usize, x: f64, t: f64) -> Result<Complex64> {
        self.snapshot(t)?.psi(n, x)
    }

    /// `ψ_n(·, t)` on a uniform grid.
    pub fn psi_grid(&self, n: usize, x_min: f64, x_max: f64, n_points: usize, t: f64) -> Result<ComplexGridFunction> {
        let snap = self.snapshot(t)?;
        ComplexGridFunction::try_from_fn(x_min, x_max, n_points, t, |x| snap.psi(n, x))
    }

    pub fn gaussian_params(&self, t: f64) -> Result<GaussianParams> {
        Ok(self.snapshot(t)?.gaussian_params())
    }

    /// Drive phase evaluated from its singular integral form
    /// `−(M/2)(v̇/v)x_p² − ½∫_{t0}^t M(x_p v̇/v − ẋ_p)² dz` by quadrature.
    /// Fails when `v` vanishes on `[t0, t]`.
    pub fn singular_drive_phase(&self, t: f64, opts: &QuadOptions) -> Result<f64> {
        let Some(xp) = &self.particular else {
            return Ok(0.0);
        };
        let v = self.basis().v();
        let sc = self.scenario();
        let (lo, hi) = if t < self.t0 { (t, self.t0) } else { (self.t0, t) };
        let samples = 400;
        let sign = v.value(lo)?.signum();
        for i in 0..=samples {
            let s = lo + (hi - lo) * i as f64 / samples as f64;
            let vs = v.value(s)?;
            if vs == 0.0 || vs.signum() != sign {
                return Err(Error::Precondition(format!("v vanishes inside [{lo}, {hi}]")));
            }
        }
        let boundary = {
            let (vv, vd) = v.state(t)?;
            -0.5 * sc.evaluate(t)?.mass * vd / vv * xp.value(t)?.powi(2)
        };
        let integral = guarded_integral(
            |z| {
                let (vv, vd) = v.state(z)?;
                let (x, xd) = xp.state(z)?;
                let w = x * vd / vv - xd;
                Ok(sc.evaluate(z)?.mass * w * w)
            },
            self.t0,
            t,
            opts,
        )?;
        Ok(boundary - 0.5 * integral)
    }

    /// Drive phase in the regular form used by [`StateFamily::psi`].
    pub fn drive_phase(&self, t: f64) -> Result<f64> {
        match &self.particular {
            Some(xp) => Ok(self.phase0 - xp.lagrangian_integral(self.t0, t)?),
            None => Ok(0.0),
        }
    }
}

/// Time-dependent data of a state family at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSnapshot {
    pub t: f64,
    pub hbar: f64,
    pub omega: f64,
    pub mass: f64,
    pub a: f64,
    pub b: f64,
    pub rho: f64,
    pub rho_dot: f64,
    pub theta: f64,
    pub x_p: f64,
    pub xd_p: f64,
    /// Everything in the exponent that does not depend on `x` or `n`.
    pub phase: f64,
}

impl StateSnapshot {
    /// Oscillator length `ρ√(ħ/Ω)`.
    pub fn length(&self) -> f64 {
        self.rho * (self.hbar / self.omega).sqrt()
    }

    fn scaled(&self, x: f64) -> f64 {
        (self.omega / self.hbar).sqrt() * (x - self.x_p) / self.rho
    }

    /// `x`-dependent phase and `n`-independent modulus.
    fn envelope(&self, x: f64) -> Complex64 {
        let d = x - self.x_p;
        let chirp = self.mass * self.rho_dot / self.rho * d * d / 2.0;
        let linear = self.mass * self.xd_p * x + self.mass * self.a * x * x + self.b * x;
        let amp = (self.omega / self.hbar).powf(0.25) / self.rho.sqrt();
        amp * (I * (chirp + linear + self.phase) / self.hbar).exp()
    }

    pub fn psi(&self, n: usize, x: f64) -> Result<Complex64> {
        let phi = hermite_function(n, self.scaled(x))?;
        Ok(self.envelope(x) * phi * (-I * (n as f64 + 0.5) * self.theta).exp())
    }

    /// `[ψ_0(x), …, ψ_{n_max}(x)]`
    pub fn psi_all(&self, n_max: usize, x: f64) -> Result<Vec<Complex64>> {
        let env = self.envelope(x);
        let phis = hermite_functions(n_max, self.scaled(x))?;
        Ok(phis
            .into_iter()
            .enumerate()
            .map(|(n, p)| env * p * (-I * (n as f64 + 0.5) * self.theta).exp())
            .collect())
    }

    pub fn gaussian_params(&self) -> GaussianParams {
        let gamma1 = self.omega / (self.hbar * self.rho * self.rho);
        GaussianParams {
            gamma1,
            gamma2: -self.mass * self.rho_dot / (self.hbar * self.rho),
            gamma2_prime: -(self.mass / self.hbar) * (2.0 * self.a + self.rho_dot / self.rho),
        }
    }

    /// `p_p = M ẋ_p + 2 M a x_p + b`
    pub fn momentum(&self) -> f64 {
        self.mass * self.xd_p + 2.0 * self.mass * self.a * self.x_p + self.b
    }

    /// The displaced-squeezed form
    /// `(2ⁿn!)^{−½}(γ₁/π)^{¼} exp[−γ′(x−x_p)²/2 + i x p_p/ħ] H_n(√γ₁ (x−x_p))`
    /// without its real phase `δ(t)`.
    pub fn displaced_gaussian(&self, n: usize, x: f64) -> Result<Complex64> {
        let g = self.gaussian_params();
        let d = x - self.x_p;
        let gamma_prime = Complex64::new(g.gamma1, g.gamma2_prime);
        let phi = hermite_function(n, g.gamma1.sqrt() * d)?;
        let amp = (g.gamma1).powf(0.25) * phi * (0.5 * g.gamma1 * d * d).exp();
        Ok(amp * (-0.5 * gamma_prime * d * d + I * x * self.momentum() / self.hbar).exp())
    }

    /// `δ(t)` for level `n`: the phase of `ψ_n` relative to
    /// [`StateSnapshot::displaced_gaussian`], fitted over the bulk.
    pub fn delta(&self, n: usize) -> Result<f64> {
        let l = self.length();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in -12..=12 {
            let x = self.x_p + 0.25 * k as f64 * l;
            acc += self.psi(n, x)? * self.displaced_gaussian(n, x)?.conj();
        }
        Ok(acc.arg())
    }
}

/// `p_p = M ẋ_p + 2 M a x_p + b` at `t`.
pub fn classical_momentum(x_p: &ParticularSolution, scenario: &Scenario, t: f64) -> Result<f64> {
    let c = scenario.evaluate(t)?;
    let (x, xd) = x_p.state(t)?;
    Ok(c.mass * xd + 2.0 * c.mass * c.a * x + c.b)
}

/// Multiplies by `exp[(i/ħ)(M a x² + b x + ∫_{t0}^t f dz)]`, with the
/// integral by adaptive quadrature.
pub fn apply_unitary_u(
    scenario: &Scenario,
    psi_f: &ComplexGridFunction,
    t: f64,
    t0: f64,
    opts: &QuadOptions,
) -> Result<ComplexGridFunction> {
    let c = scenario.evaluate(t)?;
    let f_int = guarded_integral(|z| Ok(scenario.evaluate(z)?.f), t0, t, opts)?;
    let hbar = scenario.hbar();
    let values = psi_f
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = psi_f.x(i);
            v * (I * (c.mass * c.a * x * x + c.b * x + f_int) / hbar).exp()
        })
        .collect();
    psi_f.with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::solve_particular;
    use crate::ode::IntegratorOptions;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn opts() -> IntegratorOptions {
        IntegratorOptions::default()
    }

    fn sho_family(c: f64) -> StateFamily {
        let sc = Scenario::sho(1.0, 1.0);
        let b = ClassicalBasis::from_initial_data(&sc, 0.0, (1.0, 0.0), (0.0, c), 0.0, &opts()).unwrap();
        StateFamily::new(Variant::Undriven, &b, None, 0.0).unwrap()
    }

    #[test]
    fn stationary_ground_state() {
        let fam = sho_family(1.0);
        for t in [0.0, 0.7, 3.0] {
            for x in [-1.5, 0.0, 0.4] {
                let psi = fam.psi(0, x, t).unwrap();
                let expected = PI.powf(-0.25) * (-x * x / 2.0).exp() * (-I * t / 2.0).exp();
                assert!((psi - expected).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn pulsating_width_ratio() {
        let fam = sho_family(2.0);
        let widths: Vec<f64> = (0..=64)
            .map(|i| {
                let t = i as f64 * PI / 64.0;
                let g = fam.psi_grid(0, -10.0, 10.0, 801, t).unwrap();
                assert!((g.norm_sq() - 1.0).abs() < 1e-9);
                let m2: f64 = g.values().iter().enumerate().map(|(j, v)| g.x(j).powi(2) * v.norm_sqr()).sum::<f64>() * g.dx();
                m2.sqrt()
            })
            .collect();
        let max = widths.iter().cloned().fold(0.0, f64::max);
        let min = widths.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((max / min - 2.0).abs() < 1e-6);
    }

    #[test]
    fn general_reduces_to_undriven_without_extra_terms() {
        let sc = Scenario::caldirola_kanai(1.0, 0.2, 1.0);
        let b = ClassicalBasis::standard(&sc, 0.0, &opts()).unwrap();
        let xp = solve_particular(&sc, 0.0, sc.interval(), &opts()).unwrap();
        let s = StateFamily::new(Variant::Undriven, &b, None, 0.0).unwrap();
        let g = StateFamily::new(Variant::General, &b, Some(&xp), 0.0).unwrap();
        for n in [0, 3] {
            let (a, c) = (s.psi(n, 0.6, 1.3).unwrap(), g.psi(n, 0.6, 1.3).unwrap());
            assert!((a - c).norm() < 1e-14);
        }
    }

    #[test]
    fn gamma_values() {
        let fam = sho_family(2.0);
        let g = fam.gaussian_params(FRAC_PI_4).unwrap();
        assert!((g.gamma1 - 0.8).abs() < 1e-9);
        let ident = sho_family(1.0).gaussian_params(1.0).unwrap();
        assert!((ident.gamma1 - 1.0).abs() < 1e-9 && ident.gamma2.abs() < 1e-9);
    }

    #[test]
    fn gamma2_prime_with_constant_a() {
        let a0 = 0.3;
        let sc = Scenario::custom(
            move |_| crate::scenario::Coefficients {
                mass: 1.0,
                mass_dot: 0.0,
                freq_sq: 1.0,
                drive: 0.0,
                a: a0,
                a_dot: 0.0,
                b: 0.0,
                b_dot: 0.0,
                f: 0.0,
            },
            1.0,
            (0.0, 5.0),
        )
        .unwrap();
        let b = ClassicalBasis::standard(&sc, 0.0, &opts()).unwrap();
        let xp = solve_particular(&sc, 0.0, sc.interval(), &opts()).unwrap();
        let fam = StateFamily::new(Variant::General, &b, Some(&xp), 0.0).unwrap();
        let g = fam.gaussian_params(1.1).unwrap();
        assert!((g.gamma2_prime + 0.6).abs() < 1e-9);
    }

    #[test]
    fn momentum_components() {
        let sc = Scenario::full_quadratic(1.0, 1.0);
        let xp = solve_particular(&sc, 0.0, sc.interval(), &opts()).unwrap();
        let t = 1.0;
        let c = sc.evaluate(t).unwrap();
        let (x, xd) = xp.state(t).unwrap();
        let p = classical_momentum(&xp, &sc, t).unwrap();
        assert!((p - (c.mass * xd + 2.0 * c.mass * c.a * x + c.b)).abs() < 1e-15);
        let und = Scenario::sho(1.0, 1.0);
        let xp0 = solve_particular(&und, 0.0, und.interval(), &opts()).unwrap();
        assert_eq!(classical_momentum(&xp0, &und, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn unitary_map_identity_and_modulus() {
        let sc = Scenario::sho(1.0, 1.0);
        let g = ComplexGridFunction::from_fn(-5.0, 5.0, 64, 1.0, |x| Complex64::new((-x * x).exp(), x)).unwrap();
        let out = apply_unitary_u(&sc, &g, 1.0, 0.0, &QuadOptions::default()).unwrap();
        assert_eq!(out, g);
        let fq = Scenario::full_quadratic(1.0, 1.0);
        let out = apply_unitary_u(&fq, &g, 1.0, 0.0, &QuadOptions::default()).unwrap();
        for (a, b) in out.values().iter().zip(g.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn regular_and_singular_phase_agree() {
        let sc = Scenario::driven_sho(1.0, 1.0, 1.0, 2.0);
        let b = ClassicalBasis::from_initial_data(&sc, 0.0, (1.0, 0.0), (1.0, 1.0), 0.0, &opts()).unwrap();
        let xp = ParticularSolution::solve(&sc, 0.0, 0.3, -0.2, sc.interval(), &opts()).unwrap();
        let fam = StateFamily::new(Variant::Driven, &b, Some(&xp), 0.1).unwrap();
        // v = cos t + sin t has its first zero at 3π/4
        for t in [0.5, 1.3, 2.2] {
            let a = fam.drive_phase(t).unwrap();
            let p = fam.singular_drive_phase(t, &QuadOptions::default()).unwrap();
            assert!((a - p).abs() < 1e-8, "t = {t}: {a} vs {p}");
        }
        assert!(fam.singular_drive_phase(3.0, &QuadOptions::default()).is_err());
        assert!(fam.drive_phase(3.0).unwrap().is_finite());
    }

    #[test]
    fn delta_is_continuous() {
        let sc = Scenario::full_quadratic(1.0, 1.0);
        let b = ClassicalBasis::standard(&sc, 0.0, &opts()).unwrap();
        let xp = solve_particular(&sc, 0.0, sc.interval(), &opts()).unwrap();
        let fam = StateFamily::new(Variant::General, &b, Some(&xp), 0.0).unwrap();
        let mut prev: Option<f64> = None;
        for i in 0..200 {
            let t = 0.5 + i as f64 * 0.01;
            let snap = fam.snapshot(t).unwrap();
            let d = snap.delta(0).unwrap();
            // the fitted form must match up to that phase
            for x in [-0.5, 0.0, 0.8] {
                let lhs = snap.psi(0, x).unwrap();
                let rhs = snap.displaced_gaussian(0, x).unwrap() * (I * d).exp();
                assert!((lhs - rhs).norm() < 1e-12);
            }
            if let Some(p) = prev {
                let jump = (Complex64::from_polar(1.0, d) * Complex64::from_polar(1.0, -p)).arg();
                assert!(jump.abs() < 0.05);
            }
            prev = Some(d);
        }
    }
}
