//! Verification engine that uses nothing but the scenario coefficients:
//! finite-difference Hamiltonians, Schrödinger residuals and a
//! Crank–Nicolson stepper.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ComplexGridFunction;
use crate::propagate::{EDGE_FRACTION, EDGE_MASS_WARN};
use crate::scenario::{Scenario, Variant};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Coefficients of `H = p²/2M − a(px + xp) + ½Mc x² − (b/M)p + d x + e`
/// for one system class at one time. The undriven class keeps only the
/// oscillator, the driven class adds `−F x`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct HamiltonianTerms {
    mass: f64,
    a: f64,
    c: f64,
    b: f64,
    d: f64,
    e: f64,
}

impl HamiltonianTerms {
    fn new(sc: &Scenario, variant: Variant, t: f64) -> Result<Self> {
        let k = sc.evaluate(t)?;
        Ok(match variant {
            Variant::Undriven => HamiltonianTerms {
                mass: k.mass,
                a: 0.0,
                c: k.freq_sq,
                b: 0.0,
                d: 0.0,
                e: 0.0,
            },
            Variant::Driven => HamiltonianTerms {
                mass: k.mass,
                a: 0.0,
                c: k.freq_sq,
                b: 0.0,
                d: -k.drive,
                e: 0.0,
            },
            Variant::General => {
                let dc = k.derived();
                HamiltonianTerms {
                    mass: k.mass,
                    a: k.a,
                    c: dc.c,
                    b: k.b,
                    d: dc.d,
                    e: k.b * k.b / (2.0 * k.mass) - k.f,
                }
            }
        })
    }

    fn potential(&self, x: f64) -> f64 {
        0.5 * self.mass * self.c * x * x + self.d * x + self.e
    }
}

/// `Hψ` with fourth-order central stencils, `p = −iħ∂_x`, the `a` term as
/// `iħa(∂_x x + x∂_x)`. Samples beyond the grid count as zero.
pub fn hamiltonian_apply(
    scenario: &Scenario,
    variant: Variant,
    psi: &ComplexGridFunction,
    t: f64,
) -> Result<ComplexGridFunction> {
    let h = HamiltonianTerms::new(scenario, variant, t)?;
    let hbar = scenario.hbar();
    let xs = psi.xs();
    let d1 = psi.derivative();
    let d2 = psi.second_derivative();
    let dxpsi = if h.a != 0.0 {
        psi.with_values(xs.iter().zip(psi.values()).map(|(x, v)| x * v).collect())?
            .derivative()
    } else {
        vec![Complex64::new(0.0, 0.0); xs.len()]
    };
    let out = (0..xs.len())
        .map(|j| {
            let x = xs[j];
            -hbar * hbar / (2.0 * h.mass) * d2[j]
                + I * hbar * h.a * (dxpsi[j] + x * d1[j])
                + I * hbar * h.b / h.mass * d1[j]
                + h.potential(x) * psi.values()[j]
        })
        .collect();
    psi.with_values(out)
}

/// `H` discretised with second-order central differences; Hermitian and
/// tridiagonal.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub upper: Vec<Complex64>,
}

impl Tridiagonal {
    fn hamiltonian(sc: &Scenario, variant: Variant, xs: &[f64], dx: f64, t: f64) -> Result<Self> {
        let h = HamiltonianTerms::new(sc, variant, t)?;
        let hbar = sc.hbar();
        let n = xs.len();
        let kin = hbar * hbar / (2.0 * h.mass * dx * dx);
        let mut lower = vec![Complex64::new(0.0, 0.0); n];
        let mut diag = vec![Complex64::new(0.0, 0.0); n];
        let mut upper = vec![Complex64::new(0.0, 0.0); n];
        let drift = I * hbar * h.b / (2.0 * h.mass * dx);
        for j in 0..n {
            diag[j] = Complex64::new(2.0 * kin + h.potential(xs[j]), 0.0);
            if j + 1 < n {
                upper[j] = -kin + I * hbar * h.a * (xs[j] + xs[j + 1]) / (2.0 * dx) + drift;
            }
            if j > 0 {
                lower[j] = -kin - I * hbar * h.a * (xs[j] + xs[j - 1]) / (2.0 * dx) - drift;
            }
        }
        Ok(Tridiagonal { lower, diag, upper })
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = v.len();
        (0..n)
            .map(|j| {
                let mut acc = self.diag[j] * v[j];
                if j > 0 {
                    acc += self.lower[j] * v[j - 1];
                }
                if j + 1 < n {
                    acc += self.upper[j] * v[j + 1];
                }
                acc
            })
            .collect()
    }

    fn max_row_sum(&self) -> f64 {
        (0..self.diag.len())
            .map(|j| self.lower[j].norm() + self.diag[j].norm() + self.upper[j].norm())
            .fold(0.0, f64::max)
    }
}

/// `Hψ` with second-order stencils; the independent cross-check for
/// [`hamiltonian_apply`].
pub fn hamiltonian_apply_second_order(
    scenario: &Scenario,
    variant: Variant,
    psi: &ComplexGridFunction,
    t: f64,
) -> Result<ComplexGridFunction> {
    let m = Tridiagonal::hamiltonian(scenario, variant, &psi.xs(), psi.dx(), t)?;
    psi.with_values(m.apply(psi.values()))
}

/// Size of `iħ∂_tψ − Hψ` on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// `‖r‖₂ / ‖ψ‖₂`
    pub l2_residual: f64,
    /// `max|r| / max|ψ|`
    pub linf_residual: f64,
    pub edge_mass: f64,
    pub dt: f64,
    pub dx: f64,
    /// Order of the space and time stencils.
    pub stencil_order: u32,
}

/// Residual of the Schrödinger equation for a state known as a function of
/// time, with a fourth-order central time derivative.
pub fn schrodinger_residual<F>(evaluator: F, scenario: &Scenario, variant: Variant, t: f64, dt: f64) -> Result<ResidualReport>
where
    F: Fn(f64) -> Result<ComplexGridFunction>,
{
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
    }
    let psi = evaluator(t)?;
    let around: Vec<ComplexGridFunction> = [-2.0, -1.0, 1.0, 2.0]
        .iter()
        .map(|k| evaluator(t + k * dt))
        .collect::<Result<_>>()?;
    for g in &around {
        psi.require_aligned(g)?;
    }
    let hpsi = hamiltonian_apply(scenario, variant, &psi, t)?;
    let hbar = scenario.hbar();
    let r: Vec<Complex64> = (0..psi.n_points())
        .map(|j| {
            let dpsi = (around[0].values()[j] - 8.0 * around[1].values()[j] + 8.0 * around[2].values()[j]
                - around[3].values()[j])
                / (12.0 * dt);
            I * hbar * dpsi - hpsi.values()[j]
        })
        .collect();
    let resid = psi.with_values(r)?;
    let norm = psi.norm();
    let peak = psi.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    if norm == 0.0 {
        return Err(Error::Precondition("residual of the zero state is undefined".into()));
    }
    let edge_mass = psi.edge_mass(EDGE_FRACTION);
    if edge_mass > EDGE_MASS_WARN {
        log::warn!("residual grid at t = {t} has edge mass {edge_mass:e}");
    }
    Ok(ResidualReport {
        l2_residual: resid.norm() / norm,
        linf_residual: resid.values().iter().map(|v| v.norm()).fold(0.0, f64::max) / peak,
        edge_mass,
        dt,
        dx: psi.dx(),
        stencil_order: 4,
    })
}

/// Largest accepted `dt · ‖H‖∞ / ħ`; beyond it the stepper is stable but
/// meaningless.
const STEP_SANITY: f64 = 1e5;

/// Crank–Nicolson from `t_a` to `t_b` in `n_steps` equal steps, Dirichlet
/// edges, coefficients at step midpoints.
pub fn crank_nicolson_evolve(
    scenario: &Scenario,
    variant: Variant,
    psi0: &ComplexGridFunction,
    t_a: f64,
    t_b: f64,
    n_steps: usize,
) -> Result<ComplexGridFunction> {
    if n_steps == 0 {
        return Err(Error::Precondition("n_steps must be at least 1".into()));
    }
    if !(t_b > t_a) {
        return Err(Error::Precondition(format!("t_b = {t_b} must exceed t_a = {t_a}")));
    }
    let hbar = scenario.hbar();
    let xs = psi0.xs();
    let dx = psi0.dx();
    let dt = (t_b - t_a) / n_steps as f64;
    let mut psi = psi0.values().to_vec();
    let mut max_edge = psi0.edge_mass(EDGE_FRACTION);
    for step in 0..n_steps {
        let t_mid = t_a + (step as f64 + 0.5) * dt;
        let h = Tridiagonal::hamiltonian(scenario, variant, &xs, dx, t_mid)?;
        if step == 0 && dt * h.max_row_sum() / hbar > STEP_SANITY {
            return Err(Error::Precondition(format!(
                "dt·‖H‖/ħ = {:.3e} exceeds {STEP_SANITY:e}; use more steps",
                dt * h.max_row_sum() / hbar
            )));
        }
        let k = I * dt / (2.0 * hbar);
        let hpsi = h.apply(&psi);
        let rhs: Vec<Complex64> = psi.iter().zip(&hpsi).map(|(p, hp)| p - k * hp).collect();
        let lower: Vec<Complex64> = h.lower.iter().map(|v| k * v).collect();
        let upper: Vec<Complex64> = h.upper.iter().map(|v| k * v).collect();
        let diag: Vec<Complex64> = h.diag.iter().map(|v| 1.0 + k * v).collect();
        psi = solve_tridiagonal(&lower, &diag, &upper, &rhs).ok_or(Error::LinearSolve { step })?;
        if step % 64 == 0 || step + 1 == n_steps {
            max_edge = max_edge.max(psi0.with_values(psi.clone())?.edge_mass(EDGE_FRACTION));
        }
    }
    if max_edge > EDGE_MASS_WARN {
        log::warn!("Crank–Nicolson run reached edge mass {max_edge:e}; Dirichlet reflection likely");
    }
    Ok(psi0.with_values(psi)?.with_time(t_b))
}

/// Thomas algorithm; `None` on a vanishing or non-finite pivot.
fn solve_tridiagonal(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &[Complex64],
) -> Option<Vec<Complex64>> {
    let n = diag.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    let mut pivot = diag[0];
    if pivot.norm() == 0.0 {
        return None;
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for j in 1..n {
        pivot = diag[j] - lower[j] * c[j - 1];
        if pivot.norm() == 0.0 || !pivot.re.is_finite() || !pivot.im.is_finite() {
            return None;
        }
        c[j] = upper[j] / pivot;
        d[j] = (rhs[j] - lower[j] * d[j - 1]) / pivot;
    }
    for j in (0..n - 1).rev() {
        let next = d[j + 1];
        d[j] -= c[j] * next;
    }
    Some(d)
}
