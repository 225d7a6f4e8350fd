//! Classical equation of motion `d/dt(M ẋ) + M w² x = F` and the solution
//! objects the kernels and states are assembled from.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{self, DenseSolution, IntegratorOptions};
use crate::scenario::Scenario;

/// Relative tolerance for accepting a pair of solutions as a basis. Much
/// looser than the integrator accuracy; it only rejects inputs that are not
/// solutions of the same equation.
const BASIS_DRIFT_LIMIT: f64 = 1e-6;
/// `|v_s(t_b)|` below this (relative to `|v̇_s(t_a)|`) is a caustic.
pub const CAUSTIC_TOL: f64 = 1e-8;
const WRONSKIAN_SAMPLES: usize = 401;

/// A homogeneous solution, stored as a linear combination of integrated
/// trajectories so that rescaling and mixing are exact.
#[derive(Debug, Clone)]
pub struct Homogeneous {
    terms: Vec<(f64, Arc<DenseSolution<2>>)>,
}

impl Homogeneous {
    pub fn state(&self, t: f64) -> Result<(f64, f64)> {
        let mut x = 0.0;
        let mut xdot = 0.0;
        for (c, sol) in &self.terms {
            let y = sol.eval(t)?;
            x += c * y[0];
            xdot += c * y[1];
        }
        Ok((x, xdot))
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        Ok(self.state(t)?.0)
    }

    pub fn velocity(&self, t: f64) -> Result<f64> {
        Ok(self.state(t)?.1)
    }

    pub fn scaled(&self, k: f64) -> Homogeneous {
        Homogeneous {
            terms: self.terms.iter().map(|(c, s)| (c * k, s.clone())).collect(),
        }
    }

    /// `self + k·other`
    pub fn plus(&self, k: f64, other: &Homogeneous) -> Homogeneous {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|(c, s)| (c * k, s.clone())));
        Homogeneous { terms }
    }

    pub fn interval(&self) -> (f64, f64) {
        self.terms.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), (_, s)| {
            let (a, b) = s.interval();
            (lo.max(a), hi.min(b))
        })
    }
}

fn check_window(scenario: &Scenario, interval: (f64, f64)) -> Result<()> {
    let (lo, hi) = scenario.interval();
    for t in [interval.0, interval.1] {
        if !scenario.contains(t) {
            return Err(Error::Domain { t, start: lo, end: hi });
        }
    }
    if !(interval.1 > interval.0) {
        return Err(Error::Precondition(format!(
            "empty solution window [{}, {}]",
            interval.0, interval.1
        )));
    }
    Ok(())
}

/// Solves `d/dt(M ẋ) + M w² x = 0` from `(x0, ẋ0)` at `t0` across `interval`.
pub fn solve_homogeneous(
    scenario: &Scenario,
    t0: f64,
    x0: f64,
    xdot0: f64,
    interval: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<Homogeneous> {
    check_window(scenario, interval)?;
    if x0 == 0.0 && xdot0 == 0.0 {
        return Err(Error::Precondition("initial data (0, 0) gives the trivial solution".into()));
    }
    let sc = scenario.clone();
    let sol = ode::solve(
        move |t, y: &[f64; 2]| {
            let c = sc.at(t);
            [y[1], -(c.mass_dot / c.mass) * y[1] - c.freq_sq * y[0]]
        },
        t0,
        [x0, xdot0],
        interval.0,
        interval.1,
        opts,
    )?;
    Ok(Homogeneous {
        terms: vec![(1.0, Arc::new(sol))],
    })
}

fn wronskian(scenario: &Scenario, u: &Homogeneous, v: &Homogeneous, t: f64) -> Result<f64> {
    let (u0, u1) = u.state(t)?;
    let (v0, v1) = v.state(t)?;
    Ok(scenario.at(t).mass * (v1 * u0 - u1 * v0))
}

/// Two independent homogeneous solutions `u`, `v` with their Wronskian
/// `Ω = M(v̇u − u̇v)` and an anchor time `t_a`.
#[derive(Debug, Clone)]
pub struct ClassicalBasis {
    scenario: Scenario,
    u: Homogeneous,
    v: Homogeneous,
    omega: f64,
    t_a: f64,
}

/// Validates `u`, `v` as a basis anchored at `t_a`.
pub fn make_basis(u: Homogeneous, v: Homogeneous, scenario: &Scenario, t_a: f64) -> Result<ClassicalBasis> {
    let (lo, hi) = common_interval(&u, &v);
    if !(lo <= t_a && t_a <= hi) {
        return Err(Error::Domain { t: t_a, start: lo, end: hi });
    }
    let (u0, u1) = u.state(t_a)?;
    let (v0, v1) = v.state(t_a)?;
    let m = scenario.evaluate(t_a)?.mass;
    let omega = m * (v1 * u0 - u1 * v0);
    let scale = m * (u0.abs() + u1.abs()) * (v0.abs() + v1.abs());
    if !(omega.abs() > 1e-12 * scale) {
        return Err(Error::DependentSolutions { omega });
    }
    if u0.abs() <= 1e-12 * (u0.abs() + u1.abs()) {
        return Err(Error::Anchor { t_a });
    }
    let basis = ClassicalBasis {
        scenario: scenario.clone(),
        u,
        v,
        omega,
        t_a,
    };
    let drift = basis.wronskian_drift()?;
    if drift > BASIS_DRIFT_LIMIT {
        return Err(Error::Validation(format!(
            "Wronskian drifts by {drift:e}; inputs do not solve the same equation of motion"
        )));
    }
    Ok(basis)
}

fn common_interval(u: &Homogeneous, v: &Homogeneous) -> (f64, f64) {
    let (a0, a1) = u.interval();
    let (b0, b1) = v.interval();
    (a0.max(b0), a1.min(b1))
}

impl ClassicalBasis {
    /// Integrates `u` and `v` from the given initial data at `t0` over the
    /// full scenario interval.
    pub fn from_initial_data(
        scenario: &Scenario,
        t0: f64,
        u_init: (f64, f64),
        v_init: (f64, f64),
        t_a: f64,
        opts: &IntegratorOptions,
    ) -> Result<Self> {
        let window = scenario.interval();
        let u = solve_homogeneous(scenario, t0, u_init.0, u_init.1, window, opts)?;
        let v = solve_homogeneous(scenario, t0, v_init.0, v_init.1, window, opts)?;
        make_basis(u, v, scenario, t_a)
    }

    /// `u(t0) = 1, u̇(t0) = 0` and `v(t0) = 0, v̇(t0) = ω` with `ω = √w²(t0)`
    /// (or 1 when `w² ≤ 0`). For the constant oscillator this gives the
    /// stationary states.
    pub fn standard(scenario: &Scenario, t0: f64, opts: &IntegratorOptions) -> Result<Self> {
        let w2 = scenario.evaluate(t0)?.freq_sq;
        let omega = if w2 > 0.0 { w2.sqrt() } else { 1.0 };
        Self::from_initial_data(scenario, t0, (1.0, 0.0), (0.0, omega), t0, opts)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn u(&self) -> &Homogeneous {
        &self.u
    }

    pub fn v(&self) -> &Homogeneous {
        &self.v
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn t_a(&self) -> f64 {
        self.t_a
    }

    pub fn interval(&self) -> (f64, f64) {
        common_interval(&self.u, &self.v)
    }

    pub fn wronskian_at(&self, t: f64) -> Result<f64> {
        wronskian(&self.scenario, &self.u, &self.v, t)
    }

    /// `max_t |Ω(t) − Ω(t_a)| / |Ω(t_a)|` over evenly spaced samples.
    pub fn wronskian_drift(&self) -> Result<f64> {
        let (lo, hi) = self.interval();
        let mut worst = 0.0f64;
        for i in 0..WRONSKIAN_SAMPLES {
            let t = lo + (hi - lo) * i as f64 / (WRONSKIAN_SAMPLES - 1) as f64;
            worst = worst.max((self.wronskian_at(t)? - self.omega).abs());
        }
        Ok(worst / self.omega.abs())
    }

    /// Same basis with `v → −v` when `Ω < 0`, so that `Ω > 0`.
    pub fn oriented(&self) -> ClassicalBasis {
        if self.omega > 0.0 {
            return self.clone();
        }
        ClassicalBasis {
            v: self.v.scaled(-1.0),
            omega: -self.omega,
            ..self.clone()
        }
    }

    /// Replaces `(u, v)` by `(λu + κv, μv)`-type combinations; used to probe
    /// basis (in)dependence.
    pub fn recombined(&self, uu: f64, uv: f64, vu: f64, vv: f64) -> Result<ClassicalBasis> {
        let u = self.u.scaled(uu).plus(uv, &self.v);
        let v = self.v.scaled(vv).plus(vu, &self.u);
        make_basis(u, v, &self.scenario, self.t_a)
    }
}

/// `u` together with `v_s`, the combination vanishing at `t_a`.
#[derive(Debug, Clone)]
pub struct ShiftedBasis {
    scenario: Scenario,
    u: Homogeneous,
    v_s: Homogeneous,
    omega_s: f64,
    t_a: f64,
}

/// `v_s = (v − (v(t_a)/u(t_a)) u) · M(t_a) u(t_a) / Ω`, so that
/// `v_s(t_a) = 0`, `v̇_s(t_a) = 1` and `Ω_s = M(t_a) u(t_a)`.
pub fn shift_basis(basis: &ClassicalBasis, t_a: f64) -> Result<ShiftedBasis> {
    let (u0, u1) = basis.u.state(t_a)?;
    if u0.abs() <= 1e-12 * (u0.abs() + u1.abs()) {
        return Err(Error::Anchor { t_a });
    }
    let v0 = basis.v.value(t_a)?;
    let m = basis.scenario.evaluate(t_a)?.mass;
    let omega = basis.wronskian_at(t_a)?;
    let k = m * u0 / omega;
    let v_s = basis.v.scaled(k).plus(-k * v0 / u0, &basis.u);
    let vs_dot = v_s.velocity(t_a)?;
    Ok(ShiftedBasis {
        scenario: basis.scenario.clone(),
        u: basis.u.clone(),
        v_s,
        omega_s: m * u0 * vs_dot,
        t_a,
    })
}

impl ShiftedBasis {
    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn t_a(&self) -> f64 {
        self.t_a
    }

    pub fn omega_s(&self) -> f64 {
        self.omega_s
    }

    pub fn u(&self) -> &Homogeneous {
        &self.u
    }

    pub fn v_s(&self) -> &Homogeneous {
        &self.v_s
    }

    pub fn u_state(&self, t: f64) -> Result<(f64, f64)> {
        self.u.state(t)
    }

    /// `(v_s, v̇_s)`; `v_s(t_a)` is exactly zero.
    pub fn vs_state(&self, t: f64) -> Result<(f64, f64)> {
        let (x, xdot) = self.v_s.state(t)?;
        Ok((if t == self.t_a { 0.0 } else { x }, xdot))
    }

    pub fn wronskian_at(&self, t: f64) -> Result<f64> {
        let (u0, u1) = self.u_state(t)?;
        let (v0, v1) = self.vs_state(t)?;
        Ok(self.scenario.evaluate(t)?.mass * (v1 * u0 - u1 * v0))
    }

    /// `u → λ(u + C v_s)`, `v_s → μ v_s`. The kernel must not notice.
    pub fn transformed(&self, c: f64, lambda: f64, mu: f64) -> ShiftedBasis {
        let u = self.u.plus(c, &self.v_s).scaled(lambda);
        let v_s = self.v_s.scaled(mu);
        ShiftedBasis {
            scenario: self.scenario.clone(),
            u,
            v_s,
            omega_s: self.omega_s * lambda * mu,
            t_a: self.t_a,
        }
    }

    /// View `(u, v_s)` as an ordinary basis anchored at `t_a`.
    pub fn as_basis(&self) -> Result<ClassicalBasis> {
        make_basis(self.u.clone(), self.v_s.clone(), &self.scenario, self.t_a)
    }

    /// Errors with [`Error::Caustic`] when `v_s(t_b)` vanishes.
    pub fn check_caustic(&self, t_b: f64) -> Result<(f64, f64)> {
        let (vs, vs_dot) = self.vs_state(t_b)?;
        let (_, vs_dot_a) = self.vs_state(self.t_a)?;
        if vs.abs() <= CAUSTIC_TOL * vs_dot_a.abs() {
            let conjugate_time = if vs_dot != 0.0 { t_b - vs / vs_dot } else { t_b };
            return Err(Error::Caustic { t_b, conjugate_time });
        }
        Ok((vs, vs_dot))
    }

    /// First zero of `v_s` after `t_a` within the basis interval, if any.
    pub fn first_caustic(&self) -> Result<Option<f64>> {
        let (_, hi) = self.u.interval().min_max(self.v_s.interval());
        let n = 4000;
        let dt = (hi - self.t_a) / n as f64;
        if dt <= 0.0 {
            return Ok(None);
        }
        let mut prev = self.vs_state(self.t_a + 1e-3 * dt)?.0;
        for i in 1..=n {
            let t = self.t_a + i as f64 * dt;
            let cur = self.vs_state(t)?.0;
            if cur == 0.0 || cur.signum() != prev.signum() {
                let (mut a, mut b) = (t - dt, t);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if self.vs_state(m)?.0.signum() == prev.signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                return Ok(Some(0.5 * (a + b)));
            }
            prev = cur;
        }
        Ok(None)
    }
}

trait MinMax {
    fn min_max(self, other: Self) -> Self;
}

impl MinMax for (f64, f64) {
    fn min_max(self, other: Self) -> Self {
        (self.0.max(other.0), self.1.min(other.1))
    }
}

/// Solution of the driven equation with `x_p(t_anchor) = x0`,
/// `ẋ_p(t_anchor) = ẋ0`. Three running integrals from the anchor are carried
/// along so that phases built from them stay smooth in `t`:
/// `∫½ x_p F`, `∫½ M (ẋ_p² − w² x_p²)` and `∫ f`.
#[derive(Debug, Clone)]
pub struct ParticularSolution {
    scenario: Scenario,
    sol: Arc<DenseSolution<5>>,
    t_anchor: f64,
}

/// Particular solution with `x_p(t_a) = 0` and `ẋ_p(t_a) = 0`.
pub fn solve_particular(
    scenario: &Scenario,
    t_a: f64,
    interval: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<ParticularSolution> {
    ParticularSolution::solve(scenario, t_a, 0.0, 0.0, interval, opts)
}

impl ParticularSolution {
    pub fn solve(
        scenario: &Scenario,
        t_anchor: f64,
        x0: f64,
        xdot0: f64,
        interval: (f64, f64),
        opts: &IntegratorOptions,
    ) -> Result<Self> {
        check_window(scenario, interval)?;
        let sc = scenario.clone();
        let sol = ode::solve(
            move |t, y: &[f64; 5]| {
                let c = sc.at(t);
                let (x, xd) = (y[0], y[1]);
                [
                    xd,
                    -(c.mass_dot / c.mass) * xd - c.freq_sq * x + c.drive / c.mass,
                    0.5 * x * c.drive,
                    0.5 * c.mass * (xd * xd - c.freq_sq * x * x),
                    c.f,
                ]
            },
            t_anchor,
            [x0, xdot0, 0.0, 0.0, 0.0],
            interval.0,
            interval.1,
            opts,
        )?;
        Ok(ParticularSolution {
            scenario: scenario.clone(),
            sol: Arc::new(sol),
            t_anchor,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn t_anchor(&self) -> f64 {
        self.t_anchor
    }

    pub fn interval(&self) -> (f64, f64) {
        self.sol.interval()
    }

    /// `(x_p, ẋ_p)`
    pub fn state(&self, t: f64) -> Result<(f64, f64)> {
        let y = self.sol.eval(t)?;
        Ok((y[0], y[1]))
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        Ok(self.sol.eval(t)?[0])
    }

    pub fn velocity(&self, t: f64) -> Result<f64> {
        Ok(self.sol.eval(t)?[1])
    }

    /// `∫_{t0}^{t} ½ M (ẋ_p² − w² x_p²) dz` from the carried integral.
    pub fn lagrangian_integral(&self, t0: f64, t: f64) -> Result<f64> {
        Ok(self.sol.eval(t)?[3] - self.sol.eval(t0)?[3])
    }

    /// `∫_{t0}^{t} f dz` from the carried integral.
    pub fn f_integral(&self, t0: f64, t: f64) -> Result<f64> {
        Ok(self.sol.eval(t)?[4] - self.sol.eval(t0)?[4])
    }

    /// `∫_{t0}^{t} ½ x_p F dz` from the carried integral.
    pub fn work_integral(&self, t0: f64, t: f64) -> Result<f64> {
        Ok(self.sol.eval(t)?[2] - self.sol.eval(t0)?[2])
    }

    /// Residual of `d/dt(M ẋ_p) + M w² x_p − F` using a central difference
    /// of `M ẋ_p`.
    pub fn residual(&self, t: f64, dt: f64) -> Result<f64> {
        let p = |s: f64| -> Result<f64> { Ok(self.scenario.evaluate(s)?.mass * self.velocity(s)?) };
        let dp = (p(t + dt)? - p(t - dt)?) / (2.0 * dt);
        let c = self.scenario.evaluate(t)?;
        Ok(dp + c.mass * c.freq_sq * self.value(t)? - c.drive)
    }
}

/// Trajectory through `(t_a, x_a)` and `(t_b, x_b)`:
/// `x̄ = x_a u/u(t_a) + [x_b − x_a u(t_b)/u(t_a)] v_s/v_s(t_b)`.
#[derive(Debug, Clone)]
pub struct ClassicalPath {
    shifted: ShiftedBasis,
    x_a: f64,
    x_b: f64,
    t_b: f64,
    coef_u: f64,
    coef_vs: f64,
}

pub fn classical_path(shifted: &ShiftedBasis, x_a: f64, x_b: f64, t_b: f64) -> Result<ClassicalPath> {
    let t_a = shifted.t_a();
    if !(t_b > t_a) {
        return Err(Error::Precondition(format!("t_b = {t_b} must exceed t_a = {t_a}")));
    }
    let (vs_b, _) = shifted.check_caustic(t_b)?;
    let u_a = shifted.u.value(t_a)?;
    let u_b = shifted.u.value(t_b)?;
    Ok(ClassicalPath {
        shifted: shifted.clone(),
        x_a,
        x_b,
        t_b,
        coef_u: x_a / u_a,
        coef_vs: (x_b - x_a * u_b / u_a) / vs_b,
    })
}

impl ClassicalPath {
    pub fn state(&self, t: f64) -> Result<(f64, f64)> {
        let (u, ud) = self.shifted.u_state(t)?;
        let (v, vd) = self.shifted.vs_state(t)?;
        let x = if t == self.shifted.t_a() {
            self.x_a
        } else if t == self.t_b {
            self.x_b
        } else {
            self.coef_u * u + self.coef_vs * v
        };
        Ok((x, self.coef_u * ud + self.coef_vs * vd))
    }

    pub fn endpoints(&self) -> (f64, f64, f64, f64) {
        (self.shifted.t_a(), self.t_b, self.x_a, self.x_b)
    }
}

/// Driven classical trajectory `x̄ = x_p + x_h` through the two endpoints.
#[derive(Debug, Clone)]
pub struct DrivenPath {
    homogeneous: ClassicalPath,
    particular: ParticularSolution,
    x_a: f64,
    x_b: f64,
}

pub fn driven_path(
    shifted: &ShiftedBasis,
    particular: &ParticularSolution,
    x_a: f64,
    x_b: f64,
    t_b: f64,
) -> Result<DrivenPath> {
    let xpa = particular.value(shifted.t_a())?;
    let xpb = particular.value(t_b)?;
    Ok(DrivenPath {
        homogeneous: classical_path(shifted, x_a - xpa, x_b - xpb, t_b)?,
        particular: particular.clone(),
        x_a,
        x_b,
    })
}

impl DrivenPath {
    pub fn state(&self, t: f64) -> Result<(f64, f64)> {
        let (t_a, t_b, _, _) = self.homogeneous.endpoints();
        let (h, hd) = self.homogeneous.state(t)?;
        let (p, pd) = self.particular.state(t)?;
        let x = if t == t_a {
            self.x_a
        } else if t == t_b {
            self.x_b
        } else {
            h + p
        };
        Ok((x, hd + pd))
    }
}

#[derive(Debug, Clone, Copy)]
struct PhaseNode {
    t: f64,
    theta: f64,
    z: Complex64,
}

/// Polar form `u = ρ cos θ`, `v = ρ sin θ` with `θ` continuous in time.
#[derive(Debug, Clone)]
pub struct RhoTheta {
    basis: ClassicalBasis,
    nodes: Vec<PhaseNode>,
}

/// Samples per unit time before refinement of the unwrapping grid.
const THETA_NODE_STEP: f64 = 0.02;

pub fn rho_theta(basis: &ClassicalBasis) -> Result<RhoTheta> {
    let (lo, hi) = basis.interval();
    let z_at = |t: f64| -> Result<Complex64> {
        let z = Complex64::new(basis.u.value(t)?, basis.v.value(t)?);
        if z.norm() == 0.0 || !z.norm().is_finite() {
            return Err(Error::DegenerateBasis { t });
        }
        Ok(z)
    };
    let mut nodes = Vec::new();
    let z0 = z_at(lo)?;
    nodes.push(PhaseNode {
        t: lo,
        theta: z0.arg(),
        z: z0,
    });
    let mut t = lo;
    let mut dt = THETA_NODE_STEP;
    while t < hi {
        let last = nodes[nodes.len() - 1];
        let step = dt.min(hi - t);
        let t_next = if step == hi - t { hi } else { t + step };
        let z = z_at(t_next)?;
        let dtheta = (z * last.z.conj()).arg();
        if dtheta.abs() > std::f64::consts::FRAC_PI_4 && step > 1e-9 {
            dt = step * 0.5;
            continue;
        }
        nodes.push(PhaseNode {
            t: t_next,
            theta: last.theta + dtheta,
            z,
        });
        t = t_next;
        if dtheta.abs() < std::f64::consts::PI / 16.0 {
            dt = (dt * 1.5).min(THETA_NODE_STEP);
        }
    }
    Ok(RhoTheta {
        basis: basis.clone(),
        nodes,
    })
}

impl RhoTheta {
    pub fn basis(&self) -> &ClassicalBasis {
        &self.basis
    }

    pub fn rho(&self, t: f64) -> Result<f64> {
        let u = self.basis.u.value(t)?;
        let v = self.basis.v.value(t)?;
        Ok(u.hypot(v))
    }

    /// `(ρ, ρ̇)` with `ρ̇ = (u u̇ + v v̇)/ρ`.
    pub fn rho_and_rate(&self, t: f64) -> Result<(f64, f64)> {
        let (u, ud) = self.basis.u.state(t)?;
        let (v, vd) = self.basis.v.state(t)?;
        let rho = u.hypot(v);
        if rho == 0.0 {
            return Err(Error::DegenerateBasis { t });
        }
        Ok((rho, (u * ud + v * vd) / rho))
    }

    /// Continuous polar angle of `u + i v`.
    pub fn theta(&self, t: f64) -> Result<f64> {
        let z = Complex64::new(self.basis.u.value(t)?, self.basis.v.value(t)?);
        let k = self.nodes.partition_point(|n| n.t <= t).saturating_sub(1);
        let node = self.nodes[k];
        Ok(node.theta + (z * node.z.conj()).arg())
    }

    /// `θ̇ = (u v̇ − v u̇)/ρ²`
    pub fn theta_rate(&self, t: f64) -> Result<f64> {
        let (u, ud) = self.basis.u.state(t)?;
        let (v, vd) = self.basis.v.state(t)?;
        Ok((u * vd - v * ud) / (u * u + v * v))
    }
}
