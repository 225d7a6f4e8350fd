//! Verification suites: each runs one family of invariants over the shipped
//! presets and reports numbers against fixed bounds.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::classical::{rho_theta, shift_basis, ClassicalBasis, ParticularSolution};
use crate::error::{Error, Result};
use crate::grid::ComplexGridFunction;
use crate::kernel::{check_appendix_odes, kernel_spectral_sum, short_time_kernel, Kernel};
use crate::observables::{quadrature_product, uncertainty_diagonal, uncertainty_offdiag, Form, UncertaintyContext};
use crate::ode::IntegratorOptions;
use crate::oracle::{crank_nicolson_evolve, schrodinger_residual};
use crate::propagate::propagate;
use crate::quad::QuadOptions;
use crate::scenario::{Scenario, Variant, DEFAULT_INTERVAL, PRESETS};
use crate::states::{apply_unitary_u, StateFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Uniqueness,
    Residuals,
    Spectral,
    ShortTime,
    Appendix,
    Oracle,
    Unitary,
    Uncertainty,
    Classical,
    Orthonormality,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Uniqueness,
        Suite::Residuals,
        Suite::Spectral,
        Suite::ShortTime,
        Suite::Appendix,
        Suite::Oracle,
        Suite::Unitary,
        Suite::Uncertainty,
        Suite::Classical,
        Suite::Orthonormality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Uniqueness => "uniqueness",
            Suite::Residuals => "residuals",
            Suite::Spectral => "spectral",
            Suite::ShortTime => "short-time",
            Suite::Appendix => "appendix",
            Suite::Oracle => "oracle",
            Suite::Unitary => "unitary",
            Suite::Uncertainty => "uncertainty",
            Suite::Classical => "classical",
            Suite::Orthonormality => "orthonormality",
        }
    }

    /// Wall-clock budget, where one is part of the criterion.
    pub fn time_budget(self) -> Option<Duration> {
        match self {
            Suite::Uniqueness => Some(Duration::from_secs(30)),
            Suite::Residuals => Some(Duration::from_secs(60)),
            Suite::Spectral => Some(Duration::from_secs(20)),
            _ => None,
        }
    }

    /// Parses a comma-separated list; an empty selection is an error.
    pub fn parse_list(s: &str) -> Result<Vec<Suite>> {
        let suites = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(Suite::from_str)
            .collect::<Result<Vec<_>>>()?;
        if suites.is_empty() {
            return Err(Error::Config("empty suite selection".into()));
        }
        Ok(suites)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!("unknown suite '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    Within(f64, f64),
    /// Recorded, never fails.
    Report,
}

impl Bound {
    pub fn admits(self, value: f64) -> bool {
        match self {
            Bound::AtMost(hi) => value <= hi,
            Bound::Within(lo, hi) => value >= lo && value <= hi,
            Bound::Report => true,
        }
    }

    pub fn limits(self) -> (Option<f64>, Option<f64>) {
        match self {
            Bound::AtMost(hi) => (None, Some(hi)),
            Bound::Within(lo, hi) => (Some(lo), Some(hi)),
            Bound::Report => (None, None),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, bound: Bound) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
        }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        !self.value.is_nan() && self.bound.admits(self.value)
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Integrator settings for everything except the classical suite,
    /// which always runs at the library defaults.
    pub integrator: IntegratorOptions,
    /// Build the closed forms from a scenario with ħ off by 5%, so that
    /// every comparison against an independent oracle should fail.
    pub corrupt: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            integrator: IntegratorOptions {
                rtol: 1e-12,
                atol: 1e-14,
                ..IntegratorOptions::default()
            },
            corrupt: false,
        }
    }
}

const CORRUPTION: f64 = 1.05;
/// Times at which states are sampled; later times need finer grids for the
/// free particle's growing chirp.
const SAMPLE_TIMES: [f64; 3] = [0.5, 1.25, 2.0];

pub fn run(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut checks = match suite {
        Suite::Uniqueness => uniqueness(opts)?,
        Suite::Residuals => residuals(opts)?,
        Suite::Spectral => spectral(opts, &mut notes)?,
        Suite::ShortTime => short_time(opts, &mut notes)?,
        Suite::Appendix => appendix(opts)?,
        Suite::Oracle => oracle(opts, &mut notes)?,
        Suite::Unitary => unitary(opts)?,
        Suite::Uncertainty => uncertainty(opts, &mut notes)?,
        Suite::Classical => classical()?,
        Suite::Orthonormality => orthonormality(opts)?,
    };
    let elapsed = start.elapsed();
    if let Some(budget) = suite.time_budget() {
        checks.push(Check::new(
            "runtime_s",
            elapsed.as_secs_f64(),
            Bound::AtMost(budget.as_secs_f64()),
        ));
    }
    Ok(SuiteReport {
        suite,
        checks,
        notes,
        elapsed,
    })
}

fn preset(name: &str) -> Scenario {
    Scenario::preset(name, &BTreeMap::new(), 1.0, DEFAULT_INTERVAL).expect("shipped preset")
}

/// The scenario the closed forms are built from.
fn claimed(sc: &Scenario, opts: &VerifyOptions) -> Result<Scenario> {
    if opts.corrupt {
        sc.clone().with_hbar(sc.hbar() * CORRUPTION)
    } else {
        Ok(sc.clone())
    }
}

fn states(sc: &Scenario, variant: Variant, opts: &VerifyOptions) -> Result<StateFamily> {
    let basis = ClassicalBasis::standard(sc, 0.0, &opts.integrator)?;
    let xp = ParticularSolution::solve(sc, 0.0, 0.0, 0.0, sc.interval(), &opts.integrator)?;
    StateFamily::new(variant, &basis, Some(&xp), 0.0)
}

fn kernel_at(sc: &Scenario, variant: Variant, t_a: f64, opts: &VerifyOptions) -> Result<Kernel> {
    let basis = ClassicalBasis::standard(sc, 0.0, &opts.integrator)?;
    let xp = ParticularSolution::solve(sc, t_a, 0.0, 0.0, sc.interval(), &opts.integrator)?;
    Kernel::new(variant, &shift_basis(&basis, t_a)?, Some(&xp))
}

/// Grid `x_p(t) ± width` oscillator lengths.
fn state_grid(fam: &StateFamily, n: usize, t: f64, width: f64, points: usize) -> Result<ComplexGridFunction> {
    let snap = fam.snapshot(t)?;
    let w = width * snap.length();
    fam.psi_grid(n, snap.x_p - w, snap.x_p + w, points, t)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn collect<T: Send>(items: Vec<Result<T>>) -> Result<Vec<T>> {
    items.into_iter().collect()
}

fn uniqueness(opts: &VerifyOptions) -> Result<Vec<Check>> {
    const BASES: [((f64, f64), (f64, f64)); 3] = [((1.0, 0.0), (0.0, 1.0)), ((1.0, 0.3), (-0.5, 2.0)), ((0.8, 0.5), (0.4, -1.2))];
    const SLOPES: [f64; 2] = [0.0, 0.7];
    const PAIRS: [(f64, f64); 3] = [(0.0, 0.9), (0.4, 1.7), (1.1, 2.6)];
    let xs = linspace(-3.0, 3.0, 21);
    let names = ["sho", "caldirola-kanai", "driven-sho", "full-quadratic"];
    let rows = names
        .par_iter()
        .map(|name| -> Result<Check> {
            let sc = claimed(&preset(name), opts)?;
            let variant = sc.system_class().variant();
            let mut worst: f64 = 0.0;
            for (t_a, t_b) in PAIRS {
                let mut tables = Vec::new();
                for (u0, v0) in BASES {
                    let basis = ClassicalBasis::from_initial_data(&sc, 0.0, u0, v0, t_a, &opts.integrator)?;
                    let shifted = shift_basis(&basis, t_a)?;
                    for slope in SLOPES {
                        let xp = ParticularSolution::solve(&sc, t_a, 0.0, slope, sc.interval(), &opts.integrator)?;
                        let slice = Kernel::new(variant, &shifted, Some(&xp))?.at(t_b)?;
                        let table: Vec<Complex64> =
                            xs.iter().flat_map(|&xa| xs.iter().map(move |&xb| (xa, xb))).map(|(xa, xb)| slice.eval(xa, xb)).collect();
                        tables.push(table);
                    }
                }
                for i in 0..tables.len() {
                    for j in i + 1..tables.len() {
                        for (a, b) in tables[i].iter().zip(&tables[j]) {
                            worst = worst.max((a - b).norm() / a.norm());
                        }
                    }
                }
            }
            Ok(Check::new(format!("{name}: max relative spread"), worst, Bound::AtMost(1e-8)))
        })
        .collect();
    collect(rows)
}

fn residuals(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let jobs: Vec<(&str, Variant)> = PRESETS.iter().flat_map(|p| Variant::ALL.map(|v| (*p, v))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(name, variant)| -> Result<Check> {
            let truth = preset(name);
            let fam = states(&claimed(&truth, opts)?, variant, opts)?;
            let mut worst: f64 = 0.0;
            for t in SAMPLE_TIMES {
                let snap = fam.snapshot(t)?;
                let w = 8.0 * snap.length();
                for n in [0usize, 1, 2, 5] {
                    let r = schrodinger_residual(
                        |s| fam.psi_grid(n, snap.x_p - w, snap.x_p + w, 1024, s),
                        &truth,
                        variant,
                        t,
                        1e-4,
                    )?;
                    worst = worst.max(r.l2_residual);
                }
            }
            Ok(Check::new(format!("{name}/{variant}: max L2 residual"), worst, Bound::AtMost(1e-5)))
        })
        .collect();
    collect(rows)
}

fn spectral(opts: &VerifyOptions, notes: &mut Vec<String>) -> Result<Vec<Check>> {
    let t_b = std::f64::consts::FRAC_PI_4;
    let xs = linspace(-4.0, 4.0, 17);
    let mut checks = Vec::new();
    for name in ["sho", "caldirola-kanai"] {
        let truth = preset(name);
        let fam = states(&claimed(&truth, opts)?, Variant::Undriven, opts)?;
        let kernel = kernel_at(&truth, Variant::Undriven, 0.0, opts)?.at(t_b)?;
        let deviation = |n_max: usize| -> Result<f64> {
            let mut worst: f64 = 0.0;
            for &xa in &xs {
                for &xb in &xs {
                    let sum = kernel_spectral_sum(&fam, n_max, xa, xb, 0.0, t_b)?;
                    worst = worst.max((sum - kernel.eval(xa, xb)).norm());
                }
            }
            Ok(worst)
        };
        checks.push(Check::new(format!("{name}: n_max = 60 max abs deviation"), deviation(60)?, Bound::AtMost(1e-6)));
        for n_max in [200, 500] {
            notes.push(format!("{name}: n_max = {n_max} max abs deviation {:.3e}", deviation(n_max)?));
        }
    }
    Ok(checks)
}

fn short_time(opts: &VerifyOptions, notes: &mut Vec<String>) -> Result<Vec<Check>> {
    const TS: [f64; 3] = [1e-2, 1e-3, 1e-4];
    let t_a = 0.3;
    let mut checks = Vec::new();
    for name in ["sho", "caldirola-kanai", "paul-trap", "driven-sho", "full-quadratic"] {
        let truth = preset(name);
        let variant = truth.system_class().variant();
        let kernel = kernel_at(&claimed(&truth, opts)?, variant, t_a, opts)?;
        // boundary phases such as ¼Ṁx², M a x² and b x stay finite as
        // T → 0 and only cancel on the diagonal
        let points = [(0.3, 0.3), (-0.5, -0.5), (0.2, 0.2)];
        let mut devs = Vec::new();
        for t in TS {
            let slice = kernel.at(t_a + t)?;
            let mut worst: f64 = 0.0;
            for (xa, xb) in points {
                let reference = short_time_kernel(&truth, xa, xb, t_a, t_a + t)?;
                worst = worst.max((slice.eval(xa, xb) / reference - 1.0).norm());
            }
            devs.push(worst);
        }
        let slope = fit_slope(&TS, &devs);
        notes.push(format!(
            "{name}: deviations {}",
            devs.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", ")
        ));
        checks.push(Check::new(format!("{name}: log-log slope"), slope, Bound::Within(0.8, 1.2)));
    }
    Ok(checks)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

fn appendix(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let rows = PRESETS
        .par_iter()
        .map(|name| -> Result<Check> {
            let truth = preset(name);
            let variant = truth.system_class().variant();
            let kernel = kernel_at(&claimed(&truth, opts)?, variant, 0.2, opts)?;
            let r = check_appendix_odes(&kernel, &[0.8, 1.4, 2.0], 1e-4)?;
            Ok(Check::new(format!("{name}: max appendix residual"), r.max(), Bound::AtMost(1e-5)))
        })
        .collect();
    collect(rows)
}

fn oracle(opts: &VerifyOptions, notes: &mut Vec<String>) -> Result<Vec<Check>> {
    const N_POINTS: usize = 2048;
    let rows = PRESETS
        .par_iter()
        .map(|name| -> Result<(Vec<Check>, String)> {
            let truth = preset(name);
            let variant = truth.system_class().variant();
            let sc = claimed(&truth, opts)?;
            let fam = states(&sc, variant, opts)?;
            let kernel = kernel_at(&sc, variant, 0.0, opts)?;
            let (t_a, t_b) = (0.0, 1.0);
            let psi0 = state_grid(&fam, 0, t_a, 12.0, N_POINTS)?;
            let (lo, hi) = (psi0.x_min(), psi0.x_max());
            let cn = crank_nicolson_evolve(&truth, variant, &psi0, t_a, t_b, 4096)?;
            let closed = fam.psi_grid(0, lo, hi, N_POINTS, t_b)?;
            let via_kernel = propagate(&kernel, &psi0, t_b)?;

            let centre = 0.5 * (lo + hi) + 1.0;
            let width = fam.snapshot(t_a)?.length();
            let bump = ComplexGridFunction::from_fn(lo, hi, N_POINTS, t_a, |x| {
                let z = (x - centre) / width;
                Complex64::new((-0.5 * z * z).exp() / (std::f64::consts::PI.sqrt() * width).sqrt(), 0.0)
            })?;
            let bump_cn = crank_nicolson_evolve(&truth, variant, &bump, t_a, t_b, 4096)?;
            let bump_kernel = propagate(&kernel, &bump, t_b)?;

            let run = |n| crank_nicolson_evolve(&truth, variant, &psi0, t_a, t_b, n);
            let (c32, c64, c128) = (run(32)?, run(64)?, run(128)?);
            let ratio = c32.l2_distance(&c64)? / c64.l2_distance(&c128)?;
            let drift = (cn.norm_sq() - psi0.norm_sq()).abs() / (t_b - t_a);
            let checks = vec![
                Check::new(format!("{name}: CN vs closed form, ground state"), cn.l2_distance(&closed)?, Bound::AtMost(1e-3)),
                Check::new(format!("{name}: CN vs kernel propagation, ground state"), cn.l2_distance(&via_kernel)?, Bound::AtMost(1e-3)),
                Check::new(format!("{name}: CN vs kernel propagation, displaced Gaussian"), bump_cn.l2_distance(&bump_kernel)?, Bound::AtMost(1e-3)),
                Check::new(format!("{name}: CN error ratio on dt halving"), ratio, Bound::Within(3.6, 4.4)),
                Check::new(format!("{name}: CN norm drift per unit time"), drift, Bound::AtMost(1e-6)),
            ];
            let note = format!("{name}: kernel propagation vs closed form {:.3e}", via_kernel.l2_distance(&closed)?);
            Ok((checks, note))
        })
        .collect::<Vec<_>>();
    let mut checks = Vec::new();
    for r in rows {
        let (c, n) = r?;
        checks.extend(c);
        notes.push(n);
    }
    Ok(checks)
}

fn unitary(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let truth = preset("full-quadratic");
    let sc = claimed(&truth, opts)?;
    let f = states(&sc, Variant::Driven, opts)?;
    let g = states(&sc, Variant::General, opts)?;
    let quad = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        ..QuadOptions::default()
    };
    let mut checks = Vec::new();
    for t in [0.4, 1.1, 2.3, 3.7, 5.2] {
        let mut worst: f64 = 0.0;
        for n in 0..=5 {
            let psi_f = state_grid(&f, n, t, 10.0, 1024)?;
            let (lo, hi) = (psi_f.x_min(), psi_f.x_max());
            // U is built from the true scenario, the states from the claimed one
            let mapped = apply_unitary_u(&truth, &psi_f, t, 0.0, &quad)?;
            worst = worst.max(mapped.max_abs_diff(&g.psi_grid(n, lo, hi, 1024, t)?)?);
        }
        checks.push(Check::new(format!("t = {t}: max |ψ_G − Uψ_F|"), worst, Bound::AtMost(1e-8)));
    }
    Ok(checks)
}

fn uncertainty(opts: &VerifyOptions, notes: &mut Vec<String>) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let levels = [0usize, 1, 2, 4];
    for name in PRESETS {
        let sc = claimed(&preset(name), opts)?;
        let fam = states(&sc, sc.system_class().variant(), opts)?;
        let mut diag: f64 = 0.0;
        let mut off1: f64 = 0.0;
        let mut off2: f64 = 0.0;
        for t in SAMPLE_TIMES {
            let ctx = UncertaintyContext::new(&fam, t)?;
            for &m in &levels {
                let a = uncertainty_diagonal(&ctx, m, Form::Wronskian);
                diag = diag.max((a - uncertainty_diagonal(&ctx, m, Form::Polar)).abs() / a);
                let gap = |offset| -> Result<f64> {
                    let a = uncertainty_offdiag(&ctx, m, offset, Form::Wronskian)?;
                    Ok((a - uncertainty_offdiag(&ctx, m, offset, Form::Polar)?).norm() / a.norm())
                };
                off1 = off1.max(gap(1)?);
                off2 = off2.max(gap(2)?);
            }
        }
        checks.push(Check::new(format!("{name}: diagonal forms, relative gap"), diag, Bound::AtMost(1e-10)));
        checks.push(Check::new(format!("{name}: offset-2 forms, relative gap"), off2, Bound::AtMost(1e-10)));
        checks.push(Check::new(format!("{name}: offset-1 forms, relative gap"), off1, Bound::Report));
    }

    // quadrature against closed forms where the particular solution vanishes
    let truth_cases = ["sho", "free", "caldirola-kanai", "paul-trap"]
        .into_iter()
        .map(|n| (n.to_string(), preset(n), (1.0, 0.0), (0.0, 1.0)))
        .chain(std::iter::once(("sho {cos, 2 sin}".to_string(), preset("sho"), (1.0, 0.0), (0.0, 2.0))))
        .collect::<Vec<_>>();
    let mut discrepancy = Vec::new();
    for (label, truth, u0, v0) in truth_cases {
        // closed forms from the claimed scenario, moments of the true states
        let family = |sc: &Scenario| -> Result<StateFamily> {
            let basis = ClassicalBasis::from_initial_data(sc, 0.0, u0, v0, 0.0, &opts.integrator)?;
            StateFamily::new(Variant::Undriven, &basis, None, 0.0)
        };
        let fam = family(&truth)?;
        let claimed_fam = family(&claimed(&truth, opts)?)?;
        let mut worst: f64 = 0.0;
        for t in SAMPLE_TIMES {
            let ctx = UncertaintyContext::new(&claimed_fam, t)?;
            for &m in &levels {
                let d = Complex64::new(uncertainty_diagonal(&ctx, m, Form::Wronskian), 0.0);
                let q = quadrature_product(&fam, m, 0, t, 2048)?;
                worst = worst.max((d - q).norm() / d.norm());
                let o = uncertainty_offdiag(&ctx, m, 2, Form::Wronskian)?;
                let q2 = quadrature_product(&fam, m, 2, t, 2048)?;
                worst = worst.max((o - q2).norm() / o.norm());
                if m == 0 && t == SAMPLE_TIMES[0] {
                    let o1 = uncertainty_offdiag(&ctx, m, 1, Form::Wronskian)?;
                    let q1 = quadrature_product(&fam, m, 1, t, 2048)?;
                    discrepancy.push(format!(
                        "{label}: offset 1, m = 0, t = {t}: closed {:.6e}{:+.6e}i, quadrature {:.3e}{:+.3e}i",
                        o1.re, o1.im, q1.re, q1.im
                    ));
                }
            }
        }
        checks.push(Check::new(format!("{label}: closed vs quadrature, relative"), worst, Bound::AtMost(1e-5)));
    }
    notes.extend(discrepancy);
    Ok(checks)
}

fn classical() -> Result<Vec<Check>> {
    let opts = IntegratorOptions::default();
    let rows = PRESETS
        .par_iter()
        .map(|name| -> Result<Vec<Check>> {
            let sc = preset(name);
            let basis = ClassicalBasis::standard(&sc, 0.0, &opts)?;
            let rt = rho_theta(&basis)?;
            let omega = basis.omega();
            let h = 1e-3;
            let mut identity: f64 = 0.0;
            let mut theta_res: f64 = 0.0;
            let mut rho_res: f64 = 0.0;
            let (lo, hi) = sc.interval();
            for t in linspace(lo + 0.05, hi - 0.05, 181) {
                let c = sc.evaluate(t)?;
                let (rho, rho_dot) = rt.rho_and_rate(t)?;
                let theta_dot = rt.theta_rate(t)?;
                identity = identity.max((c.mass * rho * rho * theta_dot - omega).abs() / omega.abs());
                let stencil = |f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
                    Ok((-f(t + 2.0 * h)? + 8.0 * f(t + h)? - 8.0 * f(t - h)? + f(t - 2.0 * h)?) / (12.0 * h))
                };
                let theta_dd = stencil(&|s| rt.theta_rate(s))?;
                let rho_dd = stencil(&|s| Ok(rt.rho_and_rate(s)?.1))?;
                let ratio = c.mass_dot / c.mass;
                let terms = [theta_dd, 2.0 * rho_dot / rho * theta_dot, ratio * theta_dot];
                let scale = terms.iter().map(|v| v.abs()).fold(theta_dot.abs(), f64::max);
                theta_res = theta_res.max(terms.iter().sum::<f64>().abs() / scale);
                let terms = [rho_dd, ratio * rho_dot, -rho * theta_dot * theta_dot, c.freq_sq * rho];
                let scale = terms.iter().map(|v| v.abs()).fold(rho, f64::max);
                rho_res = rho_res.max(terms.iter().sum::<f64>().abs() / scale);
            }
            Ok(vec![
                Check::new(format!("{name}: Wronskian drift"), basis.wronskian_drift()?, Bound::AtMost(1e-8)),
                Check::new(format!("{name}: Ω = Mρ²θ̇"), identity, Bound::AtMost(1e-8)),
                Check::new(format!("{name}: θ equation residual"), theta_res, Bound::AtMost(1e-6)),
                Check::new(format!("{name}: ρ equation residual"), rho_res, Bound::AtMost(1e-6)),
            ])
        })
        .collect::<Vec<_>>();
    Ok(collect(rows)?.into_iter().flatten().collect())
}

fn orthonormality(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let jobs: Vec<(&str, Variant)> = PRESETS.iter().flat_map(|p| Variant::ALL.map(|v| (*p, v))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(name, variant)| -> Result<Check> {
            let fam = states(&claimed(&preset(name), opts)?, variant, opts)?;
            let mut worst: f64 = 0.0;
            for t in SAMPLE_TIMES {
                let grids: Vec<ComplexGridFunction> =
                    (0..=10).map(|n| state_grid(&fam, n, t, 14.0, 2048)).collect::<Result<_>>()?;
                for (i, a) in grids.iter().enumerate() {
                    for (j, b) in grids.iter().enumerate() {
                        let target = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((a.inner(b)? - target).norm());
                    }
                }
            }
            Ok(Check::new(format!("{name}/{variant}: max |G − 1|"), worst, Bound::AtMost(1e-6)))
        })
        .collect();
    collect(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!(Suite::parse_list("oracle, unitary").unwrap(), vec![Suite::Oracle, Suite::Unitary]);
        assert!(matches!(Suite::parse_list(" , "), Err(Error::Config(_))));
        assert!(Suite::parse_list("bogus").is_err());
    }

    #[test]
    fn bounds() {
        assert!(Check::new("x", 0.5, Bound::AtMost(1.0)).passed());
        assert!(!Check::new("x", f64::NAN, Bound::AtMost(1.0)).passed());
        assert!(!Check::new("x", 4.5, Bound::Within(3.6, 4.4)).passed());
        assert!(Check::new("x", 1e9, Bound::Report).passed());
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1e-2, 1e-3, 1e-4];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((fit_slope(&x, &y) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn unitary_suite_passes_and_corruption_is_caught() {
        let ok = run(Suite::Unitary, &VerifyOptions::default()).unwrap();
        assert!(ok.passed(), "{:?}", ok.checks);
        let bad = run(
            Suite::Unitary,
            &VerifyOptions {
                corrupt: true,
                ..VerifyOptions::default()
            },
        )
        .unwrap();
        assert!(!bad.passed());
    }
}
