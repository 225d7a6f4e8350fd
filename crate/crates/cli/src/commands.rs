use std::path::{Path, PathBuf};

use num_complex::Complex64;
use quadprop::classical::{shift_basis, ClassicalBasis, ParticularSolution};
use quadprop::kernel::Kernel;
use quadprop::observables::uncertainty_report;
use quadprop::states::StateFamily;
use quadprop::verify::{self, Bound, SuiteReport, VerifyOptions};
use quadprop::{Error, Result};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::export::{fmt_f64, Cell, CsvFile};

/// What a command produced.
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Set when a verification check failed.
    pub failed: bool,
}

impl Outcome {
    fn ok(file: PathBuf) -> Self {
        Outcome {
            files: vec![file],
            failed: false,
        }
    }
}

struct Classical {
    basis: ClassicalBasis,
    particular: ParticularSolution,
}

fn classical(cfg: &RunConfig) -> Result<Classical> {
    let sc = &cfg.scenario;
    let t_a = cfg.run.t_a;
    let basis = match (cfg.run.u_init, cfg.run.v_init) {
        (Some(u), Some(v)) => {
            ClassicalBasis::from_initial_data(sc, t_a, (u[0], u[1]), (v[0], v[1]), t_a, &cfg.integrator)?
        }
        _ => ClassicalBasis::standard(sc, t_a, &cfg.integrator)?,
    };
    let particular =
        ParticularSolution::solve(sc, t_a, 0.0, cfg.run.particular_slope, sc.interval(), &cfg.integrator)?;
    Ok(Classical { basis, particular })
}

fn family(cfg: &RunConfig, cl: &Classical) -> Result<StateFamily> {
    StateFamily::new(cfg.variant(), &cl.basis, Some(&cl.particular), cfg.run.t_a)
}

/// `t, u, u̇, v, v̇, v_s, x_p, ẋ_p, Ω drift`, where the drift is relative to
/// `Ω(t_a)`.
pub fn solve(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let cl = classical(cfg)?;
    let shifted = shift_basis(&cl.basis, cfg.run.t_a)?;
    let omega = cl.basis.omega();
    let rows = cfg
        .times()
        .into_par_iter()
        .map(|t| {
            let (u, ud) = cl.basis.u().state(t)?;
            let (v, vd) = cl.basis.v().state(t)?;
            let vs = shifted.v_s().value(t)?;
            let (x, xd) = cl.particular.state(t)?;
            let drift = ((cl.basis.wronskian_at(t)? - omega) / omega).abs();
            Ok([t, u, ud, v, vd, vs, x, xd, drift])
        })
        .collect::<Result<Vec<_>>>()?;
    let max_drift = rows.iter().map(|r| r[8]).fold(0.0, f64::max);
    log::info!("solve: {} samples, max Wronskian drift {max_drift:e}", rows.len());

    let path = out.join("solve.csv");
    let mut f = CsvFile::create(&path, &["t", "u", "u_dot", "v", "v_dot", "v_s", "x_p", "x_p_dot", "omega_drift"])?;
    for r in rows {
        f.row(r.into_iter().map(Cell::F).collect())?;
    }
    f.finish()?;
    Ok(Outcome::ok(path))
}

/// `K(x_b, t_b; x_a, t_a)` over the grid squared, `x_a` outermost.
pub fn kernel(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let t_b = cfg.t_b()?;
    let cl = classical(cfg)?;
    let shifted = shift_basis(&cl.basis, cfg.run.t_a)?;
    let slice = Kernel::new(cfg.variant(), &shifted, Some(&cl.particular))?.at(t_b)?;
    let xs = cfg.grid.points();
    let blocks: Vec<Vec<Complex64>> = xs
        .par_iter()
        .map(|&xa| xs.iter().map(|&xb| slice.eval(xa, xb)).collect())
        .collect();

    let path = out.join("kernel.csv");
    let mut f = CsvFile::create(&path, &["x_a", "x_b", "re_k", "im_k"])?;
    for (&xa, block) in xs.iter().zip(&blocks) {
        for (&xb, k) in xs.iter().zip(block) {
            f.row(vec![xa.into(), xb.into(), k.re.into(), k.im.into()])?;
        }
    }
    f.finish()?;
    Ok(Outcome::ok(path))
}

/// `ψ_n(x, t)` for every configured time, time outermost.
pub fn state(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let cl = classical(cfg)?;
    let fam = family(cfg, &cl)?;
    let g = cfg.grid;
    let n = cfg.run.n;
    let times = cfg.times();
    let blocks = times
        .par_iter()
        .map(|&t| fam.psi_grid(n, g.x_min, g.x_max, g.n_points, t))
        .collect::<Result<Vec<_>>>()?;

    let path = out.join("state.csv");
    let mut f = CsvFile::create(&path, &["t", "x", "re_psi", "im_psi", "abs_psi_sq"])?;
    for (&t, psi) in times.iter().zip(&blocks) {
        for (i, v) in psi.values().iter().enumerate() {
            f.row(vec![t.into(), psi.x(i).into(), v.re.into(), v.im.into(), v.norm_sqr().into()])?;
        }
    }
    f.finish()?;
    Ok(Outcome::ok(path))
}

pub fn uncertainty(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let cl = classical(cfg)?;
    let fam = family(cfg, &cl)?;
    let rows = uncertainty_report(&fam, &cfg.times(), &cfg.run.levels, &cfg.run.offsets, cfg.grid.n_points)?;

    let path = out.join("uncertainty.csv");
    let mut f = CsvFile::create(
        &path,
        &["t", "m", "offset", "re_closed", "im_closed", "re_quad", "im_quad", "rel_err"],
    )?;
    for r in rows {
        f.row(vec![
            r.t.into(),
            r.m.into(),
            r.offset.into(),
            r.closed.re.into(),
            r.closed.im.into(),
            r.quad.re.into(),
            r.quad.im.into(),
            r.rel_err.into(),
        ])?;
    }
    f.finish()?;
    Ok(Outcome::ok(path))
}

fn bound_cell(x: Option<f64>) -> Cell {
    match x {
        Some(v) => Cell::F(v),
        None => Cell::S(String::new()),
    }
}

fn describe(report: &SuiteReport) -> String {
    let mut text = format!(
        "{} {} ({:.1} s)\n",
        if report.passed() { "PASS" } else { "FAIL" },
        report.suite,
        report.elapsed.as_secs_f64()
    );
    for c in &report.checks {
        let bound = match c.bound {
            Bound::AtMost(hi) => format!("<= {}", fmt_f64(hi)),
            Bound::Within(lo, hi) => format!("in [{}, {}]", fmt_f64(lo), fmt_f64(hi)),
            Bound::Report => "reported".to_owned(),
        };
        let mark = if c.passed() { "ok  " } else { "FAIL" };
        text.push_str(&format!("  {mark} {} = {:e} ({bound})\n", c.name, c.value));
    }
    for note in &report.notes {
        text.push_str(&format!("  note: {note}\n"));
    }
    text
}

/// Runs the selected suites and writes `verify.csv` (one row per check) and
/// `verify.txt`. Wall-clock checks appear only in the text report so that
/// the CSV is reproducible.
pub fn verify(cfg: &RunConfig, out: &Path, suites: Option<&str>) -> Result<Outcome> {
    let suites = cfg.suites(suites)?;
    let opts = VerifyOptions {
        corrupt: cfg.verify.corrupt,
        ..VerifyOptions::default()
    };
    let mut reports = Vec::new();
    for suite in suites {
        let report = verify::run(suite, &opts)?;
        print!("{}", describe(&report));
        reports.push(report);
    }

    let csv_path = out.join("verify.csv");
    let mut f = CsvFile::create(&csv_path, &["suite", "check", "value", "lower", "upper", "passed"])?;
    for r in &reports {
        for c in r.checks.iter().filter(|c| c.name != "runtime_s") {
            let (lo, hi) = c.bound.limits();
            f.row(vec![
                r.suite.name().into(),
                c.name.as_str().into(),
                c.value.into(),
                bound_cell(lo),
                bound_cell(hi),
                if c.passed() { "true" } else { "false" }.into(),
            ])?;
        }
    }
    f.finish()?;

    let txt_path = out.join("verify.txt");
    let text: String = reports.iter().map(describe).collect();
    std::fs::write(&txt_path, text).map_err(|e| Error::Io(format!("{}: {e}", txt_path.display())))?;

    let failed = reports.iter().filter(|r| !r.passed()).count();
    println!("{} of {} suites passed", reports.len() - failed, reports.len());
    Ok(Outcome {
        files: vec![csv_path, txt_path],
        failed: failed > 0,
    })
}
