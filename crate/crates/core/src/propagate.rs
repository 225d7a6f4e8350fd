//! Applying a kernel to a sampled wave function,
//! `ψ(x_b, t_b) = ∫ K(x_b, t_b; x_a, t_a) ψ(x_a, t_a) dx_a`.
//!
//! The quadratic exponent is split as
//! `A x_a² + B x_b² + h x_a x_b = (A + h/2) x_a² + (B + h/2) x_b² − (h/2)(x_b − x_a)²`,
//! which turns the integral into a convolution with the chirp `e^{iλz²}`,
//! `λ = −h/2ħ`. The chirp's Fourier transform is known in closed form, so
//! the convolution is exact for band-limited input however short the time
//! step. [`propagate_direct`] is a plain trapezoid sum kept as a cross-check.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::ComplexGridFunction;
use crate::kernel::{Kernel, KernelCoefficients};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Edge mass above which a truncation warning is logged.
pub const EDGE_MASS_WARN: f64 = 1e-8;
/// Fraction of the grid on each side counted as edge.
pub const EDGE_FRACTION: f64 = 0.05;
/// Spectral energy allowed in the top tenth of the band.
const BAND_EDGE_LIMIT: f64 = 1e-10;
/// Spectral energy treated as absent when sizing the padding.
const NEGLIGIBLE_SPECTRUM: f64 = 1e-24;
const MAX_FFT_LEN: usize = 1 << 24;

fn check_time(kernel: &Kernel, psi_in: &ComplexGridFunction, t_b: f64) -> Result<()> {
    let t_a = kernel.t_a();
    if (psi_in.t() - t_a).abs() > 1e-12 * (1.0 + t_a.abs()) {
        return Err(Error::Precondition(format!(
            "input is labelled t = {}, kernel starts at t_a = {t_a}",
            psi_in.t()
        )));
    }
    if !(t_b > t_a) {
        return Err(Error::Precondition(format!("t_b = {t_b} must exceed t_a = {t_a}")));
    }
    Ok(())
}

fn warn_edges(psi_in: &ComplexGridFunction) -> f64 {
    let edge = psi_in.edge_mass(EDGE_FRACTION);
    if edge > EDGE_MASS_WARN {
        log::warn!("propagation input has edge mass {edge:e}; truncation error likely");
    }
    edge
}

fn is_zero(psi_in: &ComplexGridFunction) -> bool {
    psi_in.values().iter().all(|v| v.norm_sqr() == 0.0)
}

/// Propagate `psi_in` (labelled `t_a`) to `t_b` on the same grid.
pub fn propagate(kernel: &Kernel, psi_in: &ComplexGridFunction, t_b: f64) -> Result<ComplexGridFunction> {
    check_time(kernel, psi_in, t_b)?;
    warn_edges(psi_in);
    if is_zero(psi_in) {
        return Ok(psi_in.clone().with_time(t_b));
    }
    let c = kernel.coefficients(t_b)?;
    propagate_with(&c, psi_in)
}

/// FFT route for given kernel coefficients.
pub fn propagate_with(c: &KernelCoefficients, psi_in: &ComplexGridFunction) -> Result<ComplexGridFunction> {
    let hbar = c.hbar;
    let n = psi_in.n_points();
    let dx = psi_in.dx();
    let lambda = -c.h / (2.0 * hbar);
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::Precondition(format!("degenerate cross coefficient h = {}", c.h)));
    }
    let g: Vec<Complex64> = (0..n)
        .map(|j| {
            let x = psi_in.x(j);
            psi_in.values()[j] * (I * ((c.a + 0.5 * c.h) * x * x + c.alpha * x) / hbar).exp()
        })
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let k_eff = effective_bandwidth(&g, dx, &mut planner)?;
    let shift = k_eff / (2.0 * lambda.abs());
    let pad = (1.5 * shift / dx).ceil() as usize;
    let len = (n + pad).max(2 * n).next_power_of_two();
    if len > MAX_FFT_LEN {
        return Err(Error::UnderResolved(format!(
            "chirp spreads by {shift:.3e}; FFT length {len} exceeds {MAX_FFT_LEN}"
        )));
    }

    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..n].copy_from_slice(&g);
    planner.plan_fft_forward(len).process(&mut buf);
    let amp = (I * PI / lambda).sqrt();
    let dk = 2.0 * PI / (len as f64 * dx);
    for (m, z) in buf.iter_mut().enumerate() {
        let k = wavenumber(m, len, dk);
        *z *= amp * (-I * k * k / (4.0 * lambda)).exp();
    }
    planner.plan_fft_inverse(len).process(&mut buf);

    let inv = 1.0 / len as f64;
    let out = (0..n)
        .map(|j| {
            let x = psi_in.x(j);
            let outer = (I * (Complex64::new((c.b + 0.5 * c.h) * x * x + c.beta * x, 0.0) + c.s) / hbar).exp();
            outer * buf[j] * inv
        })
        .collect();
    Ok(psi_in.with_values(out)?.with_time(c.t_b))
}

fn wavenumber(m: usize, len: usize, dk: f64) -> f64 {
    if m < len / 2 {
        m as f64 * dk
    } else {
        (m as f64 - len as f64) * dk
    }
}

/// Smallest `|k|` beyond which the spectrum of `g` is negligible; fails if
/// the top of the band is populated.
fn effective_bandwidth(g: &[Complex64], dx: f64, planner: &mut FftPlanner<f64>) -> Result<f64> {
    let len = (2 * g.len()).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..g.len()].copy_from_slice(g);
    planner.plan_fft_forward(len).process(&mut buf);
    let dk = 2.0 * PI / (len as f64 * dx);
    let k_nyq = PI / dx;
    let mut power: Vec<(f64, f64)> = buf
        .iter()
        .enumerate()
        .map(|(m, z)| (wavenumber(m, len, dk).abs(), z.norm_sqr()))
        .collect();
    let total: f64 = power.iter().map(|p| p.1).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let top: f64 = power.iter().filter(|p| p.0 > 0.9 * k_nyq).map(|p| p.1).sum();
    if top > BAND_EDGE_LIMIT * total {
        return Err(Error::UnderResolved(format!(
            "input carries {:.2e} of its spectral energy near the Nyquist wavenumber; refine the grid",
            top / total
        )));
    }
    power.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut tail = 0.0;
    for (k, p) in power {
        tail += p;
        if tail > NEGLIGIBLE_SPECTRUM * total {
            return Ok(k);
        }
    }
    Ok(0.0)
}

/// Trapezoid quadrature of the kernel against the samples, one output
/// point per task. Accurate only while the kernel's oscillation is resolved
/// by the grid, `|h| · extent · dx ≪ ħ`.
pub fn propagate_direct(kernel: &Kernel, psi_in: &ComplexGridFunction, t_b: f64) -> Result<ComplexGridFunction> {
    check_time(kernel, psi_in, t_b)?;
    warn_edges(psi_in);
    let slice = kernel.at(t_b)?;
    let n = psi_in.n_points();
    let dx = psi_in.dx();
    let xs = psi_in.xs();
    let vals = psi_in.values();
    let out: Vec<Complex64> = xs
        .par_iter()
        .map(|&xb| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, (&xa, v)) in xs.iter().zip(vals).enumerate() {
                let w = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
                acc += slice.eval(xa, xb) * v * w;
            }
            acc * dx
        })
        .collect();
    Ok(psi_in.with_values(out)?.with_time(t_b))
}
