//! Adaptive Gauss–Kronrod (7/15-point) quadrature with bisection.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_depth: 40,
        }
    }
}

// Nodes and weights as tabulated, beyond f64 precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel: `(estimate, error estimate)`.
fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// `∫_a^b f(t) dt`. Accepts `b < a` (sign flips) and `a == b` (zero).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, opts).map(|v| -v);
    }
    let (whole, err) = kronrod(&f, a, b);
    let tol = opts.abs_tol.max(opts.rel_tol * whole.abs());
    let mut worst = 0.0f64;
    let value = refine(&f, a, b, whole, err, tol, opts.max_depth, &mut worst);
    if worst > 0.0 {
        return Err(Error::Quadrature { a, b, estimate: worst });
    }
    if !value.is_finite() {
        return Err(Error::Quadrature {
            a,
            b,
            estimate: f64::INFINITY,
        });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    estimate: f64,
    err: f64,
    tol: f64,
    depth: u32,
    unconverged: &mut f64,
) -> f64 {
    if err <= tol {
        return estimate;
    }
    if depth == 0 {
        *unconverged = unconverged.max(err);
        return estimate;
    }
    let mid = 0.5 * (a + b);
    let (left, el) = kronrod(f, a, mid);
    let (right, er) = kronrod(f, mid, b);
    if (el + er) <= tol {
        return left + right;
    }
    let half_tol = 0.5 * tol;
    refine(f, a, mid, left, el, half_tol, depth - 1, unconverged)
        + refine(f, mid, b, right, er, half_tol, depth - 1, unconverged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_oscillatory() {
        let o = QuadOptions::default();
        let v = integrate(|x| x * x * x, 0.0, 2.0, &o).unwrap();
        assert!((v - 4.0).abs() < 1e-13);
        let v = integrate(|x| (20.0 * x).sin() * x, 0.0, 3.0, &o).unwrap();
        let exact = ((60.0f64).sin() - 60.0 * (60.0f64).cos()) / 400.0;
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn reversed_and_empty() {
        let o = QuadOptions::default();
        assert_eq!(integrate(|x| x, 1.0, 1.0, &o).unwrap(), 0.0);
        let v = integrate(|x| x.exp(), 1.0, 0.0, &o).unwrap();
        assert!((v + (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn nonconvergence_reported() {
        let o = QuadOptions {
            max_depth: 3,
            ..Default::default()
        };
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &o);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
