//! Dormand–Prince 5(4) integrator with continuous (dense) output.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size; keeps the dense interpolant accurate.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.05,
            max_steps: 1_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone)]
struct Step<const N: usize> {
    t: f64,
    h: f64,
    coeffs: [[f64; N]; 5],
}

/// One-directional dense trajectory starting at `t0`.
#[derive(Debug, Clone)]
struct Branch<const N: usize> {
    steps: Vec<Step<N>>,
}

impl<const N: usize> Branch<N> {
    fn eval(&self, t: f64, forward: bool) -> [f64; N] {
        // steps are ordered away from t0; locate the one containing t
        let idx = if forward {
            self.steps.partition_point(|s| s.t + s.h < t)
        } else {
            self.steps.partition_point(|s| s.t + s.h > t)
        }
        .min(self.steps.len() - 1);
        let s = &self.steps[idx];
        let theta = (t - s.t) / s.h;
        let theta1 = 1.0 - theta;
        let r = &s.coeffs;
        std::array::from_fn(|i| {
            r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])))
        })
    }
}

/// Solution of `y' = f(t, y)` evaluable anywhere in `[start, end]`.
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    t0: f64,
    y0: [f64; N],
    start: f64,
    end: f64,
    forward: Option<Branch<N>>,
    backward: Option<Branch<N>>,
}

impl<const N: usize> DenseSolution<N> {
    pub fn interval(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    pub fn initial_time(&self) -> f64 {
        self.t0
    }

    pub fn eval(&self, t: f64) -> Result<[f64; N]> {
        let slack = 1e-9 * (1.0 + (self.end - self.start).abs());
        if t < self.start - slack || t > self.end + slack || !t.is_finite() {
            return Err(Error::Domain {
                t,
                start: self.start,
                end: self.end,
            });
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> [f64; N] {
        if t == self.t0 {
            return self.y0;
        }
        if t > self.t0 {
            match &self.forward {
                Some(b) => b.eval(t, true),
                None => self.y0,
            }
        } else {
            match &self.backward {
                Some(b) => b.eval(t, false),
                None => self.y0,
            }
        }
    }
}

/// Integrates from `t0` both forward to `end` and backward to `start`.
pub fn solve<const N: usize, F>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    start: f64,
    end: f64,
    opts: &IntegratorOptions,
) -> Result<DenseSolution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !(start <= t0 && t0 <= end) {
        return Err(Error::Domain { t: t0, start, end });
    }
    let forward = if end > t0 {
        Some(integrate_branch(&rhs, t0, y0, end, opts)?)
    } else {
        None
    };
    let backward = if start < t0 {
        Some(integrate_branch(&rhs, t0, y0, start, opts)?)
    } else {
        None
    };
    Ok(DenseSolution {
        t0,
        y0,
        start,
        end,
        forward,
        backward,
    })
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn integrate_branch<const N: usize, F>(
    rhs: &F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Branch<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let dir = (t_end - t0).signum();
    let span = (t_end - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = initial_step(&y, &k1, opts).min(span).min(opts.max_step);
    let mut steps = Vec::new();
    let mut rejected_in_row = 0usize;

    for _ in 0..opts.max_steps {
        let remaining = (t_end - t) * dir;
        if remaining <= 0.0 {
            return Ok(Branch { steps });
        }
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        let hs = h * dir;
        let k2 = rhs(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(
            t + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + hs,
            &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t_new = if last { t_end } else { t + hs };
        let k7 = rhs(t_new, &y_new);

        let mut err_sq = 0.0;
        for i in 0..N {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale).powi(2);
        }
        let err = (err_sq / N as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Integrator {
                t,
                reason: "non-finite error estimate".into(),
            });
        }

        if err <= 1.0 {
            let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| hs * k1[i] - ydiff[i]);
            let r4: [f64; N] = std::array::from_fn(|i| ydiff[i] - hs * k7[i] - bspl[i]);
            let r5: [f64; N] = std::array::from_fn(|i| {
                hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            steps.push(Step {
                t,
                h: t_new - t,
                coeffs: [y, ydiff, bspl, r4, r5],
            });
            t = t_new;
            y = y_new;
            k1 = k7;
            rejected_in_row = 0;
            if last {
                return Ok(Branch { steps });
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(opts.max_step);
        } else {
            rejected_in_row += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h < 1e-14 * (1.0 + t.abs()) || rejected_in_row > 100 {
                return Err(Error::Integrator {
                    t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
        }
    }
    Err(Error::Integrator {
        t,
        reason: format!("exceeded {} steps", opts.max_steps),
    })
}

fn initial_step<const N: usize>(y: &[f64; N], f: &[f64; N], opts: &IntegratorOptions) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (f[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.clamp(1e-8, opts.max_step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_both_directions() {
        let sol = solve(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            1.0,
            [1f64.cos(), -1f64.sin()],
            -3.0,
            8.0,
            &IntegratorOptions::default(),
        )
        .unwrap();
        for i in 0..=220 {
            let t = -3.0 + i as f64 * 0.05;
            let y = sol.eval(t).unwrap();
            assert!((y[0] - t.cos()).abs() < 1e-9, "t = {t}: {}", y[0] - t.cos());
            assert!((y[1] + t.sin()).abs() < 1e-9);
        }
        assert!(sol.eval(8.5).is_err());
    }

    #[test]
    fn dense_output_between_steps() {
        let sol = solve(
            |_, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            0.0,
            2.0,
            &IntegratorOptions::default(),
        )
        .unwrap();
        for i in 0..=997 {
            let t = i as f64 * 2.0 / 997.0;
            assert!((sol.eval(t).unwrap()[0] - t.exp()).abs() < 1e-9 * t.exp());
        }
    }
}
