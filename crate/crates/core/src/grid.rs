use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex samples on a uniform grid `x_min = x_0 < … < x_{n−1} = x_max`,
/// labelled with a time.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGridFunction {
    x_min: f64,
    x_max: f64,
    values: Vec<Complex64>,
    t: f64,
}

pub const MIN_POINTS: usize = 16;

impl ComplexGridFunction {
    pub fn new(x_min: f64, x_max: f64, values: Vec<Complex64>, t: f64) -> Result<Self> {
        if values.len() < MIN_POINTS {
            return Err(Error::Precondition(format!(
                "grid needs at least {MIN_POINTS} points, got {}",
                values.len()
            )));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Precondition(format!("invalid grid extent [{x_min}, {x_max}]")));
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Precondition(format!("non-finite grid value at index {i}")));
        }
        Ok(ComplexGridFunction { x_min, x_max, values, t })
    }

    pub fn zeros(x_min: f64, x_max: f64, n_points: usize, t: f64) -> Result<Self> {
        Self::new(x_min, x_max, vec![Complex64::new(0.0, 0.0); n_points], t)
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(x_min: f64, x_max: f64, n_points: usize, t: f64, f: F) -> Result<Self> {
        let dx = (x_max - x_min) / (n_points.max(2) - 1) as f64;
        let values = (0..n_points).map(|i| f(x_min + i as f64 * dx)).collect();
        Self::new(x_min, x_max, values, t)
    }

    pub fn try_from_fn<F: Fn(f64) -> Result<Complex64>>(
        x_min: f64,
        x_max: f64,
        n_points: usize,
        t: f64,
        f: F,
    ) -> Result<Self> {
        let dx = (x_max - x_min) / (n_points.max(2) - 1) as f64;
        let values = (0..n_points)
            .map(|i| f(x_min + i as f64 * dx))
            .collect::<Result<Vec<_>>>()?;
        Self::new(x_min, x_max, values, t)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.values.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.values.len() {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.x(i)).collect()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Same grid and time, new values.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::Precondition("value count does not match the grid".into()));
        }
        Self::new(self.x_min, self.x_max, values, self.t)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn aligned(&self, other: &Self) -> bool {
        self.values.len() == other.values.len() && self.x_min == other.x_min && self.x_max == other.x_max
    }

    pub(crate) fn require_aligned(&self, other: &Self) -> Result<()> {
        if self.aligned(other) {
            Ok(())
        } else {
            Err(Error::Precondition("grids are not aligned".into()))
        }
    }

    /// Trapezoidal `∫ conj(self) · other dx`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.require_aligned(other)?;
        let n = self.values.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            acc += a.conj() * b * w;
        }
        Ok(acc * self.dx())
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self).map(|z| z.re).unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `‖self − other‖₂`
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        self.require_aligned(other)?;
        let diff = self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())?;
        Ok(diff.norm())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.require_aligned(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Fourth-order central first derivative; samples beyond the grid are
    /// taken as zero.
    pub fn derivative(&self) -> Vec<Complex64> {
        let h = self.dx();
        let f = |i: isize| self.sample(i);
        (0..self.values.len() as isize)
            .map(|j| (-f(j + 2) + 8.0 * f(j + 1) - 8.0 * f(j - 1) + f(j - 2)) / (12.0 * h))
            .collect()
    }

    /// Fourth-order central second derivative, zero outside the grid.
    pub fn second_derivative(&self) -> Vec<Complex64> {
        let h2 = self.dx() * self.dx();
        let f = |i: isize| self.sample(i);
        (0..self.values.len() as isize)
            .map(|j| (-f(j + 2) + 16.0 * f(j + 1) - 30.0 * f(j) + 16.0 * f(j - 1) - f(j - 2)) / (12.0 * h2))
            .collect()
    }

    fn sample(&self, i: isize) -> Complex64 {
        if i < 0 || i as usize >= self.values.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[i as usize]
        }
    }

    /// Fraction of `∫|ψ|²` lying in the outer `fraction` of the grid on
    /// each side.
    pub fn edge_mass(&self, fraction: f64) -> f64 {
        let n = self.values.len();
        let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n / 2);
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let edge: f64 = self.values[..k]
            .iter()
            .chain(&self.values[n - k..])
            .map(|v| v.norm_sqr())
            .sum();
        edge / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_norm() {
        let g = ComplexGridFunction::from_fn(-8.0, 8.0, 512, 0.0, |x| {
            Complex64::new((-x * x / 2.0).exp() / std::f64::consts::PI.powf(0.25), 0.0)
        })
        .unwrap();
        assert!((g.norm_sq() - 1.0).abs() < 1e-12);
        assert!(g.edge_mass(0.05) < 1e-20);
        assert_eq!(g.x(511), 8.0);
    }

    #[test]
    fn rejects_small_or_bad_grids() {
        assert!(ComplexGridFunction::zeros(0.0, 1.0, 15, 0.0).is_err());
        assert!(ComplexGridFunction::zeros(1.0, 1.0, 32, 0.0).is_err());
        let mut v = vec![Complex64::new(0.0, 0.0); 32];
        v[3] = Complex64::new(f64::NAN, 0.0);
        assert!(ComplexGridFunction::new(0.0, 1.0, v, 0.0).is_err());
    }

    #[test]
    fn misaligned_grids_rejected() {
        let a = ComplexGridFunction::zeros(0.0, 1.0, 32, 0.0).unwrap();
        let b = ComplexGridFunction::zeros(0.0, 2.0, 32, 0.0).unwrap();
        assert!(a.inner(&b).is_err());
    }

    #[test]
    fn stencils_on_a_gaussian() {
        let g = ComplexGridFunction::from_fn(-10.0, 10.0, 2001, 0.0, |x| Complex64::new((-x * x / 2.0).exp(), 0.0)).unwrap();
        let d1 = g.derivative();
        let d2 = g.second_derivative();
        for i in (0..2001).step_by(97) {
            let x = g.x(i);
            let e = (-x * x / 2.0).exp();
            assert!((d1[i].re + x * e).abs() < 1e-8);
            assert!((d2[i].re - (x * x - 1.0) * e).abs() < 1e-8);
        }
    }
}
