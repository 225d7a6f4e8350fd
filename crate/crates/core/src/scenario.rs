//! Time-dependent coefficient functions of the quadratic Lagrangian
//!
//! `L = ½Mẋ² − ½Mw²x² + Fx + d/dt(M a x²) + d/dt(b x) + f`
//!
//! together with ħ and the working interval. The quantum Hamiltonian built
//! from it carries the derived coefficients `c` and `d` (see
//! [`Scenario::derived_coefficients`]).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Coefficient values at one instant, with the first derivatives the
/// Hamiltonian needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub mass: f64,
    pub mass_dot: f64,
    pub freq_sq: f64,
    pub drive: f64,
    pub a: f64,
    pub a_dot: f64,
    pub b: f64,
    pub b_dot: f64,
    pub f: f64,
}

impl Coefficients {
    /// `c = w² + 4a² − 2ȧ − 2(Ṁ/M)a` and `d = 2ab − ḃ − F`.
    pub fn derived(&self) -> DerivedCoefficients {
        let c = self.freq_sq + 4.0 * self.a * self.a
            - 2.0 * self.a_dot
            - 2.0 * (self.mass_dot / self.mass) * self.a;
        let d = 2.0 * self.a * self.b - self.b_dot - self.drive;
        DerivedCoefficients { c, d }
    }

    fn is_finite(&self) -> bool {
        [
            self.mass,
            self.mass_dot,
            self.freq_sq,
            self.drive,
            self.a,
            self.a_dot,
            self.b,
            self.b_dot,
            self.f,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoefficients {
    pub c: f64,
    pub d: f64,
}

/// Sampled coefficient table. Rows are `(t, M, w², F, a, b, f)` with strictly
/// increasing `t`.
#[derive(Debug, Clone)]
pub struct Table {
    times: Vec<f64>,
    // columns: M, w², F, a, b, f
    values: [Vec<f64>; 6],
    slopes: [Vec<f64>; 6],
}

impl Table {
    pub fn from_rows(rows: &[[f64; 7]]) -> Result<Self> {
        if rows.len() < 3 {
            return Err(Error::Validation(format!(
                "coefficient table needs at least 3 rows, got {}",
                rows.len()
            )));
        }
        let times: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        for (i, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::Validation(format!(
                    "table times must be strictly ascending (row {})",
                    i + 2
                )));
            }
        }
        let mut values: [Vec<f64>; 6] = Default::default();
        for (col, column) in values.iter_mut().enumerate() {
            *column = rows.iter().map(|r| r[col + 1]).collect();
        }
        for (i, r) in rows.iter().enumerate() {
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("non-finite entry in table row {}", i + 1)));
            }
            if r[1] <= 0.0 {
                return Err(Error::Validation(format!(
                    "mass must be positive, got {} at t = {}",
                    r[1], r[0]
                )));
            }
        }
        let slopes = values.clone().map(|col| node_slopes(&times, &col));
        Ok(Table {
            times,
            values,
            slopes,
        })
    }

    /// Reads a CSV with columns `t, M, w², F, a, b, f`. A non-numeric first
    /// row is treated as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::Config(format!("cannot read table {}: {e}", path.display())))?;
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Config(e.to_string()))?;
            if record.len() != 7 {
                return Err(Error::Config(format!(
                    "table row {} has {} columns, expected 7",
                    i + 1,
                    record.len()
                )));
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(|s| s.parse::<f64>()).collect();
            match parsed {
                Ok(v) => rows.push([v[0], v[1], v[2], v[3], v[4], v[5], v[6]]),
                Err(_) if i == 0 => continue,
                Err(e) => {
                    return Err(Error::Config(format!("table row {}: {e}", i + 1)));
                }
            }
        }
        Table::from_rows(&rows)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    fn sample(&self, t: f64) -> Coefficients {
        let n = self.times.len();
        let k = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        // cubic Hermite basis and its derivative
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let d00 = 6.0 * s * s - 6.0 * s;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = -6.0 * s * s + 6.0 * s;
        let d11 = 3.0 * s * s - 2.0 * s;
        let value = |c: usize| {
            let (y0, y1) = (self.values[c][k], self.values[c][k + 1]);
            let (m0, m1) = (self.slopes[c][k], self.slopes[c][k + 1]);
            h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
        };
        let slope = |c: usize| {
            let (y0, y1) = (self.values[c][k], self.values[c][k + 1]);
            let (m0, m1) = (self.slopes[c][k], self.slopes[c][k + 1]);
            (d00 * y0 + d01 * y1) / h + d10 * m0 + d11 * m1
        };
        Coefficients {
            mass: value(0),
            mass_dot: slope(0),
            freq_sq: value(1),
            drive: value(2),
            a: value(3),
            a_dot: slope(3),
            b: value(4),
            b_dot: slope(4),
            f: value(5),
        }
    }
}

/// Second-order three-point derivative estimates at every node: central in the
/// interior, one-sided at the two ends.
fn node_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let three_point = |i0: usize, at: f64| {
        let (x0, x1, x2) = (t[i0], t[i0 + 1], t[i0 + 2]);
        let (y0, y1, y2) = (y[i0], y[i0 + 1], y[i0 + 2]);
        y0 * (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    (0..n)
        .map(|i| match i {
            0 => three_point(0, t[0]),
            i if i == n - 1 => three_point(n - 3, t[n - 1]),
            i => three_point(i - 1, t[i]),
        })
        .collect()
}

/// User-supplied analytic coefficients.
pub type CoefficientFn = dyn Fn(f64) -> Coefficients + Send + Sync;

#[derive(Clone)]
pub enum Model {
    Sho { m0: f64, w0: f64 },
    Free { m0: f64 },
    CaldirolaKanai { m0: f64, gamma: f64, w0: f64 },
    PaulTrap { m0: f64, w0: f64, eps: f64, nu: f64 },
    DrivenSho { m0: f64, w0: f64, f0: f64, nu: f64 },
    FullQuadratic { m0: f64, w0: f64 },
    Tabulated(Arc<Table>),
    Custom(Arc<CoefficientFn>),
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Tabulated(t) => write!(f, "Tabulated({} rows)", t.times.len()),
            Model::Custom(_) => write!(f, "Custom"),
            Model::Sho { m0, w0 } => write!(f, "Sho {{ m0: {m0}, w0: {w0} }}"),
            Model::Free { m0 } => write!(f, "Free {{ m0: {m0} }}"),
            Model::CaldirolaKanai { m0, gamma, w0 } => {
                write!(f, "CaldirolaKanai {{ m0: {m0}, gamma: {gamma}, w0: {w0} }}")
            }
            Model::PaulTrap { m0, w0, eps, nu } => {
                write!(f, "PaulTrap {{ m0: {m0}, w0: {w0}, eps: {eps}, nu: {nu} }}")
            }
            Model::DrivenSho { m0, w0, f0, nu } => {
                write!(f, "DrivenSho {{ m0: {m0}, w0: {w0}, f0: {f0}, nu: {nu} }}")
            }
            Model::FullQuadratic { m0, w0 } => write!(f, "FullQuadratic {{ m0: {m0}, w0: {w0} }}"),
        }
    }
}

/// Which of the three system classes a scenario belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemClass {
    /// `F = a = b = f = 0`
    Undriven,
    /// `a = b = f = 0`
    Driven,
    General,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    model: Model,
    hbar: f64,
    interval: (f64, f64),
    name: String,
}

pub const DEFAULT_INTERVAL: (f64, f64) = (0.0, 10.0);

/// Names of the analytic presets.
pub const PRESETS: [&str; 6] = [
    "sho",
    "free",
    "caldirola-kanai",
    "paul-trap",
    "driven-sho",
    "full-quadratic",
];

impl Scenario {
    pub fn new(model: Model, hbar: f64, interval: (f64, f64), name: impl Into<String>) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Validation(format!("hbar must be positive, got {hbar}")));
        }
        if !(interval.1 > interval.0) || !interval.0.is_finite() || !interval.1.is_finite() {
            return Err(Error::Validation(format!(
                "interval must satisfy t_start < t_end, got [{}, {}]",
                interval.0, interval.1
            )));
        }
        if let Model::Tabulated(table) = &model {
            let (lo, hi) = table.span();
            if interval.0 < lo || interval.1 > hi {
                return Err(Error::Validation(format!(
                    "interval [{}, {}] exceeds table span [{lo}, {hi}]",
                    interval.0, interval.1
                )));
            }
        }
        let scenario = Scenario {
            model,
            hbar,
            interval,
            name: name.into(),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn sho(m0: f64, w0: f64) -> Self {
        Self::new(Model::Sho { m0, w0 }, 1.0, DEFAULT_INTERVAL, "sho").expect("valid sho preset")
    }

    pub fn free(m0: f64) -> Self {
        Self::new(Model::Free { m0 }, 1.0, DEFAULT_INTERVAL, "free").expect("valid free preset")
    }

    pub fn caldirola_kanai(m0: f64, gamma: f64, w0: f64) -> Self {
        Self::new(
            Model::CaldirolaKanai { m0, gamma, w0 },
            1.0,
            DEFAULT_INTERVAL,
            "caldirola-kanai",
        )
        .expect("valid caldirola-kanai preset")
    }

    pub fn paul_trap(m0: f64, w0: f64, eps: f64, nu: f64) -> Self {
        Self::new(Model::PaulTrap { m0, w0, eps, nu }, 1.0, DEFAULT_INTERVAL, "paul-trap")
            .expect("valid paul-trap preset")
    }

    pub fn driven_sho(m0: f64, w0: f64, f0: f64, nu: f64) -> Self {
        Self::new(Model::DrivenSho { m0, w0, f0, nu }, 1.0, DEFAULT_INTERVAL, "driven-sho")
            .expect("valid driven-sho preset")
    }

    pub fn full_quadratic(m0: f64, w0: f64) -> Self {
        Self::new(Model::FullQuadratic { m0, w0 }, 1.0, DEFAULT_INTERVAL, "full-quadratic")
            .expect("valid full-quadratic preset")
    }

    pub fn tabulated(table: Table, hbar: f64) -> Result<Self> {
        let span = table.span();
        Self::new(Model::Tabulated(Arc::new(table)), hbar, span, "tabulated")
    }

    pub fn custom(
        coefficients: impl Fn(f64) -> Coefficients + Send + Sync + 'static,
        hbar: f64,
        interval: (f64, f64),
    ) -> Result<Self> {
        Self::new(Model::Custom(Arc::new(coefficients)), hbar, interval, "custom")
    }

    /// Builds a named preset from a parameter map; missing parameters take
    /// their defaults, unknown ones are rejected.
    pub fn preset(
        name: &str,
        params: &BTreeMap<String, f64>,
        hbar: f64,
        interval: (f64, f64),
    ) -> Result<Self> {
        let allowed: &[(&str, f64)] = match name {
            "sho" => &[("m0", 1.0), ("w0", 1.0)],
            "free" => &[("m0", 1.0)],
            "caldirola-kanai" => &[("m0", 1.0), ("gamma", 0.2), ("w0", 1.0)],
            "paul-trap" => &[("m0", 1.0), ("w0", 1.0), ("eps", 0.3), ("nu", 2.0)],
            "driven-sho" => &[("m0", 1.0), ("w0", 1.0), ("f0", 1.0), ("nu", 2.0)],
            "full-quadratic" => &[("m0", 1.0), ("w0", 1.0)],
            other => {
                return Err(Error::Config(format!(
                    "unknown preset '{other}' (expected one of {}, tabulated)",
                    PRESETS.join(", ")
                )))
            }
        };
        for key in params.keys() {
            if !allowed.iter().any(|(k, _)| k == key) {
                return Err(Error::Config(format!("parameter '{key}' is not valid for preset '{name}'")));
            }
        }
        let get = |key: &str| {
            params
                .get(key)
                .copied()
                .unwrap_or_else(|| allowed.iter().find(|(k, _)| *k == key).unwrap().1)
        };
        let model = match name {
            "sho" => Model::Sho {
                m0: get("m0"),
                w0: get("w0"),
            },
            "free" => Model::Free { m0: get("m0") },
            "caldirola-kanai" => Model::CaldirolaKanai {
                m0: get("m0"),
                gamma: get("gamma"),
                w0: get("w0"),
            },
            "paul-trap" => Model::PaulTrap {
                m0: get("m0"),
                w0: get("w0"),
                eps: get("eps"),
                nu: get("nu"),
            },
            "driven-sho" => Model::DrivenSho {
                m0: get("m0"),
                w0: get("w0"),
                f0: get("f0"),
                nu: get("nu"),
            },
            _ => Model::FullQuadratic {
                m0: get("m0"),
                w0: get("w0"),
            },
        };
        Self::new(model, hbar, interval, name)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        self = Self::new(self.model, hbar, self.interval, self.name)?;
        Ok(self)
    }

    pub fn with_interval(self, start: f64, end: f64) -> Result<Self> {
        Self::new(self.model, self.hbar, (start, end), self.name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn contains(&self, t: f64) -> bool {
        let slack = 1e-9 * (1.0 + (self.interval.1 - self.interval.0).abs());
        t >= self.interval.0 - slack && t <= self.interval.1 + slack
    }

    pub fn system_class(&self) -> SystemClass {
        match &self.model {
            Model::Sho { .. } | Model::Free { .. } | Model::CaldirolaKanai { .. } | Model::PaulTrap { .. } => {
                SystemClass::Undriven
            }
            Model::DrivenSho { .. } => SystemClass::Driven,
            _ => SystemClass::General,
        }
    }

    /// Coefficient values and derivatives at `t`.
    pub fn evaluate(&self, t: f64) -> Result<Coefficients> {
        if !self.contains(t) {
            return Err(Error::Domain {
                t,
                start: self.interval.0,
                end: self.interval.1,
            });
        }
        let c = self.at(t);
        if !c.is_finite() {
            return Err(Error::Validation(format!("non-finite coefficient at t = {t}")));
        }
        if c.mass <= 0.0 {
            return Err(Error::Validation(format!("mass {} is not positive at t = {t}", c.mass)));
        }
        Ok(c)
    }

    pub fn derived_coefficients(&self, t: f64) -> Result<DerivedCoefficients> {
        Ok(self.evaluate(t)?.derived())
    }

    /// Unchecked evaluation for inner loops; callers stay inside the interval.
    pub(crate) fn at(&self, t: f64) -> Coefficients {
        let zero = Coefficients {
            mass: 1.0,
            mass_dot: 0.0,
            freq_sq: 0.0,
            drive: 0.0,
            a: 0.0,
            a_dot: 0.0,
            b: 0.0,
            b_dot: 0.0,
            f: 0.0,
        };
        match &self.model {
            Model::Sho { m0, w0 } => Coefficients {
                mass: *m0,
                freq_sq: w0 * w0,
                ..zero
            },
            Model::Free { m0 } => Coefficients { mass: *m0, ..zero },
            Model::CaldirolaKanai { m0, gamma, w0 } => {
                let m = m0 * (gamma * t).exp();
                Coefficients {
                    mass: m,
                    mass_dot: gamma * m,
                    freq_sq: w0 * w0,
                    ..zero
                }
            }
            Model::PaulTrap { m0, w0, eps, nu } => Coefficients {
                mass: *m0,
                freq_sq: w0 * w0 * (1.0 + eps * (nu * t).cos()),
                ..zero
            },
            Model::DrivenSho { m0, w0, f0, nu } => Coefficients {
                mass: *m0,
                freq_sq: w0 * w0,
                drive: f0 * (nu * t).sin(),
                ..zero
            },
            Model::FullQuadratic { m0, w0 } => Coefficients {
                mass: m0 * (1.0 + 0.25 * (0.8 * t).sin()),
                mass_dot: m0 * 0.2 * (0.8 * t).cos(),
                freq_sq: w0 * w0 * (1.0 + 0.3 * (1.3 * t).cos()),
                drive: 0.6 * (0.9 * t).cos(),
                a: 0.2 * (0.5 * t).cos(),
                a_dot: -0.1 * (0.5 * t).sin(),
                b: 0.4 * (0.7 * t).sin(),
                b_dot: 0.28 * (0.7 * t).cos(),
                f: 0.3 * (1.1 * t).cos(),
            },
            Model::Tabulated(table) => table.sample(t),
            Model::Custom(func) => func(t),
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.interval;
        let samples = 2001;
        for i in 0..samples {
            let t = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
            self.evaluate(t)?;
        }
        Ok(())
    }
}


/// Which Lagrangian (and hence kernel and state family) is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Variant {
    /// Mass and frequency only.
    #[serde(rename = "S")]
    Undriven,
    /// Adds the drive `F x`.
    #[serde(rename = "F")]
    Driven,
    /// Adds the total-derivative terms and `f`.
    #[serde(rename = "G")]
    General,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Undriven, Variant::Driven, Variant::General];

    pub fn symbol(self) -> &'static str {
        match self {
            Variant::Undriven => "S",
            Variant::Driven => "F",
            Variant::General => "G",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" | "s" => Ok(Variant::Undriven),
            "F" | "f" => Ok(Variant::Driven),
            "G" | "g" => Ok(Variant::General),
            other => Err(Error::Config(format!("unknown variant {other:?}; expected S, F or G"))),
        }
    }
}

impl SystemClass {
    /// The least general variant that describes this system exactly.
    pub fn variant(self) -> Variant {
        match self {
            SystemClass::Undriven => Variant::Undriven,
            SystemClass::Driven => Variant::Driven,
            SystemClass::General => Variant::General,
        }
    }
}
