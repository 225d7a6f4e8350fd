//! Run configuration, read from TOML.
//!
//! ```toml
//! [scenario]                 # or: scenario_file = "sho.toml"
//! preset = "sho"
//! hbar = 1.0
//! interval = [0.0, 10.0]
//! params = { w0 = 1.0 }
//!
//! [run]
//! t_a = 0.0
//! t_b = 1.0
//!
//! [grid]
//! x_min = -6.0
//! x_max = 6.0
//! n_points = 201
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use quadprop::ode::IntegratorOptions;
use quadprop::scenario::{Table, DEFAULT_INTERVAL};
use quadprop::verify::Suite;
use quadprop::{Error, Result, Scenario, Variant};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub preset: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    pub interval: Option<[f64; 2]>,
    pub table_path: Option<PathBuf>,
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub t_a: f64,
    pub t_b: Option<f64>,
    /// Sample times for `state`, `uncertainty` and `solve`.
    pub times: Option<Vec<f64>>,
    /// Number of uniform samples for `solve` when `times` is absent.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub n: usize,
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    #[serde(default = "default_offsets")]
    pub offsets: Vec<usize>,
    pub variant: Option<Variant>,
    /// `(u, u̇)` and `(v, v̇)` at `t_a`; the standard basis when absent.
    pub u_init: Option<[f64; 2]>,
    pub v_init: Option<[f64; 2]>,
    /// `ẋ_p(t_a)`; `x_p(t_a)` is always 0.
    #[serde(default)]
    pub particular_slope: f64,
}

fn default_samples() -> usize {
    101
}

fn default_levels() -> Vec<usize> {
    vec![0, 1, 2]
}

fn default_offsets() -> Vec<usize> {
    vec![0, 1, 2]
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            t_a: 0.0,
            t_b: None,
            times: None,
            samples: default_samples(),
            n: 0,
            levels: default_levels(),
            offsets: default_offsets(),
            variant: None,
            u_init: None,
            v_init: None,
            particular_slope: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            x_min: -6.0,
            x_max: 6.0,
            n_points: 121,
        }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let step = (self.x_max - self.x_min) / (self.n_points - 1) as f64;
        (0..self.n_points).map(|i| self.x_min + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default)]
    pub corrupt: bool,
    pub suites: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<ScenarioSpec>,
    scenario_file: Option<PathBuf>,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    grid: GridSpec,
    tolerances: Option<Tolerances>,
    #[serde(default)]
    verify: VerifySection,
}

/// A validated configuration. Relative paths are resolved against the
/// directory of the file that names them.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub run: RunSection,
    pub grid: GridSpec,
    pub integrator: IntegratorOptions,
    pub verify: VerifySection,
}

fn config_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {msg}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| config_err(path, e))
}

fn relative_to(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}

impl ScenarioSpec {
    pub fn build(&self, origin: &Path) -> Result<Scenario> {
        let built = if self.preset == "tabulated" {
            if !self.params.is_empty() {
                return Err(Error::Config("the tabulated preset takes no params".into()));
            }
            let table_path = self
                .table_path
                .as_ref()
                .ok_or_else(|| Error::Config("preset 'tabulated' requires table_path".into()))?;
            let table = Table::from_csv(&relative_to(origin, table_path))?;
            let sc = Scenario::tabulated(table, self.hbar)?;
            match self.interval {
                Some([a, b]) => sc.with_interval(a, b)?,
                None => sc,
            }
        } else {
            if self.table_path.is_some() {
                return Err(Error::Config("table_path is only valid with preset 'tabulated'".into()));
            }
            let [a, b] = self.interval.unwrap_or([DEFAULT_INTERVAL.0, DEFAULT_INTERVAL.1]);
            Scenario::preset(&self.preset, &self.params, self.hbar, (a, b))?
        };
        Ok(built)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?, path)
    }

    /// `origin` anchors relative paths and labels diagnostics.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(origin, e))?;
        let scenario = match (&raw.scenario, &raw.scenario_file) {
            (Some(spec), None) => spec.build(origin),
            (None, Some(file)) => {
                let file = relative_to(origin, file);
                let spec: ScenarioSpec = toml::from_str(&read(&file)?).map_err(|e| config_err(&file, e))?;
                spec.build(&file)
            }
            (Some(_), Some(_)) => Err(Error::Config("give either [scenario] or scenario_file, not both".into())),
            (None, None) => Err(Error::Config("missing [scenario] table or scenario_file".into())),
        }
        .map_err(|e| match e {
            Error::Validation(m) => Error::Config(m),
            other => other,
        })?;

        let mut integrator = IntegratorOptions::default();
        if let Some(tol) = raw.tolerances {
            integrator.rtol = tol.rtol.unwrap_or(integrator.rtol);
            integrator.atol = tol.atol.unwrap_or(integrator.atol);
            integrator.max_step = tol.max_step.unwrap_or(integrator.max_step);
        }
        let cfg = RunConfig {
            scenario,
            run: raw.run,
            grid: raw.grid,
            integrator,
            verify: raw.verify,
        };
        cfg.validate().map_err(|e| config_err(origin, e))?;
        Ok(cfg)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let g = &self.grid;
        if !(g.x_min.is_finite() && g.x_max.is_finite() && g.x_max > g.x_min) {
            return Err(format!("grid range [{}, {}] is empty or not finite", g.x_min, g.x_max));
        }
        if g.n_points < 2 {
            return Err(format!("grid needs at least 2 points, got {}", g.n_points));
        }
        let i = &self.integrator;
        for (name, v) in [("rtol", i.rtol), ("atol", i.atol), ("max_step", i.max_step)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("tolerance {name} must be positive, got {v}"));
            }
        }
        let r = &self.run;
        if !r.t_a.is_finite() {
            return Err("run.t_a must be finite".into());
        }
        if let Some(t_b) = r.t_b {
            if !(t_b > r.t_a) {
                return Err(format!("run.t_b = {t_b} must exceed run.t_a = {}", r.t_a));
            }
        }
        if r.samples < 2 {
            return Err("run.samples must be at least 2".into());
        }
        for (name, init) in [("u_init", r.u_init), ("v_init", r.v_init)] {
            if let Some(p) = init {
                if !(p[0].is_finite() && p[1].is_finite()) || p == [0.0, 0.0] {
                    return Err(format!("run.{name} must be finite and nonzero"));
                }
            }
        }
        if r.u_init.is_some() != r.v_init.is_some() {
            return Err("run.u_init and run.v_init must be given together".into());
        }
        if let Some(off) = r.offsets.iter().find(|&&o| o > 2) {
            return Err(format!("offset {off} not supported (0, 1 or 2)"));
        }
        if let Some(ts) = &r.times {
            if ts.is_empty() || ts.iter().any(|t| !t.is_finite()) {
                return Err("run.times must be a nonempty list of finite times".into());
            }
        }
        Ok(())
    }

    pub fn variant(&self) -> Variant {
        self.run
            .variant
            .unwrap_or_else(|| self.scenario.system_class().variant())
    }

    pub fn t_b(&self) -> Result<f64> {
        self.run
            .t_b
            .ok_or_else(|| Error::Config("run.t_b is required for this command".into()))
    }

    /// Explicit `run.times`, or `run.samples` points across the scenario
    /// interval (the table grid for tabulated scenarios).
    pub fn times(&self) -> Vec<f64> {
        if let Some(ts) = &self.run.times {
            return ts.clone();
        }
        if let quadprop::scenario::Model::Tabulated(table) = self.scenario.model() {
            let (lo, hi) = self.scenario.interval();
            return table.times().iter().copied().filter(|t| (lo..=hi).contains(t)).collect();
        }
        let (lo, hi) = self.scenario.interval();
        let n = self.run.samples;
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    /// Suites from the command line, else from `[verify] suites`, else all.
    pub fn suites(&self, cli: Option<&str>) -> Result<Vec<Suite>> {
        match (cli, &self.verify.suites) {
            (Some(s), _) => Suite::parse_list(s),
            (None, Some(list)) => Suite::parse_list(&list.join(",")),
            (None, None) => Ok(Suite::ALL.to_vec()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("test.toml"))
    }

    #[test]
    fn minimal_inline_scenario() {
        let cfg = parse("[scenario]\npreset = \"sho\"\n").unwrap();
        assert_eq!(cfg.scenario.name(), "sho");
        assert_eq!(cfg.variant(), Variant::Undriven);
        assert_eq!(cfg.times().len(), 101);
        assert!(cfg.t_b().is_err());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        let cases = [
            "[scenario]\npreset = \"sho\"\ncolour = 1\n",
            "[scenario]\npreset = \"sho\"\n[grid]\nx_min = 1.0\nx_max = -1.0\nn_points = 10\n",
            "[scenario]\npreset = \"sho\"\n[tolerances]\nrtol = -1e-3\n",
            "[scenario]\npreset = \"warp-drive\"\n",
            "[scenario]\npreset = \"sho\"\nparams = { gamma = 1.0 }\n",
            "[scenario]\npreset = \"sho\"\n[run]\nt_a = 1.0\nt_b = 0.5\n",
            "[run]\nt_b = 1.0\n",
            "not toml at all [",
        ];
        for text in cases {
            assert!(matches!(parse(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn suites_resolve_in_order_of_precedence() {
        let cfg = parse("[scenario]\npreset = \"free\"\n[verify]\nsuites = [\"unitary\"]\n").unwrap();
        assert_eq!(cfg.suites(None).unwrap(), vec![Suite::Unitary]);
        assert_eq!(cfg.suites(Some("classical")).unwrap(), vec![Suite::Classical]);
        assert!(cfg.suites(Some("")).is_err());
    }
}
