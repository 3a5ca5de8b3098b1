//! TOML run configuration. Every section except `command` and `[params]` is
//! optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::manifold::ModelManifold;
use crate::params::{Params, DEFAULT_K_MAX};
use crate::solver::{constant_solution, SolverOptions};
use crate::verify::{LemmaId, DEFAULT_F_SKIP, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Classify,
    Verify,
    Cascade,
    Calibrate,
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Classify => "classify",
            Command::Verify => "verify",
            Command::Cascade => "cascade",
            Command::Calibrate => "calibrate",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(LabError::ConfigParse(format!("unknown output format `{other}`"))),
        }
    }
}

/// Model space; both fields default to the values in `[params]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub n: Option<u32>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Defaults to the smallest constant solution, else 1.
    pub v0: Option<f64>,
    /// Defaults to `R` from `[params]`.
    #[serde(alias = "R_max")]
    pub r_max: Option<f64>,
    pub tol: f64,
    pub rtol: f64,
    pub atol: f64,
    pub v_floor: f64,
    pub v_ceil: f64,
    pub grid_points: usize,
    pub seed_fraction: f64,
    pub fixed_steps: Option<usize>,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        SolverConfig {
            v0: None,
            r_max: None,
            tol: o.tol,
            rtol: o.rtol,
            atol: o.atol,
            v_floor: o.v_floor,
            v_ceil: o.v_ceil,
            grid_points: o.grid_points,
            seed_fraction: o.seed_fraction,
            fixed_steps: o.fixed_steps,
            max_steps: o.max_steps,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            rtol: self.rtol,
            atol: self.atol,
            v_floor: self.v_floor,
            v_ceil: self.v_ceil,
            grid_points: self.grid_points,
            seed_fraction: self.seed_fraction,
            fixed_steps: self.fixed_steps,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub c_n: f64,
    pub k_max: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { c_n: 1.0, k_max: DEFAULT_K_MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("lichlab-out"), formats: vec![Format::Csv, Format::Json] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Checks to run; `None` runs every check whose hypotheses hold.
    /// Requesting a check outside its regime exits with status 2.
    pub checks: Option<Vec<LemmaId>>,
    /// Constant for the gradient-bound check; skipped when absent.
    pub c_bound: Option<f64>,
    pub f_skip: f64,
    pub tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { checks: None, c_bound: None, f_skip: DEFAULT_F_SKIP, tolerance: DEFAULT_TOLERANCE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    Standard,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateConfig {
    pub suite: SuiteKind,
    /// Member count of a random suite.
    pub count: usize,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        CalibrateConfig { suite: SuiteKind::Standard, count: 50 }
    }
}

pub const SWEEP_AXES: [&str; 7] = ["p", "mu", "a", "b", "kappa", "R", "v0"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: String,
    pub values: Vec<f64>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !SWEEP_AXES.contains(&self.axis.as_str()) {
            return Err(LabError::UnknownAxis(self.axis.clone()));
        }
        if self.values.is_empty() {
            return Err(LabError::EmptySweep);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub params: Params,
    #[serde(default)]
    pub manifold: ManifoldConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub calibrate: CalibrateConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| LabError::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::IoFailure(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| LabError::ConfigParse(format!("[params]: {e}")))?;
        self.manifold()?;
        if self.command == Command::Sweep {
            self.sweep
                .as_ref()
                .ok_or_else(|| LabError::ConfigParse("command `sweep` needs a [sweep] section".into()))?
                .validate()?;
        }
        if self.output.formats.is_empty() {
            return Err(LabError::ConfigParse("output.formats must not be empty".into()));
        }
        Ok(())
    }

    pub fn manifold(&self) -> Result<ModelManifold> {
        let n = self.manifold.n.unwrap_or(self.params.n);
        if n != self.params.n {
            return Err(LabError::ConfigParse(format!(
                "manifold.n = {n} differs from params.n = {}",
                self.params.n
            )));
        }
        ModelManifold::new(n, self.manifold.kappa.unwrap_or(self.params.kappa))
    }

    pub fn v0(&self) -> f64 {
        self.solver.v0.or_else(|| constant_solution(&self.params)).unwrap_or(1.0)
    }

    pub fn r_max(&self) -> f64 {
        self.solver.r_max.unwrap_or(self.params.radius)
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }

    /// Copy with one sweep axis set to `value`.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<RunConfig> {
        let mut cfg = self.clone();
        match axis {
            "p" => cfg.params.p = value,
            "mu" => cfg.params.mu = value,
            "a" => cfg.params.a = value,
            "b" => cfg.params.b = value,
            "kappa" => {
                cfg.params.kappa = value;
                cfg.manifold.kappa = None;
            }
            "R" => cfg.params.radius = value,
            "v0" => cfg.solver.v0 = Some(value),
            other => return Err(LabError::UnknownAxis(other.to_string())),
        }
        Ok(cfg)
    }
}
