//! Versioned JSON report and CSV writers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::moser::{BoundChainDiagnostic, CascadeReport, SobolevCalibration};
use crate::params::{ConstantChain, Params, RegimeReport};
use crate::solver::{SolveStatus, SolverOptions};
use crate::verify::{CheckReport, LemmaId};

use super::config::{CalibrateConfig, ChainConfig, Command, SweepConfig, VerifyConfig};

pub const SCHEMA_VERSION: u32 = 1;
/// Top-level report key that is allowed to differ between identical runs.
pub const TIMESTAMP_KEY: &str = "timestamp_unix";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    pub seed: u64,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            seed: crate::moser::seed_from_env(),
        }
    }
}

/// Everything a run depends on, with defaults resolved. Output location is
/// left out so that reports written to different directories compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedInputs {
    pub params: Params,
    pub manifold_n: u32,
    pub manifold_kappa: f64,
    pub v0: f64,
    pub r_max: f64,
    pub solver: SolverOptions,
    pub chain: ChainConfig,
    pub verify: VerifyConfig,
    pub calibrate: CalibrateConfig,
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub status: SolveStatus,
    pub v0: f64,
    pub r_max: f64,
    pub points: usize,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    /// Normalized residual of the equation on the profile.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCheck {
    pub lemma_id: LemmaId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstants {
    pub radius: f64,
    /// `sup_{B_{R/2}} f`.
    pub sup_half_ball: f64,
    /// `sup_{B_{R/2}} f · R²/(1 + √κR)²`.
    pub c_obs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub verdict: String,
    pub theorem_source: String,
    pub status: String,
    pub c_obs: Option<f64>,
    pub worst_margin: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: Command,
    pub timestamp_unix: u64,
    pub environment: Environment,
    pub inputs: ResolvedInputs,
    pub classification: RegimeReport,
    pub constant_chain: Option<ConstantChain>,
    pub chain_note: Option<String>,
    pub solve: Option<SolveSummary>,
    pub checks: Vec<CheckReport>,
    pub skipped_checks: Vec<SkippedCheck>,
    pub empirical: Option<EmpiricalConstants>,
    pub cascade: Option<CascadeReport>,
    pub bound_chain: Option<BoundChainDiagnostic>,
    pub calibration: Option<SobolevCalibration>,
    pub sweep: Option<Vec<SweepRow>>,
    pub notes: Vec<String>,
    pub all_passed: bool,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| LabError::IoFailure(e.to_string()))
    }
}

/// 17 significant digits; `-0` prints as `0`.
pub fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let io = |e: csv::Error| LabError::IoFailure(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| LabError::IoFailure(format!("{}: {e}", path.display())))
}

pub fn sweep_rows_csv(rows: &[SweepRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                fmt_f64(r.value),
                r.verdict.clone(),
                r.theorem_source.clone(),
                r.status.clone(),
                fmt_opt(r.c_obs),
                fmt_opt(r.worst_margin),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect()
}

pub const PROFILE_HEADER: [&str; 6] = ["r", "v", "dv", "ddv", "u", "f"];
pub const CASCADE_HEADER: [&str; 5] = ["k", "theta", "radius", "norm", "normalized"];
pub const SWEEP_HEADER: [&str; 7] = ["value", "verdict", "theorem_source", "status", "c_obs", "worst_margin", "error"];

/// Report JSON with the timestamp removed, for comparing runs.
pub fn strip_timestamp(json: &str) -> Result<serde_json::Value> {
    let mut value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| LabError::ConfigParse(e.to_string()))?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove(TIMESTAMP_KEY);
    }
    Ok(value)
}
