//! Config-driven runs: `solve`, `classify`, `verify`, `cascade`,
//! `calibrate` and `sweep`, each writing `report.json` plus CSV data.
//!
//! Exit status is 0 when the run produced its data (failing checks are
//! data), 2 when the parameters are outside the regime a requested step
//! needs, and 1 on any other error.

pub mod config;
pub mod report;

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::manifold::ModelManifold;
use crate::moser::{
    base_cutoff, bound_chain_diagnostic, calibrate_sobolev_report, cascade, random_suite, seed_from_env,
    standard_suite,
};
use crate::params::{classify_regime, ConstantChain, Params};
use crate::solver::{log_transform, residual, solve_radial, LogProfile, SolveOutcome, SolveStatus};
use crate::verify::{
    check_all_lemmas, check_gradient_bound, check_lemma_2_1_with, check_lemma_2_2, check_lemma_2_3_with,
    check_lemma_4_1_with, empirical_constant, CheckOptions, CheckReport, LemmaId,
};

pub use config::{Command, Format, RunConfig, SweepConfig};
pub use report::{Report, SweepRow};

use report::{
    fmt_f64, strip_timestamp, sweep_rows_csv, write_csv, EmpiricalConstants, Environment, ResolvedInputs,
    SkippedCheck, SolveSummary, CASCADE_HEADER, PROFILE_HEADER, SCHEMA_VERSION, SWEEP_HEADER,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_OUT_OF_REGIME: i32 = 2;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Sweep worker count; `None` uses every logical CPU.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report: Report,
    pub files: Vec<PathBuf>,
    pub error: Option<LabError>,
}

pub fn exit_code_for(err: &LabError) -> i32 {
    if err.is_out_of_regime() {
        EXIT_OUT_OF_REGIME
    } else {
        EXIT_ERROR
    }
}

/// Runs `cfg` and writes its outputs. `Err` is returned only when the
/// outputs themselves cannot be written.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let mut report = empty_report(cfg)?;
    let jobs = match cfg.command {
        Command::Sweep => opts.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        _ => 1,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| LabError::IoFailure(e.to_string()))?;
    let mut artifacts = Artifacts::default();
    let result = pool.install(|| execute(cfg, &mut report, &mut artifacts));
    let (exit_code, error) = match result {
        Ok(()) => (EXIT_OK, None),
        Err(e) => {
            report.notes.push(format!("error: {e}"));
            report.all_passed = false;
            (exit_code_for(&e), Some(e))
        }
    };
    let files = write_outputs(cfg, &report, &artifacts)?;
    Ok(RunOutcome { exit_code, report, files, error })
}

#[derive(Default)]
struct Artifacts {
    profile: Option<Vec<Vec<String>>>,
    cascade: Option<Vec<Vec<String>>>,
    sweep: Option<Vec<Vec<String>>>,
}

fn empty_report(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let m = cfg.manifold()?;
    let timestamp_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        command: cfg.command,
        timestamp_unix,
        environment: Environment::current(),
        inputs: ResolvedInputs {
            params: cfg.params,
            manifold_n: m.n,
            manifold_kappa: m.kappa,
            v0: cfg.v0(),
            r_max: cfg.r_max(),
            solver: cfg.solver.options(),
            chain: cfg.chain,
            verify: cfg.verify.clone(),
            calibrate: cfg.calibrate.clone(),
            sweep: cfg.sweep.clone(),
        },
        classification: classify_regime(&cfg.params),
        constant_chain: None,
        chain_note: None,
        solve: None,
        checks: Vec::new(),
        skipped_checks: Vec::new(),
        empirical: None,
        cascade: None,
        bound_chain: None,
        calibration: None,
        sweep: None,
        notes: Vec::new(),
        all_passed: true,
    })
}

fn build_chain(cfg: &RunConfig, report: &mut Report) -> Option<ConstantChain> {
    match ConstantChain::build_with_depth(&cfg.params, cfg.chain.c_n, cfg.chain.k_max) {
        Ok(chain) => {
            report.constant_chain = Some(chain.clone());
            Some(chain)
        }
        Err(e) => {
            report.chain_note = Some(e.to_string());
            None
        }
    }
}

fn solve_stage(cfg: &RunConfig, m: &ModelManifold, r_max: f64) -> Result<(SolveOutcome, SolveSummary)> {
    let v0 = cfg.v0();
    let out = solve_radial(&cfg.params, m, v0, r_max, &cfg.solver.options())?;
    let summary = SolveSummary {
        status: out.status,
        v0,
        r_max,
        points: out.profile.len(),
        steps_accepted: out.steps_accepted,
        steps_rejected: out.steps_rejected,
        residual: residual(&out.profile),
    };
    Ok((out, summary))
}

fn status_note(status: &SolveStatus) -> Option<String> {
    match status {
        SolveStatus::Complete => None,
        SolveStatus::PositivityLost { r_star } => {
            Some(format!("positivity lost at r* = {}; profile truncated", fmt_f64(*r_star)))
        }
        SolveStatus::CeilingExceeded { r } => Some(format!("v exceeded the ceiling at r = {}", fmt_f64(*r))),
    }
}

fn status_name(status: &SolveStatus) -> &'static str {
    match status {
        SolveStatus::Complete => "Complete",
        SolveStatus::PositivityLost { .. } => "PositivityLost",
        SolveStatus::CeilingExceeded { .. } => "CeilingExceeded",
    }
}

fn profile_rows(out: &SolveOutcome) -> Vec<Vec<String>> {
    let p = &out.profile;
    (0..p.len())
        .map(|i| {
            let (v, dv) = (p.v[i], p.dv[i]);
            let du = -dv / v;
            vec![
                fmt_f64(p.grid[i]),
                fmt_f64(v),
                fmt_f64(dv),
                fmt_f64(p.ddv[i]),
                fmt_f64(-v.ln()),
                fmt_f64(du * du),
            ]
        })
        .collect()
}

fn execute(cfg: &RunConfig, report: &mut Report, art: &mut Artifacts) -> Result<()> {
    let m = cfg.manifold()?;
    let chain = build_chain(cfg, report);
    match cfg.command {
        Command::Classify => Ok(()),
        Command::Solve => {
            let (out, summary) = solve_stage(cfg, &m, cfg.r_max())?;
            report.notes.extend(status_note(&out.status));
            report.solve = Some(summary);
            art.profile = Some(profile_rows(&out));
            Ok(())
        }
        Command::Verify => {
            let (out, summary) = solve_stage(cfg, &m, cfg.r_max())?;
            report.notes.extend(status_note(&out.status));
            report.solve = Some(summary);
            art.profile = Some(profile_rows(&out));
            let lp = log_transform(&out.profile)?;
            run_checks(cfg, &lp, chain.as_ref(), report)?;
            report.empirical = empirical(&lp, cfg.params.radius, m.kappa);
            Ok(())
        }
        Command::Cascade => {
            let chain = chain.ok_or_else(|| {
                LabError::OutOfRegime(report.chain_note.clone().unwrap_or_else(|| "no constant chain".into()))
            })?;
            let (out, summary) = solve_stage(cfg, &m, cfg.r_max().max(cfg.params.radius))?;
            report.notes.extend(status_note(&out.status));
            report.solve = Some(summary);
            art.profile = Some(profile_rows(&out));
            let lp = log_transform(&out.profile)?;
            let casc = cascade(&m, &lp, &chain, cfg.chain.k_max)?;
            art.cascade = Some(
                casc.rows
                    .iter()
                    .map(|r| {
                        vec![r.k.to_string(), fmt_f64(r.theta), fmt_f64(r.radius), fmt_f64(r.norm), fmt_f64(r.normalized)]
                    })
                    .collect(),
            );
            report.cascade = Some(casc);
            report.bound_chain = Some(bound_chain_diagnostic(&m, &lp, &chain, chain.theta0, &base_cutoff(chain.radius))?);
            report.empirical = empirical(&lp, cfg.params.radius, m.kappa);
            Ok(())
        }
        Command::Calibrate => {
            let radius = cfg.params.radius;
            let suite = match cfg.calibrate.suite {
                config::SuiteKind::Standard => standard_suite(radius),
                config::SuiteKind::Random => random_suite(seed_from_env(), cfg.calibrate.count, radius),
            };
            let cal = calibrate_sobolev_report(&m, &suite, radius)?;
            report.notes.push(format!("calibrated c_n* = {}", fmt_f64(cal.c_n)));
            report.calibration = Some(cal);
            Ok(())
        }
        Command::Sweep => {
            let sweep = cfg.sweep.as_ref().ok_or(LabError::EmptySweep)?;
            sweep.validate()?;
            let rows: Vec<SweepRow> = sweep.values.par_iter().map(|&v| sweep_row(cfg, &sweep.axis, v)).collect();
            art.sweep = Some(sweep_rows_csv(&rows));
            report.sweep = Some(rows);
            Ok(())
        }
    }
}

fn empirical(lp: &LogProfile, radius: f64, kappa: f64) -> Option<EmpiricalConstants> {
    let c_obs = empirical_constant(lp, radius, kappa).ok()?;
    let scale = 1.0 + kappa.sqrt() * radius;
    Some(EmpiricalConstants { radius, sup_half_ball: c_obs * scale * scale / (radius * radius), c_obs })
}

fn run_checks(cfg: &RunConfig, lp: &LogProfile, chain: Option<&ConstantChain>, report: &mut Report) -> Result<()> {
    let params = &cfg.params;
    let opts = CheckOptions { f_skip: cfg.verify.f_skip, tolerance: cfg.verify.tolerance };
    let iota = chain.map_or(1.0, |c| c.iota);
    let mut checks: Vec<CheckReport> = Vec::new();
    match &cfg.verify.checks {
        None => {
            match chain {
                Some(chain) => checks.extend(check_all_lemmas(lp, params, chain, &opts)?),
                None => {
                    checks.push(check_lemma_2_1_with(lp, params, 1.0, &opts)?);
                    for id in [LemmaId::L2_3, LemmaId::L4_1] {
                        report.skipped_checks.push(SkippedCheck {
                            lemma_id: id,
                            reason: report.chain_note.clone().unwrap_or_default(),
                        });
                    }
                }
            }
            if let Some(c) = cfg.verify.c_bound {
                checks.push(check_gradient_bound(lp, params.radius, cfg.manifold()?.kappa, c)?);
            }
        }
        Some(ids) => {
            for id in ids {
                let need_chain = || {
                    chain.ok_or_else(|| {
                        LabError::OutOfRegime(report.chain_note.clone().unwrap_or_else(|| "no constant chain".into()))
                    })
                };
                let rep = match id {
                    LemmaId::L2_1 => check_lemma_2_1_with(lp, params, iota, &opts)?,
                    LemmaId::L2_2Case1 => check_lemma_2_2(lp, params, iota, 1, &opts)?,
                    LemmaId::L2_2Case2 => check_lemma_2_2(lp, params, iota, 2, &opts)?,
                    LemmaId::L2_3 => check_lemma_2_3_with(lp, params, need_chain()?, &opts)?,
                    LemmaId::L4_1 => check_lemma_4_1_with(lp, params, need_chain()?, &opts)?,
                    LemmaId::GradientBound => {
                        let c = cfg.verify.c_bound.ok_or_else(|| {
                            LabError::ConfigParse("GradientBound check needs verify.c_bound".into())
                        })?;
                        check_gradient_bound(lp, params.radius, cfg.manifold()?.kappa, c)?
                    }
                };
                checks.push(rep);
            }
        }
    }
    report.all_passed = checks.iter().all(|c| c.passed);
    report.checks = checks;
    Ok(())
}

/// One sweep entry; failures land in the `error` column.
pub fn sweep_row(base: &RunConfig, axis: &str, value: f64) -> SweepRow {
    let mut row = SweepRow {
        value,
        verdict: String::new(),
        theorem_source: String::new(),
        status: String::new(),
        c_obs: None,
        worst_margin: None,
        error: None,
    };
    if let Err(e) = fill_sweep_row(base, axis, value, &mut row) {
        row.error = Some(e.to_string());
    }
    row
}

fn fill_sweep_row(base: &RunConfig, axis: &str, value: f64, row: &mut SweepRow) -> Result<()> {
    let cfg = base.with_axis(axis, value)?;
    let params: Params = cfg.params;
    let regime = classify_regime(&params);
    row.verdict = format!("{:?}", regime.verdict);
    row.theorem_source = regime.theorem_source.tag().to_string();
    params.validate()?;
    let m = cfg.manifold()?;
    let (out, _) = solve_stage(&cfg, &m, cfg.r_max())?;
    row.status = status_name(&out.status).to_string();
    let lp = log_transform(&out.profile)?;
    row.c_obs = empirical_constant(&lp, params.radius, m.kappa).ok();
    let opts = CheckOptions { f_skip: cfg.verify.f_skip, tolerance: cfg.verify.tolerance };
    let checks = match ConstantChain::build_with_depth(&params, cfg.chain.c_n, cfg.chain.k_max) {
        Ok(chain) => check_all_lemmas(&lp, &params, &chain, &opts)?,
        Err(_) => vec![check_lemma_2_1_with(&lp, &params, 1.0, &opts)?],
    };
    let worst = checks.iter().map(|c| c.worst_margin).fold(f64::INFINITY, f64::min);
    row.worst_margin = worst.is_finite().then_some(worst);
    Ok(())
}

fn write_outputs(cfg: &RunConfig, report: &Report, art: &Artifacts) -> Result<Vec<PathBuf>> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| LabError::IoFailure(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    if cfg.wants(Format::Json) {
        let path = dir.join("report.json");
        std::fs::write(&path, report.to_json()? + "\n")
            .map_err(|e| LabError::IoFailure(format!("{}: {e}", path.display())))?;
        files.push(path);
    }
    if cfg.wants(Format::Csv) {
        let tables: [(&str, &[&str], &Option<Vec<Vec<String>>>); 3] = [
            ("profile.csv", &PROFILE_HEADER, &art.profile),
            ("cascade.csv", &CASCADE_HEADER, &art.cascade),
            ("sweep.csv", &SWEEP_HEADER, &art.sweep),
        ];
        for (name, header, rows) in tables {
            if let Some(rows) = rows {
                let path = dir.join(name);
                write_csv(&path, header, rows.iter().cloned())?;
                files.push(path);
            }
        }
    }
    Ok(files)
}

/// True when two report documents agree outside the timestamp.
pub fn reports_match(a: &str, b: &str) -> Result<bool> {
    Ok(strip_timestamp(a)? == strip_timestamp(b)?)
}
