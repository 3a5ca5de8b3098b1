//! Ball `L^θ` norms, iteration cutoffs, the `θ_k`/`r_k` norm cascade, and
//! the empirical Sobolev-constant calibration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::manifold::ModelManifold;
use crate::params::{ConstantChain, Schedule};
use crate::quad;
use crate::solver::LogProfile;

/// Environment variable read by [`seed_from_env`].
pub const SEED_VAR: &str = "LICHLAB_SEED";
pub const DEFAULT_SEED: u64 = 42;
/// Bisection resolution of [`calibrate_sobolev`].
pub const CALIBRATION_RESOLUTION: f64 = 1e-4;
/// Upper end of the first calibration bracket.
pub const CALIBRATION_HI: f64 = 64.0;
const SOBOLEV_QUAD_TOL: f64 = 1e-12;

pub fn seed_from_env() -> u64 {
    std::env::var(SEED_VAR).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_SEED)
}

/// Cubic-smoothstep plateau: 1 on `[0, inner]`, 0 on `[outer, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFunction {
    pub k: usize,
    pub inner: f64,
    pub outer: f64,
    pub radius: f64,
}

impl CutoffFunction {
    pub fn new(k: usize, inner: f64, outer: f64, radius: f64) -> Self {
        CutoffFunction { k, inner, outer, radius }
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.inner {
            1.0
        } else if r >= self.outer {
            0.0
        } else {
            let t = (self.outer - r) / (self.outer - self.inner);
            t * t * (3.0 - 2.0 * t)
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if r <= self.inner || r >= self.outer {
            0.0
        } else {
            let w = self.outer - self.inner;
            let t = (self.outer - r) / w;
            -6.0 * t * (1.0 - t) / w
        }
    }

    /// `1.5/(outer − inner)`, attained at the midpoint of the ramp.
    pub fn max_slope(&self) -> f64 {
        1.5 / (self.outer - self.inner)
    }

    /// The slope bound required at step `k`, `4^{k+1}/R`.
    pub fn required_slope(&self) -> f64 {
        4f64.powi(self.k as i32 + 1) / self.radius
    }
}

/// `η_k` with plateau `B_{r_{k+1}}` and support `B_{r_k}`.
pub fn build_cutoff(k: usize, radius: f64) -> Result<CutoffFunction> {
    if k < 1 {
        return Err(LabError::InvalidParams("cutoff index k must be >= 1".into()));
    }
    if !(radius > 0.0) {
        return Err(LabError::InvalidParams(format!("R = {radius} must be > 0")));
    }
    let r_k = |k: usize| radius / 2.0 + radius / 4f64.powi(k as i32);
    let cutoff = CutoffFunction::new(k, r_k(k + 1), r_k(k), radius);
    if cutoff.max_slope() > cutoff.required_slope() {
        return Err(LabError::InvalidParams(format!("cutoff slope bound fails at k = {k}")));
    }
    Ok(cutoff)
}

/// `η₀` with plateau `B_{3R/4}` and support `B_R`.
pub fn base_cutoff(radius: f64) -> CutoffFunction {
    CutoffFunction::new(0, 0.75 * radius, radius, radius)
}

fn check_samples(grid: &[f64], values: &[f64], r: f64) -> Result<()> {
    let last = grid.last().copied().unwrap_or(0.0);
    if grid.len() != values.len() || grid.len() < 2 || last < r * (1.0 - 1e-12) {
        return Err(LabError::GridMismatch { needed: r, available: last });
    }
    Ok(())
}

/// Largest value over `[0, r]`: samples inside plus the interpolated end.
fn local_max(grid: &[f64], values: &[f64], r: f64) -> f64 {
    let inside = grid.partition_point(|&g| g <= r);
    let at_r = quad::interpolate(grid, values, r.min(grid[grid.len() - 1]));
    values[..inside].iter().copied().fold(at_r.max(0.0), f64::max)
}

/// `(∫_{B_r} f^θ)^{1/θ}` for nonnegative samples `f` on `grid`, computed as
/// `f_max·(∫ e^{θ(ln f − ln f_max)})^{1/θ}`.
pub fn lp_norm(m: &ModelManifold, grid: &[f64], f: &[f64], theta: f64, r: f64) -> Result<f64> {
    if !(theta >= 1.0) {
        return Err(LabError::InvalidParams(format!("theta = {theta} must be >= 1")));
    }
    check_samples(grid, f, r)?;
    let fmax = local_max(grid, f, r);
    if fmax == 0.0 {
        return Ok(0.0);
    }
    let ln_max = fmax.ln();
    let end = grid.partition_point(|&g| g < r).min(grid.len() - 1);
    let jump = (0..end)
        .filter(|&i| f[i] > 0.0 && f[i + 1] > 0.0)
        .map(|i| (f[i + 1].ln() - f[i].ln()).abs())
        .fold(0.0, f64::max);
    let mut integral = f64::NAN;
    if theta * jump <= RESOLVED_LOG_JUMP {
        let scaled: Vec<f64> = f
            .iter()
            .map(|&x| if x > 0.0 { (theta * (x.ln() - ln_max)).exp() } else { 0.0 })
            .collect();
        integral = m.ball_integral(grid, &scaled, r)?;
    }
    if !(integral > 0.0) {
        integral = log_linear_power_integral(m, grid, f, theta, r, ln_max);
    }
    Ok(fmax * integral.max(0.0).powf(1.0 / theta))
}

/// Largest `θ·|Δ ln f|` across a cell for which [`lp_norm`] keeps the
/// cubic rule; sharper integrands switch to log-linear cells.
const RESOLVED_LOG_JUMP: f64 = 0.5;

/// `∫₀¹ e^{a0 + (a1−a0)x} dx` and `∫₀¹ x·e^{a0 + (a1−a0)x} dx`.
fn exp_moments(a0: f64, a1: f64) -> (f64, f64) {
    let beta = a1 - a0;
    if beta.abs() < 1e-3 {
        let e = a0.exp();
        let b2 = beta * beta;
        (
            e * (1.0 + beta / 2.0 + b2 / 6.0 + b2 * beta / 24.0),
            e * (0.5 + beta / 3.0 + b2 / 8.0 + b2 * beta / 30.0),
        )
    } else {
        let (e0, e1) = (a0.exp(), a1.exp());
        ((e1 - e0) / beta, (e1 * (beta - 1.0) + e0) / (beta * beta))
    }
}

/// `ω·∫₀^r (f/f_max)^θ s^{n−1}` with `ln f` and the density linear on each
/// cell, integrated exactly. Cells with a zero endpoint use `f` linear.
fn log_linear_power_integral(m: &ModelManifold, grid: &[f64], f: &[f64], theta: f64, r: f64, ln_max: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..grid.len() - 1 {
        let (t0, mut t1) = (grid[i], grid[i + 1]);
        if t0 >= r {
            break;
        }
        let (f0, mut f1) = (f[i], f[i + 1]);
        if t1 > r {
            let x = (r - t0) / (t1 - t0);
            f1 = if f0 > 0.0 && f1 > 0.0 { (f0.ln() + x * (f1.ln() - f0.ln())).exp() } else { f0 + x * (f1 - f0) };
            t1 = r;
        }
        let h = t1 - t0;
        let (w0, w1) = (m.density(t0), m.density(t1));
        let cell = if f0 > 0.0 && f1 > 0.0 {
            let (i0, i1) = exp_moments(theta * (f0.ln() - ln_max), theta * (f1.ln() - ln_max));
            h * (w0 * i0 + (w1 - w0) * i1)
        } else if f0 > 0.0 || f1 > 0.0 {
            // ∫₀¹ x^θ dx and ∫₀¹ x^{θ+1} dx against the nonzero end.
            let peak = (theta * (f0.max(f1).ln() - ln_max)).exp();
            let (near, far) = if f1 > 0.0 { (w1, w0) } else { (w0, w1) };
            h * peak * (far / (theta + 1.0) + (near - far) / (theta + 2.0))
        } else {
            0.0
        };
        total += cell;
    }
    m.sphere_area() * total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeRow {
    pub k: usize,
    pub theta: f64,
    pub radius: f64,
    pub norm: f64,
    /// `norm / V(r_k)^{1/θ_k}`.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeReport {
    pub rows: Vec<CascadeRow>,
    /// Grid sup of `f` over `B_{R/2}`.
    pub sup_half_ball: f64,
    pub tail_normalized: f64,
    /// `|tail − sup|/sup`, or `|tail|` when the sup vanishes.
    pub tail_deviation: f64,
}

impl CascadeReport {
    /// First row with `θ_k > theta_min`, if any.
    pub fn first_above(&self, theta_min: f64) -> Option<&CascadeRow> {
        self.rows.iter().find(|row| row.theta > theta_min)
    }

    pub fn deviation(&self, row: &CascadeRow) -> f64 {
        if self.sup_half_ball > 0.0 {
            (row.normalized - self.sup_half_ball).abs() / self.sup_half_ball
        } else {
            row.normalized.abs()
        }
    }
}

/// Norm cascade along an explicit schedule over the ball of radius `radius`.
pub fn cascade_schedule(m: &ModelManifold, lp: &LogProfile, schedule: &Schedule, radius: f64) -> Result<CascadeReport> {
    let available = lp.grid.last().copied().unwrap_or(0.0);
    if available < radius * (1.0 - 1e-12) {
        return Err(LabError::DomainTooSmall { needed: radius, available });
    }
    let rows = schedule
        .thetas
        .par_iter()
        .zip(schedule.radii.par_iter())
        .enumerate()
        .map(|(i, (&theta, &r_k))| {
            let norm = lp_norm(m, &lp.grid, &lp.f, theta, r_k)?;
            let volume = m.ball_volume(r_k)?;
            Ok(CascadeRow { k: i + 1, theta, radius: r_k, norm, normalized: norm / volume.powf(1.0 / theta) })
        })
        .collect::<Result<Vec<_>>>()?;
    let half = lp.index_through(0.5 * radius).unwrap_or(0);
    let sup = lp.f[..=half].iter().copied().fold(0.0, f64::max);
    let tail = rows.last().map_or(0.0, |row| row.normalized);
    let tail_deviation = if sup > 0.0 { (tail - sup).abs() / sup } else { tail.abs() };
    Ok(CascadeReport { rows, sup_half_ball: sup, tail_normalized: tail, tail_deviation })
}

/// Norm cascade with the chain's schedule, over `B_R`.
pub fn cascade(m: &ModelManifold, lp: &LogProfile, chain: &ConstantChain, k_max: usize) -> Result<CascadeReport> {
    let schedule = chain.schedule(k_max)?;
    cascade_schedule(m, lp, &schedule, chain.radius)
}

/// Both sides of the single-step iteration inequality
/// `e^{−θ₀}V^{2/n}(∫f^{(θ+1)λ}η^{2λ})^{1/λ} + 4θρ̃R²∫f^{θ+2}η²
///  ≤ θ₀²θ∫f^{θ+1}η² + 66R²∫f^{θ+1}|∇η|²`,
/// with every term divided by `f_max^{θ+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundChainDiagnostic {
    pub theta: f64,
    pub lhs_sobolev: f64,
    pub lhs_gradient: f64,
    pub rhs_volume: f64,
    pub rhs_cutoff: f64,
    pub log_ratio: f64,
    pub holds: bool,
}

pub fn bound_chain_diagnostic(
    m: &ModelManifold,
    lp: &LogProfile,
    chain: &ConstantChain,
    theta: f64,
    eta: &CutoffFunction,
) -> Result<BoundChainDiagnostic> {
    let radius = chain.radius;
    check_samples(&lp.grid, &lp.f, radius)?;
    let fmax = local_max(&lp.grid, &lp.f, radius);
    let lambda = chain.lambda;
    let scaled = |power: f64| -> Vec<f64> {
        lp.f.iter().map(|&x| if x > 0.0 && fmax > 0.0 { (x / fmax).powf(power) } else { 0.0 }).collect()
    };
    let weighted = |power: f64, weight: &dyn Fn(f64) -> f64| -> Result<f64> {
        let vals: Vec<f64> = scaled(power).iter().zip(&lp.grid).map(|(g, &r)| g * weight(r)).collect();
        m.ball_integral(&lp.grid, &vals, radius)
    };
    let volume = m.ball_volume(radius)?;
    let nf = m.nf();
    let sob = weighted((theta + 1.0) * lambda, &|r| eta.value(r).powf(2.0 * lambda))?;
    let lhs_sobolev = (-chain.theta0).exp() * volume.powf(2.0 / nf) * sob.max(0.0).powf(1.0 / lambda);
    let lhs_gradient =
        4.0 * theta * chain.tilde_rho * radius * radius * fmax * weighted(theta + 2.0, &|r| eta.value(r).powi(2))?;
    let rhs_volume = chain.theta0 * chain.theta0 * theta * weighted(theta + 1.0, &|r| eta.value(r).powi(2))?;
    let rhs_cutoff = 66.0 * radius * radius * weighted(theta + 1.0, &|r| eta.derivative(r).powi(2))?;
    let lhs = lhs_sobolev + lhs_gradient;
    let rhs = rhs_volume + rhs_cutoff;
    let log_ratio = if lhs == 0.0 { f64::NEG_INFINITY } else { (lhs / rhs).ln() };
    Ok(BoundChainDiagnostic {
        theta,
        lhs_sobolev,
        lhs_gradient,
        rhs_volume,
        rhs_cutoff,
        log_ratio,
        holds: lhs <= rhs,
    })
}

/// Shapes of compactly supported radial test functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape")]
pub enum BumpShape {
    Zero,
    /// `(1 − (r/support)²)₊^m`.
    Power { m: f64, support: f64 },
    /// `(1 − ((r − center)/width)²)₊^m`.
    Shell { m: f64, center: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub shape: BumpShape,
    pub amplitude: f64,
}

impl TestFunction {
    pub fn zero() -> Self {
        TestFunction { shape: BumpShape::Zero, amplitude: 0.0 }
    }

    pub fn power(m: f64, support: f64) -> Self {
        TestFunction { shape: BumpShape::Power { m, support }, amplitude: 1.0 }
    }

    pub fn shell(m: f64, center: f64, width: f64) -> Self {
        TestFunction { shape: BumpShape::Shell { m, center, width }, amplitude: 1.0 }
    }

    pub fn scaled(self, c: f64) -> Self {
        TestFunction { amplitude: self.amplitude * c, ..self }
    }

    /// Closed interval outside which the function vanishes.
    pub fn support(&self) -> (f64, f64) {
        match self.shape {
            BumpShape::Zero => (0.0, 0.0),
            BumpShape::Power { support, .. } => (0.0, support),
            BumpShape::Shell { center, width, .. } => ((center - width).max(0.0), center + width),
        }
    }

    fn unit(&self, r: f64) -> (f64, f64) {
        match self.shape {
            BumpShape::Zero => (0.0, 0.0),
            BumpShape::Power { m, support } => {
                let x = r / support;
                let base = 1.0 - x * x;
                if base <= 0.0 {
                    (0.0, 0.0)
                } else {
                    (base.powf(m), m * base.powf(m - 1.0) * (-2.0 * x / support))
                }
            }
            BumpShape::Shell { m, center, width } => {
                let x = (r - center) / width;
                let base = 1.0 - x * x;
                if base <= 0.0 {
                    (0.0, 0.0)
                } else {
                    (base.powf(m), m * base.powf(m - 1.0) * (-2.0 * x / width))
                }
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.amplitude * self.unit(r).0
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.amplitude * self.unit(r).1
    }

    fn validate(&self, radius: f64) -> Result<()> {
        let ok = match self.shape {
            BumpShape::Zero => true,
            BumpShape::Power { m, support } => m >= 1.0 && support > 0.0,
            BumpShape::Shell { m, center, width } => m >= 1.0 && width > 0.0 && center >= 0.0,
        };
        if !ok || !self.amplitude.is_finite() {
            return Err(LabError::InvalidParams(format!("malformed test function {self:?}")));
        }
        let (_, hi) = self.support();
        if hi > radius * (1.0 + 1e-12) {
            return Err(LabError::SupportViolation(self.value(radius)));
        }
        Ok(())
    }
}

/// The `c_n`-independent pieces of the Sobolev inequality for one function:
/// `lhs = (∫g^{2λ})^{1/λ}` and `base = V^{−2/n}R²(∫|∇g|² + R^{−2}∫g²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevParts {
    pub lhs: f64,
    pub base: f64,
}

impl SobolevParts {
    pub fn rhs(&self, m: &ModelManifold, radius: f64, c_n: f64) -> f64 {
        (c_n * (1.0 + m.kappa.sqrt() * radius)).exp() * self.base
    }

    /// `ln(lhs/base)`: the inequality holds iff `c_n(1+√κR)` is at least this.
    pub fn log_ratio(&self) -> f64 {
        (self.lhs / self.base).ln()
    }
}

pub fn sobolev_parts(m: &ModelManifold, g: &TestFunction, radius: f64) -> Result<SobolevParts> {
    g.validate(radius)?;
    let (lo, hi) = g.support();
    if matches!(g.shape, BumpShape::Zero) || g.amplitude == 0.0 || hi <= lo {
        return Ok(SobolevParts { lhs: 0.0, base: 0.0 });
    }
    let lambda = crate::params::lambda_exponent(m.n)?;
    let area = m.sphere_area();
    let integral = |h: &dyn Fn(f64) -> f64| area * quad::integrate(&|t| h(t) * m.density(t), lo, hi, SOBOLEV_QUAD_TOL);
    let high = integral(&|t| g.value(t).abs().powf(2.0 * lambda));
    let grad = integral(&|t| g.derivative(t).powi(2));
    let mass = integral(&|t| g.value(t).powi(2));
    let volume = m.ball_volume(radius)?;
    Ok(SobolevParts {
        lhs: high.powf(1.0 / lambda),
        base: volume.powf(-2.0 / m.nf()) * radius * radius * (grad + mass / (radius * radius)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevCheck {
    pub holds: bool,
    /// `(RHS − LHS)/RHS`; 1 for the zero function.
    pub margin: f64,
    pub lhs: f64,
    pub rhs: f64,
}

pub fn sobolev_check(m: &ModelManifold, g: &TestFunction, radius: f64, c_n: f64) -> Result<SobolevCheck> {
    let parts = sobolev_parts(m, g, radius)?;
    Ok(check_parts(m, &parts, radius, c_n))
}

fn check_parts(m: &ModelManifold, parts: &SobolevParts, radius: f64, c_n: f64) -> SobolevCheck {
    if parts.lhs == 0.0 && parts.base == 0.0 {
        return SobolevCheck { holds: true, margin: 1.0, lhs: 0.0, rhs: 0.0 };
    }
    let rhs = parts.rhs(m, radius, c_n);
    SobolevCheck { holds: parts.lhs <= rhs, margin: (rhs - parts.lhs) / rhs, lhs: parts.lhs, rhs }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevCalibration {
    pub c_n: f64,
    pub fingerprint: String,
    pub members: usize,
    /// Index of the member with the largest `ln(lhs/base)`.
    pub binding_member: Option<usize>,
    pub max_log_ratio: f64,
}

/// Smallest `c_n` (to [`CALIBRATION_RESOLUTION`], by bisection from
/// `[0, CALIBRATION_HI]`, widening the bracket if needed) for which the
/// Sobolev inequality holds on every member of `suite`.
pub fn calibrate_sobolev(m: &ModelManifold, suite: &[TestFunction], radius: f64) -> Result<f64> {
    Ok(calibrate_sobolev_report(m, suite, radius)?.c_n)
}

pub fn calibrate_sobolev_report(m: &ModelManifold, suite: &[TestFunction], radius: f64) -> Result<SobolevCalibration> {
    if suite.is_empty() {
        return Err(LabError::EmptySuite);
    }
    let parts = suite
        .par_iter()
        .map(|g| sobolev_parts(m, g, radius))
        .collect::<Result<Vec<_>>>()?;
    let all_hold = |c: f64| parts.iter().all(|p| check_parts(m, p, radius, c).holds);
    let mut lo = 0.0;
    let mut hi = CALIBRATION_HI;
    let c_n = if all_hold(lo) {
        lo
    } else {
        while !all_hold(hi) {
            lo = hi;
            hi *= 2.0;
            if hi > 1e6 {
                return Err(LabError::Calibration("no c_n up to 1e6 satisfies the suite".into()));
            }
        }
        while hi - lo > CALIBRATION_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if all_hold(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let (binding_member, max_log_ratio) = parts
        .iter()
        .enumerate()
        .filter(|(_, p)| p.base > 0.0)
        .map(|(i, p)| (i, p.log_ratio()))
        .fold((None, f64::NEG_INFINITY), |acc, (i, r)| if r > acc.1 { (Some(i), r) } else { acc });
    Ok(SobolevCalibration {
        c_n,
        fingerprint: suite_fingerprint(suite),
        members: suite.len(),
        binding_member,
        max_log_ratio,
    })
}

/// 50 deterministic members: full-ball power bumps `m = 1..15`, cubic
/// power bumps on 10 shrinking balls, and 25 shell bumps.
pub fn standard_suite(radius: f64) -> Vec<TestFunction> {
    let mut suite = Vec::with_capacity(50);
    for m in 1..=15 {
        suite.push(TestFunction::power(m as f64, radius));
    }
    for j in 1..=10 {
        suite.push(TestFunction::power(3.0, radius * j as f64 / 10.0));
    }
    for &c in &[0.2, 0.35, 0.5, 0.65, 0.8] {
        let center = c * radius;
        let room = center.min(radius - center);
        for &frac in &[0.2, 0.4, 0.6, 0.8, 1.0] {
            suite.push(TestFunction::shell(2.0, center, frac * room));
        }
    }
    suite
}

/// `count` random power and shell bumps from a ChaCha stream.
pub fn random_suite(seed: u64, count: usize, radius: f64) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let m = rng.gen_range(1.0..12.0);
            if rng.gen_bool(0.5) {
                TestFunction::power(m, radius * rng.gen_range(0.05..=1.0))
            } else {
                let center = radius * rng.gen_range(0.05..0.95);
                let room = center.min(radius - center);
                TestFunction::shell(m, center, room * rng.gen_range(0.05..=1.0))
            }
        })
        .collect()
}

/// SHA-256 of the suite's JSON encoding.
pub fn suite_fingerprint(suite: &[TestFunction]) -> String {
    let json = serde_json::to_vec(suite).expect("test functions serialize");
    hex::encode(Sha256::digest(&json))
}
