//! Equation coefficients, the constants produced by the Bochner-type
//! estimates, the Moser iteration schedules, and the regime classifier.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Default depth of the `θ_k` / `r_k` schedules stored in a chain.
pub const DEFAULT_K_MAX: usize = 12;

/// Relative tolerance used when matching the Einstein-scalar exponents.
const EXPONENT_MATCH_TOL: f64 = 1e-12;

/// Coefficients of `Δv + μv + a·v^{p+1} + b·v^{1−q} = 0` together with the
/// curvature parameter `κ` (Ric ≥ −(n−1)κ) and the ball radius `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub n: u32,
    pub mu: f64,
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(alias = "R", default = "default_radius")]
    pub radius: f64,
}

fn default_radius() -> f64 {
    1.0
}

impl Params {
    #[allow(clippy::too_many_arguments)]
    pub fn new(n: u32, mu: f64, a: f64, b: f64, p: f64, q: f64, kappa: f64, radius: f64) -> Result<Self> {
        let params = Params { n, mu, a, b, p, q, kappa, radius };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(LabError::DimensionTooSmall(self.n));
        }
        let all = [self.mu, self.a, self.b, self.p, self.q, self.kappa, self.radius];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(LabError::InvalidParams("all coefficients must be finite".into()));
        }
        if self.kappa < 0.0 {
            return Err(LabError::InvalidParams(format!("kappa = {} must be >= 0", self.kappa)));
        }
        if self.radius <= 0.0 {
            return Err(LabError::InvalidParams(format!("R = {} must be > 0", self.radius)));
        }
        if self.p < -1.0 {
            return Err(LabError::InvalidParams(format!("p = {} must be >= -1", self.p)));
        }
        if self.q < 1.0 {
            return Err(LabError::InvalidParams(format!("q = {} must be >= 1", self.q)));
        }
        Ok(())
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `μ + a·t^p + b·t^{−q}`; a positive constant `t` solves the equation iff
    /// this vanishes.
    pub fn constant_condition(&self, t: f64) -> f64 {
        self.mu + self.a * t.powf(self.p) + self.b * t.powf(-self.q)
    }

    /// Nonlinearity `μv + a·v^{p+1} + b·v^{1−q}`.
    pub fn nonlinearity(&self, v: f64) -> f64 {
        self.mu * v + self.a * v.powf(self.p + 1.0) + self.b * v.powf(1.0 - self.q)
    }

    /// Derivative of [`Params::nonlinearity`] with respect to `v`.
    pub fn nonlinearity_dv(&self, v: f64) -> f64 {
        self.mu + self.a * (self.p + 1.0) * v.powf(self.p) + self.b * (1.0 - self.q) * v.powf(-self.q)
    }

    /// True when `(p, q)` are the Einstein-scalar field exponents
    /// `p = 4/(n−2)`, `q = 4(n−1)/(n−2)`.
    pub fn has_einstein_scalar_exponents(&self) -> bool {
        let n = self.nf();
        let p_esf = 4.0 / (n - 2.0);
        let q_esf = 4.0 * (n - 1.0) / (n - 2.0);
        (self.p - p_esf).abs() <= EXPONENT_MATCH_TOL * p_esf
            && (self.q - q_esf).abs() <= EXPONENT_MATCH_TOL * q_esf
    }
}

fn check_dimension(n: u32) -> Result<f64> {
    if n < 3 {
        Err(LabError::DimensionTooSmall(n))
    } else {
        Ok(n as f64)
    }
}

/// Sobolev exponent `λ = n/(n−2)`.
pub fn lambda_exponent(n: u32) -> Result<f64> {
    let nf = check_dimension(n)?;
    Ok(nf / (nf - 2.0))
}

/// `y(ι) = (2(ι−1)(n−1)+n) / (2(2ι−1))`, decreasing from `n/2` at `ι = 1`
/// to `(n−1)/2` as `ι → ∞`.
pub fn y_coefficient(n: u32, iota: f64) -> Result<f64> {
    let nf = check_dimension(n)?;
    if !(iota >= 1.0) {
        return Err(LabError::InvalidIota(iota));
    }
    if iota.is_infinite() {
        return Ok((nf - 1.0) / 2.0);
    }
    Ok((2.0 * (iota - 1.0) * (nf - 1.0) + nf) / (2.0 * (2.0 * iota - 1.0)))
}

/// `ρ(n,p,ι) = 2/(n−1) − y(ι)·(2/(n−1) − p)²`. May be negative.
pub fn rho(n: u32, p: f64, iota: f64) -> Result<f64> {
    if p < 0.0 {
        return Err(LabError::InvalidExponent(p));
    }
    let y = y_coefficient(n, iota)?;
    let two_over = 2.0 / (n as f64 - 1.0);
    let gap = two_over - p;
    Ok(two_over - y * gap * gap)
}

/// `ρ∞(n,p) = lim_{ι→∞} ρ(n,p,ι) = 2/(n−1) − (n−1)/2·(2/(n−1) − p)²`.
pub fn rho_limit(n: u32, p: f64) -> Result<f64> {
    let nf = check_dimension(n)?;
    let two_over = 2.0 / (nf - 1.0);
    let gap = two_over - p;
    Ok(two_over - 0.5 * (nf - 1.0) * gap * gap)
}

/// Smallest integer `ι ≥ 1` with `ρ(n,p,ι) ≥ ½·ρ∞(n,p)`, valid for
/// `0 < p < 4/(n−1)`. Returns `(ι, ρ(n,p,ι))`.
pub fn choose_iota(n: u32, p: f64) -> Result<(f64, f64)> {
    let nf = check_dimension(n)?;
    let upper = 4.0 / (nf - 1.0);
    if !(p > 0.0 && p < upper) {
        return Err(LabError::OutOfRegime(format!(
            "p = {p} outside (0, 4/(n-1) = {upper})"
        )));
    }
    let limit = rho_limit(n, p)?;
    if !(limit > 0.0) {
        return Err(LabError::OutOfRegime(format!("rho_infinity({n}, {p}) = {limit} <= 0")));
    }
    let target = 0.5 * limit;
    let gap = 2.0 / (nf - 1.0) - p;
    // ρ(ι) = ρ∞ − gap²/(2(2ι−1)), so the rule is 2ι − 1 ≥ gap²/ρ∞.
    let mut iota = ((gap * gap / limit + 1.0) / 2.0).ceil().max(1.0);
    while rho(n, p, iota)? < target {
        iota += 1.0;
    }
    while iota > 1.0 && rho(n, p, iota - 1.0)? >= target {
        iota -= 1.0;
    }
    Ok((iota, rho(n, p, iota)?))
}

/// `δ = μ / max{−a, −b}` for `a, b > 0` and `max{−a,−b} < μ < 0`.
pub fn delta_ratio(mu: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(LabError::OutOfRegime(format!("need a > 0 and b > 0 (a = {a}, b = {b})")));
    }
    let floor = (-a).max(-b);
    if !(mu < 0.0 && mu > floor) {
        return Err(LabError::OutOfRegime(format!(
            "need max{{-a,-b}} = {floor} < mu < 0 (mu = {mu})"
        )));
    }
    Ok(mu / floor)
}

/// `(ι, α(n,p,δ))`: the same half-gap rule as [`choose_iota`] applied to the
/// effective exponent `p/(1−δ)`.
pub fn alpha_const(n: u32, p: f64, delta: f64) -> Result<(f64, f64)> {
    let nf = check_dimension(n)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(LabError::OutOfRegime(format!("delta = {delta} outside (0, 1)")));
    }
    let upper = 4.0 * (1.0 - delta) / (nf - 1.0);
    if !(p > 0.0 && p < upper) {
        return Err(LabError::OutOfRegime(format!(
            "p = {p} outside (0, 4(1-delta)/(n-1) = {upper})"
        )));
    }
    choose_iota(n, p / (1.0 - delta))
}

/// Which pointwise estimate supplies the `f²` coefficient of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BochnerBranch {
    /// `a(2/(n−1) − p) ≥ 0`, `p ≥ −1`: coefficient `2/(n−1)` for every `ι`.
    NonnegativeCase,
    /// `0 < p < 4/(n−1)`: coefficient `ρ(n,p,ι)` with `ι` from [`choose_iota`].
    SubcriticalCase,
    /// `μ < 0`, `a, b > 0`: coefficient `α(n,p,δ)`.
    NegativeMu,
}

/// The `(ι, coefficient)` pair used by the Moser iteration for given params.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BochnerConstants {
    pub branch: BochnerBranch,
    pub iota: f64,
    /// `ρ̃(n,p)` on the `μ ≥ 0` branches, `α(n,p,δ)` on the `μ < 0` branch.
    pub coefficient: f64,
    pub delta: Option<f64>,
}

/// True when `μ ≥ 0`, `b ≥ 0` and `a(2/(n−1) − p) ≥ 0`.
pub fn in_nonnegative_case(params: &Params) -> bool {
    let two_over = 2.0 / (params.nf() - 1.0);
    params.mu >= 0.0 && params.b >= 0.0 && params.a * (two_over - params.p) >= 0.0 && params.p >= -1.0
}

/// True when `μ ≥ 0`, `b ≥ 0` and `0 < p < 4/(n−1)`.
pub fn in_subcritical_case(params: &Params) -> bool {
    let upper = 4.0 / (params.nf() - 1.0);
    params.mu >= 0.0 && params.b >= 0.0 && params.p > 0.0 && params.p < upper
}

/// True when `a, b > 0`, `max{−a,−b} < μ < 0` and `0 < p < 4(1−δ)/(n−1)`.
pub fn in_negative_mu_case(params: &Params) -> bool {
    match delta_ratio(params.mu, params.a, params.b) {
        Ok(delta) => {
            let upper = 4.0 * (1.0 - delta) / (params.nf() - 1.0);
            params.p > 0.0 && params.p < upper
        }
        Err(_) => false,
    }
}

/// Picks the branch and constants the way the estimates do: the
/// nonnegative case first (it needs no `ι`), then the subcritical case, then
/// the negative-`μ` case.
pub fn bochner_constants(params: &Params) -> Result<BochnerConstants> {
    params.validate()?;
    let n = params.n;
    if in_nonnegative_case(params) {
        return Ok(BochnerConstants {
            branch: BochnerBranch::NonnegativeCase,
            iota: 1.0,
            coefficient: 2.0 / (params.nf() - 1.0),
            delta: None,
        });
    }
    if in_subcritical_case(params) {
        let (iota, tilde_rho) = choose_iota(n, params.p)?;
        return Ok(BochnerConstants {
            branch: BochnerBranch::SubcriticalCase,
            iota,
            coefficient: tilde_rho,
            delta: None,
        });
    }
    if params.mu < 0.0 {
        let delta = delta_ratio(params.mu, params.a, params.b)?;
        let (iota, alpha) = alpha_const(n, params.p, delta)?;
        return Ok(BochnerConstants {
            branch: BochnerBranch::NegativeMu,
            iota,
            coefficient: alpha,
            delta: Some(delta),
        });
    }
    Err(LabError::OutOfRegime(format!(
        "no gradient-estimate hypothesis set matches (n={}, mu={}, a={}, b={}, p={})",
        params.n, params.mu, params.a, params.b, params.p
    )))
}

/// `θ_k` / `r_k` schedules together with the partial sums that control the
/// iteration constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub thetas: Vec<f64>,
    pub radii: Vec<f64>,
    /// `Σ_{i≤k_max} 1/θ_i`, converging to `n/(2θ₁)`.
    pub sum_inv: f64,
    /// `Σ_{i≤k_max} i/θ_i`, converging to `n²/(4θ₁)`.
    pub sum_i_inv: f64,
}

/// `θ₁ = (θ₀+1)λ`, `θ_{k+1} = θ_kλ`, `r_k = R/2 + R/4^k` for `k = 1..=k_max`.
pub fn schedule(n: u32, theta0: f64, radius: f64, k_max: usize) -> Result<Schedule> {
    let lambda = lambda_exponent(n)?;
    let mut thetas = Vec::with_capacity(k_max);
    let mut radii = Vec::with_capacity(k_max);
    let mut theta = (theta0 + 1.0) * lambda;
    let mut quarter = 0.25;
    for _ in 0..k_max {
        thetas.push(theta);
        radii.push(radius / 2.0 + radius * quarter);
        theta *= lambda;
        quarter *= 0.25;
    }
    // Summed smallest-first to keep the rounding error at a few ulps.
    let sum_inv = thetas.iter().rev().map(|t| 1.0 / t).sum();
    let sum_i_inv = thetas
        .iter()
        .enumerate()
        .rev()
        .map(|(i, t)| (i + 1) as f64 / t)
        .sum();
    Ok(Schedule { thetas, radii, sum_inv, sum_i_inv })
}

/// `θ_k` / `r_k` schedule of an existing chain.
pub fn iteration_schedule(chain: &ConstantChain, k_max: usize) -> Result<Schedule> {
    chain.schedule(k_max)
}

pub fn build_constant_chain(params: &Params, c_n: f64) -> Result<ConstantChain> {
    ConstantChain::build(params, c_n)
}

/// Every derived constant of the iteration for one parameter tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantChain {
    pub n: u32,
    pub kappa: f64,
    pub radius: f64,
    pub branch: BochnerBranch,
    pub lambda: f64,
    pub iota: f64,
    /// `ρ(n,p,ι)` at the chosen `ι`; absent when `p < 0`.
    pub rho: Option<f64>,
    /// `ρ̃(n,p)` on the `μ ≥ 0` branches; on the `μ < 0` branch this holds
    /// `α(n,p,δ)`, which plays the same role.
    pub tilde_rho: f64,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub c_n: f64,
    /// `max{c_n, 2ι, 16/ρ̃}`.
    pub c_np: f64,
    /// `c_np·(1 + √κ·R)`.
    pub theta0: f64,
    pub theta_schedule: Vec<f64>,
    pub radius_schedule: Vec<f64>,
}

impl ConstantChain {
    pub fn build(params: &Params, c_n: f64) -> Result<Self> {
        Self::build_with_depth(params, c_n, DEFAULT_K_MAX)
    }

    pub fn build_with_depth(params: &Params, c_n: f64, k_max: usize) -> Result<Self> {
        if !(c_n.is_finite() && c_n >= 0.0) {
            return Err(LabError::InvalidParams(format!("c_n = {c_n} must be finite and >= 0")));
        }
        let consts = bochner_constants(params)?;
        let lambda = lambda_exponent(params.n)?;
        let c_np = c_n.max(2.0 * consts.iota).max(16.0 / consts.coefficient);
        let theta0 = c_np * (1.0 + params.kappa.sqrt() * params.radius);
        let sched = schedule(params.n, theta0, params.radius, k_max)?;
        let rho = if params.p >= 0.0 {
            Some(rho(params.n, params.p, consts.iota)?)
        } else {
            None
        };
        let alpha = match consts.branch {
            BochnerBranch::NegativeMu => Some(consts.coefficient),
            _ => None,
        };
        Ok(ConstantChain {
            n: params.n,
            kappa: params.kappa,
            radius: params.radius,
            branch: consts.branch,
            lambda,
            iota: consts.iota,
            rho,
            tilde_rho: consts.coefficient,
            delta: consts.delta,
            alpha,
            c_n,
            c_np,
            theta0,
            theta_schedule: sched.thetas,
            radius_schedule: sched.radii,
        })
    }

    pub fn schedule(&self, k_max: usize) -> Result<Schedule> {
        schedule(self.n, self.theta0, self.radius, k_max)
    }

    /// Closed-form limits `(n/(2θ₁), n²/(4θ₁))` of the schedule sums.
    pub fn series_limits(&self) -> (f64, f64) {
        let nf = self.n as f64;
        let theta1 = (self.theta0 + 1.0) * self.lambda;
        (nf / (2.0 * theta1), nf * nf / (4.0 * theta1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    GradientBoundHolds,
    NoPositiveSolution,
    ConstantOnly,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TheoremSource {
    #[serde(rename = "Thm1-1")]
    Thm1Case1,
    #[serde(rename = "Thm1-2")]
    Thm1Case2,
    #[serde(rename = "Thm2")]
    Thm2,
    #[serde(rename = "Thm3")]
    Thm3,
    #[serde(rename = "Thm4-1")]
    Thm4Case1,
    #[serde(rename = "Thm4-2")]
    Thm4Case2,
    #[serde(rename = "Cor1-1")]
    Cor1Case1,
    #[serde(rename = "Cor1-2")]
    Cor1Case2,
    #[serde(rename = "Cor1-3")]
    Cor1Case3,
    #[serde(rename = "Cor1-const")]
    Cor1Constant,
    #[serde(rename = "Cor2")]
    Cor2,
    None,
}

impl TheoremSource {
    pub fn tag(&self) -> &'static str {
        match self {
            TheoremSource::Thm1Case1 => "Thm1-1",
            TheoremSource::Thm1Case2 => "Thm1-2",
            TheoremSource::Thm2 => "Thm2",
            TheoremSource::Thm3 => "Thm3",
            TheoremSource::Thm4Case1 => "Thm4-1",
            TheoremSource::Thm4Case2 => "Thm4-2",
            TheoremSource::Cor1Case1 => "Cor1-1",
            TheoremSource::Cor1Case2 => "Cor1-2",
            TheoremSource::Cor1Case3 => "Cor1-3",
            TheoremSource::Cor1Constant => "Cor1-const",
            TheoremSource::Cor2 => "Cor2",
            TheoremSource::None => "None",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub verdict: Verdict,
    pub theorem_source: TheoremSource,
    pub notes: String,
}

impl RegimeReport {
    fn new(verdict: Verdict, theorem_source: TheoremSource, notes: impl Into<String>) -> Self {
        RegimeReport { verdict, theorem_source, notes: notes.into() }
    }
}

/// Maps a parameter tuple to the strongest conclusion the theorems give.
///
/// `κ = 0` is read as the Liouville setting (noncompact, Ric ≥ 0) and yields
/// nonexistence or constancy verdicts; `κ > 0` yields the local gradient
/// bound whenever its hypotheses hold. Invalid tuples classify as `Unknown`.
pub fn classify_regime(params: &Params) -> RegimeReport {
    if let Err(e) = params.validate() {
        return RegimeReport::new(Verdict::Unknown, TheoremSource::None, format!("invalid parameters: {e}"));
    }
    let esf = params.has_einstein_scalar_exponents();
    let nonneg = in_nonnegative_case(params);
    let subcrit = in_subcritical_case(params);
    let negmu = in_negative_mu_case(params);
    let (mu, a, b, p) = (params.mu, params.a, params.b, params.p);
    let upper = 4.0 / (params.nf() - 1.0);

    if params.kappa > 0.0 {
        if (nonneg || subcrit) && esf {
            return RegimeReport::new(
                Verdict::GradientBoundHolds,
                TheoremSource::Thm3,
                "Einstein-scalar exponents with mu >= 0, a <= 0, b >= 0",
            );
        }
        if nonneg {
            return RegimeReport::new(
                Verdict::GradientBoundHolds,
                TheoremSource::Thm1Case1,
                "a(2/(n-1) - p) >= 0, p >= -1, mu >= 0, b >= 0",
            );
        }
        if subcrit {
            return RegimeReport::new(
                Verdict::GradientBoundHolds,
                TheoremSource::Thm1Case2,
                "0 < p < 4/(n-1), mu >= 0, b >= 0",
            );
        }
        if negmu {
            return RegimeReport::new(
                Verdict::GradientBoundHolds,
                TheoremSource::Thm2,
                "a, b > 0, max{-a,-b} < mu < 0, 0 < p < 4(1-delta)/(n-1)",
            );
        }
        return RegimeReport::new(Verdict::Unknown, TheoremSource::None, "no hypothesis set matches");
    }

    // κ = 0: noncompact manifold with nonnegative Ricci curvature.
    if mu >= 0.0 && b >= 0.0 {
        if a > 0.0 && p >= -1.0 && p < upper {
            return RegimeReport::new(
                Verdict::NoPositiveSolution,
                TheoremSource::Cor1Case1,
                "a > 0 and -1 <= p < 4/(n-1)",
            );
        }
        if a == 0.0 && mu + b != 0.0 {
            let src = if esf { TheoremSource::Thm4Case1 } else { TheoremSource::Cor1Case2 };
            return RegimeReport::new(Verdict::NoPositiveSolution, src, "a = 0 and mu + b != 0");
        }
        if a < 0.0 && mu == 0.0 && b == 0.0 && p > 0.0 {
            let src = if esf { TheoremSource::Thm4Case2 } else { TheoremSource::Cor1Case3 };
            return RegimeReport::new(Verdict::NoPositiveSolution, src, "a < 0, mu = b = 0, p > 0");
        }
        if a < 0.0 && mu + b != 0.0 && p > 0.0 {
            let src = if esf { TheoremSource::Thm3 } else { TheoremSource::Cor1Constant };
            return RegimeReport::new(
                Verdict::ConstantOnly,
                src,
                "a < 0, p > 0, mu + b != 0: entire positive solutions are constant; \
                 existence of the constant is not decided",
            );
        }
        if nonneg || subcrit {
            let src = if esf {
                TheoremSource::Thm3
            } else if nonneg {
                TheoremSource::Thm1Case1
            } else {
                TheoremSource::Thm1Case2
            };
            return RegimeReport::new(
                Verdict::ConstantOnly,
                src,
                "gradient bound with R -> infinity forces entire positive solutions to be constant",
            );
        }
        return RegimeReport::new(Verdict::Unknown, TheoremSource::None, "no hypothesis set matches");
    }

    if mu < 0.0 {
        if negmu {
            return RegimeReport::new(
                Verdict::NoPositiveSolution,
                TheoremSource::Cor2,
                "a, b > 0, max{-a,-b} < mu < 0, 0 < p < 4(1-delta)/(n-1)",
            );
        }
        if p == 0.0 && delta_ratio(mu, a, b).is_ok() {
            return RegimeReport::new(
                Verdict::Unknown,
                TheoremSource::Cor2,
                "p = 0 endpoint: the nonexistence statement allows p >= 0 but the gradient \
                 bound it rests on needs p > 0; not asserted",
            );
        }
    }
    RegimeReport::new(Verdict::Unknown, TheoremSource::None, "no hypothesis set matches")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    /// Brute-force search for the half-gap rule, independent of the
    /// closed-form starting guess in `choose_iota`.
    fn brute_iota(n: u32, p: f64) -> f64 {
        let nf = n as f64;
        let gap = 2.0 / (nf - 1.0) - p;
        let limit = 2.0 / (nf - 1.0) - (nf - 1.0) / 2.0 * gap * gap;
        let mut iota = 1.0;
        loop {
            let y = (2.0 * (iota - 1.0) * (nf - 1.0) + nf) / (2.0 * (2.0 * iota - 1.0));
            if 2.0 / (nf - 1.0) - y * gap * gap >= 0.5 * limit {
                return iota;
            }
            iota += 1.0;
        }
    }

    #[test]
    fn lambda_values() {
        assert_eq!(lambda_exponent(3).unwrap(), 3.0);
        assert_eq!(lambda_exponent(4).unwrap(), 2.0);
        assert_eq!(lambda_exponent(2), Err(LabError::DimensionTooSmall(2)));
    }

    #[test]
    fn y_coefficient_values() {
        assert_eq!(y_coefficient(3, 1.0).unwrap(), 1.5);
        assert!(close(y_coefficient(3, 2.0).unwrap(), 7.0 / 6.0, 1e-15));
        assert_eq!(y_coefficient(3, f64::INFINITY).unwrap(), 1.0);
        assert!(close(y_coefficient(3, 1e12).unwrap(), 1.0, 1e-11));
        assert_eq!(y_coefficient(3, 0.5), Err(LabError::InvalidIota(0.5)));
    }

    #[test]
    fn rho_values() {
        assert_eq!(rho(3, 1.0, 1.0).unwrap(), 1.0);
        assert!(close(rho(3, 0.5, 1.0).unwrap(), 0.625, 1e-15));
        assert!(close(rho(3, 0.5, f64::INFINITY).unwrap(), 0.75, 1e-15));
        assert_eq!(rho(3, -0.5, 1.0), Err(LabError::InvalidExponent(-0.5)));
    }

    #[test]
    fn choose_iota_examples() {
        assert_eq!(choose_iota(3, 1.0).unwrap(), (1.0, 1.0));
        // brute force: ρ(3,0.1,ι) = 1 − 0.81·(4ι−1)/(4ι−2) ≥ 0.095 first at ι = 3
        let (iota, tr) = choose_iota(3, 0.1).unwrap();
        assert_eq!(iota, 3.0);
        assert_eq!(iota, brute_iota(3, 0.1));
        assert!(close(tr, 1.0 - 0.81 * 11.0 / 10.0, 1e-14));
        assert!(matches!(choose_iota(3, 2.0), Err(LabError::OutOfRegime(_))));
        assert!(matches!(choose_iota(3, 0.0), Err(LabError::OutOfRegime(_))));
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_ratio(-1.0, 2.0, 3.0).unwrap(), 0.5);
        assert!(matches!(delta_ratio(-2.0, 2.0, 3.0), Err(LabError::OutOfRegime(_))));
        let d = delta_ratio(-1e-12, 1.0, 1.0).unwrap();
        assert!(d > 0.0 && d < 1e-11);
        assert!(delta_ratio(0.0, 1.0, 1.0).is_err());
        assert!(delta_ratio(-0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_const(3, 0.5, 0.5).unwrap(), (1.0, 1.0));
        let (iota, alpha) = alpha_const(3, 0.05, 0.5).unwrap();
        let (iota2, rho2) = choose_iota(3, 0.1).unwrap();
        assert_eq!(iota, iota2);
        assert!(close(alpha, rho2, 1e-14));
        assert!(matches!(alpha_const(4, 1.0, 0.5), Err(LabError::OutOfRegime(_))));
    }

    #[test]
    fn chain_examples() {
        let p = Params::new(3, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        let c = ConstantChain::build(&p, 1.0).unwrap();
        assert_eq!(c.c_np, 16.0);
        assert_eq!(c.theta0, 16.0);
        let pk = Params { kappa: 1.0, ..p };
        assert_eq!(ConstantChain::build(&pk, 1.0).unwrap().theta0, 32.0);
        let c20 = ConstantChain::build(&p, 20.0).unwrap();
        assert_eq!((c20.c_np, c20.theta0), (20.0, 20.0));
    }

    #[test]
    fn schedule_examples() {
        let s = schedule(3, 9.0, 1.0, 2).unwrap();
        assert_eq!(s.thetas, vec![30.0, 90.0]);
        assert_eq!(s.radii, vec![0.75, 0.5625]);
        let s = schedule(3, 9.0, 1.0, 60).unwrap();
        assert!((s.sum_inv - 0.05).abs() < 1e-15);
        assert!((s.sum_i_inv - 0.075).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        let r = classify_regime(&Params::new(3, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0).unwrap());
        assert_eq!((r.verdict, r.theorem_source), (Verdict::NoPositiveSolution, TheoremSource::Cor1Case1));
        let r = classify_regime(&Params::new(3, 1.0, -1.0, 1.0, 1.0, 2.0, 0.0, 1.0).unwrap());
        assert_eq!((r.verdict, r.theorem_source), (Verdict::ConstantOnly, TheoremSource::Cor1Constant));
        let r = classify_regime(&Params::new(4, -1.0, 2.0, 3.0, 0.5, 1.0, 0.0, 1.0).unwrap());
        assert_eq!((r.verdict, r.theorem_source), (Verdict::NoPositiveSolution, TheoremSource::Cor2));
    }

    #[test]
    fn p_zero_endpoint_is_flagged_not_asserted() {
        let r = classify_regime(&Params::new(4, -1.0, 2.0, 3.0, 0.0, 1.0, 0.0, 1.0).unwrap());
        assert_eq!((r.verdict, r.theorem_source), (Verdict::Unknown, TheoremSource::Cor2));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(Params::new(2, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(Params::new(3, 0.0, 1.0, 0.0, -1.5, 1.0, 0.0, 1.0).is_err());
        assert!(Params::new(3, 0.0, 1.0, 0.0, 1.0, 0.5, 0.0, 1.0).is_err());
        assert!(Params::new(3, 0.0, 1.0, 0.0, 1.0, 1.0, -1.0, 1.0).is_err());
        assert!(Params::new(3, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn y_bounds_and_monotone(n in 3u32..40, iota in 1.0f64..1e6, step in 0.0f64..100.0) {
                let nf = n as f64;
                let y = y_coefficient(n, iota).unwrap();
                prop_assert!(y >= (nf - 1.0) / 2.0 - 1e-12);
                prop_assert!(y <= nf / 2.0 + 1e-12);
                prop_assert!(y_coefficient(n, iota + step).unwrap() <= y + 1e-12);
            }

            #[test]
            fn rho_at_balanced_exponent(n in 3u32..40, iota in 1.0f64..1e8) {
                let two_over = 2.0 / (n as f64 - 1.0);
                prop_assert_eq!(rho(n, two_over, iota).unwrap(), two_over);
            }

            #[test]
            fn choose_iota_matches_brute_force(n in 3u32..12, frac in 0.02f64..0.98) {
                let p = frac * 4.0 / (n as f64 - 1.0);
                let (iota, tr) = choose_iota(n, p).unwrap();
                prop_assert!(tr > 0.0);
                prop_assert_eq!(iota, brute_iota(n, p));
            }

            #[test]
            fn chain_invariants(n in 3u32..10, frac in 0.01f64..0.99, kappa in 0.0f64..4.0,
                                radius in 0.1f64..50.0, c_n in 0.0f64..100.0) {
                let p = frac * 4.0 / (n as f64 - 1.0);
                let params = Params::new(n, 0.0, 1.0, 0.0, p, 1.0, kappa, radius).unwrap();
                let c = ConstantChain::build(&params, c_n).unwrap();
                prop_assert!(c.lambda > 1.0);
                prop_assert!(c.tilde_rho > 0.0 && c.tilde_rho <= 2.0 / (n as f64 - 1.0) + 1e-15);
                prop_assert!(c.c_np >= 16.0 / c.tilde_rho);
                prop_assert!(16.0 / c.tilde_rho >= 8.0 * (n as f64 - 1.0) - 1e-9);
                prop_assert!(c.theta0 >= c.c_np);
                for w in c.theta_schedule.windows(2) { prop_assert!(w[1] > w[0]); }
                for w in c.radius_schedule.windows(2) { prop_assert!(w[1] < w[0]); }
                prop_assert!(c.radius_schedule.iter().all(|&r| r > radius / 2.0));
            }

            #[test]
            fn classifier_is_total(n in 3u32..12, mu in -5.0f64..5.0, a in -5.0f64..5.0,
                                   b in -5.0f64..5.0, p in -1.0f64..6.0, q in 1.0f64..10.0,
                                   kappa in prop_oneof![Just(0.0), 0.0f64..3.0]) {
                let params = Params { n, mu, a, b, p, q, kappa, radius: 1.0 };
                let r1 = classify_regime(&params);
                let r2 = classify_regime(&params);
                prop_assert_eq!(&r1, &r2);
                if matches!(r1.verdict, Verdict::NoPositiveSolution | Verdict::ConstantOnly) {
                    prop_assert_eq!(kappa, 0.0);
                }
            }
        }
    }
}
