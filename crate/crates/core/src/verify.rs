//! Pointwise checks of the Bochner-type inequalities for `f = |∇u|²` and
//! of the half-ball gradient bound, evaluated on radial log profiles.
//!
//! Radially, `Δf = f'' + c(r)f'`, `|∇f|² = f'²` and `⟨∇u, ∇f⟩ = u'f'`, with
//! `c = (n−1)s'/s` from the model manifold.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::params::{
    alpha_const, delta_ratio, in_negative_mu_case, in_nonnegative_case, in_subcritical_case, rho,
    y_coefficient, BochnerBranch, ConstantChain, Params,
};
use crate::solver::LogProfile;

pub const DEFAULT_F_SKIP: f64 = 1e-8;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Slack for the gradient-bound comparison, which is a plain `≤` between
/// two computed numbers.
pub const GRADIENT_BOUND_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaId {
    #[serde(rename = "L2_1")]
    L2_1,
    #[serde(rename = "L2_2_case1")]
    L2_2Case1,
    #[serde(rename = "L2_2_case2")]
    L2_2Case2,
    #[serde(rename = "L2_3")]
    L2_3,
    #[serde(rename = "L4_1")]
    L4_1,
    GradientBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub lemma_id: LemmaId,
    pub points_checked: usize,
    pub points_skipped_f_zero: usize,
    /// Minimum over checked nodes of `(LHS − RHS)/(1 + |LHS| + |RHS|)`;
    /// `+∞` when nothing was checked.
    pub worst_margin: f64,
    /// Radius of the worst node.
    pub worst_r: Option<f64>,
    pub passed: bool,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckOptions {
    pub f_skip: f64,
    pub tolerance: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { f_skip: DEFAULT_F_SKIP, tolerance: DEFAULT_TOLERANCE }
    }
}

/// The `f²` coefficient on the right-hand side, which is the only thing that
/// distinguishes the reduced inequalities from each other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhsForm {
    /// Full right side of the first Bochner inequality.
    Full,
    /// `−2(n−1)κf + 2(n−2)/(n−1)·u'f' + coeff·f²`.
    Reduced(f64),
}

/// `Δ(f^ι)/(ι f^{ι−1})` written as `(ι−1)f'²/f + f'' + c·f'`.
pub fn lhs(lp: &LogProfile, i: usize, iota: f64) -> f64 {
    let (f, df, ddf) = (lp.f[i], lp.df[i], lp.ddf[i]);
    let c = lp.manifold.coeff(lp.grid[i]);
    (iota - 1.0) * df * df / f + ddf + c * df
}

/// Right-hand side at node `i` for the given form.
pub fn rhs(lp: &LogProfile, params: &Params, i: usize, iota: f64, form: RhsForm) -> f64 {
    let n = params.nf();
    let nm1 = n - 1.0;
    let (f, du, df, u) = (lp.f[i], lp.du[i], lp.df[i], lp.u[i]);
    let base = -2.0 * nm1 * params.kappa * f + 2.0 * (n - 2.0) / nm1 * du * df;
    match form {
        RhsForm::Full => {
            let ea = (-params.p * u).exp();
            let eb = (params.q * u).exp();
            let x = params.mu + params.a * ea + params.b * eb;
            let cx = 2.0 * (2.0 * iota - 1.0) / (2.0 * (iota - 1.0) * nm1 + n);
            base + 2.0 * f * f / nm1
                + cx * x * x
                + 4.0 * f * x / nm1
                + 2.0 * f * (params.b * params.q * eb - params.a * params.p * ea)
        }
        RhsForm::Reduced(coeff) => base + coeff * f * f,
    }
}

/// Raw `LHS − RHS` at interior nodes with `f > f_skip`; `None` elsewhere.
pub fn raw_margins(lp: &LogProfile, params: &Params, iota: f64, form: RhsForm, f_skip: f64) -> Vec<Option<f64>> {
    let len = lp.len();
    (0..len)
        .map(|i| {
            if i == 0 || i + 1 >= len || !(lp.f[i] > f_skip) {
                None
            } else {
                Some(lhs(lp, i, iota) - rhs(lp, params, i, iota, form))
            }
        })
        .collect()
}

fn check(
    lp: &LogProfile,
    params: &Params,
    iota: f64,
    form: RhsForm,
    id: LemmaId,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    y_coefficient(params.n, iota)?;
    if lp.manifold.kappa > params.kappa {
        return Err(LabError::OutOfRegime(format!(
            "model curvature -{} is below the assumed Ricci bound -(n-1){}",
            lp.manifold.kappa, params.kappa
        )));
    }
    let interior = lp.len().saturating_sub(2);
    let mut checked = 0;
    let mut worst = f64::INFINITY;
    let mut worst_r = None;
    for i in 1..lp.len().saturating_sub(1) {
        if !(lp.f[i] > opts.f_skip) {
            continue;
        }
        checked += 1;
        let l = lhs(lp, i, iota);
        let r = rhs(lp, params, i, iota, form);
        let margin = (l - r) / (1.0 + l.abs() + r.abs());
        // NaN margins count as failures.
        if !(margin >= worst) {
            worst = margin;
            worst_r = Some(lp.grid[i]);
        }
    }
    Ok(CheckReport {
        lemma_id: id,
        points_checked: checked,
        points_skipped_f_zero: interior - checked,
        worst_margin: worst,
        worst_r,
        passed: worst >= -opts.tolerance,
        tolerance: opts.tolerance,
    })
}

pub fn check_lemma_2_1(lp: &LogProfile, params: &Params, iota: f64) -> Result<CheckReport> {
    check_lemma_2_1_with(lp, params, iota, &CheckOptions::default())
}

pub fn check_lemma_2_1_with(lp: &LogProfile, params: &Params, iota: f64, opts: &CheckOptions) -> Result<CheckReport> {
    check(lp, params, iota, RhsForm::Full, LemmaId::L2_1, opts)
}

fn require_lemma_2_hypotheses(params: &Params) -> Result<()> {
    if !(params.mu >= 0.0 && params.b >= 0.0 && params.q >= 1.0) {
        return Err(LabError::OutOfRegime(format!(
            "need mu >= 0, b >= 0, q >= 1 (mu = {}, b = {}, q = {})",
            params.mu, params.b, params.q
        )));
    }
    Ok(())
}

/// The two reduced forms before `ι` is fixed: `2/(n−1)` in case 1,
/// `ρ(n,p,ι)` in case 2.
pub fn check_lemma_2_2(lp: &LogProfile, params: &Params, iota: f64, case: u8, opts: &CheckOptions) -> Result<CheckReport> {
    require_lemma_2_hypotheses(params)?;
    match case {
        1 => {
            if !in_nonnegative_case(params) {
                return Err(LabError::OutOfRegime("need a(2/(n-1) - p) >= 0 and p >= -1".into()));
            }
            let coeff = 2.0 / (params.nf() - 1.0);
            check(lp, params, iota, RhsForm::Reduced(coeff), LemmaId::L2_2Case1, opts)
        }
        2 => {
            if !in_subcritical_case(params) {
                return Err(LabError::OutOfRegime("need 0 < p < 4/(n-1)".into()));
            }
            let coeff = rho(params.n, params.p, iota)?;
            check(lp, params, iota, RhsForm::Reduced(coeff), LemmaId::L2_2Case2, opts)
        }
        other => Err(LabError::InvalidParams(format!("unknown case {other}"))),
    }
}

pub fn check_lemma_2_3(lp: &LogProfile, params: &Params, chain: &ConstantChain) -> Result<CheckReport> {
    check_lemma_2_3_with(lp, params, chain, &CheckOptions::default())
}

pub fn check_lemma_2_3_with(
    lp: &LogProfile,
    params: &Params,
    chain: &ConstantChain,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    require_lemma_2_hypotheses(params)?;
    if !(in_nonnegative_case(params) || in_subcritical_case(params)) {
        return Err(LabError::OutOfRegime("neither case of the reduced estimate applies".into()));
    }
    if chain.branch == BochnerBranch::NegativeMu {
        return Err(LabError::OutOfRegime("chain was built for the negative-mu branch".into()));
    }
    check(lp, params, chain.iota, RhsForm::Reduced(chain.tilde_rho), LemmaId::L2_3, opts)
}

pub fn check_lemma_4_1(lp: &LogProfile, params: &Params, chain: &ConstantChain) -> Result<CheckReport> {
    check_lemma_4_1_with(lp, params, chain, &CheckOptions::default())
}

pub fn check_lemma_4_1_with(
    lp: &LogProfile,
    params: &Params,
    chain: &ConstantChain,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    if !in_negative_mu_case(params) {
        return Err(LabError::OutOfRegime(
            "need a, b > 0, max{-a,-b} < mu < 0 and 0 < p < 4(1-delta)/(n-1)".into(),
        ));
    }
    let delta = delta_ratio(params.mu, params.a, params.b)?;
    let (iota, alpha) = match (chain.branch, chain.alpha) {
        (BochnerBranch::NegativeMu, Some(alpha)) => (chain.iota, alpha),
        _ => alpha_const(params.n, params.p, delta)?,
    };
    check(lp, params, iota, RhsForm::Reduced(alpha), LemmaId::L4_1, opts)
}

/// Every pointwise check whose hypotheses hold for `params`, including the
/// intermediate case forms.
pub fn check_all_lemmas(
    lp: &LogProfile,
    params: &Params,
    chain: &ConstantChain,
    opts: &CheckOptions,
) -> Result<Vec<CheckReport>> {
    let mut out = vec![check_lemma_2_1_with(lp, params, chain.iota, opts)?];
    if require_lemma_2_hypotheses(params).is_ok() {
        if in_nonnegative_case(params) {
            out.push(check_lemma_2_2(lp, params, chain.iota, 1, opts)?);
        }
        if in_subcritical_case(params) {
            out.push(check_lemma_2_2(lp, params, chain.iota, 2, opts)?);
        }
        if in_nonnegative_case(params) || in_subcritical_case(params) {
            out.push(check_lemma_2_3_with(lp, params, chain, opts)?);
        }
    }
    if in_negative_mu_case(params) {
        out.push(check_lemma_4_1_with(lp, params, chain, opts)?);
    }
    Ok(out)
}

fn half_ball_sup(lp: &LogProfile, radius: f64) -> Result<(f64, usize)> {
    if !(radius > 0.0) {
        return Err(LabError::InvalidParams(format!("R = {radius} must be > 0")));
    }
    let half = 0.5 * radius;
    let last = lp.index_through(half).ok_or(LabError::DomainTooSmall {
        needed: half,
        available: lp.grid.last().copied().unwrap_or(0.0),
    })?;
    let sup = lp.f[..=last].iter().copied().fold(0.0, f64::max);
    Ok((sup, last + 1))
}

/// `c_obs = sup_{[0,R/2]} f · R²/(1 + √κR)²`.
pub fn empirical_constant(lp: &LogProfile, radius: f64, kappa: f64) -> Result<f64> {
    let (sup, _) = half_ball_sup(lp, radius)?;
    let scale = 1.0 + kappa.sqrt() * radius;
    Ok(sup * radius * radius / (scale * scale))
}

pub fn check_gradient_bound(lp: &LogProfile, radius: f64, kappa: f64, c_bound: f64) -> Result<CheckReport> {
    if !(c_bound > 0.0) {
        return Err(LabError::InvalidParams(format!("c_bound = {c_bound} must be > 0")));
    }
    let (sup, count) = half_ball_sup(lp, radius)?;
    let scale = 1.0 + kappa.sqrt() * radius;
    let bound = c_bound * scale * scale / (radius * radius);
    let margin = (bound - sup) / (1.0 + bound + sup);
    let worst_r = lp.f[..count]
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |acc, (i, &f)| if f > acc.1 { (i, f) } else { acc })
        .0;
    Ok(CheckReport {
        lemma_id: LemmaId::GradientBound,
        points_checked: count,
        points_skipped_f_zero: 0,
        worst_margin: margin,
        worst_r: Some(lp.grid[worst_r]),
        passed: margin >= -GRADIENT_BOUND_TOLERANCE,
        tolerance: GRADIENT_BOUND_TOLERANCE,
    })
}
