//! Einstein-scalar field constants, the exponent map onto the general
//! equation, the conformal covariance of `L = Δ − c(n)·R`, and the `σ²`
//! rescaling.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::manifold::ModelManifold;
use crate::params::Params;

/// Relative spread above which curvature samples count as nonconstant.
const CURVATURE_SPREAD_TOL: f64 = 1e-12;
/// Default number of nodes used by [`conformal_identity_residual`].
pub const IDENTITY_POINTS: usize = 400;

fn dimension(n: u32) -> Result<f64> {
    if n < 3 {
        Err(LabError::DimensionTooSmall(n))
    } else {
        Ok(n as f64)
    }
}

/// `(c(n), α, γ) = ((n−2)/(4(n−1)), (n+2)/(n−2), (3n−2)/(n−2))`.
pub fn conformal_constants(n: u32) -> Result<(f64, f64, f64)> {
    let nf = dimension(n)?;
    Ok(((nf - 2.0) / (4.0 * (nf - 1.0)), (nf + 2.0) / (nf - 2.0), (3.0 * nf - 2.0) / (nf - 2.0)))
}

/// `(p, q) = (4/(n−2), 4(n−1)/(n−2))`.
pub fn lichnerowicz_exponents(n: u32) -> Result<(f64, f64)> {
    let nf = dimension(n)?;
    Ok((4.0 / (nf - 2.0), 4.0 * (nf - 1.0) / (nf - 2.0)))
}

/// Data of `L_g φ = β·φ^α − σ²·φ^{−γ}` with constant `β`, `σ²` and scalar
/// curvature `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalParams {
    pub n: u32,
    pub c_conf: f64,
    pub alpha_conf: f64,
    pub gamma_conf: f64,
    pub beta: f64,
    pub sigma2: f64,
    pub scalar_curv: f64,
}

impl ConformalParams {
    pub fn new(n: u32, beta: f64, sigma2: f64, scalar_curv: f64) -> Result<Self> {
        let (c_conf, alpha_conf, gamma_conf) = conformal_constants(n)?;
        if !(beta.is_finite() && sigma2.is_finite() && scalar_curv.is_finite()) {
            return Err(LabError::InvalidParams("beta, sigma2 and R must be finite".into()));
        }
        if sigma2 < 0.0 {
            return Err(LabError::InvalidParams(format!("sigma2 = {sigma2} must be >= 0")));
        }
        Ok(ConformalParams { n, c_conf, alpha_conf, gamma_conf, beta, sigma2, scalar_curv })
    }

    /// Like [`ConformalParams::new`], taking the scalar curvature as samples
    /// over the ball, which must agree.
    pub fn with_curvature_samples(n: u32, beta: f64, sigma2: f64, samples: &[f64]) -> Result<Self> {
        let first = *samples.first().ok_or(LabError::NonconstantCurvature)?;
        let scale = samples.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if samples.iter().any(|x| (x - first).abs() > CURVATURE_SPREAD_TOL * scale) {
            return Err(LabError::NonconstantCurvature);
        }
        Self::new(n, beta, sigma2, first)
    }

    /// Residual of the constant `t` in `L φ − βφ^α + σ²φ^{−γ} = 0` on a
    /// background of scalar curvature `R`.
    pub fn constant_residual(&self, t: f64) -> f64 {
        -self.c_conf * self.scalar_curv * t - self.beta * t.powf(self.alpha_conf)
            + self.sigma2 * t.powf(-self.gamma_conf)
    }
}

/// Moves `Δφ − cRφ = βφ^α − σ²φ^{−γ}` to `Δv + μv + av^{p+1} + bv^{1−q} = 0`:
/// `μ = −c(n)R`, `a = −β`, `b = σ²`, with the Einstein-scalar exponents.
/// `κ = 0` and `R = 1` are placeholders for the caller to override.
pub fn map_to_general_equation(cp: &ConformalParams) -> Result<Params> {
    let (p, q) = lichnerowicz_exponents(cp.n)?;
    let mu = -cp.c_conf * cp.scalar_curv;
    // -c·0 would be -0.0.
    let mu = if mu == 0.0 { 0.0 } else { mu };
    Params::new(cp.n, mu, -cp.beta, cp.sigma2, p, q, 0.0, 1.0)
}

/// Largest gap between the two forms' residuals at the constants `ts`,
/// relative to the size of the terms. Zero up to rounding when the sign
/// convention of [`map_to_general_equation`] is consistent.
pub fn mapping_convention_gap(cp: &ConformalParams, ts: &[f64]) -> Result<f64> {
    let params = map_to_general_equation(cp)?;
    Ok(ts
        .iter()
        .map(|&t| {
            let general = params.nonlinearity(t);
            let conformal = cp.constant_residual(t);
            let scale = (cp.c_conf * cp.scalar_curv * t).abs()
                + (cp.beta * t.powf(cp.alpha_conf)).abs()
                + (cp.sigma2 * t.powf(-cp.gamma_conf)).abs();
            if scale == 0.0 {
                (general - conformal).abs()
            } else {
                (general - conformal).abs() / scale
            }
        })
        .fold(0.0, f64::max))
}

/// `σ²·u^{−(γ+α)}`.
pub fn sigma_transform(sigma2: f64, u_value: f64, n: u32) -> Result<f64> {
    let (_, alpha, gamma) = conformal_constants(n)?;
    if !(u_value > 0.0) {
        return Err(LabError::PositivityViolated(u_value));
    }
    if sigma2 < 0.0 {
        return Err(LabError::InvalidParams(format!("sigma2 = {sigma2} must be >= 0")));
    }
    Ok(sigma2 * u_value.powf(-(gamma + alpha)))
}

/// Scalar curvature of the model space: `−n(n−1)κ`.
pub fn model_scalar_curvature(m: &ModelManifold) -> f64 {
    let nf = m.nf();
    let r = -nf * (nf - 1.0) * m.kappa;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// `(c(n), α, γ)` as exact fractions.
pub fn conformal_constants_exact(n: u32) -> Result<(Ratio<i64>, Ratio<i64>, Ratio<i64>)> {
    dimension(n)?;
    let n = i64::from(n);
    Ok((Ratio::new(n - 2, 4 * (n - 1)), Ratio::new(n + 2, n - 2), Ratio::new(3 * n - 2, n - 2)))
}

/// `(p, q)` as exact fractions.
pub fn lichnerowicz_exponents_exact(n: u32) -> Result<(Ratio<i64>, Ratio<i64>)> {
    dimension(n)?;
    let n = i64::from(n);
    Ok((Ratio::new(4, n - 2), Ratio::new(4 * (n - 1), n - 2)))
}

/// Closed-form radial functions with exact first and second derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RadialFunction {
    Constant { value: f64 },
    /// `Σ c_k r^{2k}`.
    EvenPolynomial { coeffs: Vec<f64> },
    /// `scale·(1 + λr²)^{−exponent}`.
    Bubble { scale: f64, lambda: f64, exponent: f64 },
    /// `offset + amplitude·e^{−r²/width²}`.
    Gaussian { offset: f64, amplitude: f64, width: f64 },
}

impl RadialFunction {
    /// `(f, f', f'')` at `r`.
    pub fn jet(&self, r: f64) -> [f64; 3] {
        match self {
            RadialFunction::Constant { value } => [*value, 0.0, 0.0],
            RadialFunction::EvenPolynomial { coeffs } => {
                let mut out = [0.0; 3];
                for (k, &c) in coeffs.iter().enumerate() {
                    let e = 2 * k as i32;
                    out[0] += c * r.powi(e);
                    if k > 0 {
                        out[1] += c * e as f64 * r.powi(e - 1);
                        out[2] += c * (e * (e - 1)) as f64 * r.powi(e - 2);
                    }
                }
                out
            }
            RadialFunction::Bubble { scale, lambda, exponent } => {
                let g = 1.0 + lambda * r * r;
                let dg = 2.0 * lambda * r;
                let e = *exponent;
                [
                    scale * g.powf(-e),
                    -scale * e * g.powf(-e - 1.0) * dg,
                    -scale * e * ((-e - 1.0) * g.powf(-e - 2.0) * dg * dg + g.powf(-e - 1.0) * 2.0 * lambda),
                ]
            }
            RadialFunction::Gaussian { offset, amplitude, width } => {
                let w2 = width * width;
                let e = amplitude * (-r * r / w2).exp();
                [offset + e, -2.0 * r / w2 * e, (4.0 * r * r / (w2 * w2) - 2.0 / w2) * e]
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r)[0]
    }
}

/// Both sides of `L_g(uφ) = u^α·L_ĝ(φ)` at one radius, `ĝ = u^{4/(n−2)}g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSides {
    pub lhs: f64,
    pub rhs: f64,
    /// Sum of the magnitudes of the terms on both sides.
    pub scale: f64,
    /// Scalar curvature of `ĝ`.
    pub scalar_curv_hat: f64,
}

/// Evaluates both sides at `r > 0` from the jets of `u` and `φ`.
///
/// `ĝ` is written as `A²dr² + B²g_{S^{n−1}}` with `A = u^{2/(n−2)}` and
/// `B = A·s`, so its Laplacian is `A^{−2}(φ'' + φ'((n−1)B'/B − A'/A))` and
/// its scalar curvature comes from the warped-product formula in the
/// arclength `dρ = A dr`.
pub fn covariance_sides(m: &ModelManifold, u: [f64; 3], phi: [f64; 3], r: f64) -> Result<CovarianceSides> {
    let (c, alpha, _) = conformal_constants(m.n)?;
    if !(u[0] > 0.0) {
        return Err(LabError::PositivityViolated(r));
    }
    let nf = m.nf();
    let big_r = model_scalar_curvature(m);
    let (s, ds, dds) = (m.s(r), m.ds(r), m.dds(r));

    let w = [u[0] * phi[0], u[1] * phi[0] + u[0] * phi[1], u[2] * phi[0] + 2.0 * u[1] * phi[1] + u[0] * phi[2]];
    let lap_bg = w[2] + (nf - 1.0) * ds / s * w[1];
    let lhs = lap_bg - c * big_r * w[0];

    let e = 2.0 / (nf - 2.0);
    let a0 = u[0].powf(e);
    let a1 = e * u[0].powf(e - 1.0) * u[1];
    let a2 = e * ((e - 1.0) * u[0].powf(e - 2.0) * u[1] * u[1] + u[0].powf(e - 1.0) * u[2]);
    let b0 = a0 * s;
    let b1 = a1 * s + a0 * ds;
    let b2 = a2 * s + 2.0 * a1 * ds + a0 * dds;

    let lap_hat = (phi[2] + phi[1] * ((nf - 1.0) * b1 / b0 - a1 / a0)) / (a0 * a0);
    let b_rho_rho = (b2 / a0 - b1 * a1 / (a0 * a0)) / a0;
    // 1 − B_ρ² expanded with 1 − s'² = −κs² to avoid cancellation near r = 0.
    let la = a1 / a0;
    let one_minus_b_rho_sq_over_b_sq = (-m.kappa - 2.0 * ds * la / s - la * la) / (a0 * a0);
    let r_hat = -2.0 * (nf - 1.0) * b_rho_rho / b0 + (nf - 1.0) * (nf - 2.0) * one_minus_b_rho_sq_over_b_sq;
    let ua = u[0].powf(alpha);
    let rhs = ua * (lap_hat - c * r_hat * phi[0]);
    let scale = w[2].abs()
        + ((nf - 1.0) * ds / s * w[1]).abs()
        + (c * big_r * w[0]).abs()
        + ua * ((phi[2] / (a0 * a0)).abs() + lap_hat.abs() + (c * r_hat * phi[0]).abs());
    Ok(CovarianceSides { lhs, rhs, scale, scalar_curv_hat: r_hat })
}

/// Largest normalized residual of `L_g(uφ) − u^α L_ĝ(φ)` over
/// [`IDENTITY_POINTS`] nodes of `(0, R]`.
pub fn conformal_identity_residual(m: &ModelManifold, u: &RadialFunction, phi: &RadialFunction, radius: f64) -> Result<f64> {
    conformal_identity_residual_with(m, |r| u.jet(r), |r| phi.jet(r), radius, IDENTITY_POINTS)
}

pub fn conformal_identity_residual_with(
    m: &ModelManifold,
    u: impl Fn(f64) -> [f64; 3],
    phi: impl Fn(f64) -> [f64; 3],
    radius: f64,
    points: usize,
) -> Result<f64> {
    if !(radius > 0.0) || points == 0 {
        return Err(LabError::InvalidParams(format!("need R > 0 and points > 0 (R = {radius})")));
    }
    let mut worst: f64 = 0.0;
    for i in 1..=points {
        let r = radius * i as f64 / points as f64;
        let ju = u(r);
        if !(ju[0] > 0.0) {
            return Err(LabError::PositivityViolated(r));
        }
        let sides = covariance_sides(m, ju, phi(r), r)?;
        let gap = (sides.lhs - sides.rhs).abs();
        let res = if sides.scale > 0.0 { gap / sides.scale } else { gap };
        worst = worst.max(res);
    }
    Ok(worst)
}
