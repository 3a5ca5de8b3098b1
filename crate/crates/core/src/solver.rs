//! Radial shooting for `v'' + (n−1)(s'/s)v' + μv + a·v^{p+1} + b·v^{1−q} = 0`
//! from `v(0) = v0`, `v'(0) = 0`, and the log-transform `u = −ln v`.
//!
//! The integrated state is `(v, w)` with `w = s^{n−1}v'`, which removes the
//! `1/r` coefficient from the right-hand side.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::manifold::ModelManifold;
use crate::ode::{DenseStep, Dopri5};
use crate::params::Params;

/// Normalized tolerance applied to the log-equation residual in
/// [`log_transform`].
pub const LOG_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Bound on [`residual`] for a completed profile.
    pub tol: f64,
    pub rtol: f64,
    pub atol: f64,
    pub v_floor: f64,
    pub v_ceil: f64,
    pub grid_points: usize,
    /// Taylor seed radius as a fraction of `R_max`.
    pub seed_fraction: f64,
    /// Step count on the graded mesh `r_k = R_max·(k/N)³`; `None` selects
    /// adaptive steps. Uniform steps lose order near the regular singular
    /// point at the origin (global error `O(h²)`), the cubic grading keeps
    /// the full fifth order.
    pub fixed_steps: Option<usize>,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            rtol: 1e-12,
            atol: 1e-14,
            v_floor: 1e-10,
            v_ceil: 1e10,
            grid_points: 2001,
            seed_fraction: 1e-4,
            fixed_steps: None,
            max_steps: 2_000_000,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        let positive = [self.tol, self.rtol, self.atol, self.v_floor, self.v_ceil, self.seed_fraction];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(LabError::InvalidParams("solver tolerances and bounds must be finite and > 0".into()));
        }
        if self.v_floor >= self.v_ceil {
            return Err(LabError::InvalidParams("v_floor must be below v_ceil".into()));
        }
        if self.grid_points < 8 {
            return Err(LabError::InvalidParams(format!("grid_points = {} must be >= 8", self.grid_points)));
        }
        if self.seed_fraction >= 0.5 {
            return Err(LabError::InvalidParams("seed_fraction must be < 0.5".into()));
        }
        if self.fixed_steps == Some(0) {
            return Err(LabError::InvalidParams("fixed_steps must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SolveStatus {
    Complete,
    /// `v` reached `v_floor` at `r_star`; the profile stops before it.
    PositivityLost { r_star: f64 },
    CeilingExceeded { r: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionProfile {
    pub grid: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
    pub ddv: Vec<f64>,
    pub params: Params,
    pub manifold: ModelManifold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub profile: SolutionProfile,
    pub status: SolveStatus,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogProfile {
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub ddu: Vec<f64>,
    pub dddu: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    pub ddf: Vec<f64>,
    /// Max normalized residual of `Δu = f + μ + a·e^{−pu} + b·e^{qu}` with
    /// `u''` taken from the differenced `v''`.
    pub eq_residual: f64,
    pub params: Params,
    pub manifold: ModelManifold,
}

impl LogProfile {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn v(&self) -> Vec<f64> {
        self.u.iter().map(|u| (-u).exp()).collect()
    }

    /// `μ + a·e^{−pu} + b·e^{qu}` at node `i`.
    pub fn source(&self, i: usize) -> f64 {
        let p = &self.params;
        p.mu + p.a * (-p.p * self.u[i]).exp() + p.b * (p.q * self.u[i]).exp()
    }

    /// Last node index with `r ≤ radius`, if the grid reaches `radius`.
    pub fn index_through(&self, radius: f64) -> Option<usize> {
        let last = *self.grid.last()?;
        if last < radius * (1.0 - 1e-12) {
            return None;
        }
        Some(self.grid.partition_point(|&r| r <= radius * (1.0 + 1e-12)).saturating_sub(1))
    }
}

/// Fornberg weights for the first derivative at `z` on nodes `x`.
fn first_derivative_weights(z: f64, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![[0.0f64; 2]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Sixth-order differences of an odd function sampled on a uniform grid
/// starting at the origin; one-sided stencils near the far end.
pub fn differentiate_odd(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let n = grid.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let dx = grid[1] - grid[0];
    let width = 7.min(2 * n - 1);
    let half = (width / 2) as isize;
    let sample = |k: isize| -> f64 {
        if k < 0 {
            -values[(-k) as usize]
        } else {
            values[k as usize]
        }
    };
    (0..n)
        .map(|i| {
            let i = i as isize;
            let start = (i - half).min(n as isize - width as isize);
            let offsets: Vec<f64> = (0..width as isize).map(|k| (start + k - i) as f64).collect();
            let w = first_derivative_weights(0.0, &offsets);
            (0..width as isize).map(|k| w[k as usize] * sample(start + k)).sum::<f64>() / dx
        })
        .collect()
}

impl SolutionProfile {
    /// Builds a profile from sampled `v`, `v'` on a uniform grid from 0,
    /// differencing `v'` for `v''`.
    pub fn from_samples(
        params: Params,
        manifold: ModelManifold,
        grid: Vec<f64>,
        v: Vec<f64>,
        dv: Vec<f64>,
    ) -> Result<Self> {
        if grid.len() != v.len() || grid.len() != dv.len() || grid.is_empty() {
            return Err(LabError::InvalidParams("grid, v and dv must have equal nonzero length".into()));
        }
        let ddv = differentiate_odd(&grid, &dv);
        Ok(SolutionProfile { grid, v, dv, ddv, params, manifold })
    }

    /// Samples closed-form `v`, `v'`, `v''` on `grid`.
    pub fn from_closed_form(
        params: Params,
        manifold: ModelManifold,
        grid: Vec<f64>,
        v: impl Fn(f64) -> f64,
        dv: impl Fn(f64) -> f64,
        ddv: impl Fn(f64) -> f64,
    ) -> Self {
        SolutionProfile {
            v: grid.iter().map(|&r| v(r)).collect(),
            dv: grid.iter().map(|&r| dv(r)).collect(),
            ddv: grid.iter().map(|&r| ddv(r)).collect(),
            grid,
            params,
            manifold,
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.grid.last().copied().unwrap_or(0.0)
    }
}

/// Uniform grid `[0, r_max]` with `points` nodes.
pub fn uniform_grid(r_max: f64, points: usize) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points).map(|i| if i + 1 == points { r_max } else { r_max * i as f64 / last }).collect()
}

struct Seed {
    v0: f64,
    v2: f64,
    v4: f64,
}

impl Seed {
    fn new(params: &Params, m: &ModelManifold, v0: f64) -> Self {
        let n = params.nf();
        let v2 = -params.nonlinearity(v0) / (2.0 * n);
        let v4 = -v2 * (params.nonlinearity_dv(v0) + 2.0 * (n - 1.0) * m.kappa / 3.0) / (4.0 * (n + 2.0));
        Seed { v0, v2, v4 }
    }

    fn v(&self, r: f64) -> f64 {
        let r2 = r * r;
        self.v0 + r2 * (self.v2 + r2 * self.v4)
    }

    fn dv(&self, r: f64) -> f64 {
        r * (2.0 * self.v2 + 4.0 * self.v4 * r * r)
    }
}

fn crossing<const D: usize>(step: &DenseStep<D>, level: f64) -> f64 {
    let (mut lo, mut hi) = (step.x0, step.x1());
    let above = step.y0[0] > level;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if (step.interpolate(mid)[0] > level) == above {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn fixed_node(r_max: f64, k: usize, steps: usize) -> f64 {
    if k >= steps {
        return r_max;
    }
    let t = k as f64 / steps as f64;
    r_max * t * t * t
}

/// Shoots from `v(0) = v0` to `r_max`. Positivity loss and ceiling
/// crossings come back as data in [`SolveOutcome::status`].
pub fn solve_radial(
    params: &Params,
    manifold: &ModelManifold,
    v0: f64,
    r_max: f64,
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    params.validate()?;
    opts.validate()?;
    if manifold.n != params.n {
        return Err(LabError::InvalidParams(format!(
            "manifold dimension {} differs from params dimension {}",
            manifold.n, params.n
        )));
    }
    if !(v0.is_finite() && v0 > 0.0) {
        return Err(LabError::InvalidParams(format!("v0 = {v0} must be finite and > 0")));
    }
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(LabError::InvalidParams(format!("R_max = {r_max} must be finite and > 0")));
    }

    let grid = uniform_grid(r_max, opts.grid_points);
    let seed = Seed::new(params, manifold, v0);
    let h0 = match opts.fixed_steps {
        Some(steps) => fixed_node(r_max, 1, steps),
        None => opts.seed_fraction * r_max,
    };
    let m = *manifold;
    let pr = *params;
    let rhs = move |r: f64, y: &[f64; 2]| -> [f64; 2] {
        if !(y[0] > 0.0) {
            return [f64::NAN, f64::NAN];
        }
        let sn = m.density(r);
        [y[1] / sn, -sn * pr.nonlinearity(y[0])]
    };
    let (rtol, atol) = (opts.rtol, opts.atol);
    let scale = move |r: f64, a: &[f64; 2], b: &[f64; 2]| -> [f64; 2] {
        [
            atol + rtol * a[0].abs().max(b[0].abs()),
            atol * m.density(r) + rtol * a[1].abs().max(b[1].abs()),
        ]
    };

    let mut v_out = Vec::with_capacity(grid.len());
    let mut dv_out = Vec::with_capacity(grid.len());
    let mut j = 0;
    while j < grid.len() && grid[j] <= h0 {
        v_out.push(seed.v(grid[j]));
        dv_out.push(seed.dv(grid[j]));
        j += 1;
    }

    let y0 = [seed.v(h0), m.density(h0) * seed.dv(h0)];
    let first_h = match opts.fixed_steps {
        Some(steps) => fixed_node(r_max, 2, steps) - h0,
        None => h0.max(1e-3 * r_max).min(r_max - h0),
    };
    let mut ode = Dopri5::new(rhs, scale, h0, y0, first_h);
    let mut status = SolveStatus::Complete;
    let mut v_max = v0;
    let mut taken = 0usize;
    let mut fixed_index = 1usize;

    while ode.x < r_max && j < grid.len() {
        if taken >= opts.max_steps {
            return Err(LabError::StepFailure { r: ode.x, reason: "step limit reached".into() });
        }
        let attempt = match opts.fixed_steps {
            Some(steps) => {
                fixed_index += 1;
                let target = fixed_node(r_max, fixed_index, steps);
                ode.step_fixed(target - ode.x)
            }
            None => ode.step(r_max),
        };
        taken += 1;
        let step = match attempt {
            Ok(step) => step,
            Err(LabError::StepFailure { r, .. }) if ode.y[0] < 1e-2 * v_max => {
                status = SolveStatus::PositivityLost { r_star: r };
                break;
            }
            Err(e) => return Err(e),
        };
        let mut stop_at = None;
        if step.y1[0] < opts.v_floor {
            let r_star = crossing(&step, opts.v_floor);
            status = SolveStatus::PositivityLost { r_star };
            stop_at = Some(r_star);
        } else if step.y1[0] > opts.v_ceil {
            let r = crossing(&step, opts.v_ceil);
            status = SolveStatus::CeilingExceeded { r };
            stop_at = Some(r);
        }
        let limit = stop_at.unwrap_or(step.x1());
        while j < grid.len() && grid[j] <= limit {
            let r = grid[j];
            let y = if r == step.x1() { step.y1 } else { step.interpolate(r) };
            if stop_at.is_some() && r >= limit {
                break;
            }
            v_out.push(y[0]);
            dv_out.push(y[1] / m.density(r));
            j += 1;
        }
        v_max = v_max.max(step.y1[0]);
        if stop_at.is_some() {
            break;
        }
    }

    let grid: Vec<f64> = grid[..v_out.len()].to_vec();
    let profile = SolutionProfile::from_samples(*params, *manifold, grid, v_out, dv_out)?;
    if status == SolveStatus::Complete {
        let res = residual(&profile);
        if !(res <= opts.tol) {
            return Err(LabError::ResidualExceeded { residual: res, tol: opts.tol });
        }
    }
    Ok(SolveOutcome {
        profile,
        status,
        steps_accepted: ode.stats.accepted,
        steps_rejected: ode.stats.rejected,
    })
}

/// Max over interior nodes of `|Δv + μv + a·v^{p+1} + b·v^{1−q}|` divided by
/// `1 + |μv| + |a|v^{p+1} + |b|v^{1−q}`.
pub fn residual(profile: &SolutionProfile) -> f64 {
    let p = &profile.params;
    let n = profile.len();
    if n < 3 {
        return 0.0;
    }
    (1..n - 1)
        .map(|i| {
            let (r, v) = (profile.grid[i], profile.v[i]);
            let lap = profile.ddv[i] + profile.manifold.coeff(r) * profile.dv[i];
            let t_mu = p.mu * v;
            let t_a = p.a * v.powf(p.p + 1.0);
            let t_b = p.b * v.powf(1.0 - p.q);
            (lap + t_mu + t_a + t_b).abs() / (1.0 + t_mu.abs() + t_a.abs() + t_b.abs())
        })
        .fold(0.0, f64::max)
}

/// `u = −ln v` and `f = u'²` with derivatives. `u''` and `u'''` come from
/// the log equation `u'' + c·u' = f + μ + a·e^{−pu} + b·e^{qu}` and its
/// derivative; the differenced `v''` only feeds [`LogProfile::eq_residual`].
pub fn log_transform(profile: &SolutionProfile) -> Result<LogProfile> {
    if let Some(bad) = profile.v.iter().find(|v| !(**v > 0.0)) {
        return Err(LabError::PositivityViolated(*bad));
    }
    let p = profile.params;
    let m = profile.manifold;
    let n = p.nf();
    let len = profile.len();
    let mut out = LogProfile {
        grid: profile.grid.clone(),
        u: Vec::with_capacity(len),
        du: Vec::with_capacity(len),
        ddu: Vec::with_capacity(len),
        dddu: Vec::with_capacity(len),
        f: Vec::with_capacity(len),
        df: Vec::with_capacity(len),
        ddf: Vec::with_capacity(len),
        eq_residual: 0.0,
        params: p,
        manifold: m,
    };
    for i in 0..len {
        let (r, v, dv) = (profile.grid[i], profile.v[i], profile.dv[i]);
        let u = -v.ln();
        let x_src = p.mu + p.a * (-p.p * u).exp() + p.b * (p.q * u).exp();
        let (du, ddu, dddu);
        if r == 0.0 {
            du = 0.0;
            ddu = x_src / n;
            dddu = 0.0;
        } else {
            du = -dv / v;
            let f = du * du;
            let c = m.coeff(r);
            ddu = f + x_src - c * du;
            let dx_src = (-p.a * p.p * (-p.p * u).exp() + p.b * p.q * (p.q * u).exp()) * du;
            dddu = 2.0 * du * ddu + dx_src - m.dcoeff(r) * du - c * ddu;
        }
        let f = du * du;
        out.u.push(u);
        out.du.push(du);
        out.ddu.push(ddu);
        out.dddu.push(dddu);
        out.f.push(f);
        out.df.push(2.0 * du * ddu);
        out.ddf.push(2.0 * ddu * ddu + 2.0 * du * dddu);
    }
    for i in 1..len.saturating_sub(1) {
        let (r, v) = (profile.grid[i], profile.v[i]);
        let ratio = profile.dv[i] / v;
        let ddu_fd = -profile.ddv[i] / v + ratio * ratio;
        let c = m.coeff(r);
        let f = out.f[i];
        let x_src = out.source(i);
        let lhs = ddu_fd + c * out.du[i];
        let res = (lhs - f - x_src).abs() / (1.0 + lhs.abs() + f + x_src.abs());
        out.eq_residual = out.eq_residual.max(res);
    }
    if !(out.eq_residual <= LOG_RESIDUAL_TOL) {
        return Err(LabError::ResidualExceeded { residual: out.eq_residual, tol: LOG_RESIDUAL_TOL });
    }
    Ok(out)
}

/// Smallest positive root of `μ + a·t^p + b·t^{−q}` in `[1e−10, 1e10]`,
/// including tangential roots.
pub fn constant_solution(params: &Params) -> Option<f64> {
    if params.validate().is_err() {
        return None;
    }
    let g = |t: f64| params.constant_condition(t);
    let dg = |t: f64| params.a * params.p * t.powf(params.p - 1.0) - params.b * params.q * t.powf(-params.q - 1.0);
    let scale = |t: f64| params.mu.abs() + params.a.abs() * t.powf(params.p) + params.b.abs() * t.powf(-params.q);
    let (lo, hi) = (1e-10f64.ln(), 1e10f64.ln());
    let count = 4001;
    let ts: Vec<f64> = (0..count)
        .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp())
        .collect();
    let gs: Vec<f64> = ts.iter().map(|&t| g(t)).collect();
    let mut roots = Vec::new();

    for i in 0..count {
        if gs[i] == 0.0 {
            roots.push(ts[i]);
            continue;
        }
        if i + 1 < count && gs[i] * gs[i + 1] < 0.0 {
            let (mut a, mut b) = (ts[i].ln(), ts[i + 1].ln());
            let ga = gs[i];
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if (g(mid.exp()) > 0.0) == (ga > 0.0) {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a < 1e-15 {
                    break;
                }
            }
            let (ta, tb) = (a.exp(), b.exp());
            let mut t = 0.5 * (ta + tb);
            for _ in 0..8 {
                let d = dg(t);
                if d == 0.0 {
                    break;
                }
                let next = t - g(t) / d;
                if !(next >= ta.min(ts[i]) && next <= tb.max(ts[i + 1])) {
                    break;
                }
                let done = (next - t).abs() <= 1e-14 * t;
                t = next;
                if done {
                    break;
                }
            }
            roots.push(t);
        }
    }

    // Tangential roots: local minima of |g| between same-signed neighbours.
    for i in 1..count - 1 {
        let (l, c, r) = (gs[i - 1], gs[i], gs[i + 1]);
        if c == 0.0 || l * c <= 0.0 || c * r <= 0.0 || c.abs() > l.abs() || c.abs() > r.abs() {
            continue;
        }
        let (mut a, mut b) = (ts[i - 1].ln(), ts[i + 1].ln());
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let obj = |x: f64| g(x.exp()).abs();
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let (mut f1, mut f2) = (obj(x1), obj(x2));
        for _ in 0..200 {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = obj(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = obj(x2);
            }
            if b - a < 1e-12 {
                break;
            }
        }
        let mut t = (0.5 * (a + b)).exp();
        // Newton on g' = 0 sharpens the location of the extremum.
        let ddg = |t: f64| {
            params.a * params.p * (params.p - 1.0) * t.powf(params.p - 2.0)
                + params.b * params.q * (params.q + 1.0) * t.powf(-params.q - 2.0)
        };
        for _ in 0..20 {
            let d2 = ddg(t);
            if d2 == 0.0 || !d2.is_finite() {
                break;
            }
            let next = t - dg(t) / d2;
            if !(next > 0.0 && next.is_finite()) {
                break;
            }
            let done = (next - t).abs() <= 1e-14 * t;
            t = next;
            if done {
                break;
            }
        }
        if g(t).abs() <= 1e-12 * scale(t).max(1e-300) {
            roots.push(t);
        }
    }
    roots.into_iter().filter(|t| t.is_finite() && *t > 0.0).reduce(f64::min)
}
