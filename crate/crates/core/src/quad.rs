//! Quadrature helpers shared by the geometry, verifier and Moser modules.

use crate::error::{LabError, Result};

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn gl5_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Composite 5-point Gauss–Legendre on `panels` equal panels.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == panels { b } else { lo + width };
            gl5_panel(f, lo, hi)
        })
        .sum()
}

/// Doubles the panel count until two successive composite Gauss–Legendre
/// values agree to `rel_tol` (or an absolute floor of `rel_tol·1e-300`).
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut panels = 8;
    let mut prev = gauss_legendre(f, a, b, panels);
    while panels < (1 << 20) {
        panels *= 2;
        let next = gauss_legendre(f, a, b, panels);
        if (next - prev).abs() <= rel_tol * next.abs() + 1e-300 {
            return next;
        }
        prev = next;
    }
    prev
}

/// Adaptive Simpson quadrature with a depth cap.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Piecewise-cubic Lagrange interpolant of samples on a strictly increasing
/// grid. Falls back to lower degree when the grid has fewer than 4 nodes.
pub fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let n = grid.len();
    debug_assert_eq!(n, values.len());
    if n == 1 {
        return values[0];
    }
    let i = match grid.partition_point(|&g| g <= x) {
        0 => 0,
        k => (k - 1).min(n - 2),
    };
    let width = n.min(4);
    let start = i.saturating_sub(1).min(n - width);
    let idx = start..start + width;
    let mut acc = 0.0;
    for j in idx.clone() {
        let mut basis = 1.0;
        for k in idx.clone() {
            if k != j {
                basis *= (x - grid[k]) / (grid[j] - grid[k]);
            }
        }
        acc += basis * values[j];
    }
    acc
}

/// `∫_{grid[0]}^{upper} h(t)·weight(t) dt` with `h` given by samples on
/// `grid`, interpolated cell-wise by cubics and integrated by 5-point
/// Gauss–Legendre against the exact weight.
pub fn sampled_integral<W: Fn(f64) -> f64>(
    grid: &[f64],
    values: &[f64],
    weight: W,
    upper: f64,
) -> Result<f64> {
    if grid.len() != values.len() || grid.len() < 2 {
        return Err(LabError::GridMismatch { needed: upper, available: grid.last().copied().unwrap_or(0.0) });
    }
    let last = *grid.last().unwrap();
    if upper > last * (1.0 + 1e-12) + 1e-300 {
        return Err(LabError::GridMismatch { needed: upper, available: last });
    }
    let mut total = 0.0;
    for cell in 0..grid.len() - 1 {
        let lo = grid[cell];
        if lo >= upper {
            break;
        }
        let hi = grid[cell + 1].min(upper);
        let stencil_lo = cell.saturating_sub(1).min(grid.len().saturating_sub(4));
        let stencil_hi = (stencil_lo + 4).min(grid.len());
        let g = &grid[stencil_lo..stencil_hi];
        let v = &values[stencil_lo..stencil_hi];
        total += gl5_panel(&|t| local_lagrange(g, v, t) * weight(t), lo, hi);
    }
    Ok(total)
}

fn local_lagrange(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..grid.len() {
        let mut basis = 1.0;
        for k in 0..grid.len() {
            if k != j {
                basis *= (x - grid[k]) / (grid[j] - grid[k]);
            }
        }
        acc += basis * values[j];
    }
    acc
}
