//! Rotationally symmetric space-form models `dr² + s(r)²·g_{S^{n−1}}`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quad;

const VOLUME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldKind {
    Euclidean,
    Hyperbolic,
}

/// Euclidean space (`κ = 0`) or the hyperbolic space of curvature `−κ`,
/// which has `Ric = −(n−1)κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelManifold {
    pub n: u32,
    pub kappa: f64,
    pub kind: ManifoldKind,
}

/// Area of the unit sphere `S^{n−1}`, `2π^{n/2}/Γ(n/2)`.
pub fn unit_sphere_area(n: u32) -> f64 {
    // Γ(n/2) by recursion from Γ(1) = 1 or Γ(1/2) = √π.
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    let target = n as f64 / 2.0;
    while x < target {
        gamma *= x;
        x += 1.0;
    }
    2.0 * std::f64::consts::PI.powf(target) / gamma
}

impl ModelManifold {
    pub fn new(n: u32, kappa: f64) -> Result<Self> {
        if n < 3 {
            return Err(LabError::DimensionTooSmall(n));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(LabError::InvalidParams(format!("kappa = {kappa} must be finite and >= 0")));
        }
        let kind = if kappa == 0.0 { ManifoldKind::Euclidean } else { ManifoldKind::Hyperbolic };
        Ok(ModelManifold { n, kappa, kind })
    }

    pub fn euclidean(n: u32) -> Result<Self> {
        Self::new(n, 0.0)
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Unchecked `s(r)`.
    pub fn s(&self, r: f64) -> f64 {
        match self.kind {
            ManifoldKind::Euclidean => r,
            ManifoldKind::Hyperbolic => {
                let k = self.kappa.sqrt();
                (k * r).sinh() / k
            }
        }
    }

    /// `s'(r)`.
    pub fn ds(&self, r: f64) -> f64 {
        match self.kind {
            ManifoldKind::Euclidean => 1.0,
            ManifoldKind::Hyperbolic => (self.kappa.sqrt() * r).cosh(),
        }
    }

    /// `s''(r) = κ·s(r)`.
    pub fn dds(&self, r: f64) -> f64 {
        self.kappa * self.s(r)
    }

    pub fn warp(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(LabError::NegativeRadius(r));
        }
        Ok(self.s(r))
    }

    /// Unchecked `(n−1)·s'/s`.
    pub fn coeff(&self, r: f64) -> f64 {
        let nm1 = self.nf() - 1.0;
        match self.kind {
            ManifoldKind::Euclidean => nm1 / r,
            ManifoldKind::Hyperbolic => {
                let k = self.kappa.sqrt();
                nm1 * k / (k * r).tanh()
            }
        }
    }

    /// Derivative of [`ModelManifold::coeff`] in `r`.
    pub fn dcoeff(&self, r: f64) -> f64 {
        let nm1 = self.nf() - 1.0;
        match self.kind {
            ManifoldKind::Euclidean => -nm1 / (r * r),
            ManifoldKind::Hyperbolic => {
                let sh = (self.kappa.sqrt() * r).sinh();
                -nm1 * self.kappa / (sh * sh)
            }
        }
    }

    pub fn mean_curvature_coeff(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(LabError::NegativeRadius(r));
        }
        if r == 0.0 {
            return Err(LabError::OriginSingularity);
        }
        Ok(self.coeff(r))
    }

    /// `s(r)^{n−1}`, the radial density of the volume measure up to `ω_{n−1}`.
    pub fn density(&self, r: f64) -> f64 {
        self.s(r).powi(self.n as i32 - 1)
    }

    pub fn sphere_area(&self) -> f64 {
        unit_sphere_area(self.n)
    }

    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(LabError::NegativeRadius(r));
        }
        if self.kind == ManifoldKind::Euclidean {
            return Ok(self.sphere_area() * r.powi(self.n as i32) / self.nf());
        }
        let integral = quad::integrate(&|t| self.density(t), 0.0, r, VOLUME_TOL);
        Ok(self.sphere_area() * integral)
    }

    /// `ω_{n−1}·∫₀^r h(t)s(t)^{n−1} dt` for `h` sampled on `grid`.
    pub fn ball_integral(&self, grid: &[f64], h: &[f64], r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(LabError::NegativeRadius(r));
        }
        if grid.first().is_none_or(|&g| g > 0.0) {
            return Err(LabError::GridMismatch { needed: 0.0, available: grid.first().copied().unwrap_or(f64::NAN) });
        }
        let integral = quad::sampled_integral(grid, h, |t| self.density(t), r)?;
        Ok(self.sphere_area() * integral)
    }

    /// `ω_{n−1}·∫₀^r h(t)s(t)^{n−1} dt` for a closure `h`.
    pub fn ball_integral_fn<F: Fn(f64) -> f64>(&self, h: F, r: f64, rel_tol: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(LabError::NegativeRadius(r));
        }
        let integral = quad::integrate(&|t| h(t) * self.density(t), 0.0, r, rel_tol);
        Ok(self.sphere_area() * integral)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    /// RK4 on `s'' = κs`, `s(0) = 0`, `s'(0) = 1`, independent of `sinh`.
    fn jacobi_oracle(kappa: f64, r: f64) -> (f64, f64) {
        let steps = 20_000;
        let h = r / steps as f64;
        let (mut s, mut ds) = (0.0f64, 1.0f64);
        for _ in 0..steps {
            let f = |s: f64, ds: f64| (ds, kappa * s);
            let k1 = f(s, ds);
            let k2 = f(s + 0.5 * h * k1.0, ds + 0.5 * h * k1.1);
            let k3 = f(s + 0.5 * h * k2.0, ds + 0.5 * h * k2.1);
            let k4 = f(s + h * k3.0, ds + h * k3.1);
            s += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            ds += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        (s, ds)
    }

    #[test]
    fn warp_examples() {
        assert_eq!(ModelManifold::new(3, 0.0).unwrap().warp(2.0).unwrap(), 2.0);
        let m1 = ModelManifold::new(3, 1.0).unwrap();
        let (s, _) = jacobi_oracle(1.0, 1.0);
        assert!(rel(m1.warp(1.0).unwrap(), s) < 1e-12);
        assert!((m1.warp(1.0).unwrap() - 1.17520).abs() < 1e-5);
        let m4 = ModelManifold::new(3, 4.0).unwrap();
        let (s, _) = jacobi_oracle(4.0, 0.5);
        assert!(rel(m4.warp(0.5).unwrap(), s) < 1e-12);
        assert!((m4.warp(0.5).unwrap() - 0.58760).abs() < 1e-5);
        assert_eq!(m1.warp(-1.0), Err(LabError::NegativeRadius(-1.0)));
    }

    #[test]
    fn coeff_examples() {
        let e = ModelManifold::new(3, 0.0).unwrap();
        assert_eq!(e.mean_curvature_coeff(0.5).unwrap(), 4.0);
        let h = ModelManifold::new(3, 1.0).unwrap();
        let (s, ds) = jacobi_oracle(1.0, 1.0);
        assert!(rel(h.mean_curvature_coeff(1.0).unwrap(), 2.0 * ds / s) < 1e-11);
        assert!((h.mean_curvature_coeff(1.0).unwrap() - 2.62607).abs() < 1e-5);
        assert!((h.mean_curvature_coeff(40.0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(h.mean_curvature_coeff(0.0), Err(LabError::OriginSingularity));
    }

    #[test]
    fn dcoeff_matches_difference_quotient() {
        for m in [ModelManifold::new(5, 0.0).unwrap(), ModelManifold::new(5, 2.5).unwrap()] {
            for &r in &[0.1, 0.7, 3.0] {
                let eps = 1e-5 * r;
                let fd = (m.coeff(r + eps) - m.coeff(r - eps)) / (2.0 * eps);
                assert!(rel(m.dcoeff(r), fd) < 1e-7);
            }
        }
    }

    #[test]
    fn sphere_areas() {
        assert!(rel(unit_sphere_area(3), 4.0 * PI) < 1e-15);
        assert!(rel(unit_sphere_area(4), 2.0 * PI * PI) < 1e-15);
        assert!(rel(unit_sphere_area(5), 8.0 * PI * PI / 3.0) < 1e-15);
    }

    #[test]
    fn volume_examples() {
        let e3 = ModelManifold::new(3, 0.0).unwrap();
        assert!(rel(e3.ball_volume(1.0).unwrap(), 4.0 * PI / 3.0) < 1e-14);
        let h3 = ModelManifold::new(3, 1.0).unwrap();
        // 4π∫₀¹ sinh² = π(sinh 2 − 2)
        let closed = PI * (2.0f64.sinh() - 2.0);
        assert!(rel(h3.ball_volume(1.0).unwrap(), closed) < 1e-10);
        assert!((closed - 5.11093).abs() < 1e-5);
        let e4 = ModelManifold::new(4, 0.0).unwrap();
        assert!(rel(e4.ball_volume(2.0).unwrap(), PI * PI * 8.0) < 1e-14);
    }

    #[test]
    fn ball_integral_examples() {
        let e3 = ModelManifold::new(3, 0.0).unwrap();
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        let ones = vec![1.0; grid.len()];
        let sq: Vec<f64> = grid.iter().map(|t| t * t).collect();
        let zeros = vec![0.0; grid.len()];
        assert!(rel(e3.ball_integral(&grid, &ones, 1.0).unwrap(), e3.ball_volume(1.0).unwrap()) < 1e-8);
        assert!(rel(e3.ball_integral(&grid, &sq, 1.0).unwrap(), 4.0 * PI / 5.0) < 1e-8);
        assert_eq!(e3.ball_integral(&grid, &zeros, 1.0).unwrap(), 0.0);
        assert!(matches!(e3.ball_integral(&grid, &ones, 2.0), Err(LabError::GridMismatch { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn warp_shape(n in 3u32..8, kappa in 0.0f64..5.0, r in 0.01f64..3.0) {
                let m = ModelManifold::new(n, kappa).unwrap();
                prop_assert!(m.warp(r * 1.01).unwrap() > m.warp(r).unwrap());
                if kappa > 0.0 {
                    let mid = m.s(r);
                    prop_assert!(m.s(0.9 * r) + m.s(1.1 * r) >= 2.0 * mid);
                    prop_assert!(m.coeff(r) >= (n as f64 - 1.0) / r);
                } else {
                    prop_assert_eq!(m.s(r), r);
                }
            }

            #[test]
            fn volume_monotone_and_compared(n in 3u32..7, kappa in 0.01f64..3.0, r in 0.05f64..2.5) {
                let h = ModelManifold::new(n, kappa).unwrap();
                let e = ModelManifold::new(n, 0.0).unwrap();
                prop_assert!(h.ball_volume(r * 1.05).unwrap() > h.ball_volume(r).unwrap());
                prop_assert!(h.ball_volume(r).unwrap() >= e.ball_volume(r).unwrap());
            }

            #[test]
            fn grid_integral_of_one_is_volume(n in 3u32..7, kappa in 0.0f64..3.0, r in 0.1f64..2.0) {
                let m = ModelManifold::new(n, kappa).unwrap();
                let grid: Vec<f64> = (0..=400).map(|i| r * i as f64 / 400.0).collect();
                let ones = vec![1.0; grid.len()];
                let got = m.ball_integral(&grid, &ones, r).unwrap();
                prop_assert!(rel(got, m.ball_volume(r).unwrap()) < 1e-8);
            }

            #[test]
            fn coeff_asymptotics(n in 3u32..8, kappa in 0.1f64..4.0) {
                let m = ModelManifold::new(n, kappa).unwrap();
                let nm1 = n as f64 - 1.0;
                let far = 40.0 / kappa.sqrt();
                prop_assert!(rel(m.coeff(far), nm1 * kappa.sqrt()) < 1e-10);
                let near = 1e-6;
                prop_assert!(rel(m.coeff(near) * near, nm1) < 1e-8);
            }
        }
    }
}
