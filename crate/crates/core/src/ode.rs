//! Dormand–Prince 5(4) integrator with the order-4 continuous extension.

#![allow(clippy::unreadable_literal)]

use crate::error::{LabError, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// One accepted step with its dense-output coefficients.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const D: usize> {
    pub x0: f64,
    pub h: f64,
    pub y0: [f64; D],
    pub y1: [f64; D],
    rcont: [[f64; D]; 5],
}

impl<const D: usize> DenseStep<D> {
    pub fn x1(&self) -> f64 {
        self.x0 + self.h
    }

    /// Continuous extension at `x ∈ [x0, x0 + h]`.
    pub fn interpolate(&self, x: f64) -> [f64; D] {
        let theta = (x - self.x0) / self.h;
        let theta1 = 1.0 - theta;
        let r = &self.rcont;
        std::array::from_fn(|i| {
            r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])))
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub evaluations: usize,
    pub accepted: usize,
    pub rejected: usize,
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn finite<const D: usize>(y: &[f64; D]) -> bool {
    y.iter().all(|v| v.is_finite())
}

struct Trial<const D: usize> {
    y1: [f64; D],
    k7: [f64; D],
    err: [f64; D],
    step: DenseStep<D>,
}

/// Adaptive integrator for `y' = rhs(x, y)`. Error weights come from the
/// `scale` closure, called as `scale(x_new, y_old, y_new)`.
pub struct Dopri5<F, S, const D: usize> {
    rhs: F,
    scale: S,
    pub x: f64,
    pub y: [f64; D],
    k1: [f64; D],
    pub h: f64,
    pub stats: Stats,
}

impl<F, S, const D: usize> Dopri5<F, S, D>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
    S: Fn(f64, &[f64; D], &[f64; D]) -> [f64; D],
{
    pub fn new(rhs: F, scale: S, x0: f64, y0: [f64; D], h0: f64) -> Self {
        let k1 = rhs(x0, &y0);
        Dopri5 { rhs, scale, x: x0, y: y0, k1, h: h0, stats: Stats { evaluations: 1, ..Stats::default() } }
    }

    fn trial(&mut self, h: f64) -> Option<Trial<D>> {
        let (x, y, k1) = (self.x, self.y, self.k1);
        let f = &self.rhs;
        let k2 = f(x + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(x + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(x + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(x + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(x + h, &y1);
        self.stats.evaluations += 6;
        if !(finite(&k7) && finite(&y1)) {
            return None;
        }
        let err = std::array::from_fn(|i| {
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        let ydiff: [f64; D] = std::array::from_fn(|i| y1[i] - y[i]);
        let bspl: [f64; D] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
        let rcont = [
            y,
            ydiff,
            bspl,
            std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
            std::array::from_fn(|i| {
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            }),
        ];
        Some(Trial { y1, k7, err, step: DenseStep { x0: x, h, y0: y, y1, rcont } })
    }

    fn accept(&mut self, trial: &Trial<D>) {
        self.x = trial.step.x1();
        self.y = trial.y1;
        self.k1 = trial.k7;
        self.stats.accepted += 1;
    }

    /// Takes one accepted adaptive step without passing `x_end`.
    pub fn step(&mut self, x_end: f64) -> Result<DenseStep<D>> {
        let mut rejected_here = false;
        loop {
            let remaining = x_end - self.x;
            let mut h = self.h.min(remaining);
            if remaining - h < 1e-12 * remaining.abs() {
                h = remaining;
            }
            if !(h > 1e-14 * self.x.abs().max(1e-300)) {
                return Err(LabError::StepFailure {
                    r: self.x,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
            let Some(trial) = self.trial(h) else {
                self.stats.rejected += 1;
                self.h = 0.25 * h;
                rejected_here = true;
                continue;
            };
            let sc = (self.scale)(self.x + h, &self.y, &trial.y1);
            let err = (trial.err.iter().zip(sc.iter()).map(|(e, s)| (e / s) * (e / s)).sum::<f64>()
                / D as f64)
                .sqrt();
            if err <= 1.0 {
                let mut fac = if err > 0.0 { SAFETY * err.powf(-0.2) } else { FAC_MAX };
                fac = fac.clamp(FAC_MIN, FAC_MAX);
                if rejected_here {
                    fac = fac.min(1.0);
                }
                self.accept(&trial);
                // Keep the nominal step when the final step was clipped to x_end.
                self.h = (h * fac).max(if h < self.h { self.h } else { 0.0 });
                return Ok(trial.step);
            }
            self.stats.rejected += 1;
            rejected_here = true;
            let fac = if err.is_finite() { (SAFETY * err.powf(-0.2)).max(FAC_MIN) } else { FAC_MIN };
            self.h = h * fac;
        }
    }

    /// Takes one step of exactly `h` without error control.
    pub fn step_fixed(&mut self, h: f64) -> Result<DenseStep<D>> {
        match self.trial(h) {
            Some(trial) => {
                self.accept(&trial);
                Ok(trial.step)
            }
            None => Err(LabError::StepFailure { r: self.x, reason: "non-finite stage value".into() }),
        }
    }
}
