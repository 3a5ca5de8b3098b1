//! Numerical laboratory for Lichnerowicz-type equations
//!
//! ```text
//! Δv + μv + a·v^{p+1} + b·v^{1−q} = 0
//! ```
//!
//! on rotationally symmetric model manifolds (Euclidean space and hyperbolic
//! space of curvature −κ). Radial positive solutions are produced by shooting
//! from the origin, transformed to `u = −ln v`, `f = |∇u|²`, and then used to
//! check the pointwise Bochner-type inequalities, the Cheng–Yau type gradient
//! bound, and the Moser iteration norm cascade numerically.
//!
//! Module map:
//!
//! - [`params`]: equation coefficients, derived constants, regime classifier
//! - [`manifold`]: model geometries, ball volumes and radial quadrature
//! - [`quad`]: quadrature helpers
//! - [`ode`]: Dormand–Prince 5(4) integrator with dense output
//! - [`solver`]: radial shooting solver and the log transform
//! - [`verify`]: pointwise inequality checks and empirical constants
//! - [`moser`]: ball `L^θ` norms, cutoffs, cascade, Sobolev calibration
//! - [`conformal`]: conformal Laplacian machinery for the Einstein-scalar case
//! - [`orchestrator`]: config-driven runs, reports and sweeps

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod error;
pub mod manifold;
pub mod moser;
pub mod ode;
pub mod orchestrator;
pub mod params;
pub mod quad;
pub mod solver;
pub mod verify;

pub use error::{LabError, Result};
pub use manifold::{ManifoldKind, ModelManifold};
pub use params::{ConstantChain, Params, RegimeReport, TheoremSource, Verdict};
pub use solver::{LogProfile, SolutionProfile, SolveOutcome, SolveStatus, SolverOptions};
pub use verify::{CheckReport, LemmaId};
