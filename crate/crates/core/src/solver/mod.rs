//! The convex program
//!
//! ```text
//! minimize cᵀσ   subject to   σ ∈ [a, b],   F_m(σ) ⪯ Y + τ I
//! ```
//!
//! `F_m` is Loewner-convex, so `σ ↦ λ_max(F_m(σ) − Y − τI)` is a convex
//! function and the feasible set is closed and convex. Because `F_m` is
//! decreasing, the upper corner `b` is feasible whenever any point is.
//!
//! Two backends are provided. [`Backend::Penalty`] (the default) minimizes a
//! smoothed exact penalty; it handles optima on the boundary of the
//! semidefinite cone, which is where exact-data problems always end up.
//! [`Backend::Barrier`] is a log-det interior-point method and needs a
//! strictly feasible point.
//!
//! Pinned layers (`a_i = b_i`) are removed from the decision variables.

mod barrier;
mod penalty;

use alloc::vec::Vec;

use crate::bounds::SigmaBox;
use crate::calibration::CalibrationCertificate;
use crate::error::{Error, Result};
use crate::linalg::{lambda_max_value, spectral_norm, SymMatrix};
use crate::math;
use crate::measurement::MeasurementModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Backend {
    #[default]
    Penalty,
    Barrier,
    LevenbergMarquardt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveReport {
    pub sigma: Vec<f64>,
    pub objective: f64,
    /// `λ_max(F(σ*) − Y − τI)`; for least-squares reports, `λ_max(F(σ*) − Y)`.
    pub feasibility_residual: f64,
    pub iterations: usize,
    pub backend: Backend,
    pub status: SolveStatus,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub backend: Backend,
    pub tol_feas: f64,
    pub tol_opt: f64,
    /// Continuation stages (penalty) or barrier-parameter updates.
    pub max_stages: usize,
    /// Descent iterations per stage.
    pub max_inner: usize,
    /// Initial exact-penalty weight `K`; `None` uses `10 ‖c‖₁`. The weight
    /// grows tenfold after every stage that ends infeasible.
    pub penalty_weight: Option<f64>,
    /// Initial smoothing relative to the scale of `Y`.
    pub smoothing: f64,
    /// Factor by which the smoothing shrinks per stage.
    pub smoothing_decay: f64,
    /// Initial point handed to the backend (full length, clamped to the
    /// box); defaults to the upper corner.
    pub start: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            backend: Backend::Penalty,
            tol_feas: 1e-9,
            tol_opt: 1e-6,
            max_stages: 40,
            max_inner: 200,
            penalty_weight: None,
            smoothing: 1e-2,
            smoothing_decay: 10.0,
            start: None,
        }
    }
}

/// `K = 10 ‖c‖₁ (n−1)/λ` from a certificate (with `n−1` floored at 1): a
/// weight large enough for exactness at the certified samples. Tiny `λ`
/// makes it impractically large as a starting weight.
pub fn penalty_weight_from_certificate(cert: &CalibrationCertificate) -> f64 {
    let l1: f64 = cert.c.iter().sum();
    10.0 * l1 * cert.c_const.max(1.0) / cert.lambda
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProblem {
    pub model: MeasurementModel,
    pub y: SymMatrix,
    pub sigma_box: SigmaBox,
    /// Cost over all layers; entries of pinned layers are ignored.
    pub cost: Vec<f64>,
    /// `τ ≥ 0`
    pub slack: f64,
    pub options: SolveOptions,
}

impl ConvexProblem {
    pub fn new(model: MeasurementModel, y: SymMatrix, sigma_box: SigmaBox, cost: Vec<f64>, slack: f64) -> Result<Self> {
        sigma_box.validate()?;
        let n = model.layers();
        if sigma_box.layers() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: sigma_box.layers(),
            });
        }
        if cost.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: cost.len(),
            });
        }
        if y.order() != model.m {
            return Err(Error::DimensionMismatch {
                expected: model.m,
                found: y.order(),
            });
        }
        if !y.is_finite() {
            return Err(Error::NonFinite);
        }
        if sigma_box
            .free_layers()
            .iter()
            .any(|&i| !(cost[i] > 0.0 && cost[i].is_finite()))
        {
            return Err(Error::InvalidOption("cost must be positive on free layers"));
        }
        if !(slack >= 0.0 && slack.is_finite()) {
            return Err(Error::InvalidOption("slack must be non-negative"));
        }
        Ok(ConvexProblem {
            model,
            y,
            sigma_box,
            cost,
            slack,
            options: SolveOptions::default(),
        })
    }

    /// Uses the certificate's cost vector.
    pub fn with_certificate(mut self, cert: &CalibrationCertificate) -> Result<Self> {
        if cert.sigma_box.free_layers() != self.sigma_box.free_layers() {
            return Err(Error::InvalidOption("certificate and problem free layers differ"));
        }
        self.cost = cert.cost_full();
        Ok(self)
    }

    pub fn with_options(mut self, options: SolveOptions) -> Self {
        self.options = options;
        self
    }

    pub fn objective(&self, sigma: &[f64]) -> f64 {
        self.sigma_box
            .free_layers()
            .iter()
            .map(|&i| self.cost[i] * sigma[i])
            .sum()
    }

    /// `F_m(σ) − Y − τI`
    pub fn constraint_matrix(&self, sigma: &[f64]) -> Result<SymMatrix> {
        let f = self.model.assemble_f(sigma)?;
        Ok((&f - &self.y).shifted(-self.slack))
    }

    /// `λ_max(F_m(σ) − Y − τI)`; feasible iff `≤ 0`.
    pub fn constraint_violation(&self, sigma: &[f64]) -> Result<f64> {
        lambda_max_value(&self.constraint_matrix(sigma)?)
    }

    /// Scale used to express smoothing and tolerances relative to the data.
    fn data_scale(&self) -> Result<f64> {
        let s = spectral_norm(&self.y)?;
        Ok(if s > 0.0 { s } else { 1.0 })
    }

    fn start_point(&self) -> Vec<f64> {
        let mut s = self
            .options
            .start
            .clone()
            .unwrap_or_else(|| self.sigma_box.upper.clone());
        if s.len() != self.sigma_box.layers() {
            s = self.sigma_box.upper.clone();
        }
        self.sigma_box.clamp(&mut s);
        s
    }

    /// Moves `sigma` along `+1` on the free layers (clamped at `b`) just far
    /// enough to satisfy the constraint to `target`. Returns the new point.
    fn restore_feasibility(&self, sigma: &[f64], target: f64) -> Result<Vec<f64>> {
        if self.constraint_violation(sigma)? <= target {
            return Ok(sigma.to_vec());
        }
        let free = self.sigma_box.free_layers();
        let at = |t: f64| -> Vec<f64> {
            let mut s = sigma.to_vec();
            for &i in &free {
                s[i] = (s[i] + t).min(self.sigma_box.upper[i]);
            }
            s
        };
        let mut lo = 0.0;
        let mut hi = free
            .iter()
            .map(|&i| self.sigma_box.upper[i] - sigma[i])
            .fold(0.0, f64::max);
        if self.constraint_violation(&at(hi))? > target {
            return Ok(at(hi));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.constraint_violation(&at(mid))? <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(at(hi))
    }
}

/// The upper corner `b` and its constraint value. Errors if it violates the
/// constraint by more than `tol_feas`, which means `Y` is inconsistent with
/// every conductivity in the box.
pub fn feasible_start(problem: &ConvexProblem) -> Result<(Vec<f64>, f64)> {
    let start = problem.sigma_box.upper.clone();
    let residual = problem.constraint_violation(&start)?;
    if residual > problem.options.tol_feas {
        return Err(Error::InfeasibleStart { residual });
    }
    Ok((start, residual))
}

pub fn solve(problem: &ConvexProblem) -> Result<SolveReport> {
    feasible_start(problem)?;
    match problem.options.backend {
        Backend::Penalty => penalty::solve(problem),
        Backend::Barrier => barrier::solve(problem),
        Backend::LevenbergMarquardt => Err(Error::InvalidOption(
            "Levenberg-Marquardt is not a backend for the convex program",
        )),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBoundReport {
    /// `‖σ^δ − σ̂‖_{c,∞}`
    pub lhs: f64,
    /// `2(n−1)δ/λ`
    pub rhs: f64,
    pub holds: bool,
    /// `‖Y^δ − F(σ̂)‖₂`, which must not exceed `δ` for the bound to apply.
    pub data_error: f64,
    pub report: SolveReport,
}

/// Absolute slack allowed on top of the bound.
pub const NOISE_BOUND_TOL: f64 = 1e-8;

/// Solves `problem` (which must carry `Y = Y^δ` and slack `τ = δ`) and
/// compares the error to the bound `2(n−1)δ/λ` of the certificate.
pub fn noise_bound_check(
    problem: &ConvexProblem,
    delta: f64,
    cert: &CalibrationCertificate,
    truth: &[f64],
) -> Result<NoiseBoundReport> {
    if problem.slack != delta {
        return Err(Error::InvalidOption("problem slack must equal delta"));
    }
    let f_true = problem.model.assemble_f(truth)?;
    let data_error = spectral_norm(&problem.y.try_sub(&f_true)?)?;
    let report = solve(problem)?;
    let diff: Vec<f64> = report.sigma.iter().zip(truth).map(|(a, b)| a - b).collect();
    let lhs = cert.norm(&diff);
    let rhs = 2.0 * cert.c_const * delta / cert.lambda;
    Ok(NoiseBoundReport {
        lhs,
        rhs,
        holds: lhs <= rhs + NOISE_BOUND_TOL,
        data_error,
        report,
    })
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    math::max_abs(v)
}
