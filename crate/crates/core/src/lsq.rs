//! Levenberg-Marquardt baseline for `min ‖F_m(σ) − Ŷ‖_F²`.
//!
//! Only the diagonal of `F_m` depends on `σ`, so the residual vector is the
//! diagonal gap `diag(F_m(σ) − Ŷ)`; off-diagonal entries of `Ŷ` contribute a
//! constant to the objective. The problem is non-convex and the result
//! depends on the starting point.

use alloc::vec;
use alloc::vec::Vec;

use crate::bounds::SigmaBox;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, lambda_max_value, SymMatrix};
use crate::math;
use crate::measurement::MeasurementModel;
use crate::solver::{Backend, SolveReport, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoxBehavior {
    /// Project every accepted iterate onto the box.
    #[default]
    Clamp,
    /// Ignore the box except for pinned layers; steps leaving `σ > 0` are
    /// rejected.
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop once the projected gradient `‖Jᵀr‖_∞` falls below this.
    pub tol_grad: f64,
    /// Initial damping relative to `max diag(JᵀJ)`.
    pub damping: f64,
    /// Damping is multiplied by `damping_up` after a rejected step and
    /// divided by `damping_down` after an accepted one; both exceed 1.
    pub damping_up: f64,
    pub damping_down: f64,
    pub box_behavior: BoxBehavior,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iter: 200,
            tol_grad: 1e-12,
            damping: 1e-3,
            damping_up: 10.0,
            damping_down: 3.0,
            box_behavior: BoxBehavior::Clamp,
        }
    }
}

const DAMPING_MAX: f64 = 1e20;

/// Runs Levenberg-Marquardt from `start`. The report's `objective` is
/// `‖F_m(σ) − Ŷ‖_F²` and `feasibility_residual` is `λ_max(F_m(σ) − Ŷ)`.
pub fn lsq_solve(
    model: &MeasurementModel,
    y: &SymMatrix,
    start: &[f64],
    sigma_box: &SigmaBox,
    opts: &LmOptions,
) -> Result<SolveReport> {
    sigma_box.validate()?;
    if !(opts.damping > 0.0 && opts.damping_up > 1.0 && opts.damping_down > 1.0) {
        return Err(Error::InvalidOption(
            "damping must be positive and its factors exceed 1",
        ));
    }
    if !start.iter().all(|v| *v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidOption("start must be positive"));
    }
    let n = model.layers();
    if sigma_box.layers() != n || start.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if start.len() != n {
                start.len()
            } else {
                sigma_box.layers()
            },
        });
    }
    if y.order() != model.m {
        return Err(Error::DimensionMismatch {
            expected: model.m,
            found: y.order(),
        });
    }
    let free = sigma_box.free_layers();
    let clamp = opts.box_behavior == BoxBehavior::Clamp;
    let mut sigma = start.to_vec();
    for (i, s) in sigma.iter_mut().enumerate() {
        if sigma_box.is_pinned(i) {
            *s = sigma_box.lower[i];
        }
    }
    if clamp {
        sigma_box.clamp(&mut sigma);
    }
    let target = y.diagonal();
    let fro = y.frobenius_norm();
    let offdiag = fro * fro - target.iter().map(|v| v * v).sum::<f64>();
    let cost_of =
        |d: &[f64]| -> f64 { d.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + offdiag.max(0.0) };
    let report = |sigma: Vec<f64>, cost: f64, iterations: usize, status: SolveStatus| -> Result<SolveReport> {
        let residual = if status == SolveStatus::Diverged {
            f64::NAN
        } else {
            lambda_max_value(&model.assemble_f(&sigma)?.try_sub(y)?)?
        };
        Ok(SolveReport {
            sigma,
            objective: cost,
            feasibility_residual: residual,
            iterations,
            backend: Backend::LevenbergMarquardt,
            status,
        })
    };

    let nf = free.len();
    let (mut diag, mut jac) = model.diagonal_and_jacobian(&sigma)?;
    let mut cost = cost_of(&diag);
    let mut mu = -1.0;
    for it in 0..opts.max_iter {
        let r: Vec<f64> = diag.iter().zip(&target).map(|(a, b)| a - b).collect();
        let mut g: Vec<f64> = free.iter().map(|&l| math::dot(&jac[l], &r)).collect();
        let mut a = vec![0.0; nf * nf];
        for (p, &lp) in free.iter().enumerate() {
            for (q, &lq) in free.iter().enumerate() {
                a[p * nf + q] = math::dot(&jac[lp], &jac[lq]);
            }
        }
        if clamp {
            for (p, &l) in free.iter().enumerate() {
                let at_lo = sigma[l] <= sigma_box.lower[l] && g[p] > 0.0;
                let at_hi = sigma[l] >= sigma_box.upper[l] && g[p] < 0.0;
                if at_lo || at_hi {
                    g[p] = 0.0;
                }
            }
        }
        if !g.iter().all(|v| v.is_finite()) || !cost.is_finite() {
            return report(sigma, f64::NAN, it, SolveStatus::Diverged);
        }
        if nf == 0 || math::max_abs(&g) <= opts.tol_grad {
            return report(sigma, cost, it, SolveStatus::Converged);
        }
        if mu < 0.0 {
            let top = (0..nf).map(|p| a[p * nf + p]).fold(0.0, f64::max);
            mu = opts.damping * if top > 0.0 { top } else { 1.0 };
        }
        loop {
            let mut damped = a.clone();
            for p in 0..nf {
                damped[p * nf + p] += mu;
            }
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let mut trial = sigma.clone();
            let mut valid = false;
            if let Some(step) = cholesky_solve(&damped, &rhs) {
                for (p, &l) in free.iter().enumerate() {
                    trial[l] += step[p];
                }
                if clamp {
                    sigma_box.clamp(&mut trial);
                }
                valid = trial.iter().all(|v| *v > 0.0 && v.is_finite());
            }
            if valid {
                let (d, j) = model.diagonal_and_jacobian(&trial)?;
                let c = cost_of(&d);
                if c < cost {
                    let small = c >= cost * (1.0 - 1e-15);
                    sigma = trial;
                    diag = d;
                    jac = j;
                    cost = c;
                    mu = (mu / opts.damping_down).max(1e-300);
                    if small {
                        return report(sigma, cost, it + 1, SolveStatus::Converged);
                    }
                    break;
                }
            }
            mu *= opts.damping_up;
            if mu > DAMPING_MAX {
                // No damped step decreases the cost: a stationary point to
                // working precision.
                return report(sigma, cost, it + 1, SolveStatus::Converged);
            }
        }
    }
    report(sigma, cost, opts.max_iter, SolveStatus::MaxIterations)
}
