//! Smoothed exact-penalty backend.
//!
//! Minimizes `cᵀx + K·smax_μ(0, λ_1, …, λ_m)` over the box, where `λ_i` are
//! the eigenvalues of `F(x) − Y − τI` and
//! `smax_μ(v) = M + μ log Σ exp((v_i − M)/μ)`. Each stage runs projected
//! Newton steps with a Gauss-Newton Hessian of the soft max; `μ` then shrinks
//! geometrically. `K` grows only when a stage ends infeasible.

use alloc::vec;
use alloc::vec::Vec;

use super::{inf_norm, ConvexProblem, SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, eigh};
use crate::math;
use crate::solver::Backend;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;
const MAX_WEIGHT: f64 = 1e15;

struct Eval {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

struct Penalty<'a> {
    p: &'a ConvexProblem,
    free: Vec<usize>,
    base: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
}

impl<'a> Penalty<'a> {
    fn sigma(&self, x: &[f64]) -> Vec<f64> {
        self.p.sigma_box.embed(&self.free, x, &self.base)
    }

    fn eval(&self, x: &[f64], k: f64, mu: f64, derivs: bool) -> Result<Eval> {
        let sigma = self.sigma(x);
        let g = self.p.constraint_matrix(&sigma)?;
        let eig = eigh(&g)?;
        let top = eig.max().max(0.0);
        let z0 = math::exp(-top / mu);
        let z: Vec<f64> = eig.values.iter().map(|l| math::exp((l - top) / mu)).collect();
        let total = z0 + z.iter().sum::<f64>();
        let smax = top + mu * math::ln(total);
        let value = math::dot(&self.cost, x) + k * smax;
        if !derivs {
            return Ok(Eval {
                value,
                grad: Vec::new(),
                hess: Vec::new(),
            });
        }

        let nf = self.free.len();
        let jac = self.p.model.assemble_jacobian(&sigma)?;
        let mut grad = self.cost.clone();
        let mut mean = vec![0.0; nf];
        let mut second = vec![0.0; nf * nf];
        for (i, zi) in z.iter().enumerate() {
            let w = zi / total;
            if w < 1e-300 {
                continue;
            }
            let v = eig.vector(i);
            let gi: Vec<f64> = self.free.iter().map(|&l| jac.entries[l].quadratic_form(&v)).collect();
            for a in 0..nf {
                mean[a] += w * gi[a];
                for b in 0..nf {
                    second[a * nf + b] += w * gi[a] * gi[b];
                }
            }
        }
        for a in 0..nf {
            grad[a] += k * mean[a];
        }
        let hess = (0..nf * nf)
            .map(|ab| (k / mu) * (second[ab] - mean[ab / nf] * mean[ab % nf]))
            .collect();
        Ok(Eval { value, grad, hess })
    }

    fn project(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lo[i], self.hi[i]);
        }
    }

    /// Projected Newton direction; variables at a bound whose gradient points
    /// outward stay fixed.
    fn direction(&self, x: &[f64], e: &Eval) -> Vec<f64> {
        let nf = x.len();
        let active: Vec<usize> = (0..nf)
            .filter(|&i| {
                let at_lo = x[i] <= self.lo[i] && e.grad[i] > 0.0;
                let at_hi = x[i] >= self.hi[i] && e.grad[i] < 0.0;
                !(at_lo || at_hi)
            })
            .collect();
        let mut d = vec![0.0; nf];
        if active.is_empty() {
            return d;
        }
        let na = active.len();
        let mut h = vec![0.0; na * na];
        let mut trace = 0.0;
        for (a, &i) in active.iter().enumerate() {
            for (b, &j) in active.iter().enumerate() {
                h[a * na + b] = e.hess[i * nf + j];
            }
            trace += e.hess[i * nf + i];
        }
        let ridge = 1e-10 * trace / na as f64 + 1e-300;
        for a in 0..na {
            h[a * na + a] += ridge;
        }
        let rhs: Vec<f64> = active.iter().map(|&i| -e.grad[i]).collect();
        let newton = if trace > 0.0 { cholesky_solve(&h, &rhs) } else { None };
        match newton {
            Some(step) if math::dot(&step, &rhs) > 0.0 => {
                for (a, &i) in active.iter().enumerate() {
                    d[i] = step[a];
                }
            }
            _ => {
                let gmax = inf_norm(&rhs);
                if gmax > 0.0 {
                    let width = self.p.sigma_box.width().max(1e-12);
                    for (a, &i) in active.iter().enumerate() {
                        d[i] = rhs[a] * width / gmax;
                    }
                }
            }
        }
        d
    }

    /// Minimizes the stage objective from `x` in place. Returns the number of
    /// accepted steps.
    fn stage(&self, x: &mut Vec<f64>, k: f64, mu: f64) -> Result<usize> {
        let mut steps = 0;
        for _ in 0..self.p.options.max_inner {
            let e = self.eval(x, k, mu, true)?;
            if !e.value.is_finite() {
                return Err(Error::NonFinite);
            }
            let d = self.direction(x, &e);
            if inf_norm(&d) == 0.0 {
                break;
            }
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACK {
                let mut trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                self.project(&mut trial);
                let slope: f64 = e
                    .grad
                    .iter()
                    .zip(trial.iter().zip(x.iter()))
                    .map(|(g, (t, c))| g * (t - c))
                    .sum();
                if slope < 0.0 {
                    let v = self.eval(&trial, k, mu, false)?.value;
                    if v <= e.value + ARMIJO * slope {
                        accepted = Some((trial, -slope));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some((next, decrease)) = accepted else { break };
            let moved = inf_norm(&next.iter().zip(x.iter()).map(|(a, b)| a - b).collect::<Vec<_>>());
            *x = next;
            steps += 1;
            if moved <= 1e-15 * (1.0 + inf_norm(x)) || decrease <= 1e-16 * (1.0 + e.value.abs()) {
                break;
            }
        }
        Ok(steps)
    }
}

pub(super) fn solve(p: &ConvexProblem) -> Result<SolveReport> {
    let opts = &p.options;
    if !(opts.smoothing > 0.0 && opts.smoothing_decay > 1.0 && opts.tol_feas > 0.0) {
        return Err(Error::InvalidOption(
            "smoothing and tolerances must be positive, decay greater than 1",
        ));
    }
    let free = p.sigma_box.free_layers();
    let start = p.start_point();
    let pen = Penalty {
        p,
        lo: free.iter().map(|&i| p.sigma_box.lower[i]).collect(),
        hi: free.iter().map(|&i| p.sigma_box.upper[i]).collect(),
        cost: free.iter().map(|&i| p.cost[i]).collect(),
        base: start.clone(),
        free,
    };
    let mut x: Vec<f64> = pen.free.iter().map(|&i| start[i]).collect();

    let scale = p.data_scale()?;
    let obj_tol = opts.tol_opt * pen.cost.iter().sum::<f64>() * p.sigma_box.width();
    let mu_floor = 1e-3 * opts.tol_opt * scale;
    let mut k = opts
        .penalty_weight
        .unwrap_or_else(|| 10.0 * pen.cost.iter().sum::<f64>());
    let mut mu = opts.smoothing * scale;
    let mut prev: Option<f64> = None;
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIterations;

    if x.is_empty() {
        status = SolveStatus::Converged;
    }
    for _ in 0..opts.max_stages {
        if x.is_empty() {
            break;
        }
        match pen.stage(&mut x, k, mu) {
            Ok(steps) => iterations += steps,
            Err(Error::NonFinite) => {
                status = SolveStatus::Diverged;
                break;
            }
            Err(e) => return Err(e),
        }
        let sigma = pen.sigma(&x);
        let hard = p.constraint_violation(&sigma)?;
        let obj = p.objective(&sigma);
        let stalled = prev.is_some_and(|q| (q - obj).abs() <= obj_tol);
        if hard > opts.tol_feas {
            k = (k * 10.0).min(MAX_WEIGHT);
        } else if stalled && mu <= mu_floor {
            status = SolveStatus::Converged;
            break;
        }
        prev = Some(obj);
        mu = (mu / opts.smoothing_decay).max(1e-300);
    }

    let sigma = p.restore_feasibility(&pen.sigma(&x), 0.5 * opts.tol_feas)?;
    let residual = p.constraint_violation(&sigma)?;
    if residual > opts.tol_feas && status == SolveStatus::Converged {
        status = SolveStatus::MaxIterations;
    }
    Ok(SolveReport {
        objective: p.objective(&sigma),
        feasibility_residual: residual,
        sigma,
        iterations,
        backend: Backend::Penalty,
        status,
    })
}
