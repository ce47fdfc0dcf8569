//! Log-det interior-point backend.
//!
//! Minimizes `t·cᵀx − log det S(x) − Σ log(x − a) − Σ log(b − x)` with
//! `S(x) = Y + τI − F(x)` for increasing `t`. The Hessian omits the
//! curvature term `tr(S⁻¹ ∂²F)`, which is positive semidefinite because `F`
//! is Loewner-convex, so Newton directions remain descent directions.

use alloc::vec;
use alloc::vec::Vec;

use super::{ConvexProblem, SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, eigh};
use crate::math;
use crate::solver::Backend;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 80;

struct Barrier<'a> {
    p: &'a ConvexProblem,
    free: Vec<usize>,
    base: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
}

impl<'a> Barrier<'a> {
    fn sigma(&self, x: &[f64]) -> Vec<f64> {
        self.p.sigma_box.embed(&self.free, x, &self.base)
    }

    fn interior(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| v > l && v < h)
    }

    /// Barrier objective, or `None` outside the domain.
    fn value(&self, x: &[f64], t: f64) -> Result<Option<f64>> {
        if !self.interior(x) {
            return Ok(None);
        }
        let s = self.p.constraint_matrix(&self.sigma(x))?.scaled(-1.0);
        let eig = eigh(&s)?;
        if eig.min() <= 0.0 {
            return Ok(None);
        }
        let logdet: f64 = eig.values.iter().map(|v| math::ln(*v)).sum();
        let walls: f64 = x
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| math::ln(v - l) + math::ln(h - v))
            .sum();
        Ok(Some(t * math::dot(&self.cost, x) - logdet - walls))
    }

    fn derivatives(&self, x: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let sigma = self.sigma(x);
        let s = self.p.constraint_matrix(&sigma)?.scaled(-1.0);
        let eig = eigh(&s)?;
        let jac = self.p.model.assemble_jacobian(&sigma)?;
        let m = eig.order();
        let nf = self.free.len();
        let vecs: Vec<Vec<f64>> = (0..m).map(|k| eig.vector(k)).collect();
        // P_k = Vᵀ J_k V
        let projected: Vec<Vec<f64>> = self
            .free
            .iter()
            .map(|&l| {
                let jl = &jac.entries[l];
                let mut pk = vec![0.0; m * m];
                for i in 0..m {
                    let jv: Vec<f64> = (0..m)
                        .map(|r| (0..m).map(|c| jl.get(r, c) * vecs[i][c]).sum())
                        .collect();
                    for j in 0..m {
                        pk[j * m + i] = math::dot(&vecs[j], &jv);
                    }
                }
                pk
            })
            .collect();
        let inv = |i: usize| 1.0 / eig.values[i];
        let mut grad = vec![0.0; nf];
        let mut hess = vec![0.0; nf * nf];
        for a in 0..nf {
            let lo = x[a] - self.lo[a];
            let hi = self.hi[a] - x[a];
            grad[a] =
                t * self.cost[a] + (0..m).map(|i| projected[a][i * m + i] * inv(i)).sum::<f64>() - 1.0 / lo + 1.0 / hi;
            for b in 0..=a {
                let mut h = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        h += projected[a][i * m + j] * projected[b][i * m + j] * inv(i) * inv(j);
                    }
                }
                hess[a * nf + b] = h;
                hess[b * nf + a] = h;
            }
            hess[a * nf + a] += 1.0 / (lo * lo) + 1.0 / (hi * hi);
        }
        Ok((grad, hess))
    }

    /// Newton centering at parameter `t`; returns the number of steps.
    fn center(&self, x: &mut Vec<f64>, t: f64) -> Result<usize> {
        let mut steps = 0;
        let mut current = self.value(x, t)?.ok_or(Error::NonFinite)?;
        for _ in 0..self.p.options.max_inner {
            let (grad, hess) = self.derivatives(x, t)?;
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(d) = cholesky_solve(&hess, &rhs) else { break };
            let decrement = math::dot(&d, &rhs);
            if !(decrement > 1e-14) {
                break;
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..MAX_BACKTRACK {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                if let Some(v) = self.value(&trial, t)? {
                    if v <= current - ARMIJO * alpha * decrement {
                        *x = trial;
                        current = v;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
            steps += 1;
        }
        Ok(steps)
    }
}

pub(super) fn solve(p: &ConvexProblem) -> Result<SolveReport> {
    let opts = &p.options;
    if !(opts.smoothing_decay > 1.0) {
        return Err(Error::InvalidOption("barrier growth factor must exceed 1"));
    }
    let free = p.sigma_box.free_layers();
    let bar = Barrier {
        p,
        lo: free.iter().map(|&i| p.sigma_box.lower[i]).collect(),
        hi: free.iter().map(|&i| p.sigma_box.upper[i]).collect(),
        cost: free.iter().map(|&i| p.cost[i]).collect(),
        base: p.start_point(),
        free,
    };
    if bar.free.is_empty() {
        let sigma = bar.base.clone();
        return Ok(SolveReport {
            objective: p.objective(&sigma),
            feasibility_residual: p.constraint_violation(&sigma)?,
            sigma,
            iterations: 0,
            backend: Backend::Barrier,
            status: SolveStatus::Converged,
        });
    }

    let given: Option<Vec<f64>> = opts.start.as_ref().map(|s| bar.free.iter().map(|&i| s[i]).collect());
    let mut candidates: Vec<Vec<f64>> = given.into_iter().collect();
    for e in 3..=9 {
        let theta = math::pow(10.0, -(e as f64));
        candidates.push(bar.lo.iter().zip(&bar.hi).map(|(l, h)| h - theta * (h - l)).collect());
    }
    let mut x = None;
    for c in candidates {
        if bar.value(&c, 1.0)?.is_some() {
            x = Some(c);
            break;
        }
    }
    let Some(mut x) = x else {
        let residual = p.constraint_violation(&p.sigma_box.upper)?;
        return Err(Error::InfeasibleStart { residual });
    };

    let width = p.sigma_box.width();
    let cost_l1: f64 = bar.cost.iter().sum();
    let nu = (p.model.m + 2 * bar.free.len()) as f64;
    let gap_tol = 1e-2 * opts.tol_opt * cost_l1 * width.max(1e-12);
    let mut t = nu / (cost_l1 * width.max(1e-12));
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIterations;
    for _ in 0..opts.max_stages {
        match bar.center(&mut x, t) {
            Ok(steps) => iterations += steps,
            Err(Error::NonFinite) => {
                status = SolveStatus::Diverged;
                break;
            }
            Err(e) => return Err(e),
        }
        if nu / t <= gap_tol {
            status = SolveStatus::Converged;
            break;
        }
        t *= opts.smoothing_decay;
    }
    let sigma = bar.sigma(&x);
    Ok(SolveReport {
        objective: p.objective(&sigma),
        feasibility_residual: p.constraint_violation(&sigma)?,
        sigma,
        iterations,
        backend: Backend::Barrier,
        status,
    })
}
