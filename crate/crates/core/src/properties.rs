//! Seeded randomized checks of the structure the reconstruction relies on:
//! Loewner monotonicity and convexity of `F_m`, the derivative
//! inequalities, and sanity of the eigensolver.
//!
//! Every suite draws its own stream from `seed` and the suite index, so
//! suites can run in any order or in parallel with identical results.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calibration::Directions;
use crate::error::Result;
use crate::linalg::{eigh, lambda_max_value, lambda_min_value, SymMatrix};
use crate::measurement::{JacobianStack, MeasurementModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    ScaleLaw,
    Bracketing,
    Monotonicity,
    Convexity,
    Linearization,
    DerivativeNegativity,
    DerivativeMonotonicity,
    LocalizedShadow,
    EighReconstruction,
    LambdaMaxShift,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::ScaleLaw,
        Suite::Bracketing,
        Suite::Monotonicity,
        Suite::Convexity,
        Suite::Linearization,
        Suite::DerivativeNegativity,
        Suite::DerivativeMonotonicity,
        Suite::LocalizedShadow,
        Suite::EighReconstruction,
        Suite::LambdaMaxShift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ScaleLaw => "scale_law",
            Suite::Bracketing => "bracketing",
            Suite::Monotonicity => "monotonicity",
            Suite::Convexity => "convexity",
            Suite::Linearization => "linearization",
            Suite::DerivativeNegativity => "derivative_negativity",
            Suite::DerivativeMonotonicity => "derivative_monotonicity",
            Suite::LocalizedShadow => "localized_shadow",
            Suite::EighReconstruction => "eigh_reconstruction",
            Suite::LambdaMaxShift => "lambda_max_shift",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }

    fn needs_layers(self) -> usize {
        match self {
            Suite::LocalizedShadow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Eigenvalue tolerance for every Loewner inequality.
    pub tol: f64,
    /// Conductivities are drawn uniformly from this range.
    pub sigma_range: (f64, f64),
    /// Test hook: negate every Jacobian before use.
    pub flip_jacobian_sign: bool,
}

impl Default for PropertyOptions {
    fn default() -> Self {
        PropertyOptions {
            trials: 1000,
            seed: 0,
            tol: 1e-10,
            sigma_range: (0.2, 5.0),
            flip_jacobian_sign: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub suite: Suite,
    pub trials: usize,
    pub violations: usize,
    /// Largest amount by which an inequality was exceeded (0 if none).
    pub worst: f64,
    pub skipped: bool,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

struct Ctx<'a> {
    model: &'a MeasurementModel,
    opts: &'a PropertyOptions,
    rng: ChaCha8Rng,
}

impl Ctx<'_> {
    fn sigma(&mut self) -> Vec<f64> {
        let (lo, hi) = self.opts.sigma_range;
        (0..self.model.layers())
            .map(|_| self.rng.random_range(lo..hi))
            .collect()
    }

    fn nonneg(&mut self, scale: f64) -> Vec<f64> {
        (0..self.model.layers())
            .map(|_| scale * self.rng.random::<f64>())
            .collect()
    }

    fn jacobian(&self, sigma: &[f64]) -> Result<JacobianStack> {
        let j = self.model.assemble_jacobian(sigma)?;
        Ok(if self.opts.flip_jacobian_sign { j.negated() } else { j })
    }

    fn symmetric(&mut self, order: usize) -> SymMatrix {
        let mut a = SymMatrix::zeros(order);
        for i in 0..order {
            for j in i..order {
                a.set(i, j, self.rng.random_range(-1.0..1.0));
            }
        }
        a
    }
}

/// Excess of one trial; positive means violated.
fn trial(suite: Suite, ctx: &mut Ctx) -> Result<f64> {
    let tol = ctx.opts.tol;
    let model = ctx.model;
    Ok(match suite {
        Suite::ScaleLaw => {
            let s = ctx.sigma();
            let k = ctx.rng.random_range(0.25..4.0);
            let scaled: Vec<f64> = s.iter().map(|v| k * v).collect();
            let a = model.diagonal(&s)?;
            let b = model.diagonal(&scaled)?;
            a.iter()
                .zip(&b)
                .map(|(x, y)| (y * k - x).abs() - 1e-12 * x.abs())
                .fold(f64::NEG_INFINITY, f64::max)
        }
        Suite::Bracketing => {
            let s = ctx.sigma();
            let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = s.iter().cloned().fold(0.0, f64::max);
            let d = model.diagonal(&s)?;
            d.iter()
                .enumerate()
                .map(|(k, v)| {
                    let j = crate::measurement::column_mode(k) as f64;
                    let upper = 1.0 / (j * lo);
                    let lower = 1.0 / (j * hi);
                    (v - upper).max(lower - v) - 1e-12 * upper
                })
                .fold(f64::NEG_INFINITY, f64::max)
        }
        Suite::Monotonicity => {
            let tau = ctx.sigma();
            let bump = ctx.nonneg(1.0);
            let sigma: Vec<f64> = tau.iter().zip(&bump).map(|(a, b)| a + b).collect();
            let diff = model.assemble_f(&sigma)?.try_sub(&model.assemble_f(&tau)?)?;
            lambda_max_value(&diff)? - tol
        }
        Suite::Convexity => {
            let s = ctx.sigma();
            let t2 = ctx.sigma();
            let t: f64 = ctx.rng.random();
            let mid: Vec<f64> = s.iter().zip(&t2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
            let mut rhs = model.assemble_f(&s)?.scaled(t);
            rhs.add_scaled(1.0 - t, &model.assemble_f(&t2)?);
            lambda_max_value(&model.assemble_f(&mid)?.try_sub(&rhs)?)? - tol
        }
        Suite::Linearization => {
            let s = ctx.sigma();
            let t2 = ctx.sigma();
            let d: Vec<f64> = t2.iter().zip(&s).map(|(a, b)| a - b).collect();
            let mut rem = model.assemble_f(&t2)?.try_sub(&model.assemble_f(&s)?)?;
            rem.add_scaled(-1.0, &ctx.jacobian(&s)?.directional(&d));
            -lambda_min_value(&rem)? - tol
        }
        Suite::DerivativeNegativity => {
            let s = ctx.sigma();
            let d = ctx.nonneg(1.0);
            lambda_max_value(&ctx.jacobian(&s)?.directional(&d))? - tol
        }
        Suite::DerivativeMonotonicity => {
            let s = ctx.sigma();
            let small: Vec<f64> = (0..model.layers()).map(|_| ctx.rng.random_range(-1.0..1.0)).collect();
            let bump = ctx.nonneg(1.0);
            let large: Vec<f64> = small.iter().zip(&bump).map(|(a, b)| a + b).collect();
            let j = ctx.jacobian(&s)?;
            lambda_max_value(&j.directional(&large).try_sub(&j.directional(&small))?)? - tol
        }
        Suite::LocalizedShadow => {
            let s = ctx.sigma();
            let n = model.layers();
            let dirs = Directions { n };
            let c = (n - 1) as f64;
            let jac = ctx.jacobian(&s)?;
            let mut worst = f64::NEG_INFINITY;
            for j in 0..n {
                let e = dirs.e(j);
                let ep = dirs.e_plus(j);
                let d: Vec<f64> = (0..n).map(|i| -(e[i] - c * ep[i])).collect();
                // strictly positive definiteness is required
                worst = worst.max(-lambda_max_value(&jac.directional(&d))?);
            }
            worst
        }
        Suite::EighReconstruction => {
            let order = ctx.rng.random_range(1..=12);
            let a = ctx.symmetric(order);
            let eig = eigh(&a)?;
            let err = eig.reconstruct().try_sub(&a)?.frobenius_norm();
            err - 1e-12 * a.frobenius_norm().max(1.0)
        }
        Suite::LambdaMaxShift => {
            let order = ctx.rng.random_range(1..=12);
            let a = ctx.symmetric(order);
            let t = ctx.rng.random_range(-10.0..10.0);
            let base = lambda_max_value(&a)?;
            let shifted = lambda_max_value(&a.shifted(t))?;
            (shifted - base - t).abs() - 1e-12 * (1.0 + base.abs() + t.abs())
        }
    })
}

pub fn run_suite(suite: Suite, model: &MeasurementModel, opts: &PropertyOptions) -> Result<SuiteResult> {
    if model.layers() < suite.needs_layers() {
        return Ok(SuiteResult {
            suite,
            trials: 0,
            violations: 0,
            worst: 0.0,
            skipped: true,
        });
    }
    let index = Suite::ALL.iter().position(|s| *s == suite).unwrap_or(0) as u64;
    let mut ctx = Ctx {
        model,
        opts,
        rng: ChaCha8Rng::seed_from_u64(opts.seed ^ (index.wrapping_mul(0x9E37_79B9_7F4A_7C15))),
    };
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..opts.trials {
        let excess = trial(suite, &mut ctx)?;
        if !(excess <= 0.0) {
            violations += 1;
            worst = worst.max(if excess.is_nan() { f64::INFINITY } else { excess });
        }
    }
    Ok(SuiteResult {
        suite,
        trials: opts.trials,
        violations,
        worst,
        skipped: false,
    })
}

pub fn run_all(model: &MeasurementModel, opts: &PropertyOptions) -> Result<Vec<SuiteResult>> {
    let mut out = vec![];
    for s in Suite::ALL {
        out.push(run_suite(s, model, opts)?);
    }
    Ok(out)
}
