//! Offline calibration of the cost vector `c` and the stability constant `λ`.
//!
//! With `C = n − 1` (n = number of free layers) and the direction vectors
//! `e_j`, `e_j^-` (shallower layers), `e_j^+` (deeper layers) and
//! `e_j' = e_j^- + e_j^+`, the weights `0 < δ_1 ≤ … ≤ δ_n = 1` are chosen by
//! backward induction over the layers so that
//!
//! ```text
//! λ_max(−F'(σ)(e_j − δ' e_j^- − (C/δ_j) e_j^+)) ≥ ε,   δ_{j−1} = δ_j δ'/C
//! ```
//!
//! holds at every sample `σ`. Multiplying through by `δ_j` and using the
//! Loewner monotonicity of `F'(σ)` in its direction argument, this yields
//!
//! ```text
//! λ = min_{σ, j} λ_max(F'(σ) D((n−1)e_j' − e_j)) ≥ δ_1 ε > 0,
//! ```
//!
//! and the cost vector is `c_j = 1/δ_j`. All quantities are certified on the
//! recorded sample set only; [`verify_certificate`] re-evaluates the
//! definiteness on other samples.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::SigmaBox;
use crate::error::{Error, Result};
use crate::linalg::lambda_max_value;
use crate::measurement::{JacobianStack, MeasurementModel};

/// Default upper bound on the number of generated samples.
pub const DEFAULT_SAMPLE_CAP: usize = 1_000_000;

/// Halving steps tried before giving up on a layer.
const HALVING_STEPS: u32 = 40;
/// Bisection steps between the first passing and the last failing `δ'`.
const BISECTION_STEPS: u32 = 20;

/// Unit and partial-sum direction vectors over `n` layers (0-based index).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Directions {
    pub n: usize,
}

impl Directions {
    pub fn e(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        v[j] = 1.0;
        v
    }

    /// Ones everywhere except at `j`.
    pub fn e_prime(&self, j: usize) -> Vec<f64> {
        let mut v = vec![1.0; self.n];
        v[j] = 0.0;
        v
    }

    /// Ones at the deeper indices `> j`.
    pub fn e_plus(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| if i > j { 1.0 } else { 0.0 }).collect()
    }

    /// Ones at the shallower indices `< j`.
    pub fn e_minus(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| if i < j { 1.0 } else { 0.0 }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RandomSamples {
    pub count: usize,
    pub seed: u64,
}

/// Which conductivities to sample from the box: a full tensor grid with
/// `grid` points per free axis (corners included) and/or seeded uniform
/// draws.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleSpec {
    pub grid: Option<usize>,
    pub random: Option<RandomSamples>,
}

impl SampleSpec {
    pub fn grid(g: usize) -> Self {
        SampleSpec {
            grid: Some(g),
            random: None,
        }
    }
}

/// Deterministic sample list covering the box. Grid points come first in
/// row-major order (first layer slowest); pinned axes contribute their single
/// value.
pub fn sample_box(bx: &SigmaBox, spec: &SampleSpec, cap: usize) -> Result<Vec<Vec<f64>>> {
    bx.validate()?;
    let n = bx.layers();
    let mut out = Vec::new();
    if let Some(g) = spec.grid {
        if g < 2 {
            return Err(Error::InvalidOption("grid needs at least 2 points per axis"));
        }
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let (a, b) = (bx.lower[i], bx.upper[i]);
                if a == b {
                    vec![a]
                } else {
                    (0..g)
                        .map(|k| {
                            if k == g - 1 {
                                b
                            } else {
                                a + (b - a) * k as f64 / (g - 1) as f64
                            }
                        })
                        .collect()
                }
            })
            .collect();
        let count = axes.iter().map(|a| a.len() as u128).product::<u128>();
        let extra = spec.random.as_ref().map_or(0, |r| r.count) as u128;
        if count + extra > cap as u128 {
            return Err(Error::TooManySamples {
                count: count + extra,
                cap,
            });
        }
        for flat in 0..count as usize {
            let mut rem = flat;
            let mut point = vec![0.0; n];
            for i in (0..n).rev() {
                let len = axes[i].len();
                point[i] = axes[i][rem % len];
                rem /= len;
            }
            out.push(point);
        }
    }
    if let Some(r) = &spec.random {
        if out.len() + r.count > cap {
            return Err(Error::TooManySamples {
                count: (out.len() + r.count) as u128,
                cap,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
        for _ in 0..r.count {
            out.push(
                (0..n)
                    .map(|i| {
                        let u: f64 = rng.random();
                        bx.lower[i] + (bx.upper[i] - bx.lower[i]) * u
                    })
                    .collect(),
            );
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidOption("sample spec produces no samples"));
    }
    Ok(out)
}

/// Jacobian restricted to the free layers.
fn reduced_jacobian(model: &MeasurementModel, free: &[usize], sigma: &[f64]) -> Result<JacobianStack> {
    let full = model.assemble_jacobian(sigma)?;
    Ok(JacobianStack {
        entries: free.iter().map(|&i| full.entries[i].clone()).collect(),
    })
}

fn reduced_jacobians(model: &MeasurementModel, free: &[usize], samples: &[Vec<f64>]) -> Result<Vec<JacobianStack>> {
    samples.iter().map(|s| reduced_jacobian(model, free, s)).collect()
}

fn check_model(model: &MeasurementModel, bx: &SigmaBox) -> Result<Vec<usize>> {
    bx.validate()?;
    if bx.layers() != model.layers() {
        return Err(Error::DimensionMismatch {
            expected: model.layers(),
            found: bx.layers(),
        });
    }
    let free = bx.free_layers();
    if free.is_empty() {
        return Err(Error::InvalidBox("all layers are pinned"));
    }
    Ok(free)
}

/// `min_σ λ_max(−F'(σ)(e_j − δ' e_j^- − w e_j^+))` over precomputed
/// Jacobians.
fn localization_margin(stacks: &[JacobianStack], j: usize, delta: f64, w_plus: f64) -> Result<f64> {
    let n = stacks[0].layers();
    let dirs = Directions { n };
    let em = dirs.e_minus(j);
    let ep = dirs.e_plus(j);
    let d: Vec<f64> = (0..n)
        .map(|i| -(dirs.e(j)[i] - delta * em[i] - w_plus * ep[i]))
        .collect();
    let mut min = f64::INFINITY;
    for s in stacks {
        min = min.min(lambda_max_value(&s.directional(&d))?);
    }
    Ok(min)
}

fn find_delta_with(
    stacks: &[JacobianStack],
    j: usize,
    c_const: f64,
    w_plus: f64,
    eps: f64,
    layer: usize,
) -> Result<f64> {
    let fail = |margin| Error::NoDefiniteness { layer, margin };
    if j == 0 {
        // e_1^- = 0: δ' does not enter the condition.
        let margin = localization_margin(stacks, j, c_const, w_plus)?;
        return if margin >= eps { Ok(c_const) } else { Err(fail(margin)) };
    }
    let limit = localization_margin(stacks, j, 0.0, w_plus)?;
    if !(limit >= eps) {
        return Err(fail(limit));
    }
    // The margin is non-increasing in δ' because −F'(σ)e_j^- ⪰ 0.
    let mut delta = c_const;
    let mut steps = 0;
    loop {
        let margin = localization_margin(stacks, j, delta, w_plus)?;
        if margin >= eps {
            break;
        }
        steps += 1;
        if steps > HALVING_STEPS {
            return Err(fail(margin));
        }
        delta *= 0.5;
    }
    if steps == 0 {
        return Ok(delta);
    }
    let (mut lo, mut hi) = (delta, 2.0 * delta);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if localization_margin(stacks, j, mid, w_plus)? >= eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Largest `δ' ∈ (0, C]` on the halving schedule `C, C/2, …` (refined by
/// bisection against the last failing value) such that
/// `λ_max(−F'(σ)(e_j − δ' e_j^- − w_plus e_j^+)) ≥ eps` at every sample.
///
/// `j` indexes the free layers of `bx` (0 = shallowest free layer).
pub fn find_delta(
    model: &MeasurementModel,
    bx: &SigmaBox,
    samples: &[Vec<f64>],
    j: usize,
    c_const: f64,
    w_plus: f64,
    eps: f64,
) -> Result<f64> {
    let free = check_model(model, bx)?;
    if j >= free.len() {
        return Err(Error::InvalidOption("layer index out of range"));
    }
    if samples.is_empty() {
        return Err(Error::InvalidOption("no samples"));
    }
    let stacks = reduced_jacobians(model, &free, samples)?;
    find_delta_with(&stacks, j, c_const, w_plus, eps, free[j])
}

/// Sampled evidence for the weights `δ`, the cost vector `c = 1/δ`, and the
/// stability constant `λ`. Entries of `deltas` and `c` refer to the free
/// layers of `sigma_box` in increasing depth.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationCertificate {
    pub radii: Vec<f64>,
    pub deltas: Vec<f64>,
    pub c: Vec<f64>,
    pub lambda: f64,
    #[cfg_attr(feature = "serde", serde(rename = "C"))]
    pub c_const: f64,
    pub m: usize,
    #[cfg_attr(feature = "serde", serde(rename = "box"))]
    pub sigma_box: SigmaBox,
    pub sample_spec: SampleSpec,
    pub epsilon: f64,
}

impl CalibrationCertificate {
    pub fn free_layers(&self) -> Vec<usize> {
        self.sigma_box.free_layers()
    }

    pub fn free_count(&self) -> usize {
        self.deltas.len()
    }

    /// Cost over all layers; pinned layers get weight 1 (they are constants
    /// of the objective).
    pub fn cost_full(&self) -> Vec<f64> {
        let mut c = vec![1.0; self.sigma_box.layers()];
        for (&i, &ci) in self.free_layers().iter().zip(&self.c) {
            c[i] = ci;
        }
        c
    }

    /// `‖v‖_{c,∞}` of a full-length vector, taken over the free layers.
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.free_layers()
            .iter()
            .zip(&self.c)
            .fold(0.0, |m, (&i, c)| m.max(c * v[i].abs()))
    }

    /// `(n−1)/λ`, the Lipschitz constant of `F_m^{-1}` in `‖·‖_{c,∞}`.
    pub fn lipschitz_constant(&self) -> f64 {
        self.c_const / self.lambda
    }

    /// Regenerates the calibration samples from the descriptor.
    pub fn samples(&self) -> Result<Vec<Vec<f64>>> {
        sample_box(&self.sigma_box, &self.sample_spec, DEFAULT_SAMPLE_CAP)
    }
}

/// `max_j c_j |v_j|`
pub fn weighted_norm(c: &[f64], v: &[f64]) -> f64 {
    c.iter().zip(v).fold(0.0, |m, (c, v)| m.max(c * v.abs()))
}

fn definiteness_with(stack: &JacobianStack, deltas: &[f64]) -> Result<(f64, usize)> {
    let n = deltas.len();
    let dirs = Directions { n };
    let cn = (n - 1) as f64;
    let mut best = (f64::INFINITY, 0);
    for j in 0..n {
        let ej = dirs.e(j);
        let ejp = dirs.e_prime(j);
        let d: Vec<f64> = (0..n).map(|i| deltas[i] * (cn * ejp[i] - ej[i])).collect();
        let v = lambda_max_value(&stack.directional(&d))?;
        if v < best.0 {
            best = (v, j);
        }
    }
    Ok(best)
}

/// `min_j λ_max(F'(σ) D((n−1)e_j' − e_j))` at one conductivity, with the
/// minimizing free-layer index.
pub fn definiteness_margin(
    model: &MeasurementModel,
    bx: &SigmaBox,
    deltas: &[f64],
    sigma: &[f64],
) -> Result<(f64, usize)> {
    let free = check_model(model, bx)?;
    if deltas.len() != free.len() {
        return Err(Error::DimensionMismatch {
            expected: free.len(),
            found: deltas.len(),
        });
    }
    definiteness_with(&reduced_jacobian(model, &free, sigma)?, deltas)
}

/// Runs the backward induction over the free layers and returns the
/// certificate. `epsilon = None` uses `1e-6 · max_σ ‖F'(σ)1‖_F`.
pub fn calibrate(
    model: &MeasurementModel,
    bx: &SigmaBox,
    spec: &SampleSpec,
    epsilon: Option<f64>,
) -> Result<CalibrationCertificate> {
    let free = check_model(model, bx)?;
    let n = free.len();
    let samples = sample_box(bx, spec, DEFAULT_SAMPLE_CAP)?;
    let stacks = reduced_jacobians(model, &free, &samples)?;

    let eps = match epsilon {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(_) => return Err(Error::InvalidOption("epsilon must be positive")),
        None => {
            let ones = vec![1.0; n];
            1e-6 * stacks
                .iter()
                .map(|s| s.directional(&ones).frobenius_norm())
                .fold(0.0, f64::max)
        }
    };
    let c_const = (n - 1) as f64;

    let mut deltas = vec![1.0; n];
    for j in (0..n).rev() {
        let w_plus = c_const / deltas[j];
        let d = find_delta_with(&stacks, j, c_const, w_plus, eps, free[j])?;
        if j > 0 {
            deltas[j - 1] = deltas[j] * d / c_const;
        }
    }

    let mut lambda = f64::INFINITY;
    let mut worst_layer = 0;
    for s in &stacks {
        let (v, j) = definiteness_with(s, &deltas)?;
        if v < lambda {
            lambda = v;
            worst_layer = j;
        }
    }
    if !(lambda > 0.0) {
        return Err(Error::NoDefiniteness {
            layer: free[worst_layer],
            margin: lambda,
        });
    }

    Ok(CalibrationCertificate {
        radii: model.geometry.radii().to_vec(),
        c: deltas.iter().map(|d| 1.0 / d).collect(),
        deltas,
        lambda,
        c_const,
        m: model.m,
        sigma_box: bx.clone(),
        sample_spec: spec.clone(),
        epsilon: eps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Definiteness value `≤ 0` at a fresh sample.
    Indefinite,
    /// A calibration sample falls below the recorded `λ`.
    LambdaNotAttained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub sample: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    /// Minimum definiteness over the fresh samples.
    pub min_definiteness: f64,
    /// Minimum definiteness over the certificate's own samples.
    pub calibration_min: f64,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-evaluates the certificate's definiteness on `fresh` samples (flagging
/// any value `≤ 0`) and checks that its own samples still attain `λ`.
pub fn verify_certificate(
    cert: &CalibrationCertificate,
    model: &MeasurementModel,
    fresh: &[Vec<f64>],
) -> Result<VerificationReport> {
    let free = check_model(model, &cert.sigma_box)?;
    let mut violations = Vec::new();

    let mut calibration_min = f64::INFINITY;
    let mut calibration_arg = 0;
    for (k, s) in cert.samples()?.iter().enumerate() {
        let (v, _) = definiteness_with(&reduced_jacobian(model, &free, s)?, &cert.deltas)?;
        if v < calibration_min {
            calibration_min = v;
            calibration_arg = k;
        }
    }
    if calibration_min < cert.lambda {
        violations.push(Violation {
            kind: ViolationKind::LambdaNotAttained,
            sample: calibration_arg,
            value: calibration_min,
        });
    }

    let mut min_definiteness = f64::INFINITY;
    for (k, s) in fresh.iter().enumerate() {
        let (v, _) = definiteness_with(&reduced_jacobian(model, &free, s)?, &cert.deltas)?;
        min_definiteness = min_definiteness.min(v);
        if !(v > 0.0) {
            violations.push(Violation {
                kind: ViolationKind::Indefinite,
                sample: k,
                value: v,
            });
        }
    }
    Ok(VerificationReport {
        min_definiteness,
        calibration_min,
        violations,
    })
}
