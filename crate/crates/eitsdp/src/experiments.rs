//! The five experiment commands. Each writes its artifacts below the
//! configured output directory and returns a summary. Grid cells and trials
//! run in parallel; results are gathered by index, so artifacts depend only
//! on the configuration.

use std::path::{Path, PathBuf};

use eitsdp_core::calibration::{self, RandomSamples, VerificationReport};
use eitsdp_core::linalg::spectral_norm;
use eitsdp_core::lsq::lsq_solve;
use eitsdp_core::properties::{self, PropertyOptions};
use eitsdp_core::solver::{self, SolveOptions};
use eitsdp_core::{
    CalibrationCertificate, ConvexProblem, MeasurementModel, SampleSpec, SigmaBox, SolveReport, SymMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, GridConfig};
use crate::error::AppError;
use crate::io;
use crate::svg::Heatmap;

/// Landscape minima count only when their residual exceeds this.
pub const SPURIOUS_RESIDUAL: f64 = 1e-4;
/// Basin runs with a final error above this are bad initializations.
pub const BAD_ERROR: f64 = 0.1;
/// Basin runs with a final error at most this recovered the truth.
pub const GOOD_ERROR: f64 = 1e-6;

fn grid_axis(g: &GridConfig) -> Vec<f64> {
    let (lo, hi) = (g.range[0], g.range[1]);
    let d = (g.resolution - 1) as f64;
    (0..g.resolution).map(|i| lo + i as f64 * (hi - lo) / d).collect()
}

fn two_free_layers(cfg: &ExperimentConfig) -> Result<[usize; 2], AppError> {
    match cfg.sigma_box()?.free_layers()[..] {
        [a, b] => Ok([a, b]),
        ref f => Err(AppError::Config(format!(
            "this command needs exactly 2 free layers, found {}",
            f.len()
        ))),
    }
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Strict local minima among interior cells (smaller than the 4 edge
/// neighbors), as `(i1, i2)` pairs in row-major order.
pub fn strict_local_minima(values: &[f64], res: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 1..res.saturating_sub(1) {
        for j in 1..res - 1 {
            let k = i * res + j;
            let v = values[k];
            if v < values[k - res] && v < values[k + res] && v < values[k - 1] && v < values[k + 1] {
                out.push((i, j));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalMinimum {
    pub sigma: [f64; 2],
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LandscapeSummary {
    pub config_hash: String,
    pub resolution: usize,
    pub range: [f64; 2],
    pub min_value: f64,
    pub local_minima: Vec<LocalMinimum>,
    /// Minima with residual above `SPURIOUS_RESIDUAL`.
    pub spurious_minima: usize,
    pub csv: PathBuf,
    pub svg: PathBuf,
}

/// `‖F_m(σ) − F_m(σ̂)‖_F²` over the grid of the two free layers.
pub fn landscape(cfg: &ExperimentConfig) -> Result<LandscapeSummary, AppError> {
    let [l1, l2] = two_free_layers(cfg)?;
    let model = cfg.model()?;
    let y = model.assemble_f(&cfg.truth)?;
    let axis = grid_axis(&cfg.landscape);
    let res = axis.len();
    let values = (0..res * res)
        .into_par_iter()
        .map(|k| {
            let mut s = cfg.truth.clone();
            s[l1] = axis[k / res];
            s[l2] = axis[k % res];
            model.frobenius_residual(&s, &y)
        })
        .collect::<Result<Vec<f64>, _>>()?;

    let minima: Vec<LocalMinimum> = strict_local_minima(&values, res)
        .into_iter()
        .map(|(i, j)| LocalMinimum {
            sigma: [axis[i], axis[j]],
            residual: values[i * res + j],
        })
        .collect();
    let hash = cfg.hash();
    io::ensure_dir(&cfg.out)?;
    let csv = cfg.out.join("landscape.csv");
    let svg = cfg.out.join("landscape.svg");
    let names = [format!("sigma{l1}"), format!("sigma{l2}"), "residual".to_string()];
    io::write_grid_csv(
        &csv,
        "landscape",
        &hash,
        &names.iter().map(String::as_str).collect::<Vec<_>>(),
        (0..res * res).map(|k| vec![axis[k / res], axis[k % res], values[k]]),
    )?;
    io::write_text(
        &svg,
        &Heatmap {
            title: "least-squares residual",
            x_label: &names[0],
            y_label: &names[1],
            x_range: cfg.landscape.range,
            y_range: cfg.landscape.range,
            nx: res,
            ny: res,
            values: &values,
            clip: cfg.landscape.clip,
        }
        .render(),
    )?;
    let summary = LandscapeSummary {
        config_hash: hash,
        resolution: res,
        range: cfg.landscape.range,
        min_value: values.iter().copied().fold(f64::INFINITY, f64::min),
        spurious_minima: minima.iter().filter(|m| m.residual > SPURIOUS_RESIDUAL).count(),
        local_minima: minima,
        csv,
        svg,
    };
    io::write_json(&cfg.out.join("landscape.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct BasinsSummary {
    pub config_hash: String,
    pub resolution: usize,
    pub range: [f64; 2],
    pub runs: usize,
    /// Runs ending within `GOOD_ERROR` of the truth.
    pub recovered: usize,
    /// Runs ending farther than `BAD_ERROR` from the truth.
    pub bad: usize,
    pub bad_fraction: f64,
    pub csv: PathBuf,
    pub svg: PathBuf,
}

/// Least-squares runs from every grid initialization. The error is the
/// Euclidean distance to the truth. With `lm.clamp` the free layers are boxed
/// to the grid range.
pub fn basins(cfg: &ExperimentConfig) -> Result<BasinsSummary, AppError> {
    let [l1, l2] = two_free_layers(cfg)?;
    let model = cfg.model()?;
    let y = model.assemble_f(&cfg.truth)?;
    let mut bx = cfg.sigma_box()?;
    for l in [l1, l2] {
        bx.lower[l] = cfg.basins.range[0];
        bx.upper[l] = cfg.basins.range[1];
    }
    let opts = cfg.lm.options();
    let axis = grid_axis(&cfg.basins);
    let res = axis.len();
    let runs = (0..res * res)
        .into_par_iter()
        .map(|k| {
            let mut s = cfg.truth.clone();
            s[l1] = axis[k / res];
            s[l2] = axis[k % res];
            let r = lsq_solve(&model, &y, &s, &bx, &opts)?;
            let err = if r.sigma.iter().all(|v| v.is_finite()) {
                euclid_dist(&r.sigma, &cfg.truth)
            } else {
                f64::INFINITY
            };
            Ok((err, r))
        })
        .collect::<Result<Vec<(f64, SolveReport)>, eitsdp_core::Error>>()?;

    let errors: Vec<f64> = runs.iter().map(|(e, _)| *e).collect();
    let hash = cfg.hash();
    io::ensure_dir(&cfg.out)?;
    let csv = cfg.out.join("basins.csv");
    let svg = cfg.out.join("basins.svg");
    let (n1, n2) = (format!("sigma{l1}"), format!("sigma{l2}"));
    let (f1, f2) = (format!("final_sigma{l1}"), format!("final_sigma{l2}"));
    io::write_grid_csv(
        &csv,
        "basins",
        &hash,
        &[&n1, &n2, &f1, &f2, "error", "residual", "iterations"],
        runs.iter().enumerate().map(|(k, (e, r))| {
            vec![
                axis[k / res],
                axis[k % res],
                r.sigma[l1],
                r.sigma[l2],
                *e,
                r.objective,
                r.iterations as f64,
            ]
        }),
    )?;
    io::write_text(
        &svg,
        &Heatmap {
            title: "error of the final iterate",
            x_label: &n1,
            y_label: &n2,
            x_range: cfg.basins.range,
            y_range: cfg.basins.range,
            nx: res,
            ny: res,
            values: &errors,
            clip: cfg.basins.clip,
        }
        .render(),
    )?;
    let bad = errors.iter().filter(|e| !(**e <= BAD_ERROR)).count();
    let summary = BasinsSummary {
        config_hash: hash,
        resolution: res,
        range: cfg.basins.range,
        runs: errors.len(),
        recovered: errors.iter().filter(|e| **e <= GOOD_ERROR).count(),
        bad,
        bad_fraction: bad as f64 / errors.len() as f64,
        csv,
        svg,
    };
    io::write_json(&cfg.out.join("basins.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationSummary {
    pub config_hash: String,
    pub certificate: PathBuf,
    pub lambda: f64,
    pub c: Vec<f64>,
    pub verify_grid: usize,
    pub verify_min_definiteness: f64,
    pub calibration_min: f64,
    pub violations: usize,
}

impl CalibrationSummary {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn sample_spec(cfg: &ExperimentConfig) -> SampleSpec {
    SampleSpec {
        grid: (cfg.calibration.grid >= 2).then_some(cfg.calibration.grid),
        random: (cfg.calibration.random > 0).then_some(RandomSamples {
            count: cfg.calibration.random,
            seed: cfg.seed,
        }),
    }
}

/// Calibrates on the configured samples, then re-checks definiteness on the
/// nested grid with `2g − 1` points per axis. Writes `certificate.json`.
pub fn calibrate(cfg: &ExperimentConfig) -> Result<(CalibrationCertificate, CalibrationSummary), AppError> {
    let model = cfg.model()?;
    let bx = cfg.sigma_box()?;
    let cert = calibration::calibrate(&model, &bx, &sample_spec(cfg), cfg.calibration.epsilon)?;
    let verify_grid = 2 * cfg.calibration.grid.max(2) - 1;
    let fresh = calibration::sample_box(&bx, &SampleSpec::grid(verify_grid), calibration::DEFAULT_SAMPLE_CAP)?;
    let report: VerificationReport = calibration::verify_certificate(&cert, &model, &fresh)?;

    io::ensure_dir(&cfg.out)?;
    let path = cfg.out.join("certificate.json");
    io::write_json(&path, &cert)?;
    let summary = CalibrationSummary {
        config_hash: cfg.hash(),
        certificate: path,
        lambda: cert.lambda,
        c: cert.c.clone(),
        verify_grid,
        verify_min_definiteness: report.min_definiteness,
        calibration_min: report.calibration_min,
        violations: report.violations.len(),
    };
    io::write_json(&cfg.out.join("calibration.json"), &summary)?;
    Ok((cert, summary))
}

/// Symmetric perturbation with spectral norm exactly `delta`.
pub fn noise_matrix(m: usize, delta: f64, rng: &mut impl Rng) -> Result<SymMatrix, AppError> {
    let mut e = SymMatrix::zeros(m);
    if delta == 0.0 {
        return Ok(e);
    }
    for i in 0..m {
        for j in i..m {
            e.set(i, j, rng.random_range(-1.0..1.0));
        }
    }
    let s = spectral_norm(&e)?;
    Ok(e.scaled(delta / s))
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn load_certificate(
    path: &Path,
    model: &MeasurementModel,
    bx: &SigmaBox,
) -> Result<CalibrationCertificate, AppError> {
    let cert: CalibrationCertificate = io::read_json(path)?;
    if cert.m != model.m || cert.radii != model.geometry.radii() {
        return Err(AppError::Config(format!(
            "{}: certificate geometry or m differs from the configuration",
            path.display()
        )));
    }
    if cert.sigma_box.free_layers() != bx.free_layers() {
        return Err(AppError::Config(format!(
            "{}: certificate free layers differ from the configuration",
            path.display()
        )));
    }
    Ok(cert)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub config_hash: String,
    pub delta: f64,
    pub report: SolveReport,
    pub truth: Vec<f64>,
    /// `‖σ* − σ̂‖_{c,∞}`; absent without a certificate.
    pub error_c_inf: Option<f64>,
    pub error_inf: f64,
    pub error_euclid: f64,
    /// `2(n−1)δ/λ`; absent without a certificate.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub delta: f64,
    pub truth: Vec<f64>,
    pub sigma: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub data_error: f64,
    pub status: eitsdp_core::SolveStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialsSummary {
    pub config_hash: String,
    pub delta: f64,
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` over the trials.
    pub worst_ratio: f64,
    pub jsonl: PathBuf,
}

pub enum SolveOutcome {
    Single(SolveSummary),
    Trials(TrialsSummary),
}

fn build_problem(
    cfg: &ExperimentConfig,
    model: &MeasurementModel,
    bx: &SigmaBox,
    cert: Option<&CalibrationCertificate>,
    y: SymMatrix,
    delta: f64,
) -> Result<ConvexProblem, AppError> {
    let mut p = ConvexProblem::new(model.clone(), y, bx.clone(), vec![1.0; bx.layers()], delta)?;
    if let Some(c) = cert {
        p = p.with_certificate(c)?;
    }
    Ok(p.with_options(SolveOptions {
        backend: cfg.solve.backend,
        ..SolveOptions::default()
    }))
}

/// Solves once (trials = 0) or runs seeded noise trials against the
/// certificate's bound, writing `solve.json` or `trials.jsonl`.
pub fn solve(cfg: &ExperimentConfig) -> Result<SolveOutcome, AppError> {
    let model = cfg.model()?;
    let bx = cfg.sigma_box()?;
    let cert = match &cfg.solve.certificate {
        Some(p) => Some(load_certificate(p, &model, &bx)?),
        None => None,
    };
    let delta = cfg.solve.delta;
    io::ensure_dir(&cfg.out)?;

    if cfg.solve.trials == 0 {
        let y = match &cfg.solve.measurement {
            Some(p) => io::read_matrix_csv(p)?,
            None => {
                let f = model.assemble_f(&cfg.truth)?;
                &f + &noise_matrix(model.m, delta, &mut trial_rng(cfg.seed, 0))?
            }
        };
        let problem = build_problem(cfg, &model, &bx, cert.as_ref(), y, delta)?;
        let report = solver::solve(&problem)?;
        let diff: Vec<f64> = report.sigma.iter().zip(&cfg.truth).map(|(a, b)| a - b).collect();
        let summary = SolveSummary {
            config_hash: cfg.hash(),
            delta,
            error_c_inf: cert.as_ref().map(|c| c.norm(&diff)),
            error_inf: inf_dist(&report.sigma, &cfg.truth),
            error_euclid: euclid_dist(&report.sigma, &cfg.truth),
            bound: cert.as_ref().map(|c| 2.0 * c.c_const * delta / c.lambda),
            truth: cfg.truth.clone(),
            report,
        };
        io::write_json(&cfg.out.join("solve.json"), &summary)?;
        return Ok(SolveOutcome::Single(summary));
    }

    let cert = cert.ok_or_else(|| AppError::Config("noise trials need solve.certificate".into()))?;
    let samples = cert.samples()?;
    let records = (0..cfg.solve.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t as u64);
            let truth = if cfg.solve.truth_from_samples {
                samples[rng.random_range(0..samples.len())].clone()
            } else {
                cfg.truth.clone()
            };
            let y = &model.assemble_f(&truth)? + &noise_matrix(model.m, delta, &mut rng)?;
            let problem = build_problem(cfg, &model, &bx, Some(&cert), y, delta)?;
            let r = solver::noise_bound_check(&problem, delta, &cert, &truth)?;
            Ok(TrialRecord {
                trial: t,
                delta,
                truth,
                sigma: r.report.sigma,
                lhs: r.lhs,
                rhs: r.rhs,
                holds: r.holds,
                data_error: r.data_error,
                status: r.report.status,
            })
        })
        .collect::<Result<Vec<TrialRecord>, AppError>>()?;
    let jsonl = cfg.out.join("trials.jsonl");
    io::write_jsonl(&jsonl, &records)?;
    let summary = TrialsSummary {
        config_hash: cfg.hash(),
        delta,
        trials: records.len(),
        violations: records.iter().filter(|r| !r.holds).count(),
        worst_ratio: records
            .iter()
            .map(|r| if r.rhs > 0.0 { r.lhs / r.rhs } else { r.lhs })
            .fold(0.0, f64::max),
        jsonl,
    };
    io::write_json(&cfg.out.join("trials.json"), &summary)?;
    Ok(SolveOutcome::Trials(summary))
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub suite: &'static str,
    pub trials: usize,
    pub violations: usize,
    pub worst: f64,
    pub skipped: bool,
}

/// Runs every property suite; `flip_jacobian_sign` is the fault-injection
/// hook.
pub fn properties(cfg: &ExperimentConfig, flip_jacobian_sign: bool) -> Result<Vec<SuiteRow>, AppError> {
    let model = cfg.model()?;
    let opts = PropertyOptions {
        trials: cfg.property_trials,
        seed: cfg.seed,
        flip_jacobian_sign,
        ..PropertyOptions::default()
    };
    let rows: Vec<SuiteRow> = properties::run_all(&model, &opts)?
        .into_iter()
        .map(|r| SuiteRow {
            suite: r.suite.name(),
            trials: r.trials,
            violations: r.violations,
            worst: r.worst,
            skipped: r.skipped,
        })
        .collect();
    io::ensure_dir(&cfg.out)?;
    io::write_json(&cfg.out.join("properties.json"), &rows)?;
    Ok(rows)
}
