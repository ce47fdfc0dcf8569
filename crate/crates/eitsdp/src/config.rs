//! Experiment configuration: a JSON file whose missing fields take the
//! two-inner-layer defaults, plus command-line overrides.

use std::path::{Path, PathBuf};

use eitsdp_core::lsq::{BoxBehavior, LmOptions};
use eitsdp_core::{Backend, Geometry, MeasurementModel, SigmaBox};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::AppError;

/// Fields missing from a grid section take the landscape defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Range shared by both free-layer axes.
    pub range: [f64; 2],
    pub resolution: usize,
    /// Display clipping for the heatmap.
    pub clip: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub max_iter: usize,
    pub tol_grad: f64,
    pub damping: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    /// Project iterates onto the box; off by default, like a generic
    /// unconstrained least-squares solver.
    pub clamp: bool,
}

impl Default for LmConfig {
    fn default() -> Self {
        let d = LmOptions::default();
        LmConfig {
            max_iter: d.max_iter,
            tol_grad: d.tol_grad,
            damping: d.damping,
            damping_up: d.damping_up,
            damping_down: d.damping_down,
            clamp: false,
        }
    }
}

impl LmConfig {
    pub fn options(&self) -> LmOptions {
        LmOptions {
            max_iter: self.max_iter,
            tol_grad: self.tol_grad,
            damping: self.damping,
            damping_up: self.damping_up,
            damping_down: self.damping_down,
            box_behavior: if self.clamp {
                BoxBehavior::Clamp
            } else {
                BoxBehavior::Unconstrained
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Grid points per free axis.
    pub grid: usize,
    /// Extra seeded uniform samples (seed taken from the top-level seed).
    pub random: usize,
    /// `None` uses the default margin.
    pub epsilon: Option<f64>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            grid: 3,
            random: 0,
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub backend: Backend,
    /// Certificate providing the cost vector; uniform cost otherwise.
    pub certificate: Option<PathBuf>,
    /// Measurement CSV; `None` uses exact data `F(truth)`.
    pub measurement: Option<PathBuf>,
    /// Noise level `δ`; also the slack `τ`.
    pub delta: f64,
    /// Noise trials (0 solves once).
    pub trials: usize,
    /// Draw each trial's truth from the calibration samples.
    pub truth_from_samples: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            backend: Backend::Penalty,
            certificate: None,
            measurement: None,
            delta: 0.0,
            trials: 0,
            truth_from_samples: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub radii: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub truth: Vec<f64>,
    pub m: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub landscape: GridConfig,
    pub basins: GridConfig,
    pub lm: LmConfig,
    pub calibration: CalibrationConfig,
    pub solve: SolveConfig,
    pub property_trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            radii: vec![0.5, 0.25],
            lower: vec![1.0, 0.5, 0.5],
            upper: vec![1.0, 2.0, 2.0],
            truth: vec![1.0, 1.0, 1.0],
            m: 6,
            seed: 0,
            out: PathBuf::from("out"),
            landscape: GridConfig {
                range: [0.1, 3.0],
                resolution: 300,
                clip: [1e-8, 1e2],
            },
            basins: GridConfig {
                range: [0.1, 3.0],
                resolution: 60,
                clip: [1e-6, 1e1],
            },
            lm: LmConfig::default(),
            calibration: CalibrationConfig::default(),
            solve: SolveConfig::default(),
            property_trials: 1000,
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        ExperimentConfig::default().landscape
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub m: Option<usize>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, AppError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| AppError::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", p.display())))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(m) = overrides.m {
            cfg.m = m;
        }
        if let Some(d) = overrides.delta {
            cfg.solve.delta = d;
        }
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if let Some(o) = &overrides.out {
            cfg.out = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), AppError> {
        let n = self.radii.len() + 1;
        let fail = |msg: String| Err(AppError::Config(msg));
        if self.lower.len() != n || self.upper.len() != n || self.truth.len() != n {
            return fail(format!("lower, upper and truth need {n} entries for {} radii", n - 1));
        }
        self.model()?;
        self.sigma_box()?;
        if !self.truth.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return fail("truth must be positive".into());
        }
        for (name, g) in [("landscape", &self.landscape), ("basins", &self.basins)] {
            if !(g.range[0] > 0.0 && g.range[1] > g.range[0]) {
                return fail(format!("{name}.range must satisfy 0 < lo < hi"));
            }
            if g.resolution < 2 {
                return fail(format!("{name}.resolution must be at least 2"));
            }
            if !(g.clip[0] > 0.0 && g.clip[1] > g.clip[0]) {
                return fail(format!("{name}.clip must satisfy 0 < lo < hi"));
            }
        }
        if !(self.solve.delta >= 0.0 && self.solve.delta.is_finite()) {
            return fail("delta must be non-negative".into());
        }
        if self.calibration.grid < 2 && self.calibration.random == 0 {
            return fail("calibration needs grid ≥ 2 or random samples".into());
        }
        Ok(())
    }

    pub fn model(&self) -> Result<MeasurementModel, AppError> {
        let g = Geometry::new(self.radii.clone()).map_err(|e| AppError::Config(e.to_string()))?;
        MeasurementModel::new(g, self.m).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn sigma_box(&self) -> Result<SigmaBox, AppError> {
        SigmaBox::new(self.lower.clone(), self.upper.clone()).map_err(|e| AppError::Config(e.to_string()))
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form, with
    /// the output directory left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.model().unwrap().layers(), 3);
        assert_eq!(c.sigma_box().unwrap().free_layers(), vec![1, 2]);
    }

    #[test]
    fn partial_file_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"m": 10, "seed": 4, "landscape": {"resolution": 50}}"#).unwrap();
        let c = ExperimentConfig::load(Some(&p), &Overrides::default()).unwrap();
        assert_eq!((c.m, c.seed, c.landscape.resolution), (10, 4, 50));
        assert_eq!(c.landscape.range, [0.1, 3.0]);
        let o = Overrides {
            m: Some(20),
            seed: Some(9),
            delta: Some(1e-3),
            out: Some("x".into()),
        };
        let c = ExperimentConfig::load(Some(&p), &o).unwrap();
        assert_eq!((c.m, c.seed, c.solve.delta), (20, 9, 1e-3));
        assert_eq!(c.out, PathBuf::from("x"));
    }

    #[test]
    fn invalid_configs_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        for bad in [
            r#"{"radii": [0.25, 0.5]}"#,
            r#"{"lower": [1.0]}"#,
            r#"{"m": 0}"#,
            r#"{"unknown": 1}"#,
            r#"{"landscape": {"range": [0.0, 1.0]}}"#,
            "not json",
        ] {
            std::fs::write(&p, bad).unwrap();
            assert!(
                matches!(
                    ExperimentConfig::load(Some(&p), &Overrides::default()),
                    Err(AppError::Config(_))
                ),
                "{bad}"
            );
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.out = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.m = 7;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
