use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::detectors::{DetectorConfig, DetectorKind, FastConfig, HarrisConfig, SusanConfig};
use crate::geometry::{intrinsics_from_fov, kc10_pfps, load_pfp_table, CameraIntrinsics, FeaturePoint3D};
use crate::scenegen::{SceneConfig, TrajectoryConfig};
use crate::solver::SolverConfig;

/// Camera model parameters as they appear in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraConfig {
    /// Vertical field of view, degrees.
    pub fov_y: f64,
    pub width: u32,
    pub height: u32,
    /// Upward mounting pitch, degrees.
    pub alpha: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self { fov_y: 60.0, width: 512, height: 384, alpha: 38.0 }
    }
}

/// Everything one trajectory run needs. Field names are the configuration
/// file keys; nested structs are TOML tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub detector: DetectorKind,
    pub harris: HarrisConfig,
    pub susan: SusanConfig,
    pub fast: FastConfig,
    pub solver: SolverConfig,
    pub scene: SceneConfig,
    pub trajectory: TrajectoryConfig,
    pub camera: CameraConfig,
    /// Absolute gross-error threshold, pixels.
    pub t1: f64,
    /// Relative gross-error threshold, percent.
    pub t2: f64,
    /// A visible beacon counts as missed when no corner lies this close to
    /// its true projection, pixels.
    pub miss_radius: f64,
    /// Half-width of the uniform prior noise on position, meters.
    pub init_noise_pos: f64,
    /// Half-width of the uniform prior noise on attitude, degrees.
    pub init_noise_ang: f64,
    pub outer_passes_max: usize,
    /// Seed for the prior noise; frame renders use `scene.rng_seed ^ k`.
    pub seed: u64,
    /// Beacon table; the built-in seven-beacon table when absent.
    pub pfp_file: Option<PathBuf>,
    /// Measure detection wall time. When off, `t_fe` is reported as 0 so
    /// reports are reproducible byte for byte.
    pub record_timing: bool,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            detector: DetectorKind::Fast,
            harris: HarrisConfig::default(),
            susan: SusanConfig::default(),
            fast: FastConfig::default(),
            solver: SolverConfig::default(),
            scene: SceneConfig::default(),
            trajectory: TrajectoryConfig::default(),
            camera: CameraConfig::default(),
            t1: 5.0,
            t2: 50.0,
            miss_radius: 3.0,
            init_noise_pos: 0.5,
            init_noise_ang: 1.0,
            outer_passes_max: 3,
            seed: 0,
            pfp_file: None,
            record_timing: true,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        // relative table paths are relative to the config file
        if let (Some(p), Some(dir)) = (cfg.pfp_file.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configuration always serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let positive = [
            ("t1", self.t1),
            ("t2", self.t2),
            ("miss_radius", self.miss_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HarnessError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.init_noise_pos >= 0.0 && self.init_noise_ang >= 0.0) {
            return Err(HarnessError::Config("prior noise must be non-negative".into()));
        }
        if self.outer_passes_max == 0 {
            return Err(HarnessError::Config("outer_passes_max must be at least 1".into()));
        }
        if self.trajectory.frame_count == 0 {
            return Err(HarnessError::Config("trajectory.frame_count must be at least 1".into()));
        }
        let s = &self.solver;
        if !(s.lambda0 > 0.0 && s.lambda_up > 1.0 && s.lambda_down > 0.0 && s.lambda_down < 1.0) {
            return Err(HarnessError::Config("solver needs lambda0 > 0 and lambda_up > 1 > lambda_down > 0".into()));
        }
        if !(s.step_tol > 0.0 && s.residual_tol > 0.0 && s.fd_step_pos > 0.0 && s.fd_step_ang > 0.0) {
            return Err(HarnessError::Config("solver tolerances and difference steps must be positive".into()));
        }
        self.scene.validate().map_err(HarnessError::Config)?;
        self.intrinsics()?;
        Ok(())
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics, HarnessError> {
        let c = &self.camera;
        Ok(intrinsics_from_fov(c.fov_y, c.width, c.height, c.alpha)?)
    }

    pub fn detector_config(&self) -> DetectorConfig {
        DetectorConfig { harris: self.harris.clone(), susan: self.susan.clone(), fast: self.fast.clone() }
    }

    pub fn pfps(&self) -> Result<Vec<FeaturePoint3D>, HarnessError> {
        match &self.pfp_file {
            Some(p) => Ok(load_pfp_table(p)?),
            None => Ok(kc10_pfps()),
        }
    }
}
