//! Synthetic beacon frames and approach trajectories with known ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{project_visible_set, CameraIntrinsics, FeaturePoint3D, PixelPoint, PoseVector};
use crate::image::RgbImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub beacon_radius: u32,
    pub beacon_intensity: u8,
    pub background_intensity: u8,
    /// Standard deviation of the additive Gaussian background noise.
    pub noise_sigma: f64,
    pub distractor_count: usize,
    /// Side length of the bright distractor squares, pixels.
    pub distractor_size: u32,
    /// Beacons that are never drawn (lights that are off or occluded).
    pub hidden_ids: Vec<u32>,
    pub rng_seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            beacon_radius: 2,
            beacon_intensity: 255,
            background_intensity: 30,
            noise_sigma: 2.0,
            distractor_count: 0,
            distractor_size: 5,
            hidden_ids: Vec::new(),
            rng_seed: 0,
        }
    }
}

/// Minimum gap between a distractor square and any beacon disk, pixels.
pub const DISTRACTOR_CLEARANCE: f64 = 10.0;
const DISTRACTOR_MARGIN: u32 = 6;

impl SceneConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(format!("noise_sigma must be finite and non-negative, got {}", self.noise_sigma));
        }
        if (self.beacon_intensity as f64) <= self.background_intensity as f64 + 3.0 * self.noise_sigma {
            return Err("beacon_intensity must exceed background_intensity + 3 * noise_sigma".into());
        }
        if self.distractor_size == 0 {
            return Err("distractor_size must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryConfig {
    pub start: PoseVector,
    pub step_y: f64,
    pub step_z: f64,
    pub frame_count: usize,
    /// Half-width of the uniform attitude jitter, degrees.
    pub attitude_jitter: f64,
    pub jitter_seed: u64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            start: PoseVector::new(0.0, 80.0, 60.0, 0.0, 0.0, 0.0),
            step_y: -0.5,
            step_z: -0.5,
            frame_count: 71,
            attitude_jitter: 0.0,
            jitter_seed: 0,
        }
    }
}

/// Straight-line approach: pose `k` is `start + k * (0, step_y, step_z, 0, 0, 0)`.
pub fn gen_trajectory(cfg: &TrajectoryConfig) -> Vec<PoseVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.jitter_seed);
    (0..cfg.frame_count)
        .map(|k| {
            let k = k as f64;
            let mut p = cfg.start;
            p.y += k * cfg.step_y;
            p.z += k * cfg.step_z;
            if cfg.attitude_jitter > 0.0 {
                let j = cfg.attitude_jitter;
                p.psi += rng.random_range(-j..=j);
                p.theta += rng.random_range(-j..=j);
                p.phi += rng.random_range(-j..=j);
            }
            p
        })
        .collect()
}

/// A rendered frame with what was actually drawn.
#[derive(Debug, Clone)]
pub struct RenderedFrame {
    pub image: RgbImage,
    /// Projections of the beacons that were drawn, with ids.
    pub beacons: Vec<PixelPoint>,
    /// Top-left corners of the distractor squares.
    pub distractors: Vec<(u32, u32)>,
}

/// Renders beacon disks at their rounded projections over a noisy background.
pub fn render_frame(pose: &PoseVector, scene: &SceneConfig, intr: &CameraIntrinsics, pfps: &[FeaturePoint3D]) -> RgbImage {
    render_frame_detailed(pose, scene, intr, pfps).image
}

pub fn render_frame_detailed(
    pose: &PoseVector,
    scene: &SceneConfig,
    intr: &CameraIntrinsics,
    pfps: &[FeaturePoint3D],
) -> RenderedFrame {
    let (w, h) = (intr.width, intr.height);
    let mut rng = ChaCha8Rng::seed_from_u64(scene.rng_seed);
    let bg = scene.background_intensity as f64;
    let pixels: Vec<[u8; 3]> = if scene.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, scene.noise_sigma).expect("validated sigma");
        (0..w as usize * h as usize)
            .map(|_| {
                let g = (bg + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8;
                [g, g, g]
            })
            .collect()
    } else {
        vec![[scene.background_intensity; 3]; w as usize * h as usize]
    };
    let mut image = RgbImage::from_raw(w, h, pixels).expect("buffer sized from intrinsics");

    let beacons: Vec<PixelPoint> = project_visible_set(intr, pose, pfps)
        .into_iter()
        .filter(|p| p.visible && !p.id.is_some_and(|id| scene.hidden_ids.contains(&id)))
        .collect();
    let fg = [scene.beacon_intensity; 3];
    let r = scene.beacon_radius as i64;
    for b in &beacons {
        let (cu, cv) = (b.u.round() as i64, b.v.round() as i64);
        for dy in -r..=r {
            for dx in -r..=r {
                let (x, y) = (cu + dx, cv + dy);
                if dx * dx + dy * dy <= r * r && x >= 0 && y >= 0 && x < w as i64 && y < h as i64 {
                    image.set(x as u32, y as u32, fg);
                }
            }
        }
    }

    let s = scene.distractor_size;
    let mut distractors = Vec::with_capacity(scene.distractor_count);
    if w > 2 * DISTRACTOR_MARGIN + s && h > 2 * DISTRACTOR_MARGIN + s {
        let clear = |x0: u32, y0: u32| {
            beacons.iter().all(|b| {
                // gap between the square and the disk around the beacon center
                let dx = (x0 as f64 - b.u).max(b.u - (x0 + s - 1) as f64).max(0.0);
                let dy = (y0 as f64 - b.v).max(b.v - (y0 + s - 1) as f64).max(0.0);
                dx.hypot(dy) - r as f64 >= DISTRACTOR_CLEARANCE
            })
        };
        let mut attempts = 0;
        while distractors.len() < scene.distractor_count && attempts < 10_000 {
            attempts += 1;
            let x0 = rng.random_range(DISTRACTOR_MARGIN..w - DISTRACTOR_MARGIN - s);
            let y0 = rng.random_range(DISTRACTOR_MARGIN..h - DISTRACTOR_MARGIN - s);
            if clear(x0, y0) {
                distractors.push((x0, y0));
            }
        }
    }
    for &(x0, y0) in &distractors {
        for y in y0..y0 + s {
            for x in x0..x0 + s {
                image.set(x, y, fg);
            }
        }
    }

    RenderedFrame { image, beacons, distractors }
}
