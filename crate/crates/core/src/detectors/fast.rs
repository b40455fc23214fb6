use serde::{Deserialize, Serialize};

use super::{check_size, non_max_suppress, Corner, DetectError, DetectorKind};
use crate::image::GrayImage;

/// The 16-pixel Bresenham circle of radius 3, clockwise from 12 o'clock.
pub const CIRCLE_OFFSETS: [(i64, i64); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FastConfig {
    /// Intensity difference threshold.
    pub epsilon: u8,
    /// Minimum arc length, 1..=16.
    pub t_f: u32,
    pub nms_radius: u32,
}

impl Default for FastConfig {
    fn default() -> Self {
        Self { epsilon: 25, t_f: 12, nms_radius: 1 }
    }
}

/// True when the 16-bit circle mask holds a circular run of at least
/// `min_len` set bits.
#[inline]
pub fn has_contiguous_arc(mask: u16, min_len: u32) -> bool {
    if min_len == 0 {
        return true;
    }
    if min_len > 16 {
        return false;
    }
    let mut acc = mask;
    for i in 1..min_len {
        acc &= mask.rotate_right(i);
        if acc == 0 {
            return false;
        }
    }
    acc != 0
}

/// Largest sum of `diffs` over a maximal circular run of set bits with
/// length >= `min_len`.
fn best_arc_score(mask: u16, diffs: &[i32; 16], min_len: u32) -> Option<i32> {
    if mask == u16::MAX {
        return Some(diffs.iter().sum());
    }
    // start right after a clear bit so no run wraps past the start
    let start = (0..16).find(|&i| mask & (1 << i) == 0)? + 1;
    let (mut best, mut run_len, mut run_sum) = (None, 0u32, 0i32);
    for k in 0..=16 {
        let i = (start + k) % 16;
        if k < 16 && mask & (1 << i) != 0 {
            run_len += 1;
            run_sum += diffs[i];
        } else {
            if run_len >= min_len {
                best = best.max(Some(run_sum));
            }
            run_len = 0;
            run_sum = 0;
        }
    }
    best
}

/// FAST segment-test corners.
///
/// A pixel is a corner when at least `t_f` contiguous circle pixels are all
/// brighter than `I(P) + epsilon` or all darker than `I(P) - epsilon`. The
/// score is the summed absolute difference over the qualifying arc.
pub fn fast_detect(img: &GrayImage, cfg: &FastConfig) -> Result<Vec<Corner>, DetectError> {
    if !(1..=16).contains(&cfg.t_f) {
        return Err(DetectError::InvalidConfig(format!("fast t_f must be in 1..=16, got {}", cfg.t_f)));
    }
    if cfg.epsilon == 0 {
        return Err(DetectError::InvalidConfig("fast epsilon must be positive".into()));
    }
    check_size(img, 7)?;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let eps = cfg.epsilon as i32;
    // an arc of length t_f covers at least t_f / 4 of the compass pixels 0, 4, 8, 12
    let compass_needed = cfg.t_f / 4;

    let mut candidates = Vec::new();
    let mut diffs = [0i32; 16];
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            let p = img.at(x, y) as i32;
            if compass_needed > 0 {
                let (mut nb, mut nd) = (0, 0);
                for &k in &[0usize, 4, 8, 12] {
                    let (dx, dy) = CIRCLE_OFFSETS[k];
                    let d = img.at(x + dx, y + dy) as i32 - p;
                    nb += (d > eps) as u32;
                    nd += (-d > eps) as u32;
                }
                if nb < compass_needed && nd < compass_needed {
                    continue;
                }
            }
            let (mut bright, mut dark) = (0u16, 0u16);
            for (k, &(dx, dy)) in CIRCLE_OFFSETS.iter().enumerate() {
                let d = img.at(x + dx, y + dy) as i32 - p;
                diffs[k] = d.abs();
                if d > eps {
                    bright |= 1 << k;
                } else if -d > eps {
                    dark |= 1 << k;
                }
            }
            let score = [bright, dark]
                .into_iter()
                .filter(|&m| has_contiguous_arc(m, cfg.t_f))
                .filter_map(|m| best_arc_score(m, &diffs, cfg.t_f))
                .max();
            if let Some(s) = score {
                candidates.push(Corner::new(x as u32, y as u32, s as f64, DetectorKind::Fast));
            }
        }
    }
    Ok(non_max_suppress(&candidates, cfg.nms_radius))
}
