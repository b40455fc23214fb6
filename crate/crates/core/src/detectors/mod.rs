//! Corner extraction: Harris, SUSAN and FAST.
//!
//! All three work on 8-bit intensity images, never report corners closer
//! to the border than their own footprint, and return corners sorted by
//! descending score with ties in raster order.

mod fast;
mod harris;
mod susan;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::GrayImage;

pub use fast::{fast_detect, has_contiguous_arc, FastConfig, CIRCLE_OFFSETS};
pub use harris::{harris_detect, harris_response, HarrisConfig};
pub use susan::{susan_detect, susan_response, SusanConfig, SusanMask};

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("image {width}x{height} is too small, detector needs at least {min}x{min}")]
    ImageTooSmall { width: u32, height: u32, min: u32 },
    #[error("invalid detector configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Harris,
    Susan,
    Fast,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] = [DetectorKind::Harris, DetectorKind::Susan, DetectorKind::Fast];

    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::Harris => "harris",
            DetectorKind::Susan => "susan",
            DetectorKind::Fast => "fast",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "harris" => Ok(DetectorKind::Harris),
            "susan" => Ok(DetectorKind::Susan),
            "fast" => Ok(DetectorKind::Fast),
            _ => Err(format!("unknown detector {s:?} (expected harris, susan or fast)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corner {
    pub u: u32,
    pub v: u32,
    pub score: f64,
    pub detector: DetectorKind,
}

impl Corner {
    pub fn new(u: u32, v: u32, score: f64, detector: DetectorKind) -> Self {
        Self { u, v, score, detector }
    }

    pub fn to_pixel(&self) -> crate::geometry::PixelPoint {
        crate::geometry::PixelPoint::extracted(self.u as f64, self.v as f64)
    }
}

/// Settings for all three detectors; only the selected one is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub harris: HarrisConfig,
    pub susan: SusanConfig,
    pub fast: FastConfig,
}

impl DetectorConfig {
    pub fn detect(&self, kind: DetectorKind, img: &GrayImage) -> Result<Vec<Corner>, DetectError> {
        match kind {
            DetectorKind::Harris => harris_detect(img, &self.harris),
            DetectorKind::Susan => susan_detect(img, &self.susan),
            DetectorKind::Fast => fast_detect(img, &self.fast),
        }
    }
}

/// Runs `kind` with its default configuration.
pub fn detect(kind: DetectorKind, img: &GrayImage) -> Result<Vec<Corner>, DetectError> {
    DetectorConfig::default().detect(kind, img)
}

/// Raster order: row first, then column.
fn raster_key(c: &Corner) -> (u32, u32) {
    (c.v, c.u)
}

/// Canonical output order: descending score, ties by raster order.
pub(crate) fn canonical_order(a: &Corner, b: &Corner) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| raster_key(a).cmp(&raster_key(b)))
}

/// `a` beats `b` when its score is higher, or equal and earlier in raster order.
fn dominates(a: &Corner, b: &Corner) -> bool {
    match a.score.total_cmp(&b.score) {
        Ordering::Greater => true,
        Ordering::Equal => raster_key(a) < raster_key(b),
        Ordering::Less => false,
    }
}

/// Keeps the corners that no other corner within Chebyshev distance
/// `radius` dominates. Output is in canonical order.
pub fn non_max_suppress(points: &[Corner], radius: u32) -> Vec<Corner> {
    let r = radius.max(1) as i64;
    let by_pos: HashMap<(u32, u32), &Corner> = points.iter().map(|c| ((c.u, c.v), c)).collect();
    let mut kept: Vec<Corner> = points
        .iter()
        .filter(|c| {
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nu, nv) = (c.u as i64 + dx, c.v as i64 + dy);
                    if nu < 0 || nv < 0 {
                        continue;
                    }
                    if let Some(other) = by_pos.get(&(nu as u32, nv as u32)) {
                        if dominates(other, c) {
                            return false;
                        }
                    }
                }
            }
            true
        })
        .copied()
        .collect();
    kept.sort_by(canonical_order);
    kept
}

pub(crate) fn check_size(img: &GrayImage, min: u32) -> Result<(), DetectError> {
    if img.width() < min || img.height() < min {
        return Err(DetectError::ImageTooSmall { width: img.width(), height: img.height(), min });
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod test_images {
    use crate::image::GrayImage;

    /// Bright `side`×`side` square with top-left corner at (x0, y0).
    pub fn square(w: u32, h: u32, x0: u32, y0: u32, side: u32, bg: u8, fg: u8) -> GrayImage {
        let mut img = GrayImage::new(w, h, bg);
        for y in y0..y0 + side {
            for x in x0..x0 + side {
                img.set(x, y, fg);
            }
        }
        img
    }

    pub fn shifted(img: &GrayImage, c: u8) -> GrayImage {
        GrayImage::from_raw(img.width(), img.height(), img.pixels().iter().map(|&p| p + c).collect()).unwrap()
    }

    pub fn rotated90(img: &GrayImage) -> GrayImage {
        let (w, h) = (img.width(), img.height());
        let mut out = GrayImage::new(h, w, 0);
        for y in 0..h {
            for x in 0..w {
                out.set(h - 1 - y, x, img.get(x, y));
            }
        }
        out
    }
}
