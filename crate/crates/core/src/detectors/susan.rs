use serde::{Deserialize, Serialize};

use super::{check_size, non_max_suppress, Corner, DetectError, DetectorKind};
use crate::image::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SusanMask {
    /// 7×7 disk, `dx² + dy² <= 10`.
    Mask37,
    /// Full 5×5 block, `dx² + dy² <= 8`.
    Mask25,
}

impl SusanMask {
    fn radius_sq(&self) -> i64 {
        match self {
            SusanMask::Mask37 => 10,
            SusanMask::Mask25 => 8,
        }
    }

    pub fn radius(&self) -> u32 {
        match self {
            SusanMask::Mask37 => 3,
            SusanMask::Mask25 => 2,
        }
    }

    /// Offsets of the non-nucleus mask pixels, raster order.
    pub fn offsets(&self) -> Vec<(i64, i64)> {
        let r = self.radius() as i64;
        let mut v = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if (dx, dy) != (0, 0) && dx * dx + dy * dy <= self.radius_sq() {
                    v.push((dx, dy));
                }
            }
        }
        v
    }

    /// Half the maximum USAN area, rounded to the half pixel.
    pub fn default_geometric_threshold(&self) -> f64 {
        match self {
            SusanMask::Mask37 => 18.5,
            SusanMask::Mask25 => 12.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SusanConfig {
    pub mask: SusanMask,
    /// Brightness difference scale of the similarity function.
    pub t: f64,
    /// Geometric threshold; `None` picks the mask's default.
    pub g: Option<f64>,
}

impl Default for SusanConfig {
    fn default() -> Self {
        Self { mask: SusanMask::Mask37, t: 27.0, g: None }
    }
}

impl SusanConfig {
    pub fn geometric_threshold(&self) -> f64 {
        self.g.unwrap_or_else(|| self.mask.default_geometric_threshold())
    }
}

/// Template size of the non-maximum suppression step (5×5).
const NMS_RADIUS: u32 = 2;

/// USAN-based corner response `g - n` (or 0) for every pixel, row-major.
pub fn susan_response(img: &GrayImage, cfg: &SusanConfig) -> Result<Vec<f64>, DetectError> {
    let g = cfg.geometric_threshold();
    if !(cfg.t > 0.0) || !(g > 0.0) {
        return Err(DetectError::InvalidConfig("susan t and g must be positive".into()));
    }
    let r = cfg.mask.radius();
    check_size(img, 2 * r + 2)?;

    // similarity c = exp(-(dI / t)^6) tabulated for dI in -255..=255
    let lut: Vec<f64> = (-255i32..=255).map(|d| (-(d as f64 / cfg.t).powi(6)).exp()).collect();
    let offsets: Vec<isize> = {
        let w = img.width() as isize;
        cfg.mask.offsets().into_iter().map(|(dx, dy)| dy as isize * w + dx as isize).collect()
    };

    let (w, h) = (img.width() as usize, img.height() as usize);
    let px = img.pixels();
    let r = r as usize;
    let mut out = vec![0.0; w * h];
    for y in r..h - r {
        for x in r..w - r {
            let i = y * w + x;
            let nucleus = px[i] as isize;
            let n: f64 = offsets
                .iter()
                .map(|&o| lut[(px[(i as isize + o) as usize] as isize - nucleus + 255) as usize])
                .sum();
            if n < g {
                out[i] = g - n;
            }
        }
    }
    Ok(out)
}

/// SUSAN corners: positive responses that are local maxima over a 5×5 template.
pub fn susan_detect(img: &GrayImage, cfg: &SusanConfig) -> Result<Vec<Corner>, DetectError> {
    let resp = susan_response(img, cfg)?;
    let (w, h) = (img.width(), img.height());
    let b = cfg.mask.radius();
    let mut candidates = Vec::new();
    for y in b..h - b {
        for x in b..w - b {
            let r = resp[(y * w + x) as usize];
            if r > 0.0 {
                candidates.push(Corner::new(x, y, r, DetectorKind::Susan));
            }
        }
    }
    Ok(non_max_suppress(&candidates, NMS_RADIUS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::test_images::{shifted, square};

    #[test]
    fn mask_sizes() {
        assert_eq!(SusanMask::Mask37.offsets().len(), 36);
        assert_eq!(SusanMask::Mask25.offsets().len(), 24);
    }

    #[test]
    fn constant_image_has_no_corners() {
        let img = GrayImage::new(20, 20, 128);
        assert!(susan_detect(&img, &SusanConfig::default()).unwrap().is_empty());
        assert!(susan_response(&img, &SusanConfig::default()).unwrap().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn isolated_bright_pixel_is_a_corner() {
        let mut img = GrayImage::new(15, 15, 0);
        img.set(7, 7, 255);
        let corners = susan_detect(&img, &SusanConfig::default()).unwrap();
        assert_eq!((corners[0].u, corners[0].v), (7, 7));
        assert!((corners[0].score - 18.5).abs() < 1e-6);
    }

    /// Literal per-pixel evaluation of the similarity sum and response.
    fn oracle(img: &GrayImage, x: i64, y: i64, t: f64, g: f64) -> f64 {
        let i0 = img.get(x as u32, y as u32) as f64;
        let mut n = 0.0;
        for dy in -3i64..=3 {
            for dx in -3i64..=3 {
                let d2 = dx * dx + dy * dy;
                if d2 == 0 || d2 > 10 {
                    continue;
                }
                let i = img.get((x + dx) as u32, (y + dy) as u32) as f64;
                n += (-((i - i0) / t).powi(6)).exp();
            }
        }
        if n < g {
            g - n
        } else {
            0.0
        }
    }

    #[test]
    fn square_vertex_response_matches_oracle() {
        let img = square(30, 30, 8, 9, 12, 40, 200);
        let cfg = SusanConfig::default();
        let resp = susan_response(&img, &cfg).unwrap();
        for y in 3..27 {
            for x in 3..27 {
                let want = oracle(&img, x, y, 27.0, 18.5);
                assert!((resp[(y * 30 + x) as usize] - want).abs() < 1e-12);
            }
        }
        let corners = susan_detect(&img, &cfg).unwrap();
        for (vx, vy) in [(8u32, 9u32), (19, 9), (8, 20), (19, 20)] {
            assert!(
                corners.iter().any(|c| c.u.abs_diff(vx) <= 1 && c.v.abs_diff(vy) <= 1),
                "no corner near ({vx},{vy}) in {corners:?}"
            );
        }
    }

    #[test]
    fn intensity_shift_keeps_positions() {
        let img = square(30, 30, 8, 9, 12, 40, 200);
        let a = susan_detect(&img, &SusanConfig::default()).unwrap();
        let b = susan_detect(&shifted(&img, 30), &SusanConfig::default()).unwrap();
        let pos = |v: &[Corner]| v.iter().map(|c| (c.u, c.v)).collect::<Vec<_>>();
        assert_eq!(pos(&a), pos(&b));
    }

    #[test]
    fn too_small() {
        assert!(matches!(
            susan_detect(&GrayImage::new(7, 7, 0), &SusanConfig::default()),
            Err(DetectError::ImageTooSmall { .. })
        ));
    }
}
