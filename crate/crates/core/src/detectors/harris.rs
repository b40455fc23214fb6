use serde::{Deserialize, Serialize};

use super::{check_size, non_max_suppress, Corner, DetectError, DetectorKind};
use crate::image::GrayImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarrisConfig {
    /// Trace weight in `det(M) - k * tr(M)^2`; 0.04 to 0.06 is usual.
    pub k_h: f64,
    pub window_radius: u32,
    pub gaussian_sigma: f64,
    /// Minimum response, in units of (Sobel gradient on 0-255 intensities)^4.
    pub response_threshold: f64,
    pub nms_radius: u32,
}

impl Default for HarrisConfig {
    fn default() -> Self {
        Self { k_h: 0.05, window_radius: 2, gaussian_sigma: 1.0, response_threshold: 1e6, nms_radius: 1 }
    }
}

impl HarrisConfig {
    fn validate(&self) -> Result<(), DetectError> {
        if self.window_radius < 1 {
            return Err(DetectError::InvalidConfig("harris window_radius must be >= 1".into()));
        }
        if !(self.gaussian_sigma > 0.0) || !self.k_h.is_finite() || !self.response_threshold.is_finite() {
            return Err(DetectError::InvalidConfig("harris sigma must be positive and k_h, threshold finite".into()));
        }
        if !(0.04..=0.06).contains(&self.k_h) {
            log::warn!("harris k_h = {} is outside the usual 0.04..0.06 range", self.k_h);
        }
        Ok(())
    }

    /// Pixels closer than this to any edge never get a response.
    pub fn border(&self) -> u32 {
        self.window_radius + 1
    }
}

/// Normalized 1-D Gaussian taps for offsets `-r..=r`.
fn gaussian_taps(r: u32, sigma: f64) -> Vec<f64> {
    let taps: Vec<f64> = (-(r as i64)..=r as i64)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Harris response `R = det(M) - k tr(M)^2` for every pixel, row-major.
///
/// Gradients come from the 3×3 Sobel operator and `M` is accumulated over a
/// separable Gaussian window. Pixels inside the border get 0.
pub fn harris_response(img: &GrayImage, cfg: &HarrisConfig) -> Result<Vec<f64>, DetectError> {
    cfg.validate()?;
    check_size(img, 2 * cfg.window_radius + 3)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let px = |x: usize, y: usize| img.pixels()[y * w + x] as f64;

    // gradient products, zero on the one-pixel frame
    let mut ixx = vec![0.0; w * h];
    let mut iyy = vec![0.0; w * h];
    let mut ixy = vec![0.0; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            let gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
            let i = y * w + x;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }
    }

    let r = cfg.window_radius as usize;
    let taps = gaussian_taps(cfg.window_radius, cfg.gaussian_sigma);
    let border = cfg.border() as usize;
    let smooth = |src: &[f64]| -> Vec<f64> {
        // horizontal pass over rows that the vertical pass will read
        let mut tmp = vec![0.0; w * h];
        for y in 1..h - 1 {
            for x in border..w - border {
                let row = &src[y * w + x - r..=y * w + x + r];
                tmp[y * w + x] = row.iter().zip(&taps).map(|(a, b)| a * b).sum();
            }
        }
        let mut out = vec![0.0; w * h];
        for y in border..h - border {
            for x in border..w - border {
                out[y * w + x] = taps.iter().enumerate().map(|(j, t)| t * tmp[(y + j - r) * w + x]).sum();
            }
        }
        out
    };
    let (sxx, syy, sxy) = (smooth(&ixx), smooth(&iyy), smooth(&ixy));

    let k = cfg.k_h;
    Ok((0..w * h)
        .map(|i| {
            let tr = sxx[i] + syy[i];
            sxx[i] * syy[i] - sxy[i] * sxy[i] - k * tr * tr
        })
        .collect())
}

/// Harris corners: responses above the threshold that survive non-maximum
/// suppression within `nms_radius`.
pub fn harris_detect(img: &GrayImage, cfg: &HarrisConfig) -> Result<Vec<Corner>, DetectError> {
    let resp = harris_response(img, cfg)?;
    let (w, h) = (img.width(), img.height());
    let b = cfg.border();
    let thr = cfg.response_threshold.max(0.0);
    let mut candidates = Vec::new();
    for y in b..h - b {
        for x in b..w - b {
            let r = resp[(y * w + x) as usize];
            if r > thr {
                candidates.push(Corner::new(x, y, r, DetectorKind::Harris));
            }
        }
    }
    Ok(non_max_suppress(&candidates, cfg.nms_radius))
}
