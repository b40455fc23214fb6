//! 8-bit gray and RGB images, binary Netpbm I/O and the HSV value channel.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("netpbm format error: {0}")]
    Format(String),
    #[error("pixel buffer has {actual} entries, expected {expected}")]
    BadLength { expected: usize, actual: usize },
}

/// Row-major 8-bit intensity image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, fill: u8) -> Self {
        Self { width, height, pixels: vec![fill; width as usize * height as usize] }
    }

    pub fn from_raw(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ImageError> {
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ImageError::BadLength { expected, actual: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = value;
    }

    /// Signed-offset access used by the detectors; the caller guarantees bounds.
    #[inline]
    pub(crate) fn at(&self, x: i64, y: i64) -> u8 {
        self.pixels[(y * self.width as i64 + x) as usize]
    }

    /// Replicates the intensity into three equal channels.
    pub fn to_rgb(&self) -> RgbImage {
        RgbImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&g| [g, g, g]).collect(),
        }
    }
}

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, fill: [u8; 3]) -> Self {
        Self { width, height, pixels: vec![fill; width as usize * height as usize] }
    }

    pub fn from_raw(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self, ImageError> {
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ImageError::BadLength { expected, actual: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: [u8; 3]) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = value;
    }
}

/// The HSV value channel, `max(r, g, b)` per pixel.
pub fn v_channel(img: &RgbImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&[r, g, b]| r.max(g).max(b)).collect(),
    }
}

/// Either kind of decoded Netpbm image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl AnyImage {
    /// The intensity image a detector consumes: gray images pass through,
    /// RGB images go through [`v_channel`].
    pub fn into_intensity(self) -> GrayImage {
        match self {
            AnyImage::Gray(g) => g,
            AnyImage::Rgb(c) => v_channel(&c),
        }
    }
}

impl From<GrayImage> for AnyImage {
    fn from(g: GrayImage) -> Self {
        AnyImage::Gray(g)
    }
}

impl From<RgbImage> for AnyImage {
    fn from(c: RgbImage) -> Self {
        AnyImage::Rgb(c)
    }
}

struct HeaderReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, ImageError> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::Format(format!("expected {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::Format(format!("{what} out of range")))
    }
}

/// Decodes a binary PGM (`P5`) or PPM (`P6`) with maxval 255.
pub fn decode_netpbm(data: &[u8]) -> Result<AnyImage, ImageError> {
    if data.len() < 2 {
        return Err(ImageError::Format("file too short for a magic number".into()));
    }
    let channels = match &data[..2] {
        b"P5" => 1,
        b"P6" => 3,
        other => return Err(ImageError::Format(format!("unsupported magic {:?}", String::from_utf8_lossy(other)))),
    };
    let mut rd = HeaderReader { data, pos: 2 };
    let width = rd.number("width")?;
    let height = rd.number("height")?;
    let maxval = rd.number("maxval")?;
    if maxval != 255 {
        return Err(ImageError::Format(format!("maxval {maxval} unsupported, only 255")));
    }
    // exactly one whitespace byte separates the header from the raster
    match data.get(rd.pos) {
        Some(c) if c.is_ascii_whitespace() => rd.pos += 1,
        _ => return Err(ImageError::Format("missing whitespace after maxval".into())),
    }
    let n = width as usize * height as usize * channels;
    let payload = data
        .get(rd.pos..rd.pos + n)
        .ok_or_else(|| ImageError::Format(format!("truncated payload: need {n} bytes, have {}", data.len() - rd.pos)))?;
    Ok(if channels == 1 {
        AnyImage::Gray(GrayImage::from_raw(width, height, payload.to_vec())?)
    } else {
        let px = payload.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        AnyImage::Rgb(RgbImage::from_raw(width, height, px)?)
    })
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.pixels.iter().flatten());
    out
}

pub fn read_image(path: impl AsRef<Path>) -> Result<AnyImage, ImageError> {
    decode_netpbm(&fs::read(path)?)
}

pub fn write_image(img: &AnyImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let bytes = match img {
        AnyImage::Gray(g) => encode_pgm(g),
        AnyImage::Rgb(c) => encode_ppm(c),
    };
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}
