//! Grayscale images, PGM I/O and the synthetic generators used by the
//! benchmark harness.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image must have at least one pixel (got {width}x{height})")]
    Empty { width: usize, height: usize },
    #[error("pixel buffer has {got} entries, expected {expected}")]
    BadBuffer { got: usize, expected: usize },
    #[error("failed to decode {path}: {source}")]
    Decode { path: String, source: ::image::ImageError },
    #[error("failed to write {path}: {source}")]
    Encode { path: String, source: ::image::ImageError },
}

/// Row-major 8-bit grayscale image. Pixel `(r, c)` maps to vertex `r * width + c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GridImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Empty { width, height });
        }
        if pixels.len() != width * height {
            return Err(ImageError::BadBuffer { got: pixels.len(), expected: width * height });
        }
        Ok(GridImage { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self, ImageError> {
        let pixels = (0..height).flat_map(|r| (0..width).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.pixels[r * self.width + c]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Reads a binary (P5) or ASCII (P2) PGM file.
    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        let path = path.as_ref();
        let wrap = |source| ImageError::Decode { path: path.display().to_string(), source };
        let img = ::image::ImageReader::open(path)
            .map_err(|e| wrap(::image::ImageError::IoError(e)))?
            .with_guessed_format()
            .map_err(|e| wrap(::image::ImageError::IoError(e)))?
            .decode()
            .map_err(wrap)?
            .to_luma8();
        let (w, h) = img.dimensions();
        Self::new(w as usize, h as usize, img.into_raw())
    }

    /// Writes a binary PGM.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        let path = path.as_ref();
        let buf = ::image::GrayImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
            .expect("buffer size checked at construction");
        buf.save_with_format(path, ::image::ImageFormat::Pnm)
            .map_err(|source| ImageError::Encode { path: path.display().to_string(), source })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Left-to-right intensity ramp: every s-t path of a seg1 graph crosses
    /// every vertical stripe boundary.
    Seg1Worst,
    /// Random bright/dark discs over a noisy background.
    Seg2Random,
}

impl std::str::FromStr for SyntheticKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "seg1_worst" => Ok(SyntheticKind::Seg1Worst),
            "seg2_random" => Ok(SyntheticKind::Seg2Random),
            other => Err(format!("unknown synthetic kind `{other}` (expected seg1_worst or seg2_random)")),
        }
    }
}

/// Deterministic synthetic image for a given seed.
///
/// `Seg1Worst`: `I(r, c) = round(200 * c / (w - 1)) + j(r, c)` where the jitter
/// `j` is 0 or 1 drawn from the seed, except that it is always 0 on even
/// columns. The ramp step is at least 6 for `w <= 34`, so rows stay monotone.
///
/// `Seg2Random`: background 110, 3 to 6 discs of radius `[min(w,h)/8,
/// min(w,h)/3]` at intensity 130..=160, then uniform noise in `[-80, 80]`.
/// The contrast is low on purpose: many pixels are ambiguous on their own, so
/// the smoothness term decides them and split halves can disagree.
pub fn gen_synthetic(kind: SyntheticKind, width: usize, height: usize, seed: u64) -> Result<GridImage, ImageError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        SyntheticKind::Seg1Worst => {
            let span = width.saturating_sub(1).max(1) as f64;
            let jitter: Vec<u8> = (0..width * height).map(|_| rng.gen_range(0..=1)).collect();
            GridImage::from_fn(width, height, |r, c| {
                let base = (200.0 * c as f64 / span).round() as u8;
                let j = if c % 2 == 0 { 0 } else { jitter[r * width + c] };
                base.saturating_add(j)
            })
        }
        SyntheticKind::Seg2Random => {
            let m = width.min(height) as f64;
            let n_discs = rng.gen_range(3..=6);
            let discs: Vec<(f64, f64, f64, f64)> = (0..n_discs)
                .map(|_| {
                    let cy = rng.gen_range(0.0..height as f64);
                    let cx = rng.gen_range(0.0..width as f64);
                    let rad = rng.gen_range((m / 8.0).max(0.5)..=(m / 3.0).max(1.0));
                    let val = rng.gen_range(130.0..=160.0);
                    (cy, cx, rad, val)
                })
                .collect();
            let noise: Vec<i32> = (0..width * height).map(|_| rng.gen_range(-80..=80)).collect();
            GridImage::from_fn(width, height, |r, c| {
                let mut v = 110.0;
                for &(cy, cx, rad, val) in &discs {
                    let (dy, dx) = (r as f64 + 0.5 - cy, c as f64 + 0.5 - cx);
                    if dy * dy + dx * dx <= rad * rad {
                        v = val;
                    }
                }
                (v as i32 + noise[r * width + c]).clamp(0, 255) as u8
            })
        }
    }
}
