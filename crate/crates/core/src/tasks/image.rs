//! 8-bit raster images, netpbm I/O and the pixel datasets built from them.

use std::f64::consts::TAU;
use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Row-major `H × W × C` image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || !(channels == 1 || channels == 3) {
            return Err(Error::InvalidShape(format!(
                "image must be non-empty with 1 or 3 channels, got {height}×{width}×{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::InvalidShape(format!(
                "{height}×{width}×{channels} image needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, channels: usize, f: impl Fn(usize, usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..channels {
                    data.push(f(r, c, ch));
                }
            }
        }
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    pub fn pixel(&self, r: usize, c: usize) -> &[f32] {
        let i = (r * self.width + c) * self.channels;
        &self.data[i..i + self.channels]
    }

    /// One channel as a row-major `H × W` plane.
    pub fn plane(&self, ch: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(ch)
            .step_by(self.channels)
            .map(|&v| v as f64)
            .collect()
    }

    /// Rounds every value to the nearest 8-bit level.
    pub fn quantized_8bit(&self) -> Self {
        let data = self.data.iter().map(|&v| to_byte(v) as f32 / 255.0).collect();
        Self { data, ..self.clone() }
    }

    pub fn from_tensor<T: Real>(height: usize, width: usize, t: &Tensor<T>) -> Result<Self> {
        if t.rank() != 2 || t.shape()[0] != height * width {
            return Err(Error::InvalidShape(format!(
                "cannot view {:?} as a {height}×{width} image",
                t.shape()
            )));
        }
        Self::new(height, width, t.shape()[1], t.data().iter().map(|v| v.f64() as f32).collect())
    }
}

fn to_byte(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Reads a PPM/PGM (or PNG) file. Grayscale sources give one channel,
/// everything else three.
pub fn read_netpbm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_netpbm(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_netpbm(bytes: &[u8]) -> Result<Image> {
    let decoded = image::ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::Format(e.to_string()))?
        .decode()
        .map_err(|e| Error::Format(e.to_string()))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    if decoded.color().has_color() {
        Image::new(height, width, 3, decoded.into_rgb32f().into_raw())
    } else {
        Image::new(height, width, 1, decoded.to_luma32f().into_raw())
    }
}

/// Writes binary `P6` for RGB images and `P5` for grayscale ones.
pub fn write_netpbm(path: &Path, img: &Image) -> Result<()> {
    let (subtype, color) = match img.channels {
        3 => (PnmSubtype::Pixmap(SampleEncoding::Binary), ExtendedColorType::Rgb8),
        _ => (PnmSubtype::Graymap(SampleEncoding::Binary), ExtendedColorType::L8),
    };
    let raster: Vec<u8> = img.data.iter().map(|&v| to_byte(v)).collect();
    let mut out = Vec::new();
    PnmEncoder::new(&mut out)
        .with_subtype(subtype)
        .write_image(&raster, img.width as u32, img.height as u32, color)
        .map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Center of pixel `(r, c)` in the unit square, `x` along columns.
pub fn pixel_coord(r: usize, c: usize, height: usize, width: usize) -> [f64; 2] {
    [(c as f64 + 0.5) / width as f64, (r as f64 + 0.5) / height as f64]
}

fn pixel_dataset<T: Real>(img: &Image, pixels: &[(usize, usize)]) -> Result<Dataset<T>> {
    let mut coords = Vec::with_capacity(pixels.len() * 2);
    let mut values = Vec::with_capacity(pixels.len() * img.channels);
    for &(r, c) in pixels {
        coords.extend(pixel_coord(r, c, img.height, img.width));
        values.extend(img.pixel(r, c).iter().map(|&v| v as f64));
    }
    Dataset::new(
        Tensor::from_f64(vec![pixels.len(), 2], &coords)?,
        Tensor::from_f64(vec![pixels.len(), img.channels], &values)?,
        1,
    )
}

/// Every pixel in row-major order.
pub fn image_dataset<T: Real>(img: &Image) -> Result<Dataset<T>> {
    let pixels: Vec<_> = (0..img.height)
        .flat_map(|r| (0..img.width).map(move |c| (r, c)))
        .collect();
    pixel_dataset(img, &pixels)
}

/// Train on the half-resolution lattice, evaluate on the original image.
pub struct GeneralizationSplit<T: Real> {
    /// Pixels with even row and column, at their centers in the full lattice.
    pub train: Dataset<T>,
    /// All pixels.
    pub eval: Dataset<T>,
    /// Pixels absent from `train`.
    pub heldout: Dataset<T>,
}

pub fn split_generalization<T: Real>(img: &Image) -> Result<GeneralizationSplit<T>> {
    if !img.height.is_multiple_of(2) || !img.width.is_multiple_of(2) {
        return Err(Error::InvalidShape(format!(
            "generalization split needs even dimensions, got {}×{}",
            img.height, img.width
        )));
    }
    let (mut train, mut heldout) = (Vec::new(), Vec::new());
    for r in 0..img.height {
        for c in 0..img.width {
            if r % 2 == 0 && c % 2 == 0 {
                train.push((r, c));
            } else {
                heldout.push((r, c));
            }
        }
    }
    Ok(GeneralizationSplit {
        train: pixel_dataset(img, &train)?,
        eval: image_dataset(img)?,
        heldout: pixel_dataset(img, &heldout)?,
    })
}

/// Procedural stand-in for a natural photograph: a smooth 1/f background,
/// sharp-edged shapes, and a band of fine texture, quantized to 8 bits.
pub fn synthetic_natural_image(size: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    struct Wave {
        fx: f64,
        fy: f64,
        phase: f64,
        amp: [f64; 3],
    }
    let mut waves = Vec::new();
    for _ in 0..96 {
        let radius: f64 = rng.random_range(1.0f64..48.0);
        let angle: f64 = rng.random_range(0.0..TAU);
        let a = 0.9 / radius;
        let tint: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.5..1.0));
        waves.push(Wave {
            fx: radius * angle.cos(),
            fy: radius * angle.sin(),
            phase: rng.random_range(0.0..TAU),
            amp: tint.map(|t| a * t),
        });
    }
    struct Disc {
        cx: f64,
        cy: f64,
        r: f64,
        color: [f64; 3],
    }
    let discs: Vec<Disc> = (0..14)
        .map(|_| Disc {
            cx: rng.random_range(0.0..1.0),
            cy: rng.random_range(0.0..1.0),
            r: rng.random_range(0.03..0.18),
            color: std::array::from_fn(|_| rng.random_range(0.0..1.0)),
        })
        .collect();
    let stripe_angle: f64 = rng.random_range(0.0..TAU);
    let (sx, sy) = (stripe_angle.cos(), stripe_angle.sin());
    let stripe_freq = size as f64 / 6.0;
    let base: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.35..0.65));

    let img = Image::from_fn(size, size, 3, |r, c, ch| {
        let [x, y] = pixel_coord(r, c, size, size);
        let mut v = base[ch];
        for w in &waves {
            v += w.amp[ch] * (TAU * (w.fx * x + w.fy * y) + w.phase).sin();
        }
        for d in &discs {
            if (x - d.cx).powi(2) + (y - d.cy).powi(2) < d.r * d.r {
                v = 0.35 * v + 0.65 * d.color[ch];
            }
        }
        if (0.62..0.82).contains(&y) && (0.1..0.55).contains(&x) {
            v += 0.18 * (TAU * stripe_freq * (sx * x + sy * y)).sin();
        }
        v.clamp(0.0, 1.0) as f32
    });
    img.quantized_8bit()
}

pub fn checkerboard(height: usize, width: usize, cell: usize) -> Image {
    Image::from_fn(height, width, 1, |r, c, _| ((r / cell + c / cell) % 2) as f32)
}
