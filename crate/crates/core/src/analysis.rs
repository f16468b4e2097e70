//! Diagnostics: spectra of error images, pixel-feature variance, grid
//! export and quantized evaluation.

use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::ModulationGrid;
use crate::nn::FieldModel;
use crate::optim::fake_quantize;
use crate::tasks::image::{write_netpbm, Image};
use crate::tasks::{evaluate, Dataset};
use crate::tensor::{Real, Tensor};

/// Normalized Chebyshev radius separating the low and high bands.
pub const HIGH_BAND_CUTOFF: f64 = 0.5;

/// Magnitudes on an `H × W` frequency lattice with DC at `(H/2, W/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMap {
    pub height: usize,
    pub width: usize,
    pub magnitudes: Vec<f64>,
    pub source: String,
}

impl SpectrumMap {
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.magnitudes[u * self.width + v]
    }

    pub fn energy(&self) -> f64 {
        self.magnitudes.iter().map(|m| m * m).sum()
    }

    /// Energy of bins strictly outside the centered half-band.
    pub fn high_band_energy(&self) -> f64 {
        let mut e = 0.0;
        for u in 0..self.height {
            for v in 0..self.width {
                if band_radius(u, self.height).max(band_radius(v, self.width)) > HIGH_BAND_CUTOFF {
                    e += self.at(u, v).powi(2);
                }
            }
        }
        e
    }

    /// Magnitudes min-max scaled to a grayscale image.
    pub fn to_image(&self) -> Image {
        min_max_gray(self.height, self.width, &self.magnitudes)
    }
}

/// Distance of centered index `i` from DC, with the Nyquist bin at 1.
fn band_radius(i: usize, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let half = (n / 2) as f64;
    (i as f64 - half).abs() / half
}

/// Unnormalized 2D DFT of a row-major `H × W` plane, DC at index 0.
pub fn dft2_complex(plane: &[f64], height: usize, width: usize) -> Result<Vec<Complex64>> {
    if plane.len() != height * width || plane.is_empty() {
        return Err(Error::InvalidShape(format!(
            "plane of {} values is not {height}×{width}",
            plane.len()
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut data: Vec<Complex64> = plane.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(width).process(&mut data);
    let by_column = planner.plan_fft_forward(height);
    let mut col = vec![Complex64::default(); height];
    for c in 0..width {
        for r in 0..height {
            col[r] = data[r * width + c];
        }
        by_column.process(&mut col);
        for r in 0..height {
            data[r * width + c] = col[r];
        }
    }
    Ok(data)
}

/// Moves index `(0, 0)` to `(H/2, W/2)`.
pub fn fftshift<V: Copy>(data: &[V], height: usize, width: usize) -> Vec<V> {
    let mut out = data.to_vec();
    for r in 0..height {
        for c in 0..width {
            out[((r + height / 2) % height) * width + (c + width / 2) % width] = data[r * width + c];
        }
    }
    out
}

pub fn dft2(plane: &[f64], height: usize, width: usize) -> Result<SpectrumMap> {
    let coeffs = dft2_complex(plane, height, width)?;
    let mags: Vec<f64> = coeffs.iter().map(|z| z.norm()).collect();
    Ok(SpectrumMap {
        height,
        width,
        magnitudes: fftshift(&mags, height, width),
        source: String::new(),
    })
}

/// Spectrum of `pred − target` with its band energies. RGB errors add
/// power across channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqErrorMap {
    pub map: SpectrumMap,
    pub total_energy: f64,
    pub high_energy: f64,
    /// `high_energy / total_energy`, 0 when there is no error.
    pub high_ratio: f64,
}

pub fn freq_error_map(pred: &Image, target: &Image) -> Result<FreqErrorMap> {
    if (pred.height, pred.width, pred.channels) != (target.height, target.width, target.channels) {
        return Err(Error::ShapeMismatch {
            op: "freq_error_map",
            lhs: vec![pred.height, pred.width, pred.channels],
            rhs: vec![target.height, target.width, target.channels],
        });
    }
    let (h, w) = (pred.height, pred.width);
    let mut power = vec![0.0; h * w];
    for ch in 0..pred.channels {
        let (p, t) = (pred.plane(ch), target.plane(ch));
        let err: Vec<f64> = p.iter().zip(&t).map(|(a, b)| a - b).collect();
        let spec = dft2(&err, h, w)?;
        for (acc, m) in power.iter_mut().zip(&spec.magnitudes) {
            *acc += m * m;
        }
    }
    let map = SpectrumMap {
        height: h,
        width: w,
        magnitudes: power.iter().map(|p| p.sqrt()).collect(),
        source: "prediction error".into(),
    };
    let total_energy = power.iter().sum::<f64>();
    let high_energy = map.high_band_energy();
    let high_ratio = if total_energy > 0.0 { high_energy / total_energy } else { 0.0 };
    Ok(FreqErrorMap {
        map,
        total_energy,
        high_energy,
        high_ratio,
    })
}

/// `(1/C) Σ_c var_pixels(X_c)` for features laid out `[pixels × C]`.
pub fn pixel_feature_variance<T: Real>(features: &Tensor<T>) -> Result<f64> {
    if features.rank() != 2 || features.shape()[1] == 0 {
        return Err(Error::InvalidShape(format!(
            "features must be [pixels × channels], got {:?}",
            features.shape()
        )));
    }
    let (p, c) = (features.shape()[0], features.shape()[1]);
    if p <= 1 {
        return Ok(0.0);
    }
    let mut mean = vec![0.0; c];
    for r in 0..p {
        for (m, v) in mean.iter_mut().zip(features.row(r)) {
            *m += v.f64();
        }
    }
    mean.iter_mut().for_each(|m| *m /= p as f64);
    let mut var = vec![0.0; c];
    for r in 0..p {
        for ((s, v), m) in var.iter_mut().zip(features.row(r)).zip(&mean) {
            *s += (v.f64() - m).powi(2);
        }
    }
    Ok(var.iter().sum::<f64>() / (p as f64 * c as f64))
}

fn min_max_gray(height: usize, width: usize, values: &[f64]) -> Image {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let data = values
        .iter()
        .map(|&v| {
            let byte = if hi > lo { ((v - lo) / (hi - lo) * 255.0).round() } else { 128.0 };
            (byte / 255.0) as f32
        })
        .collect();
    Image {
        height,
        width,
        channels: 1,
        data,
    }
}

/// One channel of a rank-2 grid as a `d1 × d2` grayscale image, node
/// `(i, j)` at row `i`, column `j`.
pub fn grid_image<T: Real>(grid: &ModulationGrid<T>, channel: usize) -> Result<Image> {
    if grid.rank() != 2 {
        return Err(Error::InvalidShape(format!("grid export needs a rank-2 grid, got rank {}", grid.rank())));
    }
    if channel >= grid.channels() {
        return Err(Error::invalid(format!(
            "channel {channel} out of range for {} grid channels",
            grid.channels()
        )));
    }
    let k = grid.channels();
    let values: Vec<f64> = grid
        .values()
        .data()
        .iter()
        .skip(channel)
        .step_by(k)
        .map(|v| v.f64())
        .collect();
    Ok(min_max_gray(grid.resolution()[0], grid.resolution()[1], &values))
}

pub fn export_grid_image<T: Real>(grid: &ModulationGrid<T>, channel: usize, path: &Path) -> Result<()> {
    write_netpbm(path, &grid_image(grid, channel)?)
}

/// Copy of `model` with every linear weight, bias and modulation grid
/// replaced by its min-max quantized value. `bits = 32` returns an
/// unchanged copy.
pub fn quantize_model<T: Real>(model: &FieldModel<T>, bits: u32) -> Result<FieldModel<T>> {
    let mut out = model.clone();
    if bits == 32 {
        return Ok(out);
    }
    for p in out.params_mut() {
        *p = fake_quantize(p, bits)?;
    }
    Ok(out)
}

/// PSNR over `data` after quantizing the model to `bits`.
pub fn eval_quantized<T: Real>(model: &FieldModel<T>, bits: u32, data: &Dataset<T>, peak: f64) -> Result<f64> {
    let q = quantize_model(model, bits)?;
    Ok(evaluate(&q, data, peak)?.1)
}
