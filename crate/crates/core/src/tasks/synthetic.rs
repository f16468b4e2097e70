//! Small analytic datasets for the ray and feature-volume modulation modes.

use std::f64::consts::TAU;

use super::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `rays` directions on a regular `(θ, φ)` lattice, each sampled at
/// `samples` depths. Rows are `[θ, φ, t]`, grouped by ray; targets are
/// three view-dependent channels that vary smoothly along the ray.
pub fn synthetic_rays(side: usize, samples: usize) -> Result<Dataset<f32>> {
    if side == 0 || samples == 0 {
        return Err(Error::invalid("ray dataset needs positive sizes"));
    }
    let rays = side * side;
    let mut inputs = Vec::with_capacity(rays * samples * 3);
    let mut targets = Vec::with_capacity(rays * samples * 3);
    for i in 0..side {
        for j in 0..side {
            let theta = (i as f64 + 0.5) / side as f64;
            let phi = (j as f64 + 0.5) / side as f64;
            for s in 0..samples {
                let t = (s as f64 + 0.5) / samples as f64;
                inputs.extend([theta, phi, t]);
                let view = (TAU * (3.0 * theta + 2.0 * phi)).sin();
                targets.extend([
                    0.5 + 0.4 * view * (-t).exp(),
                    0.5 + 0.3 * (TAU * (5.0 * theta)).cos() * t,
                    0.5 + 0.2 * (TAU * (4.0 * phi + t)).sin(),
                ]);
            }
        }
    }
    Dataset::new(
        Tensor::from_f64(vec![rays * samples, 3], &inputs)?,
        Tensor::from_f64(vec![rays * samples, 3], &targets)?,
        samples,
    )
}

/// `frames` RGB frames of size `height × width`, flattened channel-major,
/// showing a blob moving across a shifting background. Inputs are the
/// frame times `(f + 0.5) / frames`.
pub fn synthetic_video(frames: usize, height: usize, width: usize) -> Result<Dataset<f32>> {
    if frames == 0 || height == 0 || width == 0 {
        return Err(Error::invalid("video dataset needs positive sizes"));
    }
    let mut inputs = Vec::with_capacity(frames);
    let mut targets = Vec::with_capacity(frames * 3 * height * width);
    for f in 0..frames {
        let t = (f as f64 + 0.5) / frames as f64;
        inputs.push(t);
        let (bx, by) = (0.2 + 0.6 * t, 0.5 + 0.3 * (TAU * t).sin());
        for ch in 0..3 {
            for r in 0..height {
                for c in 0..width {
                    let x = (c as f64 + 0.5) / width as f64;
                    let y = (r as f64 + 0.5) / height as f64;
                    let blob = (-((x - bx).powi(2) + (y - by).powi(2)) / 0.02).exp();
                    let bg = 0.3 + 0.1 * (TAU * (x + t + ch as f64 / 3.0)).sin();
                    targets.push((bg + 0.6 * blob * [1.0, 0.6, 0.2][ch]).clamp(0.0, 1.0));
                }
            }
        }
    }
    Dataset::new(
        Tensor::from_f64(vec![frames, 1], &inputs)?,
        Tensor::from_f64(vec![frames, 3 * height * width], &targets)?,
        1,
    )
}
