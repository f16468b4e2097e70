//! Task harnesses: datasets, the training loop and metrics.

pub mod image;
pub mod metrics;
pub mod signal1d;
pub mod synthetic;
pub mod train;

pub use image::{image_dataset, read_netpbm, split_generalization, write_netpbm, GeneralizationSplit, Image};
pub use metrics::{mse, psnr, psnr_from_mse};
pub use signal1d::{eval_signal1d, make_signal1d, signal1d_dataset, Signal1DSpec};
pub use train::{evaluate, train, LogRecord, TrainRun, TrainSettings};

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Coordinates and targets, grouped into units of `rows_per_unit`
/// consecutive rows that are always batched together (rays).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Real = f32> {
    pub inputs: Tensor<T>,
    pub targets: Tensor<T>,
    pub rows_per_unit: usize,
}

impl<T: Real> Dataset<T> {
    pub fn new(inputs: Tensor<T>, targets: Tensor<T>, rows_per_unit: usize) -> Result<Self> {
        if inputs.rank() != 2 || targets.rank() != 2 || inputs.shape()[0] != targets.shape()[0] {
            return Err(Error::ShapeMismatch {
                op: "dataset",
                lhs: inputs.shape().to_vec(),
                rhs: targets.shape().to_vec(),
            });
        }
        if rows_per_unit == 0 || !inputs.shape()[0].is_multiple_of(rows_per_unit) {
            return Err(Error::InvalidShape(format!(
                "{} rows do not split into units of {rows_per_unit}",
                inputs.shape()[0]
            )));
        }
        Ok(Self {
            inputs,
            targets,
            rows_per_unit,
        })
    }

    pub fn rows(&self) -> usize {
        self.inputs.shape()[0]
    }

    pub fn units(&self) -> usize {
        self.rows() / self.rows_per_unit
    }

    pub fn unit_rows(&self, units: &[usize]) -> Vec<usize> {
        let s = self.rows_per_unit;
        units.iter().flat_map(|&u| u * s..(u + 1) * s).collect()
    }
}
