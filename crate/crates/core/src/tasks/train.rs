use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::{mse, psnr_from_mse};
use super::Dataset;
use crate::error::{Error, Result};
use crate::nn::FieldModel;
use crate::optim::{Adam, LrSchedule, ParamGroup};
use crate::tensor::{Real, Tape, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub iterations: usize,
    /// Units per step; `None` (or a value ≥ the unit count) trains full-batch.
    pub batch_units: Option<usize>,
    pub schedule: LrSchedule,
    pub seed: u64,
    /// Peak signal value for PSNR.
    pub peak: f64,
}

/// One optimizer step. `iteration` counts completed steps, from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub iteration: usize,
    pub loss: f64,
    pub psnr: f64,
    pub lr: f64,
}

pub struct TrainRun<T: Real = f32> {
    pub model: FieldModel<T>,
    pub optimizer: Adam<T>,
    pub log: Vec<LogRecord>,
    /// Error of the final model over the whole training set.
    pub final_mse: f64,
    pub final_psnr: f64,
}

impl<T: Real> TrainRun<T> {
    pub fn best_loss(&self) -> f64 {
        self.log.iter().map(|r| r.loss).fold(f64::INFINITY, f64::min)
    }

    pub fn loss_at(&self, iteration: usize) -> Option<f64> {
        self.log.iter().find(|r| r.iteration == iteration).map(|r| r.loss)
    }
}

/// Mean-squared-error training with Adam and the step schedule.
pub fn train<T: Real>(model: FieldModel<T>, data: &Dataset<T>, settings: &TrainSettings) -> Result<TrainRun<T>> {
    train_with(model, data, settings, |_| {})
}

/// As [`train`], calling `progress` after every step.
pub fn train_with<T: Real>(
    mut model: FieldModel<T>,
    data: &Dataset<T>,
    settings: &TrainSettings,
    mut progress: impl FnMut(&LogRecord),
) -> Result<TrainRun<T>> {
    settings.schedule.validate()?;
    if data.targets.shape()[1] != model.output_dim() {
        return Err(Error::ShapeMismatch {
            op: "train targets",
            lhs: data.targets.shape().to_vec(),
            rhs: vec![model.output_dim()],
        });
    }
    let info = model.param_info();
    let mut optimizer = Adam::new(info.into_iter().map(|p| (p.name, p.group, p.numel)));
    let encoded = model.encode_inputs(&data.inputs)?;
    let units = data.units();
    let batch = settings.batch_units.filter(|&b| b > 0 && b < units);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ 0x5EED_BA7C);
    let mut log = Vec::with_capacity(settings.iterations);

    for it in 0..settings.iterations {
        let selected;
        let (x, y, enc) = match batch {
            None => (&data.inputs, &data.targets, encoded.as_ref()),
            Some(b) => {
                let mut picks = rand::seq::index::sample(&mut rng, units, b).into_vec();
                picks.sort_unstable();
                let rows = data.unit_rows(&picks);
                selected = (
                    data.inputs.select_rows(&rows)?,
                    data.targets.select_rows(&rows)?,
                    encoded.as_ref().map(|e| e.select_rows(&rows)).transpose()?,
                );
                (&selected.0, &selected.1, selected.2.as_ref())
            }
        };
        let tape = Tape::new();
        let fwd = model.forward_encoded(&tape, x, enc, true, false)?;
        let target = tape.constant(y.clone());
        let loss = fwd.output.sub(target)?.square().mean_all()?;
        let loss_value = loss.value().item()?.f64();
        if !loss_value.is_finite() {
            return Err(Error::NonFinite {
                what: "loss".into(),
                location: format!("iteration {}", it + 1),
            });
        }
        let grads = loss.backward()?;
        let grads = model.param_grads(&fwd, &grads)?;
        drop(fwd);
        let (lr_net, lr_grid) = settings.schedule.lr_at(it);
        let mut params = model.params_mut();
        optimizer.step(&mut params, &grads, |g| match g {
            ParamGroup::Network => lr_net,
            ParamGroup::Grid => lr_grid,
        })?;
        let record = LogRecord {
            iteration: it + 1,
            loss: loss_value,
            psnr: psnr_from_mse(loss_value, settings.peak),
            lr: lr_net,
        };
        progress(&record);
        log.push(record);
    }
    let (final_mse, final_psnr) = evaluate(&model, data, settings.peak)?;
    Ok(TrainRun {
        model,
        optimizer,
        log,
        final_mse,
        final_psnr,
    })
}

/// `(mse, psnr)` of the model over every row of `data`.
pub fn evaluate<T: Real>(model: &FieldModel<T>, data: &Dataset<T>, peak: f64) -> Result<(f64, f64)> {
    let pred: Tensor<T> = model.predict(&data.inputs)?;
    let e = mse(&pred, &data.targets)?;
    Ok((e, psnr_from_mse(e, peak)))
}

pub fn format_log(log: &[LogRecord]) -> String {
    let mut out = String::from("iteration\tloss\tpsnr\tlr\n");
    for r in log {
        let _ = writeln!(out, "{}\t{:.9e}\t{:.6}\t{:.3e}", r.iteration, r.loss, r.psnr, r.lr);
    }
    out
}

pub fn write_log(path: &Path, log: &[LogRecord]) -> Result<()> {
    fs::write(path, format_log(log)).map_err(|e| Error::io(path, e))
}
