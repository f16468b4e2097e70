//! Command implementations behind the `camfield` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::checkpoint::{load_checkpoint, save_checkpoint};
use super::config::{TaskKind, TrainConfig};
use crate::analysis::{self, freq_error_map, pixel_feature_variance};
use crate::error::{Error, Result};
use crate::nn::{FieldModel, Stage};
use crate::tasks::image::{image_dataset, read_netpbm, split_generalization, write_netpbm, Image};
use crate::tasks::signal1d::{make_signal1d, signal1d_dataset};
use crate::tasks::synthetic::{synthetic_rays, synthetic_video};
use crate::tasks::train::{evaluate, train_with, write_log};
use crate::tasks::{Dataset, TrainSettings};

/// Datasets for one configured task.
pub struct TaskData {
    pub train: Dataset<f32>,
    /// Full-resolution evaluation set (generalization only).
    pub eval: Option<Dataset<f32>>,
    /// Pixels not seen in training (generalization only).
    pub heldout: Option<Dataset<f32>>,
    /// Reference image for spectral analysis.
    pub image: Option<Image>,
    pub peak: f64,
}

pub fn prepare_task(cfg: &TrainConfig) -> Result<TaskData> {
    let none = |train| TaskData {
        train,
        eval: None,
        heldout: None,
        image: None,
        peak: 1.0,
    };
    Ok(match cfg.task {
        TaskKind::Signal1d => none(signal1d_dataset(&make_signal1d(cfg.seed), cfg.samples)?),
        TaskKind::SyntheticRay => none(synthetic_rays(cfg.rays.0, cfg.rays.1)?),
        TaskKind::SyntheticVideo => none(synthetic_video(cfg.video.0, cfg.video.1, cfg.video.2)?),
        TaskKind::ImageRegression | TaskKind::ImageGeneralization => {
            let path = cfg
                .input
                .as_ref()
                .ok_or_else(|| Error::invalid("image task without an input path"))?;
            let img = read_netpbm(path)?;
            if cfg.task == TaskKind::ImageRegression {
                let train = image_dataset(&img)?;
                TaskData {
                    image: Some(img),
                    ..none(train)
                }
            } else {
                let split = split_generalization(&img)?;
                TaskData {
                    train: split.train,
                    eval: Some(split.eval),
                    heldout: Some(split.heldout),
                    image: Some(img),
                    peak: 1.0,
                }
            }
        }
    })
}

pub fn build_model(cfg: &TrainConfig, data: &TaskData) -> Result<FieldModel<f32>> {
    let out = cfg.output_dim(data.train.targets.shape()[1]);
    cfg.model_spec(out).build(cfg.seed)
}

pub fn train_settings(cfg: &TrainConfig) -> TrainSettings {
    TrainSettings {
        iterations: cfg.iterations,
        batch_units: cfg.batch,
        schedule: cfg.schedule.clone(),
        seed: cfg.seed,
        peak: 1.0,
    }
}

/// One row of `summary.tsv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub variant: String,
    pub task: String,
    pub bits: u32,
    pub train_mse: f64,
    pub train_psnr: f64,
    pub eval_psnr: Option<f64>,
    pub heldout_psnr: Option<f64>,
}

impl Summary {
    pub const HEADER: &'static str = "variant\ttask\tbits\ttrain_mse\ttrain_psnr\teval_psnr\theldout_psnr";

    pub fn row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
        format!(
            "{}\t{}\t{}\t{:.9e}\t{:.6}\t{}\t{}",
            self.variant,
            self.task,
            self.bits,
            self.train_mse,
            self.train_psnr,
            opt(self.eval_psnr),
            opt(self.heldout_psnr)
        )
    }
}

/// Scores `model` on every dataset of the task, after quantizing to `bits`.
pub fn summarize(model: &FieldModel<f32>, data: &TaskData, cfg: &TrainConfig, bits: u32, variant: &str) -> Result<Summary> {
    let model = analysis::quantize_model(model, bits)?;
    let (train_mse, train_psnr) = evaluate(&model, &data.train, data.peak)?;
    let score = |d: &Option<Dataset<f32>>| -> Result<Option<f64>> {
        d.as_ref().map(|d| Ok(evaluate(&model, d, data.peak)?.1)).transpose()
    };
    Ok(Summary {
        variant: variant.to_string(),
        task: cfg.task.name().to_string(),
        bits,
        train_mse,
        train_psnr,
        eval_psnr: score(&data.eval)?,
        heldout_psnr: score(&data.heldout)?,
    })
}

/// Creates `dir`, refusing to reuse a non-empty one unless `force`.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let occupied = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?.next().is_some();
        if occupied && !force {
            return Err(Error::invalid(format!(
                "output directory {} already exists; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn output_dir(cfg: &TrainConfig, flag: Option<&Path>) -> Result<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::invalid("no output directory: pass --out or set [output] dir"))
}

pub struct TrainOutcome {
    pub model: FieldModel<f32>,
    pub summary: Summary,
    pub data: TaskData,
}

/// Trains and writes `config.toml`, `checkpoint.bin`, `metrics.tsv` and
/// `summary.tsv` into `out`.
pub fn run_train(cfg: &TrainConfig, out: &Path, force: bool, variant: &str, verbose: bool) -> Result<TrainOutcome> {
    prepare_output_dir(out, force)?;
    let mut echo = cfg.clone();
    echo.output = Some(out.to_path_buf());
    write(&out.join("config.toml"), &echo.to_text())?;
    let data = prepare_task(cfg)?;
    let model = build_model(cfg, &data)?;
    let settings = train_settings(cfg);
    let every = (cfg.iterations / 20).max(1);
    let run = train_with(model, &data.train, &settings, |r| {
        if verbose && (r.iteration % every == 0 || r.iteration == cfg.iterations) {
            eprintln!(
                "[{variant}] iter {:>6}  loss {:.6e}  psnr {:.3}",
                r.iteration, r.loss, r.psnr
            );
        }
    })?;
    save_checkpoint(&out.join("checkpoint.bin"), &run.model)?;
    write_log(&out.join("metrics.tsv"), &run.log)?;
    let summary = summarize(&run.model, &data, cfg, 32, variant)?;
    write(&out.join("summary.tsv"), &format!("{}\n{}\n", Summary::HEADER, summary.row()))?;
    Ok(TrainOutcome {
        model: run.model,
        summary,
        data,
    })
}

pub fn run_eval(checkpoint: &Path, cfg: &TrainConfig, bits: u32) -> Result<Summary> {
    let model = load_checkpoint(checkpoint)?;
    let data = prepare_task(cfg)?;
    summarize(&model, &data, cfg, bits, "eval")
}

/// Values written by `analyze`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub feature_variance: Option<f64>,
    pub high_ratio: Option<f64>,
    pub high_energy: Option<f64>,
    pub total_energy: Option<f64>,
    pub files: Vec<PathBuf>,
}

impl AnalysisReport {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("metric\tvalue\n");
        for (k, v) in [
            ("pixel_feature_variance", self.feature_variance),
            ("high_frequency_ratio", self.high_ratio),
            ("high_frequency_energy", self.high_energy),
            ("total_error_energy", self.total_energy),
        ] {
            if let Some(v) = v {
                let _ = writeln!(s, "{k}\t{v:.9e}");
            }
        }
        s
    }
}

/// Grid images, the error spectrum and the last-hidden-stage feature
/// variance of `model` on the configured task.
pub fn analyze_model(model: &FieldModel<f32>, data: &TaskData, out: &Path) -> Result<AnalysisReport> {
    let mut files = Vec::new();
    for (i, stage) in model.stages().iter().enumerate() {
        if let Stage::Cam(c) = stage {
            if c.layer.gamma().rank() != 2 {
                continue;
            }
            for ch in 0..c.layer.gamma().channels() {
                for (name, grid) in [("gamma", c.layer.gamma()), ("beta", c.layer.beta())] {
                    let path = out.join(format!("grid_stage{i}_{name}_c{ch}.pgm"));
                    analysis::export_grid_image(grid, ch, &path)?;
                    files.push(path);
                }
            }
        }
    }
    let lattice = data.eval.as_ref().unwrap_or(&data.train);
    let feature_variance = match model.last_hidden_stage() {
        Some(idx) => Some(pixel_feature_variance(&model.stage_output(&lattice.inputs, idx)?)?),
        None => None,
    };
    let (mut high_ratio, mut high_energy, mut total_energy) = (None, None, None);
    if let Some(img) = &data.image {
        let pred = Image::from_tensor(img.height, img.width, &model.predict(&lattice.inputs)?)?;
        let fe = freq_error_map(&pred, img)?;
        let spec_path = out.join("error_spectrum.pgm");
        write_netpbm(&spec_path, &fe.map.to_image())?;
        let pred_path = out.join("prediction.ppm");
        write_netpbm(&pred_path, &pred)?;
        files.extend([spec_path, pred_path]);
        high_ratio = Some(fe.high_ratio);
        high_energy = Some(fe.high_energy);
        total_energy = Some(fe.total_energy);
    }
    let report = AnalysisReport {
        feature_variance,
        high_ratio,
        high_energy,
        total_energy,
        files,
    };
    let tsv = out.join("analysis.tsv");
    write(&tsv, &report.to_tsv())?;
    Ok(AnalysisReport {
        files: report.files.iter().cloned().chain([tsv]).collect(),
        ..report
    })
}

pub fn run_analyze(checkpoint: &Path, cfg: &TrainConfig, out: &Path, force: bool) -> Result<AnalysisReport> {
    let model = load_checkpoint(checkpoint)?;
    let data = prepare_task(cfg)?;
    prepare_output_dir(out, force)?;
    analyze_model(&model, &data, out)
}

pub const ABLATION_VARIANTS: [&str; 3] = ["baseline", "cam-n", "cam"];

/// Configuration of one ablation variant.
pub fn ablation_config(cfg: &TrainConfig, variant: &str) -> Result<TrainConfig> {
    let mut c = cfg.clone();
    match variant {
        "baseline" => c.model.cam = false,
        "cam-n" => {
            c.model.cam = true;
            c.model.normalize = false;
        }
        "cam" => {
            c.model.cam = true;
            c.model.normalize = true;
        }
        v => return Err(Error::invalid(format!("unknown ablation variant {v}"))),
    }
    Ok(c)
}

/// Result of `ablate`: one summary per variant and the ordering check
/// `baseline ≤ CAM-N (+0.2 dB) ≤ CAM`.
pub struct Ablation {
    pub rows: Vec<Summary>,
    pub ordered: bool,
}

pub fn score_of(s: &Summary) -> f64 {
    s.heldout_psnr.unwrap_or(s.train_psnr)
}

pub fn run_ablate(cfg: &TrainConfig, out: &Path, force: bool, verbose: bool) -> Result<Ablation> {
    prepare_output_dir(out, force)?;
    let mut rows = Vec::new();
    for v in ABLATION_VARIANTS {
        let c = ablation_config(cfg, v)?;
        rows.push(run_train(&c, &out.join(v), force, v, verbose)?.summary);
    }
    let (b, n, c) = (score_of(&rows[0]), score_of(&rows[1]), score_of(&rows[2]));
    let ordered = b <= n + 0.2 && n <= c;
    let mut text = format!("{}\n", Summary::HEADER);
    for r in &rows {
        let _ = writeln!(text, "{}", r.row());
    }
    let _ = writeln!(
        text,
        "# ordering baseline <= cam-n (+0.2 dB) <= cam: {}",
        if ordered { "holds" } else { "violated" }
    );
    write(&out.join("ablation.tsv"), &text)?;
    Ok(Ablation { rows, ordered })
}
