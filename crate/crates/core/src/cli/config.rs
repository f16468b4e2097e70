//! Run configuration: a TOML file with `[task]`, `[model]`, `[optim]`,
//! `[train]`, `[eval]` and `[output]` tables. Unknown tables and keys are
//! errors.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cam::CamMode;
use crate::error::{Error, Result};
use crate::nn::{Activation, CamSpec, EncodingSpec, ModelSpec};
use crate::optim::LrSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Signal1d,
    ImageRegression,
    ImageGeneralization,
    SyntheticRay,
    #[serde(rename = "synthetic-video-tensor")]
    SyntheticVideo,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Signal1d => "signal1d",
            TaskKind::ImageRegression => "image-regression",
            TaskKind::ImageGeneralization => "image-generalization",
            TaskKind::SyntheticRay => "synthetic-ray",
            TaskKind::SyntheticVideo => "synthetic-video-tensor",
        }
    }

    pub fn is_image(self) -> bool {
        matches!(self, TaskKind::ImageRegression | TaskKind::ImageGeneralization)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden: usize,
    pub encoding: EncodingSpec,
    pub output_activation: Option<Activation>,
    pub cam: bool,
    pub cam_mode: CamMode,
    pub placements: Vec<usize>,
    pub normalize: bool,
    pub eps: f64,
    pub resolution: Vec<usize>,
    pub grid_channels: usize,
    pub selector: Vec<usize>,
    /// `(channels, height, width)` view of hidden features in channel mode.
    pub planes: (usize, usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub task: TaskKind,
    /// Source image for image tasks.
    pub input: Option<PathBuf>,
    /// Sample count of the 1D signal.
    pub samples: usize,
    /// Ray lattice side and samples per ray.
    pub rays: (usize, usize),
    /// Frames, height and width of the synthetic video.
    pub video: (usize, usize, usize),
    pub model: ModelConfig,
    pub schedule: LrSchedule,
    pub iterations: usize,
    /// Units per step; `None` trains full-batch.
    pub batch: Option<usize>,
    pub seed: u64,
    pub bits: u32,
    pub output: Option<PathBuf>,
}

impl TrainConfig {
    /// Defaults for `task` before any keys are applied.
    pub fn defaults(task: TaskKind) -> Self {
        let image_model = ModelConfig {
            layers: 4,
            hidden: 256,
            encoding: EncodingSpec::Fourier {
                frequencies: 256,
                sigma: 10.0,
            },
            output_activation: Some(Activation::Sigmoid),
            cam: true,
            cam_mode: CamMode::Scalar,
            placements: vec![0, 1, 2],
            normalize: true,
            eps: crate::cam::DEFAULT_EPS,
            resolution: vec![32, 32],
            grid_channels: 1,
            selector: vec![0, 1],
            planes: (0, 0, 0),
        };
        let mut cfg = Self {
            task,
            input: None,
            samples: 512,
            rays: (16, 16),
            video: (16, 8, 8),
            model: image_model,
            schedule: LrSchedule::default(),
            iterations: 2000,
            batch: Some(1 << 14),
            seed: 0,
            bits: 32,
            output: None,
        };
        match task {
            TaskKind::ImageRegression | TaskKind::ImageGeneralization => {}
            TaskKind::Signal1d => {
                cfg.model = ModelConfig {
                    hidden: 64,
                    encoding: EncodingSpec::Frequency {
                        frequencies: 16,
                        include_input: true,
                    },
                    output_activation: None,
                    resolution: vec![64],
                    selector: vec![0],
                    ..cfg.model
                };
                cfg.schedule.milestones.clear();
                cfg.iterations = 1500;
                cfg.batch = None;
            }
            TaskKind::SyntheticRay => {
                cfg.model = ModelConfig {
                    hidden: 64,
                    encoding: EncodingSpec::Frequency {
                        frequencies: 6,
                        include_input: true,
                    },
                    cam_mode: CamMode::Ray,
                    resolution: vec![16, 16],
                    selector: vec![0, 1],
                    ..cfg.model
                };
                cfg.schedule.milestones = vec![300, 450];
                cfg.iterations = 500;
                cfg.batch = Some(64);
            }
            TaskKind::SyntheticVideo => {
                cfg.model = ModelConfig {
                    hidden: 256,
                    encoding: EncodingSpec::Frequency {
                        frequencies: 8,
                        include_input: true,
                    },
                    cam_mode: CamMode::Channel { volume_norm: false },
                    resolution: vec![16],
                    grid_channels: 4,
                    selector: vec![0],
                    planes: (4, 8, 8),
                    ..cfg.model
                };
                cfg.schedule.milestones = vec![300, 450];
                cfg.iterations = 500;
                cfg.batch = None;
            }
        }
        cfg
    }

    pub fn input_dim(&self) -> usize {
        match self.task {
            TaskKind::Signal1d | TaskKind::SyntheticVideo => 1,
            TaskKind::ImageRegression | TaskKind::ImageGeneralization => 2,
            TaskKind::SyntheticRay => 3,
        }
    }

    /// Output width; image tasks need the image's channel count.
    pub fn output_dim(&self, image_channels: usize) -> usize {
        match self.task {
            TaskKind::Signal1d => 1,
            TaskKind::ImageRegression | TaskKind::ImageGeneralization => image_channels,
            TaskKind::SyntheticRay => 3,
            TaskKind::SyntheticVideo => 3 * self.video.1 * self.video.2,
        }
    }

    pub fn model_spec(&self, output_dim: usize) -> ModelSpec {
        let m = &self.model;
        ModelSpec {
            input_dim: self.input_dim(),
            output_dim,
            layers: m.layers,
            hidden: m.hidden,
            encoding: m.encoding,
            output_activation: m.output_activation,
            cam: m.cam.then(|| CamSpec {
                mode: m.cam_mode,
                placements: m.placements.clone(),
                resolution: m.resolution.clone(),
                grid_channels: m.grid_channels,
                normalize: m.normalize,
                eps: m.eps,
                selector: m.selector.clone(),
                samples: self.rays.1,
                planes: m.planes,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        let bad = |msg: String| Err(Error::Config { line: 0, message: msg });
        if m.layers == 0 || m.hidden == 0 || self.iterations == 0 {
            return bad("layers, hidden and iterations must be positive".into());
        }
        if self.batch == Some(0) {
            return bad("batch must be positive or `full`".into());
        }
        self.schedule.validate().map_err(|e| Error::Config {
            line: 0,
            message: e.to_string(),
        })?;
        if !matches!(self.bits, 6 | 8 | 32) {
            return bad(format!("bits must be 32, 8 or 6, got {}", self.bits));
        }
        if self.task.is_image() && self.input.is_none() {
            return bad(format!("task `{}` requires `input`", self.task.name()));
        }
        if let (Some(i), Some(o)) = (&self.input, &self.output) {
            if i == o {
                return bad(format!("input and output both refer to {}", i.display()));
            }
        }
        if self.samples == 0 || self.rays.0 == 0 || self.rays.1 == 0 {
            return bad("sample counts must be positive".into());
        }
        if self.video.0 == 0 || self.video.1 == 0 || self.video.2 == 0 {
            return bad("video dimensions must be positive".into());
        }
        if m.cam {
            if let Some(&p) = m.placements.iter().find(|&&p| p + 1 >= m.layers) {
                return bad(format!("cam placement {p} does not name one of the {} hidden layers", m.layers - 1));
            }
            if m.placements.is_empty() {
                return bad("cam is enabled but no placements are given".into());
            }
            if m.eps.is_nan() || m.eps <= 0.0 {
                return bad(format!("eps must be positive, got {}", m.eps));
            }
            if m.resolution.is_empty() || m.resolution.len() > 2 || m.resolution.iter().any(|&d| d < 2) {
                return bad(format!("grid resolution {:?} must be 1 or 2 sizes ≥ 2", m.resolution));
            }
            if m.selector.len() != m.resolution.len() {
                return bad("grid_coords must name one coordinate per grid axis".into());
            }
            if let Some(&s) = m.selector.iter().find(|&&s| s >= self.input_dim()) {
                return bad(format!("grid coordinate {s} exceeds input dimension {}", self.input_dim()));
            }
        }
        Ok(())
    }

    /// The configuration as TOML; `parse_config` reads it back unchanged.
    pub fn to_text(&self) -> String {
        toml::to_string(&RawConfig::from(self)).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum EncodingKind {
    None,
    Frequency,
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ActivationKind {
    None,
    Sigmoid,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeKind {
    Scalar,
    Ray,
    Channel,
}

/// `batch = "full"` or a positive count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum BatchValue {
    Size(usize),
    Word(FullBatch),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FullBatch {
    Full,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    task: RawTask,
    model: RawModel,
    optim: RawOptim,
    train: RawTrain,
    eval: RawEval,
    #[serde(skip_serializing_if = "RawOutput::is_empty")]
    output: RawOutput,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawTask {
    kind: Option<TaskKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    samples: Option<usize>,
    rays: Option<[usize; 2]>,
    video: Option<[usize; 3]>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawModel {
    layers: Option<usize>,
    hidden: Option<usize>,
    encoding: Option<EncodingKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frequencies: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    include_input: Option<bool>,
    output_activation: Option<ActivationKind>,
    cam: Option<bool>,
    cam_mode: Option<ModeKind>,
    volume_norm: Option<bool>,
    cam_layers: Option<Vec<usize>>,
    normalize: Option<bool>,
    eps: Option<f64>,
    grid_resolution: Option<Vec<usize>>,
    grid_channels: Option<usize>,
    grid_coords: Option<Vec<usize>>,
    planes: Option<[usize; 3]>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawOptim {
    lr_network: Option<f64>,
    lr_grid: Option<f64>,
    milestones: Option<Vec<usize>>,
    factor: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawTrain {
    iterations: Option<usize>,
    batch: Option<BatchValue>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawEval {
    bits: Option<u32>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

impl RawOutput {
    fn is_empty(&self) -> bool {
        self.dir.is_none()
    }
}

impl From<&TrainConfig> for RawConfig {
    fn from(c: &TrainConfig) -> Self {
        let m = &c.model;
        let (encoding, frequencies, sigma, include_input) = match m.encoding {
            EncodingSpec::None => (EncodingKind::None, None, None, None),
            EncodingSpec::Frequency {
                frequencies,
                include_input,
            } => (EncodingKind::Frequency, Some(frequencies), None, Some(include_input)),
            EncodingSpec::Fourier { frequencies, sigma } => (EncodingKind::Fourier, Some(frequencies), Some(sigma), None),
        };
        let (cam_mode, volume_norm) = match m.cam_mode {
            CamMode::Scalar => (ModeKind::Scalar, false),
            CamMode::Ray => (ModeKind::Ray, false),
            CamMode::Channel { volume_norm } => (ModeKind::Channel, volume_norm),
        };
        RawConfig {
            task: RawTask {
                kind: Some(c.task),
                input: c.input.clone(),
                samples: Some(c.samples),
                rays: Some([c.rays.0, c.rays.1]),
                video: Some([c.video.0, c.video.1, c.video.2]),
            },
            model: RawModel {
                layers: Some(m.layers),
                hidden: Some(m.hidden),
                encoding: Some(encoding),
                frequencies,
                sigma,
                include_input,
                output_activation: Some(match m.output_activation {
                    None => ActivationKind::None,
                    Some(Activation::Sigmoid) => ActivationKind::Sigmoid,
                    Some(Activation::Relu) => ActivationKind::Relu,
                }),
                cam: Some(m.cam),
                cam_mode: Some(cam_mode),
                volume_norm: Some(volume_norm),
                cam_layers: Some(m.placements.clone()),
                normalize: Some(m.normalize),
                eps: Some(m.eps),
                grid_resolution: Some(m.resolution.clone()),
                grid_channels: Some(m.grid_channels),
                grid_coords: Some(m.selector.clone()),
                planes: Some([m.planes.0, m.planes.1, m.planes.2]),
            },
            optim: RawOptim {
                lr_network: Some(c.schedule.network),
                lr_grid: Some(c.schedule.grid),
                milestones: Some(c.schedule.milestones.clone()),
                factor: Some(c.schedule.factor),
            },
            train: RawTrain {
                iterations: Some(c.iterations),
                batch: Some(c.batch.map_or(BatchValue::Word(FullBatch::Full), BatchValue::Size)),
                seed: Some(c.seed),
            },
            eval: RawEval { bits: Some(c.bits) },
            output: RawOutput { dir: c.output.clone() },
        }
    }
}

/// Parses a TOML run configuration. Absent keys take the task's defaults;
/// unknown sections and keys are rejected.
pub fn parse_config(text: &str) -> Result<TrainConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1),
        message: e.message().to_string(),
    })?;
    let task = raw.task.kind.ok_or(Error::Config {
        line: 0,
        message: "missing required key `kind` in [task]".into(),
    })?;
    let mut cfg = TrainConfig::defaults(task);

    let t = raw.task;
    cfg.input = t.input;
    set(&mut cfg.samples, t.samples);
    set(&mut cfg.rays, t.rays.map(|[a, b]| (a, b)));
    set(&mut cfg.video, t.video.map(|[a, b, c]| (a, b, c)));

    let r = raw.model;
    let m = &mut cfg.model;
    set(&mut m.layers, r.layers);
    set(&mut m.hidden, r.hidden);
    if let Some(kind) = r.encoding {
        m.encoding = match kind {
            EncodingKind::None => EncodingSpec::None,
            EncodingKind::Frequency => EncodingSpec::Frequency {
                frequencies: 16,
                include_input: true,
            },
            EncodingKind::Fourier => EncodingSpec::Fourier {
                frequencies: 256,
                sigma: 10.0,
            },
        };
    }
    match &mut m.encoding {
        EncodingSpec::None => {}
        EncodingSpec::Frequency {
            frequencies,
            include_input,
        } => {
            set(frequencies, r.frequencies);
            set(include_input, r.include_input);
        }
        EncodingSpec::Fourier { frequencies, sigma } => {
            set(frequencies, r.frequencies);
            set(sigma, r.sigma);
        }
    }
    if let Some(a) = r.output_activation {
        m.output_activation = match a {
            ActivationKind::None => None,
            ActivationKind::Sigmoid => Some(Activation::Sigmoid),
            ActivationKind::Relu => Some(Activation::Relu),
        };
    }
    set(&mut m.cam, r.cam);
    if let Some(mode) = r.cam_mode {
        m.cam_mode = match mode {
            ModeKind::Scalar => CamMode::Scalar,
            ModeKind::Ray => CamMode::Ray,
            ModeKind::Channel => CamMode::Channel { volume_norm: false },
        };
    }
    if let (CamMode::Channel { volume_norm }, Some(v)) = (&mut m.cam_mode, r.volume_norm) {
        *volume_norm = v;
    }
    set(&mut m.placements, r.cam_layers);
    set(&mut m.normalize, r.normalize);
    set(&mut m.eps, r.eps);
    set(&mut m.resolution, r.grid_resolution);
    set(&mut m.grid_channels, r.grid_channels);
    set(&mut m.selector, r.grid_coords);
    set(&mut m.planes, r.planes.map(|[a, b, c]| (a, b, c)));

    let o = raw.optim;
    set(&mut cfg.schedule.network, o.lr_network);
    set(&mut cfg.schedule.grid, o.lr_grid);
    set(&mut cfg.schedule.milestones, o.milestones);
    set(&mut cfg.schedule.factor, o.factor);

    set(&mut cfg.iterations, raw.train.iterations);
    if let Some(b) = raw.train.batch {
        cfg.batch = match b {
            BatchValue::Size(n) => Some(n),
            BatchValue::Word(FullBatch::Full) => None,
        };
    }
    set(&mut cfg.seed, raw.train.seed);
    set(&mut cfg.bits, raw.eval.bits);
    cfg.output = raw.output.dir;
    cfg.validate()?;
    Ok(cfg)
}

fn set<V>(slot: &mut V, value: Option<V>) {
    if let Some(v) = value {
        *slot = v;
    }
}
