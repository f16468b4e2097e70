//! Encodings, layers and the [`FieldModel`] composition.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cam::{select_coords, CamLayer, CamMode};
use crate::error::{Error, Result};
use crate::grid::DOMAIN_TOLERANCE;
use crate::optim::ParamGroup;
use crate::tensor::{Gradients, Real, Tape, Tensor, Var};

/// Rows per chunk when evaluating a model without gradients.
pub const PREDICT_CHUNK: usize = 8192;

/// Gaussian random Fourier features: `x ↦ [cos(2πBx), sin(2πBx)]` with a
/// fixed `B ∈ R^{m×D}`, `B_ij ~ N(0, σ²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierEncoding<T: Real = f32> {
    matrix: Tensor<T>,
    sigma: f64,
    seed: u64,
}

impl<T: Real> FourierEncoding<T> {
    pub fn new(input_dim: usize, frequencies: usize, sigma: f64, seed: u64) -> Result<Self> {
        if input_dim == 0 || frequencies == 0 {
            return Err(Error::invalid("Fourier encoding needs positive dimensions"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("Gaussian scale must be positive, got {sigma}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
        let values: Vec<T> = (0..frequencies * input_dim)
            .map(|_| T::of(normal.sample(&mut rng)))
            .collect();
        Ok(Self {
            matrix: Tensor::new(vec![frequencies, input_dim], values)?,
            sigma,
            seed,
        })
    }

    pub fn from_matrix(matrix: Tensor<T>, sigma: f64, seed: u64) -> Result<Self> {
        if matrix.rank() != 2 || matrix.numel() == 0 {
            return Err(Error::InvalidShape(format!(
                "projection matrix must be [m × D], got {:?}",
                matrix.shape()
            )));
        }
        Ok(Self { matrix, sigma, seed })
    }

    pub fn matrix(&self) -> &Tensor<T> {
        &self.matrix
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.shape()[1]
    }

    pub fn output_dim(&self) -> usize {
        2 * self.matrix.shape()[0]
    }

    pub fn encode(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (m, d) = (self.matrix.shape()[0], self.matrix.shape()[1]);
        if x.rank() != 2 || x.shape()[1] != d {
            return Err(Error::ShapeMismatch {
                op: "fourier_features",
                lhs: x.shape().to_vec(),
                rhs: self.matrix.shape().to_vec(),
            });
        }
        let n = x.shape()[0];
        let b = self.matrix.data();
        let mut out = vec![T::zero(); n * 2 * m];
        for (row, dst) in out.chunks_exact_mut(2 * m).enumerate() {
            let xr = x.row(row);
            let (cos_half, sin_half) = dst.split_at_mut(m);
            for j in 0..m {
                let proj: f64 = (0..d).map(|i| b[j * d + i].f64() * xr[i].f64()).sum();
                let angle = 2.0 * PI * proj;
                cos_half[j] = T::of(angle.cos());
                sin_half[j] = T::of(angle.sin());
            }
        }
        Tensor::new(vec![n, 2 * m], out)
    }
}

/// Axis-aligned power-of-two positional encoding:
/// `x ↦ [x, sin(2^k π x), cos(2^k π x) for k < L]`, per input component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyEncoding {
    pub input_dim: usize,
    pub frequencies: usize,
    pub include_input: bool,
}

impl FrequencyEncoding {
    pub fn output_dim(&self) -> usize {
        self.input_dim * (2 * self.frequencies + usize::from(self.include_input))
    }

    pub fn encode<T: Real>(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let d = self.input_dim;
        if x.rank() != 2 || x.shape()[1] != d {
            return Err(Error::ShapeMismatch {
                op: "frequency encoding",
                lhs: x.shape().to_vec(),
                rhs: vec![d],
            });
        }
        let n = x.shape()[0];
        let width = self.output_dim();
        let mut out = Vec::with_capacity(n * width);
        for r in 0..n {
            let xr = x.row(r);
            if self.include_input {
                out.extend_from_slice(xr);
            }
            for k in 0..self.frequencies {
                let w = PI * (1u64 << k) as f64;
                out.extend(xr.iter().map(|v| T::of((w * v.f64()).sin())));
                out.extend(xr.iter().map(|v| T::of((w * v.f64()).cos())));
            }
        }
        Tensor::new(vec![n, width], out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoding<T: Real = f32> {
    Fourier(FourierEncoding<T>),
    Frequency(FrequencyEncoding),
}

impl<T: Real> Encoding<T> {
    pub fn input_dim(&self) -> usize {
        match self {
            Encoding::Fourier(e) => e.input_dim(),
            Encoding::Frequency(e) => e.input_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Encoding::Fourier(e) => e.output_dim(),
            Encoding::Frequency(e) => e.output_dim(),
        }
    }

    pub fn encode(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Encoding::Fourier(e) => e.encode(x),
            Encoding::Frequency(e) => e.encode(x),
        }
    }

    fn cast<U: Real>(&self) -> Encoding<U> {
        match self {
            Encoding::Fourier(e) => Encoding::Fourier(FourierEncoding {
                matrix: e.matrix.cast(),
                sigma: e.sigma,
                seed: e.seed,
            }),
            Encoding::Frequency(e) => Encoding::Frequency(*e),
        }
    }
}

/// Convenience wrapper over [`FourierEncoding::encode`].
pub fn fourier_features<T: Real>(enc: &FourierEncoding<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    enc.encode(x)
}

/// `y = x·Wᵀ + b`, weight stored `[out × in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer<T: Real = f32> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Real> LinearLayer<T> {
    pub fn from_parts(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        if weight.rank() != 2 || bias.shape() != [weight.shape()[0]] {
            return Err(Error::ShapeMismatch {
                op: "linear layer",
                lhs: weight.shape().to_vec(),
                rhs: bias.shape().to_vec(),
            });
        }
        if !weight.all_finite() || !bias.all_finite() {
            return Err(Error::NonFinite {
                what: "linear parameter".into(),
                location: "LinearLayer::from_parts".into(),
            });
        }
        Ok(Self { weight, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[0]
    }
}

/// Weights uniform in `[-1/√in, 1/√in]`, zero bias, reproducible per seed.
pub fn init_linear<T: Real>(input: usize, output: usize, seed: u64) -> Result<LinearLayer<T>> {
    if input == 0 || output == 0 {
        return Err(Error::invalid(format!(
            "linear layer dimensions must be positive, got {input}→{output}"
        )));
    }
    let bound = 1.0 / (input as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<T> = (0..input * output)
        .map(|_| T::of(rng.random_range(-bound..=bound)))
        .collect();
    Ok(LinearLayer {
        weight: Tensor::new(vec![output, input], w)?,
        bias: Tensor::zeros(vec![output]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply<'t, T: Real>(self, v: Var<'t, T>) -> Var<'t, T> {
        match self {
            Activation::Relu => v.relu(),
            Activation::Sigmoid => v.sigmoid(),
        }
    }
}

/// How a CAM stage views the model's `[rows × width]` running feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// One normalization unit per row.
    Rows,
    /// Consecutive groups of `samples` rows form one ray; the ray's
    /// coordinates are read from its first row.
    Rays { samples: usize },
    /// Each row is a `[channels × height × width]` feature volume.
    Planes {
        channels: usize,
        height: usize,
        width: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CamStage<T: Real = f32> {
    pub layer: CamLayer<T>,
    pub geometry: Geometry,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stage<T: Real = f32> {
    Encoding(Encoding<T>),
    Linear(LinearLayer<T>),
    Activation(Activation),
    Cam(CamStage<T>),
}

/// Identifies one trainable tensor of a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamInfo {
    pub name: String,
    pub group: ParamGroup,
    pub numel: usize,
}

/// Ordered composition mapping `[N × input_dim]` coordinates in the unit
/// domain to `[N × output_dim]` signal values.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel<T: Real = f32> {
    input_dim: usize,
    output_dim: usize,
    stages: Vec<Stage<T>>,
}

/// Result of [`FieldModel::forward`].
pub struct Forward<'t, T: Real> {
    pub output: Var<'t, T>,
    /// Parameter handles in [`FieldModel::param_info`] order.
    pub params: Vec<Var<'t, T>>,
    /// Each stage's output, when capture was requested.
    pub stages: Vec<Var<'t, T>>,
}

impl<T: Real> FieldModel<T> {
    pub fn new(input_dim: usize, output_dim: usize, stages: Vec<Stage<T>>) -> Result<Self> {
        let model = Self {
            input_dim,
            output_dim,
            stages,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn stages(&self) -> &[Stage<T>] {
        &self.stages
    }

    pub fn stages_mut(&mut self) -> &mut [Stage<T>] {
        &mut self.stages
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::invalid("model dimensions must be positive"));
        }
        let mut width = self.input_dim;
        for (i, stage) in self.stages.iter().enumerate() {
            let mismatch = |want: usize| {
                Err(Error::invalid(format!(
                    "stage {i} expects width {want} but receives {width}"
                )))
            };
            match stage {
                Stage::Encoding(e) => {
                    if i != 0 {
                        return Err(Error::invalid("an encoding may only be the first stage"));
                    }
                    if e.input_dim() != width {
                        return mismatch(e.input_dim());
                    }
                    width = e.output_dim();
                }
                Stage::Linear(l) => {
                    if l.in_dim() != width {
                        return mismatch(l.in_dim());
                    }
                    width = l.out_dim();
                }
                Stage::Activation(_) => {}
                Stage::Cam(c) => {
                    let mode = c.layer.mode();
                    match (mode, c.geometry) {
                        (CamMode::Scalar, Geometry::Rows) | (CamMode::Ray, Geometry::Rays { .. }) => {}
                        (CamMode::Channel { .. }, Geometry::Planes { channels, height, width: w }) => {
                            if channels * height * w != width {
                                return mismatch(channels * height * w);
                            }
                        }
                        _ => {
                            return Err(Error::invalid(format!(
                                "stage {i}: {mode:?} modulation cannot use {:?}",
                                c.geometry
                            )))
                        }
                    }
                    if let Some(&bad) = c.layer.selector().iter().find(|&&s| s >= self.input_dim) {
                        return Err(Error::invalid(format!(
                            "stage {i}: coordinate {bad} out of range for input dim {}",
                            self.input_dim
                        )));
                    }
                }
            }
        }
        if width != self.output_dim {
            return Err(Error::invalid(format!(
                "model produces width {width}, declared output {}",
                self.output_dim
            )));
        }
        Ok(())
    }

    pub fn param_info(&self) -> Vec<ParamInfo> {
        let mut out = Vec::new();
        for (i, stage) in self.stages.iter().enumerate() {
            match stage {
                Stage::Linear(l) => {
                    out.push(ParamInfo {
                        name: format!("stage{i}.weight"),
                        group: ParamGroup::Network,
                        numel: l.weight.numel(),
                    });
                    out.push(ParamInfo {
                        name: format!("stage{i}.bias"),
                        group: ParamGroup::Network,
                        numel: l.bias.numel(),
                    });
                }
                Stage::Cam(c) => {
                    out.push(ParamInfo {
                        name: format!("stage{i}.gamma"),
                        group: ParamGroup::Grid,
                        numel: c.layer.gamma().values().numel(),
                    });
                    out.push(ParamInfo {
                        name: format!("stage{i}.beta"),
                        group: ParamGroup::Grid,
                        numel: c.layer.beta().values().numel(),
                    });
                }
                _ => {}
            }
        }
        out
    }

    /// Parameter tensors in [`FieldModel::param_info`] order. Grid tensors
    /// keep their `[d1, (d2,) k]` shape.
    pub fn params(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        for stage in &self.stages {
            match stage {
                Stage::Linear(l) => out.extend([&l.weight, &l.bias]),
                Stage::Cam(c) => out.extend([c.layer.gamma().values(), c.layer.beta().values()]),
                _ => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for stage in &mut self.stages {
            match stage {
                Stage::Linear(l) => {
                    out.push(&mut l.weight);
                    out.push(&mut l.bias);
                }
                Stage::Cam(c) => {
                    let (gamma, beta) = c.layer.grids_mut();
                    out.push(gamma.values_mut());
                    out.push(beta.values_mut());
                }
                _ => {}
            }
        }
        out
    }

    /// Gradients of `fwd.params` reshaped to the parameter layouts of
    /// [`FieldModel::params`].
    pub fn param_grads(&self, fwd: &Forward<'_, T>, grads: &Gradients<T>) -> Result<Vec<Tensor<T>>> {
        self.params()
            .iter()
            .zip(&fwd.params)
            .map(|(p, v)| grads.get_or_zero(v).reshape(p.shape().to_vec()))
            .collect()
    }

    /// Index of the stage feeding the final linear layer: the last hidden
    /// feature of an MLP.
    pub fn last_hidden_stage(&self) -> Option<usize> {
        let last_linear = self.stages.iter().rposition(|s| matches!(s, Stage::Linear(_)))?;
        last_linear.checked_sub(1)
    }

    pub fn cam_layers(&self) -> impl Iterator<Item = (usize, &CamLayer<T>)> {
        self.stages.iter().enumerate().filter_map(|(i, s)| match s {
            Stage::Cam(c) => Some((i, &c.layer)),
            _ => None,
        })
    }

    pub fn cast<U: Real>(&self) -> FieldModel<U> {
        let stages = self
            .stages
            .iter()
            .map(|s| match s {
                Stage::Encoding(e) => Stage::Encoding(e.cast()),
                Stage::Linear(l) => Stage::Linear(LinearLayer {
                    weight: l.weight.cast(),
                    bias: l.bias.cast(),
                }),
                Stage::Activation(a) => Stage::Activation(*a),
                Stage::Cam(c) => Stage::Cam(CamStage {
                    layer: c.layer.cast(),
                    geometry: c.geometry,
                }),
            })
            .collect();
        FieldModel {
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            stages,
        }
    }

    fn check_inputs(&self, x: &Tensor<T>) -> Result<()> {
        if x.rank() != 2 || x.shape()[1] != self.input_dim {
            return Err(Error::ShapeMismatch {
                op: "model input",
                lhs: x.shape().to_vec(),
                rhs: vec![self.input_dim],
            });
        }
        if let Some(bad) = x
            .data()
            .iter()
            .map(|v| v.f64())
            .find(|v| !(-DOMAIN_TOLERANCE..=1.0 + DOMAIN_TOLERANCE).contains(v))
        {
            return Err(Error::OutOfDomain { value: bad });
        }
        Ok(())
    }

    /// Records the model on `tape`. Parameters become tracked leaves when
    /// `track` is set, constants otherwise.
    pub fn forward<'t>(
        &self,
        tape: &'t Tape<T>,
        x: &Tensor<T>,
        track: bool,
        capture: bool,
    ) -> Result<Forward<'t, T>> {
        self.forward_encoded(tape, x, None, track, capture)
    }

    /// Output of the leading encoding stage, if any. Training loops compute
    /// this once and pass row subsets to [`FieldModel::forward_encoded`].
    pub fn encode_inputs(&self, x: &Tensor<T>) -> Result<Option<Tensor<T>>> {
        self.check_inputs(x)?;
        match self.stages.first() {
            Some(Stage::Encoding(e)) => Ok(Some(e.encode(x)?)),
            _ => Ok(None),
        }
    }

    /// As [`FieldModel::forward`], reusing `encoded` (rows matching `x`) in
    /// place of evaluating the encoding stage.
    pub fn forward_encoded<'t>(
        &self,
        tape: &'t Tape<T>,
        x: &Tensor<T>,
        encoded: Option<&Tensor<T>>,
        track: bool,
        capture: bool,
    ) -> Result<Forward<'t, T>> {
        self.check_inputs(x)?;
        if let Some(e) = encoded {
            let want = match self.stages.first() {
                Some(Stage::Encoding(enc)) => enc.output_dim(),
                _ => return Err(Error::invalid("model has no encoding stage")),
            };
            if e.shape() != [x.shape()[0], want] {
                return Err(Error::ShapeMismatch {
                    op: "cached encoding",
                    lhs: e.shape().to_vec(),
                    rhs: vec![x.shape()[0], want],
                });
            }
        }
        let register = |t: Tensor<T>| if track { tape.leaf(t) } else { tape.constant(t) };
        let mut params = Vec::new();
        let mut stages = Vec::new();
        let rows = x.shape()[0];
        let mut h: Option<Var<'t, T>> = None;
        for stage in &self.stages {
            let input = match h {
                Some(v) => v,
                None => tape.constant(x.clone()),
            };
            let out = match stage {
                Stage::Encoding(e) => match encoded {
                    Some(cached) => tape.constant(cached.clone()),
                    None => tape.constant(e.encode(x)?),
                },
                Stage::Linear(l) => {
                    let w = register(l.weight.clone());
                    let b = register(l.bias.clone());
                    params.extend([w, b]);
                    input.matmul_t(w)?.add(b)?
                }
                Stage::Activation(a) => a.apply(input),
                Stage::Cam(c) => {
                    let gamma = register(c.layer.gamma().table());
                    let beta = register(c.layer.beta().table());
                    params.extend([gamma, beta]);
                    let width = input.shape()[1];
                    let coords = select_coords(x, c.layer.selector())?;
                    let (unit_shape, unit_coords) = match c.geometry {
                        Geometry::Rows => (vec![rows, width], coords),
                        Geometry::Rays { samples } => {
                            if samples == 0 || !rows.is_multiple_of(samples) {
                                return Err(Error::InvalidShape(format!(
                                    "{rows} rows do not split into rays of {samples} samples"
                                )));
                            }
                            let firsts: Vec<usize> = (0..rows / samples).map(|r| r * samples).collect();
                            (vec![rows / samples, samples, width], coords.select_rows(&firsts)?)
                        }
                        Geometry::Planes {
                            channels,
                            height,
                            width: w,
                        } => (vec![rows, channels, height, w], coords),
                    };
                    let f = input.reshape(unit_shape)?;
                    c.layer.apply(f, gamma, beta, &unit_coords)?.reshape(vec![rows, width])?
                }
            };
            if capture {
                stages.push(out);
            }
            h = Some(out);
        }
        let output = h.unwrap_or_else(|| tape.constant(x.clone()));
        Ok(Forward {
            output,
            params,
            stages,
        })
    }

    /// Gradient-free evaluation, chunked over rows.
    pub fn predict(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.map_chunks(x, |tape, chunk| Ok(self.forward(tape, chunk, false, false)?.output.value()))
    }

    /// Output of stage `index` for every row of `x`, chunked.
    pub fn stage_output(&self, x: &Tensor<T>, index: usize) -> Result<Tensor<T>> {
        if index >= self.stages.len() {
            return Err(Error::invalid(format!("no stage {index}")));
        }
        self.map_chunks(x, |tape, chunk| Ok(self.forward(tape, chunk, false, true)?.stages[index].value()))
    }

    fn map_chunks(
        &self,
        x: &Tensor<T>,
        f: impl Fn(&Tape<T>, &Tensor<T>) -> Result<Tensor<T>>,
    ) -> Result<Tensor<T>> {
        self.check_inputs(x)?;
        let n = x.shape()[0];
        let chunk = self.chunk_rows();
        if n <= chunk {
            return f(&Tape::new(), x);
        }
        let mut parts = Vec::with_capacity(n.div_ceil(chunk));
        let mut start = 0;
        while start < n {
            let end = (start + chunk).min(n);
            let rows: Vec<usize> = (start..end).collect();
            parts.push(f(&Tape::new(), &x.select_rows(&rows)?)?);
            start = end;
        }
        Tensor::concat_rows(&parts)
    }

    fn chunk_rows(&self) -> usize {
        // Chunks must not split a ray.
        let samples = self
            .stages
            .iter()
            .find_map(|s| match s {
                Stage::Cam(CamStage {
                    geometry: Geometry::Rays { samples },
                    ..
                }) => Some(*samples),
                _ => None,
            })
            .unwrap_or(1)
            .max(1);
        (PREDICT_CHUNK / samples).max(1) * samples
    }
}

/// Leading encoding of a [`ModelSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EncodingSpec {
    None,
    Frequency { frequencies: usize, include_input: bool },
    Fourier { frequencies: usize, sigma: f64 },
}

/// Modulation settings of a [`ModelSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct CamSpec {
    pub mode: CamMode,
    /// Hidden layers (0-based) whose linear output is modulated before the
    /// activation.
    pub placements: Vec<usize>,
    pub resolution: Vec<usize>,
    pub grid_channels: usize,
    pub normalize: bool,
    pub eps: f64,
    pub selector: Vec<usize>,
    /// Samples per ray, for [`CamMode::Ray`].
    pub samples: usize,
    /// `(channels, height, width)` view of hidden features, for
    /// [`CamMode::Channel`].
    pub planes: (usize, usize, usize),
}

/// An MLP of `layers` linear layers (`layers − 1` hidden activations) with
/// optional encoding, output activation and modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub layers: usize,
    pub hidden: usize,
    pub encoding: EncodingSpec,
    pub output_activation: Option<Activation>,
    pub cam: Option<CamSpec>,
}

impl ModelSpec {
    pub fn build<T: Real>(&self, seed: u64) -> Result<FieldModel<T>> {
        if self.layers == 0 || self.hidden == 0 {
            return Err(Error::invalid("model needs at least one layer and positive width"));
        }
        let mut stages = Vec::new();
        let mut width = self.input_dim;
        match self.encoding {
            EncodingSpec::None => {}
            EncodingSpec::Frequency {
                frequencies,
                include_input,
            } => {
                let e = FrequencyEncoding {
                    input_dim: self.input_dim,
                    frequencies,
                    include_input,
                };
                width = e.output_dim();
                stages.push(Stage::Encoding(Encoding::Frequency(e)));
            }
            EncodingSpec::Fourier { frequencies, sigma } => {
                let e = FourierEncoding::new(self.input_dim, frequencies, sigma, derive_seed(seed, 0xF0))?;
                width = e.output_dim();
                stages.push(Stage::Encoding(Encoding::Fourier(e)));
            }
        }
        if let Some(cam) = &self.cam {
            if let Some(&bad) = cam.placements.iter().find(|&&p| p + 1 >= self.layers) {
                return Err(Error::invalid(format!(
                    "modulation placement {bad} does not name a hidden layer (model has {})",
                    self.layers - 1
                )));
            }
        }
        for layer in 0..self.layers {
            let last = layer + 1 == self.layers;
            let out = if last { self.output_dim } else { self.hidden };
            stages.push(Stage::Linear(init_linear(width, out, derive_seed(seed, layer as u64))?));
            width = out;
            if last {
                if let Some(a) = self.output_activation {
                    stages.push(Stage::Activation(a));
                }
                break;
            }
            if let Some(cam) = self.cam.as_ref().filter(|c| c.placements.contains(&layer)) {
                stages.push(Stage::Cam(cam.stage(width)?));
            }
            stages.push(Stage::Activation(Activation::Relu));
        }
        FieldModel::new(self.input_dim, self.output_dim, stages)
    }
}

impl CamSpec {
    fn stage<T: Real>(&self, width: usize) -> Result<CamStage<T>> {
        let geometry = match self.mode {
            CamMode::Scalar => Geometry::Rows,
            CamMode::Ray => Geometry::Rays { samples: self.samples },
            CamMode::Channel { .. } => {
                let (channels, height, w) = self.planes;
                if channels * height * w != width {
                    return Err(Error::invalid(format!(
                        "plane layout {channels}×{height}×{w} does not match hidden width {width}"
                    )));
                }
                Geometry::Planes {
                    channels,
                    height,
                    width: w,
                }
            }
        };
        let layer = CamLayer::new(
            self.mode,
            self.resolution.clone(),
            self.grid_channels,
            self.selector.clone(),
            self.normalize,
            self.eps,
        )?;
        Ok(CamStage { layer, geometry })
    }
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(stream)
}
