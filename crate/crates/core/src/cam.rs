//! Coordinate-aware modulation layers.
//!
//! A [`CamLayer`] standardizes a feature tensor per normalization unit and
//! then applies `γ·F̂ + β`, where `γ` and `β` are read from two modulation
//! grids at each sample's (selected) coordinates. Three layouts are
//! supported:
//!
//! | mode      | feature         | unit            | grid channels |
//! |-----------|-----------------|-----------------|---------------|
//! | `Scalar`  | `[N × C]`       | row             | 1             |
//! | `Ray`     | `[N × S × C]`   | ray slab `S×C`  | 1             |
//! | `Channel` | `[N × C × H × W]` | plane `H×W` (or `C×H×W`) | C (or 1) |
//!
//! With normalization disabled the layer is the plain modulation
//! `γ·F + β`.

use crate::error::{Error, Result};
use crate::grid::ModulationGrid;
use crate::tensor::{Real, Tape, Tensor, Var};

pub const DEFAULT_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CamMode {
    /// `[N × C]`, statistics over `C`.
    Scalar,
    /// `[N × S × C]`, statistics over `S × C`, one `(γ, β)` per ray.
    Ray,
    /// `[N × C × H × W]`, statistics over `H × W` per channel, or over
    /// `C × H × W` when `volume_norm` is set.
    Channel { volume_norm: bool },
}

impl CamMode {
    pub fn feature_rank(self) -> usize {
        match self {
            CamMode::Scalar => 2,
            CamMode::Ray => 3,
            CamMode::Channel { .. } => 4,
        }
    }

    fn norm_axes(self) -> &'static [usize] {
        match self {
            CamMode::Scalar => &[1],
            CamMode::Ray => &[1, 2],
            CamMode::Channel { volume_norm: false } => &[2, 3],
            CamMode::Channel { volume_norm: true } => &[1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CamLayer<T: Real = f32> {
    mode: CamMode,
    normalize: bool,
    eps: f64,
    gamma: ModulationGrid<T>,
    beta: ModulationGrid<T>,
    selector: Vec<usize>,
}

impl<T: Real> CamLayer<T> {
    /// Fresh layer: `Γ ≡ 1`, `B ≡ 0`, i.e. pure standardization (or the
    /// identity when `normalize` is off).
    pub fn new(
        mode: CamMode,
        resolution: Vec<usize>,
        channels: usize,
        selector: Vec<usize>,
        normalize: bool,
        eps: f64,
    ) -> Result<Self> {
        let gamma = ModulationGrid::new(resolution.clone(), channels, 1.0)?;
        let beta = ModulationGrid::new(resolution, channels, 0.0)?;
        Self::from_grids(mode, gamma, beta, selector, normalize, eps)
    }

    pub fn from_grids(
        mode: CamMode,
        gamma: ModulationGrid<T>,
        beta: ModulationGrid<T>,
        selector: Vec<usize>,
        normalize: bool,
        eps: f64,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("normalization eps must be positive, got {eps}")));
        }
        if gamma.resolution() != beta.resolution() || gamma.channels() != beta.channels() {
            return Err(Error::ShapeMismatch {
                op: "cam grids",
                lhs: gamma.values().shape().to_vec(),
                rhs: beta.values().shape().to_vec(),
            });
        }
        if selector.len() != gamma.rank() {
            return Err(Error::invalid(format!(
                "coordinate selector {:?} does not match grid rank {}",
                selector,
                gamma.rank()
            )));
        }
        if matches!(mode, CamMode::Scalar | CamMode::Ray) && gamma.channels() != 1 {
            return Err(Error::invalid(format!(
                "{mode:?} modulation uses single-channel grids, got {} channels",
                gamma.channels()
            )));
        }
        Ok(Self {
            mode,
            normalize,
            eps,
            gamma,
            beta,
            selector,
        })
    }

    pub fn mode(&self) -> CamMode {
        self.mode
    }

    pub fn normalize(&self) -> bool {
        self.normalize
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn selector(&self) -> &[usize] {
        &self.selector
    }

    pub fn gamma(&self) -> &ModulationGrid<T> {
        &self.gamma
    }

    pub fn beta(&self) -> &ModulationGrid<T> {
        &self.beta
    }

    pub fn gamma_mut(&mut self) -> &mut ModulationGrid<T> {
        &mut self.gamma
    }

    pub fn beta_mut(&mut self) -> &mut ModulationGrid<T> {
        &mut self.beta
    }

    /// `(Γ, B)` borrowed together.
    pub fn grids_mut(&mut self) -> (&mut ModulationGrid<T>, &mut ModulationGrid<T>) {
        (&mut self.gamma, &mut self.beta)
    }

    pub fn set_normalize(&mut self, on: bool) {
        self.normalize = on;
    }

    pub fn cast<U: Real>(&self) -> CamLayer<U> {
        CamLayer {
            mode: self.mode,
            normalize: self.normalize,
            eps: self.eps,
            gamma: self.gamma.cast(),
            beta: self.beta.cast(),
            selector: self.selector.clone(),
        }
    }

    /// Records the layer on `f`'s tape. `gamma` and `beta` are the grid
    /// tables (`[nodes × k]`) already registered on the same tape, and
    /// `unit_coords` holds one selected coordinate row per normalization
    /// sample (`[N × rank]`).
    pub fn apply<'t>(
        &self,
        f: Var<'t, T>,
        gamma: Var<'t, T>,
        beta: Var<'t, T>,
        unit_coords: &Tensor<T>,
    ) -> Result<Var<'t, T>> {
        let shape = f.shape();
        if shape.len() != self.mode.feature_rank() {
            return Err(Error::InvalidShape(format!(
                "{:?} modulation expects a rank-{} feature, got {:?}",
                self.mode,
                self.mode.feature_rank(),
                shape
            )));
        }
        if let Some(&zero_axis) = self.mode.norm_axes().iter().find(|&&ax| shape[ax] == 0) {
            return Err(Error::InvalidShape(format!(
                "empty normalization unit: axis {zero_axis} of {shape:?}"
            )));
        }
        let n = shape[0];
        if unit_coords.shape().first() != Some(&n) {
            return Err(Error::ShapeMismatch {
                op: "cam coordinates",
                lhs: shape.clone(),
                rhs: unit_coords.shape().to_vec(),
            });
        }
        let k = self.gamma.channels();
        let mod_shape = match self.mode {
            CamMode::Scalar => vec![n, 1],
            CamMode::Ray => vec![n, 1, 1],
            CamMode::Channel { .. } => {
                if k != shape[1] && k != 1 {
                    return Err(Error::invalid(format!(
                        "grid has {k} channels but the feature has {}",
                        shape[1]
                    )));
                }
                vec![n, k, 1, 1]
            }
        };
        let weights = self.gamma.weights(unit_coords)?;
        let g = weights.apply(gamma)?.reshape(mod_shape.clone())?;
        let b = weights.apply(beta)?.reshape(mod_shape)?;

        let features = if self.normalize {
            f.standardize(self.mode.norm_axes(), self.eps)?
        } else {
            f
        };
        features.mul(g)?.add(b)
    }

    /// Eager evaluation on plain tensors; `coords` are full coordinates, the
    /// layer's selector is applied here.
    pub fn forward(&self, f: &Tensor<T>, coords: &Tensor<T>) -> Result<Tensor<T>> {
        let sel = select_coords(coords, &self.selector)?;
        let tape = Tape::new();
        let out = self.apply(
            tape.constant(f.clone()),
            tape.constant(self.gamma.table()),
            tape.constant(self.beta.table()),
            &sel,
        )?;
        Ok(out.value())
    }

    fn expect_mode(&self, want: &str, ok: bool) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{want} called on a {:?} layer",
                self.mode
            )))
        }
    }
}

/// Per-row standardization of `[N × C]` features, modulated at `x`.
pub fn cam_scalar<T: Real>(layer: &CamLayer<T>, f: &Tensor<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    layer.expect_mode("cam_scalar", layer.mode == CamMode::Scalar)?;
    layer.forward(f, x)
}

/// Per-ray standardization of `[N × S × C]` features, modulated at the
/// ray's coordinates (view direction, or time for dynamic scenes).
pub fn cam_ray<T: Real>(layer: &CamLayer<T>, f: &Tensor<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    layer.expect_mode("cam_ray", layer.mode == CamMode::Ray)?;
    layer.forward(f, x)
}

/// Per-channel standardization of `[N × C × H × W]` features, modulated by
/// channel-wise scales and shifts read at `x` (usually time).
pub fn cam_channel<T: Real>(layer: &CamLayer<T>, f: &Tensor<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    layer.expect_mode("cam_channel", matches!(layer.mode, CamMode::Channel { .. }))?;
    layer.forward(f, x)
}

/// Columns of `x` (`[N × D]`) in selector order.
pub fn select_coords<T: Real>(x: &Tensor<T>, selector: &[usize]) -> Result<Tensor<T>> {
    if x.rank() != 2 {
        return Err(Error::InvalidShape(format!(
            "coordinates must be [N × D], got {:?}",
            x.shape()
        )));
    }
    if selector.iter().copied().eq(0..x.shape()[1]) {
        return Ok(x.clone());
    }
    x.select_columns(selector)
}
