//! Adam with two learning-rate groups, step decay, and min-max quantization.

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Learning-rate group of a parameter tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    /// Linear-layer weights and biases.
    Network,
    /// Modulation grids Γ and B.
    Grid,
}

/// Per-group rates multiplied by `factor` once per milestone passed.
#[derive(Debug, Clone, PartialEq)]
pub struct LrSchedule {
    pub network: f64,
    pub grid: f64,
    pub milestones: Vec<usize>,
    pub factor: f64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            network: 1e-3,
            grid: 1e-2,
            milestones: vec![1000, 1500],
            factor: 0.1,
        }
    }
}

impl LrSchedule {
    pub fn new(network: f64, grid: f64, milestones: Vec<usize>, factor: f64) -> Result<Self> {
        let s = Self {
            network,
            grid,
            milestones,
            factor,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("network rate", self.network), ("grid rate", self.grid), ("decay factor", self.factor)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.milestones.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "milestones must be strictly increasing, got {:?}",
                self.milestones
            )));
        }
        Ok(())
    }

    /// `(network, grid)` rates at `iter`.
    pub fn lr_at(&self, iter: usize) -> (f64, f64) {
        let passed = self.milestones.iter().filter(|&&m| iter >= m).count();
        let scale = self.factor.powi(passed as i32);
        (self.network * scale, self.grid * scale)
    }

    pub fn rate(&self, iter: usize, group: ParamGroup) -> f64 {
        let (n, g) = self.lr_at(iter);
        match group {
            ParamGroup::Network => n,
            ParamGroup::Grid => g,
        }
    }
}

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Moments and step counter for an ordered list of parameter tensors.
#[derive(Debug, Clone)]
pub struct Adam<T: Real = f32> {
    names: Vec<String>,
    groups: Vec<ParamGroup>,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    step: u64,
}

impl<T: Real> Adam<T> {
    /// One entry per parameter: `(path, group, numel)`.
    pub fn new<I, S>(params: I) -> Self
    where
        I: IntoIterator<Item = (S, ParamGroup, usize)>,
        S: Into<String>,
    {
        let mut s = Self {
            names: Vec::new(),
            groups: Vec::new(),
            m: Vec::new(),
            v: Vec::new(),
            step: 0,
        };
        for (name, group, n) in params {
            s.names.push(name.into());
            s.groups.push(group);
            s.m.push(vec![T::zero(); n]);
            s.v.push(vec![T::zero(); n]);
        }
        s
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn second_moments(&self) -> &[Vec<T>] {
        &self.v
    }

    /// One bias-corrected update. `rates` gives the rate per group.
    /// Nothing is modified when any gradient is non-finite.
    pub fn step(
        &mut self,
        params: &mut [&mut Tensor<T>],
        grads: &[Tensor<T>],
        rates: impl Fn(ParamGroup) -> f64,
    ) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::invalid(format!(
                "optimizer tracks {} tensors, got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.numel() != self.m[i].len() || g.shape() != p.shape() {
                return Err(Error::ShapeMismatch {
                    op: "adam_step",
                    lhs: p.shape().to_vec(),
                    rhs: g.shape().to_vec(),
                });
            }
            if !g.all_finite() {
                return Err(Error::NonFinite {
                    what: "gradient".into(),
                    location: self.names[i].clone(),
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        let (b1, b2) = (T::of(BETA1), T::of(BETA2));
        let (one_b1, one_b2) = (T::of(1.0 - BETA1), T::of(1.0 - BETA2));
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let lr = rates(self.groups[i]);
            let step_size = T::of(lr / bc1);
            let inv_bc2 = T::of(1.0 / bc2);
            let eps = T::of(ADAM_EPS);
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            let pd = p.data_mut();
            for j in 0..pd.len() {
                let gj = g.data()[j];
                m[j] = b1 * m[j] + one_b1 * gj;
                v[j] = b2 * v[j] + one_b2 * gj * gj;
                pd[j] = pd[j] - step_size * m[j] / ((v[j] * inv_bc2).sqrt() + eps);
            }
            if !p.all_finite() {
                return Err(Error::NonFinite {
                    what: "parameter after update".into(),
                    location: self.names[i].clone(),
                });
            }
        }
        Ok(())
    }
}

/// Per-tensor uniform quantization onto `2^bits` levels spanning `[min, max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub codes: Vec<u32>,
    pub shape: Vec<usize>,
    pub offset: f64,
    pub range: f64,
    pub bits: u32,
}

impl Quantized {
    pub fn levels(&self) -> f64 {
        ((1u64 << self.bits) - 1) as f64
    }

    /// Width of one quantization step.
    pub fn scale(&self) -> f64 {
        self.range / self.levels()
    }
}

pub fn quantize_minmax<T: Real>(values: &Tensor<T>, bits: u32) -> Result<Quantized> {
    if !(1..=16).contains(&bits) {
        return Err(Error::invalid(format!("unsupported bit width {bits}")));
    }
    if values.numel() == 0 || !values.all_finite() {
        return Err(Error::invalid("quantization needs a non-empty finite tensor"));
    }
    let (lo, hi) = values
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.f64()), hi.max(v.f64())));
    let levels = ((1u64 << bits) - 1) as f64;
    let range = hi - lo;
    let codes = values
        .data()
        .iter()
        .map(|v| {
            if range == 0.0 {
                0
            } else {
                // f64::round rounds half away from zero.
                ((v.f64() - lo) * levels / range).round().clamp(0.0, levels) as u32
            }
        })
        .collect();
    Ok(Quantized {
        codes,
        shape: values.shape().to_vec(),
        offset: lo,
        range,
        bits,
    })
}

pub fn dequantize<T: Real>(q: &Quantized) -> Result<Tensor<T>> {
    let levels = q.levels();
    let data = q
        .codes
        .iter()
        .map(|&c| T::of(q.offset + c as f64 * q.range / levels))
        .collect();
    Tensor::new(q.shape.clone(), data)
}

/// Quantize then dequantize.
pub fn fake_quantize<T: Real>(values: &Tensor<T>, bits: u32) -> Result<Tensor<T>> {
    dequantize(&quantize_minmax(values, bits)?)
}
