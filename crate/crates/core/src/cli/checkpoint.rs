//! Binary model container.
//!
//! Layout (all integers little-endian): magic `CAMFIELD`, `u32` version,
//! `u32` input and output dims, `u32` stage count, then per stage a `u8`
//! tag and its payload. Tensors are a `u32` rank, `u32` extents and
//! little-endian `f32` values.

use std::fs;
use std::path::Path;

use crate::cam::{CamLayer, CamMode};
use crate::error::{Error, Result};
use crate::grid::ModulationGrid;
use crate::nn::{
    Activation, CamStage, Encoding, FieldModel, FourierEncoding, FrequencyEncoding, Geometry, LinearLayer, Stage,
};
use crate::tensor::Tensor;

const MAGIC: &[u8; 8] = b"CAMFIELD";
const VERSION: u32 = 1;

const TAG_FOURIER: u8 = 1;
const TAG_FREQUENCY: u8 = 2;
const TAG_LINEAR: u8 = 3;
const TAG_ACTIVATION: u8 = 4;
const TAG_CAM: u8 = 5;

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend((v as u32).to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend(v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend(v.to_le_bytes());
    }
    fn dims(&mut self, d: &[usize]) {
        self.u32(d.len());
        d.iter().for_each(|&x| self.u32(x));
    }
    fn tensor(&mut self, t: &Tensor<f32>) {
        self.dims(t.shape());
        for v in t.data() {
            self.0.extend(v.to_le_bytes());
        }
    }
    fn grid(&mut self, g: &ModulationGrid<f32>) {
        self.dims(g.resolution());
        self.u32(g.channels());
        self.tensor(g.values());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn flag(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(Error::Format(format!("invalid flag byte {v}"))),
        }
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn dims(&mut self) -> Result<Vec<usize>> {
        let rank = self.u32()?;
        if rank > 8 {
            return Err(Error::Format(format!("implausible tensor rank {rank}")));
        }
        (0..rank).map(|_| self.u32()).collect()
    }
    fn tensor(&mut self) -> Result<Tensor<f32>> {
        let shape = self.dims()?;
        let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let n = n.ok_or_else(|| Error::Format("tensor size overflows".into()))?;
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::Format("tensor size overflows".into()))?)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Tensor::new(shape, data)
    }
    fn grid(&mut self) -> Result<ModulationGrid<f32>> {
        let res = self.dims()?;
        let k = self.u32()?;
        let values = self.tensor()?;
        ModulationGrid::from_values(res, k, values)
    }
}

pub fn encode_checkpoint(model: &FieldModel<f32>) -> Vec<u8> {
    let mut w = Writer::default();
    w.0.extend(MAGIC);
    w.u32(VERSION as usize);
    w.u32(model.input_dim());
    w.u32(model.output_dim());
    w.u32(model.stages().len());
    for stage in model.stages() {
        match stage {
            Stage::Encoding(Encoding::Fourier(e)) => {
                w.u8(TAG_FOURIER);
                w.u64(e.seed());
                w.f64(e.sigma());
                w.tensor(e.matrix());
            }
            Stage::Encoding(Encoding::Frequency(e)) => {
                w.u8(TAG_FREQUENCY);
                w.u32(e.input_dim);
                w.u32(e.frequencies);
                w.u8(e.include_input as u8);
            }
            Stage::Linear(l) => {
                w.u8(TAG_LINEAR);
                w.tensor(&l.weight);
                w.tensor(&l.bias);
            }
            Stage::Activation(a) => {
                w.u8(TAG_ACTIVATION);
                w.u8(match a {
                    Activation::Relu => 0,
                    Activation::Sigmoid => 1,
                });
            }
            Stage::Cam(c) => {
                let l = &c.layer;
                w.u8(TAG_CAM);
                let (mode, volume) = match l.mode() {
                    CamMode::Scalar => (0, false),
                    CamMode::Ray => (1, false),
                    CamMode::Channel { volume_norm } => (2, volume_norm),
                };
                w.u8(mode);
                w.u8(volume as u8);
                w.u8(l.normalize() as u8);
                w.f64(l.eps());
                w.dims(l.selector());
                match c.geometry {
                    Geometry::Rows => w.dims(&[]),
                    Geometry::Rays { samples } => w.dims(&[samples]),
                    Geometry::Planes {
                        channels,
                        height,
                        width,
                    } => w.dims(&[channels, height, width]),
                }
                w.grid(l.gamma());
                w.grid(l.beta());
            }
        }
    }
    w.0
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<FieldModel<f32>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let input_dim = r.u32()?;
    let output_dim = r.u32()?;
    let count = r.u32()?;
    let mut stages = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let stage = match r.u8()? {
            TAG_FOURIER => {
                let seed = r.u64()?;
                let sigma = r.f64()?;
                let matrix = r.tensor()?;
                Stage::Encoding(Encoding::Fourier(FourierEncoding::from_matrix(matrix, sigma, seed)?))
            }
            TAG_FREQUENCY => Stage::Encoding(Encoding::Frequency(FrequencyEncoding {
                input_dim: r.u32()?,
                frequencies: r.u32()?,
                include_input: r.flag()?,
            })),
            TAG_LINEAR => {
                let weight = r.tensor()?;
                let bias = r.tensor()?;
                Stage::Linear(LinearLayer::from_parts(weight, bias)?)
            }
            TAG_ACTIVATION => Stage::Activation(match r.u8()? {
                0 => Activation::Relu,
                1 => Activation::Sigmoid,
                v => return Err(Error::Format(format!("unknown activation {v}"))),
            }),
            TAG_CAM => {
                let mode_tag = r.u8()?;
                let volume_norm = r.flag()?;
                let normalize = r.flag()?;
                let eps = r.f64()?;
                let selector = r.dims()?;
                let geom = r.dims()?;
                let (mode, geometry) = match (mode_tag, &geom[..]) {
                    (0, []) => (CamMode::Scalar, Geometry::Rows),
                    (1, &[samples]) => (CamMode::Ray, Geometry::Rays { samples }),
                    (2, &[channels, height, width]) => (
                        CamMode::Channel { volume_norm },
                        Geometry::Planes {
                            channels,
                            height,
                            width,
                        },
                    ),
                    _ => return Err(Error::Format(format!("bad modulation mode {mode_tag} / {geom:?}"))),
                };
                let gamma = r.grid()?;
                let beta = r.grid()?;
                Stage::Cam(CamStage {
                    layer: CamLayer::from_grids(mode, gamma, beta, selector, normalize, eps)?,
                    geometry,
                })
            }
            t => return Err(Error::Format(format!("unknown stage tag {t}"))),
        };
        stages.push(stage);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    FieldModel::new(input_dim, output_dim, stages)
}

pub fn save_checkpoint(path: &Path, model: &FieldModel<f32>) -> Result<()> {
    fs::write(path, encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<FieldModel<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}
