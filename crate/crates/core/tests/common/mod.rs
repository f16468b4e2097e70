//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod invariants;

use camfield::cam::{CamLayer, CamMode};
use camfield::grid::ModulationGrid;
use camfield::nn::{Activation, CamSpec, EncodingSpec, FieldModel, ModelSpec};
use camfield::tensor::{BinaryOp, ReduceOp, UnaryOp};
use camfield::{Real, Result, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut impl Rng, shape: Vec<usize>, lo: f64, hi: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    Tensor::new(shape, data).unwrap()
}

// ---------------------------------------------------------------------------
// Gradient checks

/// Step of the double-precision central differences.
pub const FD_STEP: f64 = 1e-4;
/// Coordinates checked per input tensor.
const FD_SAMPLES: usize = 12;

pub enum Kind {
    Binary(BinaryOp),
    Unary(UnaryOp),
    MatMul { trans_a: bool, trans_b: bool },
    Reduce { op: ReduceOp, axes: Vec<usize>, keep: bool },
    Reshape(Vec<usize>),
    Interp { grid: ModulationGrid<f64>, coords: Tensor<f64> },
    Cam { layer: CamLayer<f64>, unit_coords: Tensor<f64> },
    Model { model: FieldModel<f64>, x: Tensor<f64> },
}

pub struct GradCase {
    pub label: String,
    pub kind: Kind,
    pub inputs: Vec<Tensor<f64>>,
    seed: u64,
}

#[derive(Debug, Clone)]
pub struct GradReport {
    pub label: String,
    /// Worst `‖autodiff − fd‖∞ / (‖fd‖∞ + 1e-6)` over the input tensors,
    /// single-precision autodiff against a double-precision central
    /// difference.
    pub err32: f64,
    /// The same with double-precision autodiff.
    pub err64: f64,
    /// Worst per-entry `|autodiff − fd| / (|fd| + 1e-6)` in single
    /// precision. Entries far below the tensor's gradient scale are limited
    /// by single-precision rounding, so this is reported, not gated.
    pub elementwise32: f64,
    pub checked: usize,
}

impl GradCase {
    fn graph<'t, T: Real>(&self, v: &[Var<'t, T>]) -> Result<Var<'t, T>> {
        match &self.kind {
            Kind::Binary(op) => match op {
                BinaryOp::Add => v[0].add(v[1]),
                BinaryOp::Sub => v[0].sub(v[1]),
                BinaryOp::Mul => v[0].mul(v[1]),
                BinaryOp::Div => v[0].div(v[1]),
            },
            Kind::Unary(op) => Ok(v[0].unary(*op)),
            Kind::MatMul { trans_a, trans_b } => v[0].matmul_with(v[1], *trans_a, *trans_b),
            Kind::Reduce { op, axes, keep } => v[0].reduce(*op, axes, *keep),
            Kind::Reshape(shape) => v[0].reshape(shape.clone())?.mul(v[1]),
            Kind::Interp { grid, coords } => {
                let w = grid.cast::<T>().weights(&coords.cast())?;
                Ok(w.apply(v[0])?.mul(v[1])?.sin())
            }
            Kind::Cam { layer, unit_coords } => {
                layer.cast::<T>().apply(v[0], v[1], v[2], &unit_coords.cast())
            }
            Kind::Model { .. } => unreachable!("models run through FieldModel::forward"),
        }
    }

    /// Loss `Σ R ⊙ out` for a fixed random `R`, and its gradients when asked.
    pub fn run<T: Real>(&self, inputs: &[Tensor<T>], grad: bool) -> Result<(f64, Vec<Tensor<T>>)> {
        let tape = Tape::<T>::new();
        if let Kind::Model { model, x } = &self.kind {
            let mut m = model.cast::<T>();
            for (p, v) in m.params_mut().into_iter().zip(inputs) {
                *p = v.clone();
            }
            let fwd = m.forward(&tape, &x.cast(), grad, false)?;
            let loss = project(&tape, fwd.output, self.seed)?;
            let value = loss.value().item()?.f64();
            if !grad {
                return Ok((value, Vec::new()));
            }
            let g = loss.backward()?;
            return Ok((value, m.param_grads(&fwd, &g)?));
        }
        let vars: Vec<Var<T>> = inputs
            .iter()
            .map(|t| if grad { tape.leaf(t.clone()) } else { tape.constant(t.clone()) })
            .collect();
        let out = self.graph(&vars)?;
        let loss = project(&tape, out, self.seed)?;
        let value = loss.value().item()?.f64();
        if !grad {
            return Ok((value, Vec::new()));
        }
        let g = loss.backward()?;
        Ok((value, vars.iter().map(|v| g.get_or_zero(v)).collect()))
    }

    pub fn check(&self) -> Result<GradReport> {
        let in32: Vec<Tensor<f32>> = self.inputs.iter().map(|t| t.cast()).collect();
        // The f64 reference sees exactly the values the f32 pass saw.
        let base: Vec<Tensor<f64>> = in32.iter().map(|t| t.cast()).collect();
        let (_, g32) = self.run(&in32, true)?;
        let (_, g64) = self.run(&base, true)?;
        let mut pick = rng(self.seed ^ 0x5EED);
        let mut report = GradReport {
            label: self.label.clone(),
            err32: 0.0,
            err64: 0.0,
            elementwise32: 0.0,
            checked: 0,
        };
        for (i, t) in base.iter().enumerate() {
            let n = t.numel();
            let idx: Vec<usize> = if n <= FD_SAMPLES {
                (0..n).collect()
            } else {
                rand::seq::index::sample(&mut pick, n, FD_SAMPLES).into_vec()
            };
            let (mut scale, mut d32, mut d64) = (0.0f64, 0.0f64, 0.0f64);
            for j in idx {
                let at = |k: f64| -> Result<f64> {
                    let mut moved = base.clone();
                    moved[i].data_mut()[j] += k * FD_STEP;
                    Ok(self.run(&moved, false)?.0)
                };
                // Fourth-order central stencil.
                let fd = (8.0 * (at(1.0)? - at(-1.0)?) - (at(2.0)? - at(-2.0)?)) / (12.0 * FD_STEP);
                let e32 = (g32[i].data()[j] as f64 - fd).abs();
                scale = scale.max(fd.abs());
                d32 = d32.max(e32);
                d64 = d64.max((g64[i].data()[j] - fd).abs());
                report.elementwise32 = report.elementwise32.max(e32 / (fd.abs() + 1e-6));
                report.checked += 1;
            }
            report.err32 = report.err32.max(d32 / (scale + 1e-6));
            report.err64 = report.err64.max(d64 / (scale + 1e-6));
        }
        Ok(report)
    }
}

fn project<'t, T: Real>(tape: &'t Tape<T>, out: Var<'t, T>, seed: u64) -> Result<Var<'t, T>> {
    let r = uniform(&mut rng(seed), out.shape(), -1.0, 1.0);
    out.mul(tape.constant(r.cast()))?.sum_all()
}

fn dims(rng: &mut impl Rng, rank: usize, max: usize) -> Vec<usize> {
    (0..rank).map(|_| rng.random_range(1..=max)).collect()
}

/// Randomized small instances covering every differentiable op, the grid
/// interpolation, the three modulation modes and whole models.
pub fn gradient_cases(seed: u64) -> Vec<GradCase> {
    let mut r = rng(seed);
    let mut cases = Vec::new();
    let mut push = |label: String, kind: Kind, inputs: Vec<Tensor<f64>>, r: &mut ChaCha8Rng| {
        cases.push(GradCase {
            label,
            kind,
            inputs,
            seed: r.random(),
        })
    };

    for op in [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div] {
        for _ in 0..5 {
            let rank = r.random_range(1..=3);
            let shape = dims(&mut r, rank, 4);
            // Broadcast the second operand over a random subset of axes.
            let other: Vec<usize> = shape.iter().map(|&d| if r.random_bool(0.4) { 1 } else { d }).collect();
            let a = uniform(&mut r, shape.clone(), -2.0, 2.0);
            let b = uniform(&mut r, other, -2.0, 2.0);
            let (a, mut b) = if r.random_bool(0.3) { (b, a) } else { (a, b) };
            if op == BinaryOp::Div {
                b = b.map(|v| if v.abs() < 0.5 { v.signum() * 0.5 + v } else { v });
            }
            push(format!("{op:?} {:?}∘{:?}", a.shape(), b.shape()), Kind::Binary(op), vec![a, b], &mut r);
        }
    }
    let unary = [
        UnaryOp::Relu,
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Sigmoid,
        UnaryOp::Sqrt,
        UnaryOp::Square,
        UnaryOp::Affine { scale: -1.5, shift: 0.25 },
    ];
    for op in unary {
        for _ in 0..3 {
            let shape = dims(&mut r, 2, 4);
            let mut x = uniform(&mut r, shape, -2.0, 2.0);
            match op {
                // Keep clear of the kink and of the sqrt singularity.
                UnaryOp::Relu => x = x.map(|v| if v.abs() < 0.1 { v + 0.2 } else { v }),
                UnaryOp::Sqrt => x = x.map(|v| v.abs() + 0.1),
                _ => {}
            }
            push(format!("{op:?} {:?}", x.shape()), Kind::Unary(op), vec![x], &mut r);
        }
    }
    for (trans_a, trans_b) in [(false, false), (false, true), (true, false), (true, true)] {
        for _ in 0..3 {
            let (m, k, n) = (r.random_range(1..=4), r.random_range(1..=4), r.random_range(1..=4));
            let a = uniform(&mut r, if trans_a { vec![k, m] } else { vec![m, k] }, -2.0, 2.0);
            let b = uniform(&mut r, if trans_b { vec![n, k] } else { vec![k, n] }, -2.0, 2.0);
            push(
                format!("matmul ta={trans_a} tb={trans_b} {m}×{k}×{n}"),
                Kind::MatMul { trans_a, trans_b },
                vec![a, b],
                &mut r,
            );
        }
    }
    for op in [ReduceOp::Sum, ReduceOp::Mean, ReduceOp::Variance] {
        for _ in 0..4 {
            let rank = r.random_range(1..=4);
            let shape = dims(&mut r, rank, 4);
            let mut axes: Vec<usize> = (0..rank).filter(|_| r.random_bool(0.5)).collect();
            if axes.is_empty() {
                axes.push(r.random_range(0..rank));
            }
            let keep = r.random_bool(0.5);
            let x = uniform(&mut r, shape, -2.0, 2.0);
            push(
                format!("{op:?} {:?} axes {axes:?} keep={keep}", x.shape()),
                Kind::Reduce { op, axes, keep },
                vec![x],
                &mut r,
            );
        }
    }
    for _ in 0..3 {
        let (a, b, c) = (r.random_range(1..=4), r.random_range(1..=4), r.random_range(1..=4));
        let x = uniform(&mut r, vec![a, b * c], -2.0, 2.0);
        let w = uniform(&mut r, vec![a, b, c], -2.0, 2.0);
        push(format!("reshape {a}×{} → {a}×{b}×{c}", b * c), Kind::Reshape(vec![a, b, c]), vec![x, w], &mut r);
    }
    for rank in [1, 2] {
        for _ in 0..6 {
            let res = dims(&mut r, rank, 5).into_iter().map(|d| d + 1).collect::<Vec<_>>();
            let k = r.random_range(1..=3);
            let grid = ModulationGrid::<f64>::new(res.clone(), k, 0.0).unwrap();
            let q = r.random_range(1..=6);
            let coords = uniform(&mut r, vec![q, rank], 0.0, 1.0);
            let table = uniform(&mut r, vec![grid.node_count(), k], -2.0, 2.0);
            let feat = uniform(&mut r, vec![q, k], -2.0, 2.0);
            let name = if rank == 1 { "interp1" } else { "interp2" };
            push(format!("{name} {res:?}×{k}, {q} queries"), Kind::Interp { grid, coords }, vec![table, feat], &mut r);
        }
    }
    let modes = [
        CamMode::Scalar,
        CamMode::Ray,
        CamMode::Channel { volume_norm: false },
        CamMode::Channel { volume_norm: true },
    ];
    for mode in modes {
        for i in 0..6 {
            let rank = r.random_range(1..=2);
            let res: Vec<usize> = (0..rank).map(|_| r.random_range(2..=5)).collect();
            let n = r.random_range(1..=3);
            let (shape, k) = match mode {
                CamMode::Scalar => (vec![n, r.random_range(2..=5)], 1),
                CamMode::Ray => (vec![n, r.random_range(1..=3), r.random_range(2..=4)], 1),
                CamMode::Channel { .. } => {
                    let c = r.random_range(1..=3);
                    let shape = vec![n, c, r.random_range(1..=3), r.random_range(2..=3)];
                    (shape, if r.random_bool(0.5) { c } else { 1 })
                }
            };
            // Every other instance exercises the unnormalized (CAM-N) path.
            let normalize = i % 3 != 2;
            let layer = CamLayer::<f64>::new(mode, res.clone(), k, (0..rank).collect(), normalize, 1e-5).unwrap();
            let nodes = layer.gamma().node_count();
            let f = uniform(&mut r, shape.clone(), -2.0, 2.0);
            let gamma = uniform(&mut r, vec![nodes, k], -2.0, 2.0);
            let beta = uniform(&mut r, vec![nodes, k], -2.0, 2.0);
            let unit_coords = uniform(&mut r, vec![n, rank], 0.0, 1.0);
            push(
                format!("cam {mode:?} normalize={normalize} {shape:?} grid {res:?}×{k}"),
                Kind::Cam { layer, unit_coords },
                vec![f, gamma, beta],
                &mut r,
            );
        }
    }
    for (i, spec) in small_model_specs().into_iter().enumerate() {
        for rep in 0..2 {
            let mut model: FieldModel<f64> = spec.build(r.random()).unwrap();
            // Move the grids off their identity start.
            let infos = model.param_info();
            for (info, p) in infos.iter().zip(model.params_mut()) {
                if info.name.ends_with("gamma") || info.name.ends_with("beta") {
                    for v in p.data_mut() {
                        *v += r.random_range(-0.5..0.5);
                    }
                }
            }
            let rows = if spec.cam.as_ref().map(|c| c.mode) == Some(CamMode::Ray) { 6 } else { 5 };
            let x = uniform(&mut r, vec![rows, spec.input_dim], 0.0, 1.0);
            let inputs = model.params().into_iter().cloned().collect();
            push(format!("model #{i}.{rep}"), Kind::Model { model, x }, inputs, &mut r);
        }
    }
    cases
}

/// Small models spanning the encodings, modulation modes and heads.
pub fn small_model_specs() -> Vec<ModelSpec> {
    let cam = |mode, resolution: Vec<usize>, k, normalize, selector: Vec<usize>| CamSpec {
        mode,
        placements: vec![0, 1],
        resolution,
        grid_channels: k,
        normalize,
        eps: 1e-5,
        selector,
        samples: 3,
        planes: (2, 2, 2),
    };
    let spec = |input_dim, output_dim, encoding, head, cam| ModelSpec {
        input_dim,
        output_dim,
        layers: 3,
        hidden: 8,
        encoding,
        output_activation: head,
        cam,
    };
    vec![
        spec(
            2,
            3,
            EncodingSpec::Fourier { frequencies: 4, sigma: 2.0 },
            Some(Activation::Sigmoid),
            Some(cam(CamMode::Scalar, vec![4, 4], 1, true, vec![0, 1])),
        ),
        spec(
            1,
            1,
            EncodingSpec::Frequency { frequencies: 3, include_input: true },
            None,
            Some(cam(CamMode::Scalar, vec![5], 1, true, vec![0])),
        ),
        spec(
            2,
            3,
            EncodingSpec::None,
            Some(Activation::Sigmoid),
            Some(cam(CamMode::Scalar, vec![3, 4], 1, false, vec![1, 0])),
        ),
        spec(
            3,
            3,
            EncodingSpec::Frequency { frequencies: 2, include_input: true },
            None,
            Some(cam(CamMode::Ray, vec![3, 3], 1, true, vec![0, 1])),
        ),
        spec(
            1,
            2,
            EncodingSpec::Frequency { frequencies: 2, include_input: true },
            None,
            Some(cam(CamMode::Channel { volume_norm: false }, vec![4], 2, true, vec![0])),
        ),
        spec(
            1,
            2,
            EncodingSpec::Frequency { frequencies: 2, include_input: false },
            Some(Activation::Sigmoid),
            Some(cam(CamMode::Channel { volume_norm: true }, vec![4], 1, true, vec![0])),
        ),
        spec(2, 1, EncodingSpec::Fourier { frequencies: 3, sigma: 1.0 }, None, None),
    ]
}

// ---------------------------------------------------------------------------
// Modulation equations, transcribed loop by loop

/// Piecewise-(bi)linear read of a `[d1 (, d2)] × k` node table, nodes at
/// `i / (d − 1)`.
#[allow(clippy::needless_range_loop)]
pub fn oracle_interp(table: &[f64], res: &[usize], k: usize, at: &[f64]) -> Vec<f64> {
    fn cell(x: f64, d: usize) -> (usize, f64) {
        let s = x.clamp(0.0, 1.0) * (d - 1) as f64;
        let mut i = s.floor() as usize;
        if i > d - 2 {
            i = d - 2;
        }
        (i, s - i as f64)
    }
    let mut out = vec![0.0; k];
    if res.len() == 1 {
        let (i, t) = cell(at[0], res[0]);
        for c in 0..k {
            out[c] = (1.0 - t) * table[i * k + c] + t * table[(i + 1) * k + c];
        }
    } else {
        let (i, s) = cell(at[0], res[0]);
        let (j, t) = cell(at[1], res[1]);
        let node = |a: usize, b: usize, c: usize| table[(a * res[1] + b) * k + c];
        for c in 0..k {
            out[c] = (1.0 - s) * (1.0 - t) * node(i, j, c)
                + s * (1.0 - t) * node(i + 1, j, c)
                + (1.0 - s) * t * node(i, j + 1, c)
                + s * t * node(i + 1, j + 1, c);
        }
    }
    out
}

/// Modulated features for one unit: `γ (f − μ) / √(σ² + ε) + β`, or
/// `γ f + β` when unnormalized. `idx` lists the unit's flat indices.
fn modulate_unit(f: &[f64], idx: &[usize], gamma: f64, beta: f64, normalize: bool, eps: f64, out: &mut [f64]) {
    let m = idx.len() as f64;
    let mut mu = 0.0;
    for &i in idx {
        mu += f[i];
    }
    mu /= m;
    let mut var = 0.0;
    for &i in idx {
        var += (f[i] - mu) * (f[i] - mu);
    }
    var /= m;
    for &i in idx {
        out[i] = if normalize {
            gamma * (f[i] - mu) / (var + eps).sqrt() + beta
        } else {
            gamma * f[i] + beta
        };
    }
}

/// Reference output of a modulation layer. `coords` holds one selected
/// coordinate row per unit sample (row, ray or plane stack).
pub fn oracle_cam(layer: &CamLayer<f64>, f: &Tensor<f64>, coords: &Tensor<f64>) -> Vec<f64> {
    let res = layer.gamma().resolution().to_vec();
    let k = layer.gamma().channels();
    let (g_tab, b_tab) = (layer.gamma().values().data(), layer.beta().values().data());
    let (fd, shape) = (f.data(), f.shape());
    let mut out = vec![0.0; fd.len()];
    let (norm, eps) = (layer.normalize(), layer.eps());
    let read = |n: usize| {
        let at = coords.row(n);
        (oracle_interp(g_tab, &res, k, at), oracle_interp(b_tab, &res, k, at))
    };
    match layer.mode() {
        CamMode::Scalar => {
            let c = shape[1];
            for n in 0..shape[0] {
                let (g, b) = read(n);
                let idx: Vec<usize> = (0..c).map(|j| n * c + j).collect();
                modulate_unit(fd, &idx, g[0], b[0], norm, eps, &mut out);
            }
        }
        CamMode::Ray => {
            let (s, c) = (shape[1], shape[2]);
            for n in 0..shape[0] {
                let (g, b) = read(n);
                let mut idx = Vec::new();
                for p in 0..s {
                    for j in 0..c {
                        idx.push((n * s + p) * c + j);
                    }
                }
                modulate_unit(fd, &idx, g[0], b[0], norm, eps, &mut out);
            }
        }
        CamMode::Channel { volume_norm } => {
            let (c, h, w) = (shape[1], shape[2], shape[3]);
            let at = |n: usize, ch: usize, y: usize, x: usize| ((n * c + ch) * h + y) * w + x;
            for n in 0..shape[0] {
                let (g, b) = read(n);
                let pick = |v: &[f64], ch: usize| if k == 1 { v[0] } else { v[ch] };
                if volume_norm {
                    // Shared statistics over the whole C×H×W volume.
                    let mut idx = Vec::new();
                    for ch in 0..c {
                        for y in 0..h {
                            for x in 0..w {
                                idx.push(at(n, ch, y, x));
                            }
                        }
                    }
                    let mut tmp = vec![0.0; fd.len()];
                    modulate_unit(fd, &idx, 1.0, 0.0, norm, eps, &mut tmp);
                    for ch in 0..c {
                        for y in 0..h {
                            for x in 0..w {
                                let i = at(n, ch, y, x);
                                out[i] = pick(&g, ch) * tmp[i] + pick(&b, ch);
                            }
                        }
                    }
                } else {
                    for ch in 0..c {
                        let mut idx = Vec::new();
                        for y in 0..h {
                            for x in 0..w {
                                idx.push(at(n, ch, y, x));
                            }
                        }
                        modulate_unit(fd, &idx, pick(&g, ch), pick(&b, ch), norm, eps, &mut out);
                    }
                }
            }
        }
    }
    out
}

/// Layer with random grids for the oracle sweep.
pub fn random_layer(
    r: &mut impl Rng,
    mode: CamMode,
    rank: usize,
    k: usize,
    normalize: bool,
) -> CamLayer<f64> {
    let res: Vec<usize> = (0..rank).map(|_| r.random_range(2..=4)).collect();
    let nodes: usize = res.iter().product();
    let gamma = ModulationGrid::from_values(res.clone(), k, uniform(r, vec![nodes * k], -2.0, 2.0)).unwrap();
    let beta = ModulationGrid::from_values(res, k, uniform(r, vec![nodes * k], -2.0, 2.0)).unwrap();
    CamLayer::from_grids(mode, gamma, beta, (0..rank).collect(), normalize, 1e-5).unwrap()
}

/// Worst normwise relative error of every modulation mode against
/// [`oracle_cam`] over all feature shapes with extents in `1..=4`.
pub fn cam_oracle_sweep(seed: u64) -> (usize, f64) {
    use camfield::cam::{cam_channel, cam_ray, cam_scalar};
    let mut r = rng(seed);
    let (mut cases, mut worst) = (0usize, 0.0f64);
    let mut score = |lib: &Tensor<f64>, oracle: &[f64]| {
        let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let diff = lib.data().iter().zip(oracle).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(diff / scale);
        cases += 1;
    };
    let extents = 1..=4usize;
    for normalize in [true, false] {
        for n in extents.clone() {
            for c in extents.clone() {
                for rank in [1, 2] {
                    let layer = random_layer(&mut r, CamMode::Scalar, rank, 1, normalize);
                    let f = uniform(&mut r, vec![n, c], -2.0, 2.0);
                    let x = uniform(&mut r, vec![n, rank], 0.0, 1.0);
                    score(&cam_scalar(&layer, &f, &x).unwrap(), &oracle_cam(&layer, &f, &x));
                }
                for s in extents.clone() {
                    let rank = r.random_range(1..=2);
                    let layer = random_layer(&mut r, CamMode::Ray, rank, 1, normalize);
                    let f = uniform(&mut r, vec![n, s, c], -2.0, 2.0);
                    let x = uniform(&mut r, vec![n, rank], 0.0, 1.0);
                    score(&cam_ray(&layer, &f, &x).unwrap(), &oracle_cam(&layer, &f, &x));
                }
                for h in extents.clone() {
                    for w in extents.clone() {
                        for volume_norm in [false, true] {
                            for k in [1, c] {
                                let rank = r.random_range(1..=2);
                                let layer =
                                    random_layer(&mut r, CamMode::Channel { volume_norm }, rank, k, normalize);
                                let f = uniform(&mut r, vec![n, c, h, w], -2.0, 2.0);
                                let x = uniform(&mut r, vec![n, rank], 0.0, 1.0);
                                score(&cam_channel(&layer, &f, &x).unwrap(), &oracle_cam(&layer, &f, &x));
                            }
                        }
                    }
                }
            }
        }
    }
    (cases, worst)
}

// ---------------------------------------------------------------------------
// Spectra

/// `X[u, v] = Σ_y Σ_x f[y, x] e^{−2πi (uy/H + vx/W)}`, unshifted.
pub fn naive_dft2(plane: &[f64], h: usize, w: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(h * w);
    for u in 0..h {
        for v in 0..w {
            let (mut re, mut im) = (0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let phase = -2.0
                        * std::f64::consts::PI
                        * ((u * y) as f64 / h as f64 + (v * x) as f64 / w as f64);
                    re += plane[y * w + x] * phase.cos();
                    im += plane[y * w + x] * phase.sin();
                }
            }
            out.push((re, im));
        }
    }
    out
}
