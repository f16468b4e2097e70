//! Property checks, each a proptest run over its own strategy.

use camfield::analysis::{dft2_complex, freq_error_map};
use camfield::cam::{CamLayer, CamMode};
use camfield::cli::{decode_checkpoint, encode_checkpoint, parse_config, TaskKind, TrainConfig};
use camfield::grid::{grid_grad_weights, ModulationGrid};
use camfield::nn::{EncodingSpec, FieldModel, Stage};
use camfield::optim::{dequantize, quantize_minmax, Adam, LrSchedule, ParamGroup};
use camfield::tasks::Image;
use camfield::{Tape, Tensor};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use super::{naive_dft2, rng, small_model_specs, uniform};

type Check = fn(u32) -> Result<(), String>;

/// Every invariant by name.
pub const ALL: &[(&str, Check)] = &[
    ("backward_linearity", backward_linearity),
    ("broadcast_gradient_shape", broadcast_gradient_shape),
    ("interp_partition_of_unity", interp_partition_of_unity),
    ("interp_node_exactness", interp_node_exactness),
    ("interp_gradient_is_stencil", interp_gradient_is_stencil),
    ("cam_standardization", cam_standardization),
    ("cam_identity_start", cam_identity_start),
    ("cam_affine_response", cam_affine_response),
    ("cam_gradient_completeness", cam_gradient_completeness),
    ("model_forward_purity", model_forward_purity),
    ("identity_cam_is_plain_mlp", identity_cam_is_plain_mlp),
    ("adam_sign_symmetry", adam_sign_symmetry),
    ("quantization_error_bound", quantization_error_bound),
    ("dft_parseval", dft_parseval),
    ("dft_direct_oracle", dft_direct_oracle),
    ("hf_ratio_constant_shift", hf_ratio_constant_shift),
    ("checkpoint_round_trip", checkpoint_round_trip),
    ("config_round_trip", config_round_trip),
];

pub fn run(name: &str, cases: u32) -> Result<(), String> {
    let (_, check) = ALL.iter().find(|(n, _)| *n == name).unwrap_or_else(|| panic!("no invariant {name}"));
    check(cases)
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn prop<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn fail(msg: impl Into<String>) -> TestCaseError {
    TestCaseError::fail(msg.into())
}

fn ok<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> Result<T, TestCaseError> {
    r.map_err(|e| fail(e.to_string()))
}

fn backward_linearity(cases: u32) -> Result<(), String> {
    prop(cases, (any::<u64>(), -2.0f64..2.0, -2.0f64..2.0), |(seed, alpha, beta)| {
        let mut r = rng(seed);
        let x = uniform(&mut r, vec![3, 4], -2.0, 2.0);
        let w = uniform(&mut r, vec![4, 2], -2.0, 2.0);
        let grad = |a: f64, b: f64| -> Result<Tensor<f64>, TestCaseError> {
            let tape = Tape::<f64>::new();
            let xv = tape.leaf(x.clone());
            let f = ok(ok(xv.sin().matmul(tape.constant(w.clone())))?.sum_all())?;
            let g = ok(ok(xv.square().mean(&[1], false))?.sum_all())?;
            let loss = ok(f.affine(a, 0.0).add(g.affine(b, 0.0)))?;
            Ok(ok(loss.backward())?.get_or_zero(&xv))
        };
        let (gf, gg, gl) = (grad(1.0, 0.0)?, grad(0.0, 1.0)?, grad(alpha, beta)?);
        for ((l, f), g) in gl.data().iter().zip(gf.data()).zip(gg.data()) {
            let want = alpha * f + beta * g;
            prop_assert!((l - want).abs() <= 1e-12 * (1.0 + want.abs()), "{l} vs {want}");
        }
        Ok(())
    })
}

fn broadcast_gradient_shape(cases: u32) -> Result<(), String> {
    let shape = prop::collection::vec(1usize..4, 1..4);
    prop(cases, (shape, any::<u64>()), |(shape, seed)| {
        let mut r = rng(seed);
        // Drop some leading axes and squeeze random others to 1.
        let lead = (seed % shape.len() as u64) as usize;
        let mask = uniform(&mut r, vec![shape.len()], 0.0, 1.0);
        let small: Vec<usize> = shape
            .iter()
            .zip(mask.data())
            .skip(lead)
            .map(|(&d, &m)| if m < 0.5 { 1 } else { d })
            .collect();
        let a = uniform(&mut r, shape.clone(), -2.0, 2.0);
        let b = uniform(&mut r, small, -2.0, 2.0);
        let tape = Tape::<f64>::new();
        let (av, bv) = (tape.leaf(a.clone()), tape.leaf(b.clone()));
        let g = ok(ok(ok(av.mul(bv))?.sum_all())?.backward())?;
        let (ga, gb) = (g.get_or_zero(&av), g.get_or_zero(&bv));
        prop_assert_eq!(ga.shape(), a.shape());
        prop_assert_eq!(gb.shape(), b.shape());
        // Each element of `a` lands in exactly one slot of ∂/∂b.
        let total: f64 = gb.data().iter().sum();
        let want: f64 = a.data().iter().sum();
        prop_assert!((total - want).abs() < 1e-9, "{total} vs {want}");
        Ok(())
    })
}

fn grid_strategy() -> impl Strategy<Value = (Vec<usize>, usize, u64)> {
    (prop::collection::vec(2usize..9, 1..=2), 1usize..4, any::<u64>())
}

fn random_grid(res: &[usize], k: usize, seed: u64) -> ModulationGrid<f64> {
    let nodes: usize = res.iter().product();
    ModulationGrid::from_values(res.to_vec(), k, uniform(&mut rng(seed), vec![nodes * k], -2.0, 2.0)).unwrap()
}

fn interp_partition_of_unity(cases: u32) -> Result<(), String> {
    prop(cases, grid_strategy(), |(res, k, seed)| {
        let grid = random_grid(&res, k, seed);
        let coords = uniform(&mut rng(seed ^ 1), vec![16, res.len()], 0.0, 1.0);
        let stencils = ok(grid_grad_weights(&grid, &coords))?;
        let values = ok(grid.interp(&coords))?;
        let table = grid.values().data();
        for (q, st) in stencils.iter().enumerate() {
            let sum: f64 = st.iter().map(|(_, w)| w).sum();
            prop_assert!((sum - 1.0).abs() < 1e-6, "weights sum to {sum}");
            prop_assert!(st.iter().all(|&(_, w)| w >= 0.0));
            for c in 0..k {
                let touched: Vec<f64> = st.iter().map(|&(n, _)| table[n * k + c]).collect();
                let (lo, hi) = touched.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
                let v = values.data()[q * k + c];
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "{v} outside [{lo}, {hi}]");
            }
        }
        Ok(())
    })
}

fn interp_node_exactness(cases: u32) -> Result<(), String> {
    prop(cases, grid_strategy(), |(res, k, seed)| {
        let grid: ModulationGrid<f32> = random_grid(&res, k, seed).cast();
        let nodes: Vec<Vec<usize>> = if res.len() == 1 {
            (0..res[0]).map(|i| vec![i]).collect()
        } else {
            (0..res[0]).flat_map(|i| (0..res[1]).map(move |j| vec![i, j])).collect()
        };
        let coords: Vec<f32> = nodes
            .iter()
            .flat_map(|ix| ix.iter().zip(&res).map(|(&i, &d)| i as f32 / (d - 1) as f32).collect::<Vec<_>>())
            .collect();
        let coords = ok(Tensor::new(vec![nodes.len(), res.len()], coords))?;
        let out = ok(grid.interp(&coords))?;
        let table = grid.values().data();
        for (q, ix) in nodes.iter().enumerate() {
            let flat = if res.len() == 1 { ix[0] } else { ix[0] * res[1] + ix[1] };
            for c in 0..k {
                prop_assert_eq!(out.data()[q * k + c], table[flat * k + c], "node {:?}", ix);
            }
        }
        Ok(())
    })
}

fn interp_gradient_is_stencil(cases: u32) -> Result<(), String> {
    prop(cases, grid_strategy(), |(res, k, seed)| {
        let grid = random_grid(&res, k, seed);
        let coords = uniform(&mut rng(seed ^ 2), vec![5, res.len()], 0.0, 1.0);
        let stencils = ok(grid_grad_weights(&grid, &coords))?;
        for (q, st) in stencils.iter().enumerate() {
            let one = ok(coords.select_rows(&[q]))?;
            let tape = Tape::<f64>::new();
            let table = tape.leaf(grid.table());
            let out = ok(ok(grid.weights(&one))?.apply(table))?;
            let g = ok(ok(out.sum_all())?.backward())?.get_or_zero(&table);
            let mut want = vec![0.0; g.numel()];
            for &(n, w) in st {
                for c in 0..k {
                    want[n * k + c] = w;
                }
            }
            prop_assert_eq!(g.data(), &want[..]);
        }
        Ok(())
    })
}

fn cam_case() -> impl Strategy<Value = (u8, Vec<usize>, u64)> {
    (0u8..3, prop::collection::vec(2usize..5, 4), any::<u64>())
}

/// A layer of mode `m` and a matching non-degenerate feature tensor.
fn cam_setup(m: u8, ext: &[usize], seed: u64, normalize: bool, eps: f64) -> (CamLayer<f64>, Tensor<f64>, Tensor<f64>) {
    let mut r = rng(seed);
    let (mode, shape, k) = match m {
        0 => (CamMode::Scalar, vec![ext[0], ext[1] + 2], 1),
        1 => (CamMode::Ray, vec![ext[0], ext[1], ext[2]], 1),
        _ => (CamMode::Channel { volume_norm: seed.is_multiple_of(2) }, ext.to_vec(), if seed.is_multiple_of(3) { 1 } else { ext[1] }),
    };
    let layer = CamLayer::new(mode, vec![3, 3], k, vec![0, 1], normalize, eps).unwrap();
    let f = uniform(&mut r, shape.clone(), -2.0, 2.0);
    let x = uniform(&mut r, vec![shape[0], 2], 0.0, 1.0);
    (layer, f, x)
}

fn unit_len(mode: CamMode, shape: &[usize]) -> usize {
    match mode {
        CamMode::Scalar => shape[1],
        CamMode::Ray => shape[1] * shape[2],
        CamMode::Channel { volume_norm: true } => shape[1] * shape[2] * shape[3],
        CamMode::Channel { volume_norm: false } => shape[2] * shape[3],
    }
}

fn cam_standardization(cases: u32) -> Result<(), String> {
    prop(cases, cam_case(), |(m, ext, seed)| {
        let (layer, f, x) = cam_setup(m, &ext, seed, true, 1e-12);
        let out = ok(layer.forward(&f, &x))?;
        let len = unit_len(layer.mode(), f.shape());
        for unit in out.data().chunks(len) {
            let mean = unit.iter().sum::<f64>() / len as f64;
            let var = unit.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len as f64;
            prop_assert!(mean.abs() < 1e-5, "mean {mean}");
            prop_assert!((var - 1.0).abs() < 1e-3, "variance {var}");
        }
        Ok(())
    })
}

fn cam_identity_start(cases: u32) -> Result<(), String> {
    prop(cases, cam_case(), |(m, ext, seed)| {
        let (layer, f, x) = cam_setup(m, &ext, seed, false, 1e-5);
        prop_assert_eq!(ok(layer.forward(&f, &x))?, f.clone());
        let (layer, f, x) = cam_setup(m, &ext, seed, true, 1e-5);
        let tape = Tape::<f64>::new();
        let axes: Vec<usize> = match layer.mode() {
            CamMode::Scalar => vec![1],
            CamMode::Ray | CamMode::Channel { volume_norm: true } => (1..f.rank()).collect(),
            CamMode::Channel { volume_norm: false } => vec![2, 3],
        };
        let plain = ok(tape.constant(f.clone()).standardize(&axes, 1e-5))?.value();
        prop_assert_eq!(ok(layer.forward(&f, &x))?, plain);
        Ok(())
    })
}

fn cam_affine_response(cases: u32) -> Result<(), String> {
    prop(cases, (cam_case(), any::<bool>()), |((m, ext, seed), normalize)| {
        let (base, f, x) = cam_setup(m, &ext, seed, normalize, 1e-5);
        let mut layer = base.clone();
        let mut r = rng(seed ^ 3);
        for v in layer.gamma_mut().values_mut().data_mut() {
            *v = uniform(&mut r, vec![1], -2.0, 2.0).data()[0];
        }
        for v in layer.beta_mut().values_mut().data_mut() {
            *v = uniform(&mut r, vec![1], -2.0, 2.0).data()[0];
        }
        let plain = ok(base.forward(&f, &x))?;
        let out = ok(layer.forward(&f, &x))?;
        let g = ok(layer.gamma().interp(&x))?;
        let b = ok(layer.beta().interp(&x))?;
        let k = layer.gamma().channels();
        let shape = f.shape();
        let per_sample = f.numel() / shape[0];
        for (i, (&o, &p)) in out.data().iter().zip(plain.data()).enumerate() {
            let n = i / per_sample;
            let c = match layer.mode() {
                CamMode::Channel { .. } if k > 1 => (i % per_sample) / (shape[2] * shape[3]),
                _ => 0,
            };
            let want = g.data()[n * k + c] * p + b.data()[n * k + c];
            prop_assert!((o - want).abs() < 1e-12 * (1.0 + want.abs()), "{o} vs {want}");
        }
        Ok(())
    })
}

fn cam_gradient_completeness(cases: u32) -> Result<(), String> {
    prop(cases, (cam_case(), any::<bool>()), |((m, ext, seed), normalize)| {
        let (layer, f, x) = cam_setup(m, &ext, seed, normalize, 1e-5);
        let tape = Tape::<f64>::new();
        let (gv, bv) = (tape.leaf(layer.gamma().table()), tape.leaf(layer.beta().table()));
        let out = ok(layer.apply(tape.constant(f.clone()), gv, bv, &x))?;
        let w = uniform(&mut rng(seed ^ 4), f.shape().to_vec(), 0.5, 1.5);
        let g = ok(ok(ok(out.mul(tape.constant(w)))?.sum_all())?.backward())?;
        let stencils = ok(grid_grad_weights(layer.gamma(), &x))?;
        let k = layer.gamma().channels();
        let mut touched = vec![false; layer.gamma().node_count()];
        stencils.iter().flatten().for_each(|&(n, _)| touched[n] = true);
        for (name, grad) in [("gamma", g.get_or_zero(&gv)), ("beta", g.get_or_zero(&bv))] {
            for (node, &hit) in touched.iter().enumerate() {
                let row = &grad.data()[node * k..(node + 1) * k];
                if hit {
                    // A unit's standardized features sum to zero, so only β is
                    // guaranteed a nonzero gradient under a positive weighting.
                    if name == "beta" {
                        prop_assert!(row.iter().all(|&v| v != 0.0), "{name} node {node} has zero gradient");
                    }
                } else {
                    prop_assert!(row.iter().all(|&v| v == 0.0), "{name} node {node} untouched but {row:?}");
                }
            }
        }
        Ok(())
    })
}

fn model_strategy() -> impl Strategy<Value = (usize, u64)> {
    (0..small_model_specs().len(), any::<u64>())
}

fn perturbed_model(which: usize, seed: u64) -> FieldModel<f32> {
    let spec = &small_model_specs()[which];
    let mut model: FieldModel<f32> = spec.build(seed).unwrap();
    let mut r = rng(seed ^ 5);
    for p in model.params_mut() {
        for v in p.data_mut() {
            *v += uniform(&mut r, vec![1], -0.3, 0.3).data()[0] as f32;
        }
    }
    model
}

fn model_inputs(model: &FieldModel<f32>, seed: u64) -> Tensor<f32> {
    uniform(&mut rng(seed ^ 6), vec![12, model.input_dim()], 0.0, 1.0).cast()
}

fn model_forward_purity(cases: u32) -> Result<(), String> {
    prop(cases, model_strategy(), |(which, seed)| {
        let model = perturbed_model(which, seed);
        let x = model_inputs(&model, seed);
        let a = ok(model.predict(&x))?;
        let b = ok(model.clone().predict(&x))?;
        prop_assert_eq!(a, b);
        Ok(())
    })
}

fn identity_cam_is_plain_mlp(cases: u32) -> Result<(), String> {
    prop(cases, model_strategy(), |(which, seed)| {
        let mut model = perturbed_model(which, seed);
        for s in model.stages_mut() {
            if let Stage::Cam(c) = s {
                c.layer.set_normalize(false);
                c.layer.gamma_mut().values_mut().data_mut().fill(1.0);
                c.layer.beta_mut().values_mut().data_mut().fill(0.0);
            }
        }
        let plain_stages: Vec<Stage<f32>> =
            model.stages().iter().filter(|s| !matches!(s, Stage::Cam(_))).cloned().collect();
        let plain = ok(FieldModel::new(model.input_dim(), model.output_dim(), plain_stages))?;
        let x = model_inputs(&model, seed);
        prop_assert_eq!(ok(model.predict(&x))?, ok(plain.predict(&x))?);
        Ok(())
    })
}

fn adam_sign_symmetry(cases: u32) -> Result<(), String> {
    prop(cases, (any::<u64>(), 1usize..6), |(seed, steps)| {
        let mut r = rng(seed);
        let p0 = uniform(&mut r, vec![7], -2.0, 2.0);
        let mut a = Adam::<f64>::new([("p", ParamGroup::Network, 7)]);
        let mut b = a.clone();
        let (mut pa, mut pb) = (p0.clone(), p0.clone());
        for _ in 0..steps {
            let g = uniform(&mut r, vec![7], -2.0, 2.0);
            ok(a.step(&mut [&mut pa], std::slice::from_ref(&g), |_| 1e-2))?;
            ok(b.step(&mut [&mut pb], &[g.map(|v| -v)], |_| 1e-2))?;
        }
        for ((x, y), z) in pa.data().iter().zip(pb.data()).zip(p0.data()) {
            let (da, db) = (x - z, y - z);
            prop_assert!((da + db).abs() <= 1e-15 * (1.0 + z.abs()), "{da} vs {db}");
        }
        Ok(())
    })
}

fn quantization_error_bound(cases: u32) -> Result<(), String> {
    prop(cases, (any::<u64>(), prop::sample::select(vec![2u32, 4, 6, 8, 12]), 1usize..200), |(seed, bits, n)| {
        let x: Tensor<f32> = uniform(&mut rng(seed), vec![n], -3.0, 3.0).cast();
        let q = ok(quantize_minmax(&x, bits))?;
        let back: Tensor<f32> = ok(dequantize(&q))?;
        let bound = q.scale() / 2.0;
        for (a, b) in x.data().iter().zip(back.data()) {
            let err = (*a as f64 - *b as f64).abs();
            // Rounding the dequantized value back to f32 adds half an ulp.
            prop_assert!(err <= bound + (*a as f64).abs() * f32::EPSILON as f64, "{err} > {bound}");
        }
        Ok(())
    })
}

fn dft_parseval(cases: u32) -> Result<(), String> {
    prop(cases, (1usize..=64, 1usize..=64, any::<u64>()), |(h, w, seed)| {
        let x = uniform(&mut rng(seed), vec![h * w], -1.0, 1.0);
        let spec = ok(dft2_complex(x.data(), h, w))?;
        let time: f64 = x.data().iter().map(|v| v * v).sum();
        let freq: f64 = spec.iter().map(|c| c.norm_sqr()).sum::<f64>() / (h * w) as f64;
        prop_assert!((time - freq).abs() <= 1e-9 * time.max(1e-300), "{time} vs {freq}");
        Ok(())
    })
}

fn dft_direct_oracle(cases: u32) -> Result<(), String> {
    prop(cases, (1usize..=16, 1usize..=16, any::<u64>()), |(h, w, seed)| {
        let x = uniform(&mut rng(seed), vec![h * w], -1.0, 1.0);
        let got = ok(dft2_complex(x.data(), h, w))?;
        let want = naive_dft2(x.data(), h, w);
        let scale = want.iter().map(|(re, im)| re.hypot(*im)).fold(0.0f64, f64::max);
        for (g, (re, im)) in got.iter().zip(&want) {
            let err = (g.re - re).hypot(g.im - im);
            prop_assert!(err <= 1e-6 * scale.max(1e-300), "{h}×{w}: {err}");
        }
        Ok(())
    })
}

fn hf_ratio_constant_shift(cases: u32) -> Result<(), String> {
    prop(cases, (1usize..24, 1usize..24, prop::sample::select(vec![1usize, 3]), -0.3f64..0.3, any::<u64>()), |(h, w, c, shift, seed)| {
        let mut r = rng(seed);
        let a: Vec<f32> = uniform(&mut r, vec![h * w * c], 0.0, 0.6).data().iter().map(|&v| v as f32).collect();
        let b: Vec<f32> = uniform(&mut r, vec![h * w * c], 0.0, 0.6).data().iter().map(|&v| v as f32).collect();
        let shifted = |v: &[f32]| v.iter().map(|&x| x + shift as f32).collect::<Vec<_>>();
        let base = ok(freq_error_map(&ok(Image::new(h, w, c, a.clone()))?, &ok(Image::new(h, w, c, b.clone()))?))?;
        let moved = ok(freq_error_map(
            &ok(Image::new(h, w, c, shifted(&a)))?,
            &ok(Image::new(h, w, c, shifted(&b)))?,
        ))?;
        // Shifting both images leaves the error up to single-precision rounding.
        prop_assert!((base.high_ratio - moved.high_ratio).abs() < 1e-5, "{} vs {}", base.high_ratio, moved.high_ratio);
        Ok(())
    })
}

fn checkpoint_round_trip(cases: u32) -> Result<(), String> {
    prop(cases, model_strategy(), |(which, seed)| {
        let model = perturbed_model(which, seed);
        let bytes = encode_checkpoint(&model);
        let back = ok(decode_checkpoint(&bytes))?;
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(encode_checkpoint(&back), bytes);
        let x = model_inputs(&model, seed);
        let (a, b) = (ok(model.predict(&x))?, ok(back.predict(&x))?);
        prop_assert!(a.data().iter().zip(b.data()).all(|(p, q)| p.to_bits() == q.to_bits()));
        Ok(())
    })
}

fn config_strategy() -> impl Strategy<Value = TrainConfig> {
    let task = prop::sample::select(vec![
        TaskKind::Signal1d,
        TaskKind::ImageRegression,
        TaskKind::ImageGeneralization,
        TaskKind::SyntheticRay,
        TaskKind::SyntheticVideo,
    ]);
    (
        task,
        (2usize..6, 1usize..300, 0u8..3, 1usize..20, 0.5f64..20.0, any::<bool>()),
        (any::<bool>(), any::<bool>(), 1e-9f64..1e-2, 2usize..70, prop::sample::select(vec![None, Some(7usize), Some(4096)])),
        (1e-5f64..1e-1, prop::collection::vec(1usize..3000, 0..3), 0.05f64..0.9, any::<u64>(), prop::sample::select(vec![32u32, 8, 6])),
    )
        .prop_map(|(task, (layers, hidden, enc, freq, sigma, include), (cam, normalize, eps, res, batch), (lr, mut ms, factor, seed, bits))| {
            let mut c = TrainConfig::defaults(task);
            if task.is_image() {
                c.input = Some("data/natural.ppm".into());
            }
            c.model.layers = layers;
            c.model.hidden = hidden;
            c.model.encoding = match enc {
                0 => EncodingSpec::None,
                1 => EncodingSpec::Frequency { frequencies: freq, include_input: include },
                _ => EncodingSpec::Fourier { frequencies: freq, sigma },
            };
            c.model.cam = cam;
            c.model.normalize = normalize;
            c.model.eps = eps;
            c.model.placements = vec![0, layers - 2];
            c.model.placements.dedup();
            c.model.resolution = c.model.resolution.iter().map(|_| res).collect();
            c.batch = batch;
            ms.sort_unstable();
            ms.dedup();
            c.schedule = LrSchedule::new(lr, lr * 10.0, ms, factor).unwrap();
            c.seed = seed;
            c.bits = bits;
            c.output = Some("runs/out".into());
            c
        })
}

fn config_round_trip(cases: u32) -> Result<(), String> {
    prop(cases, config_strategy(), |cfg| {
        ok(cfg.validate())?;
        let text = cfg.to_text();
        let back = ok(parse_config(&text))?;
        prop_assert_eq!(&back, &cfg, "{}", text);
        Ok(())
    })
}
