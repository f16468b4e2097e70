//! Broadcast iteration. Shapes are aligned on trailing dimensions; every
//! traversal is split into contiguous runs over the innermost coalesced
//! dimension so the hot loops stay branch-free.

use super::{Real, Tensor};
use crate::error::{Error, Result};

pub(crate) fn broadcast_shapes(a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i < rank - a.len() { 1 } else { a[i - (rank - a.len())] };
        let db = if i < rank - b.len() { 1 } else { b[i - (rank - b.len())] };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => {
                return Err(Error::ShapeMismatch {
                    op: "broadcast",
                    lhs: a.to_vec(),
                    rhs: b.to_vec(),
                })
            }
        };
    }
    Ok(out)
}

/// Row-major strides of `shape` expressed against `out`: zero for missing or
/// broadcast dimensions.
fn aligned_strides(shape: &[usize], out: &[usize]) -> Vec<usize> {
    let offset = out.len() - shape.len();
    let mut strides = vec![0; out.len()];
    let mut acc = 1;
    for i in (0..shape.len()).rev() {
        if shape[i] != 1 {
            strides[i + offset] = acc;
        }
        acc *= shape[i];
    }
    strides
}

/// Drops unit dimensions and merges neighbours that are contiguous for every
/// operand.
fn coalesce<const K: usize>(out: &[usize], strides: [Vec<usize>; K]) -> (Vec<usize>, [Vec<usize>; K]) {
    let mut dims: Vec<usize> = Vec::new();
    let mut st: [Vec<usize>; K] = std::array::from_fn(|_| Vec::new());
    for (i, &d) in out.iter().enumerate() {
        if d == 1 {
            continue;
        }
        if let Some(&last) = dims.last() {
            let mergeable = (0..K).all(|k| st[k][st[k].len() - 1] == strides[k][i] * d);
            if mergeable {
                let n = dims.len();
                dims[n - 1] = last * d;
                for k in 0..K {
                    let m = st[k].len();
                    st[k][m - 1] = strides[k][i];
                }
                continue;
            }
        }
        dims.push(d);
        for k in 0..K {
            st[k].push(strides[k][i]);
        }
    }
    (dims, st)
}

/// Calls `f(out_offset, operand_offsets, run_len, operand_inner_strides)` for
/// every contiguous run of the row-major output. Inner strides are 0 or 1.
pub(crate) fn for_each_run<const K: usize>(
    out: &[usize],
    strides: [Vec<usize>; K],
    mut f: impl FnMut(usize, [usize; K], usize, [usize; K]),
) {
    if out.contains(&0) {
        return;
    }
    let (dims, st) = coalesce(out, strides);
    if dims.is_empty() {
        f(0, [0; K], 1, [0; K]);
        return;
    }
    let r = dims.len();
    let inner = dims[r - 1];
    let inner_st: [usize; K] = std::array::from_fn(|k| st[k][r - 1]);
    let outer = &dims[..r - 1];
    let total: usize = outer.iter().product();
    let mut idx = vec![0usize; r - 1];
    let mut offs = [0usize; K];
    for o in 0..total {
        f(o * inner, offs, inner, inner_st);
        for d in (0..r - 1).rev() {
            idx[d] += 1;
            for k in 0..K {
                offs[k] += st[k][d];
            }
            if idx[d] < outer[d] {
                break;
            }
            for k in 0..K {
                offs[k] -= st[k][d] * outer[d];
            }
            idx[d] = 0;
        }
    }
}

pub(crate) fn zip_broadcast<T: Real>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    f: impl Fn(T, T) -> T,
) -> Result<Tensor<T>> {
    let out_shape = broadcast_shapes(a.shape(), b.shape())?;
    let n: usize = out_shape.iter().product();
    let (ad, bd) = (a.data(), b.data());
    if a.shape() == b.shape() {
        let out = ad.iter().zip(bd).map(|(&x, &y)| f(x, y)).collect();
        return Tensor::new(out_shape, out);
    }
    let mut out = vec![T::zero(); n];
    let strides = [
        aligned_strides(a.shape(), &out_shape),
        aligned_strides(b.shape(), &out_shape),
    ];
    for_each_run(&out_shape, strides, |o, [ao, bo], len, [ia, ib]| {
        let dst = &mut out[o..o + len];
        match (ia, ib) {
            (1, 1) => {
                for ((d, &x), &y) in dst.iter_mut().zip(&ad[ao..ao + len]).zip(&bd[bo..bo + len]) {
                    *d = f(x, y);
                }
            }
            (1, _) => {
                let y = bd[bo];
                for (d, &x) in dst.iter_mut().zip(&ad[ao..ao + len]) {
                    *d = f(x, y);
                }
            }
            (_, 1) => {
                let x = ad[ao];
                for (d, &y) in dst.iter_mut().zip(&bd[bo..bo + len]) {
                    *d = f(x, y);
                }
            }
            _ => dst.fill(f(ad[ao], bd[bo])),
        }
    });
    Tensor::new(out_shape, out)
}

/// Sums `grad` (laid out as `from`) down to the broadcast-compatible `target`.
/// Accumulation runs in double precision.
pub(crate) fn reduce_to_shape<T: Real>(grad: &[T], from: &[usize], target: &[usize]) -> Vec<T> {
    let n: usize = target.iter().product();
    if from == target {
        return grad.to_vec();
    }
    let mut acc = vec![0.0f64; n];
    for_each_run(from, [aligned_strides(target, from)], |o, [to], len, [it]| {
        let src = &grad[o..o + len];
        if it == 1 {
            for (a, &g) in acc[to..to + len].iter_mut().zip(src) {
                *a += g.f64();
            }
        } else {
            acc[to] += src.iter().map(|g| g.f64()).sum::<f64>();
        }
    });
    acc.into_iter().map(T::of).collect()
}

/// For every element of `from`, the flat index of the slot it reduces into
/// when `from` is summed down to `target`.
pub(crate) fn reduction_slots(from: &[usize], target: &[usize]) -> Vec<u32> {
    let n: usize = from.iter().product();
    let mut slots = vec![0u32; n];
    for_each_run(from, [aligned_strides(target, from)], |o, [to], len, [it]| {
        for (i, s) in slots[o..o + len].iter_mut().enumerate() {
            *s = (to + i * it) as u32;
        }
    });
    slots
}

/// Expands `data` (laid out as `from`) to the larger shape `to`.
pub(crate) fn broadcast_to<T: Real>(data: &[T], from: &[usize], to: &[usize]) -> Vec<T> {
    if from == to {
        return data.to_vec();
    }
    let n: usize = to.iter().product();
    let mut out = vec![T::zero(); n];
    for_each_run(to, [aligned_strides(from, to)], |o, [so], len, [is]| {
        let dst = &mut out[o..o + len];
        if is == 1 {
            dst.copy_from_slice(&data[so..so + len]);
        } else {
            dst.fill(data[so]);
        }
    });
    out
}
