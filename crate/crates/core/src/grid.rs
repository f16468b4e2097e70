//! Learnable modulation grids.
//!
//! A grid is a piecewise-linear (rank 1) or piecewise-bilinear (rank 2)
//! function on the closed unit interval/square. Node `i` of an axis with
//! resolution `d` sits at coordinate `i / (d - 1)`, so the end nodes coincide
//! with the domain boundary. Queries are clamped, never wrapped.

use std::marker::PhantomData;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tensor::{Real, Tape, Tensor, Var};

/// Coordinates this far outside `[0, 1]` are clamped; anything further is
/// rejected as a caller bug.
pub const DOMAIN_TOLERANCE: f64 = 1e-6;

/// Scaled coordinates within this relative distance of a node snap onto it,
/// so that single-precision node coordinates reproduce node values exactly.
const NODE_SNAP: f64 = 4.0 * f32::EPSILON as f64;
const OFFSET_SCALE: f64 = (1u64 << 26) as f64;

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationGrid<T: Real = f32> {
    resolution: Vec<usize>,
    channels: usize,
    /// Shape `[d1, (d2,) channels]`.
    values: Tensor<T>,
}

impl<T: Real> ModulationGrid<T> {
    /// Grid with every value set to `init`.
    pub fn new(resolution: Vec<usize>, channels: usize, init: f64) -> Result<Self> {
        Self::check_layout(&resolution, channels)?;
        let mut shape = resolution.clone();
        shape.push(channels);
        Ok(Self {
            resolution,
            channels,
            values: Tensor::full(shape, T::of(init)),
        })
    }

    pub fn from_values(resolution: Vec<usize>, channels: usize, values: Tensor<T>) -> Result<Self> {
        Self::check_layout(&resolution, channels)?;
        let mut shape = resolution.clone();
        shape.push(channels);
        if values.shape() != &shape[..] {
            // Accept any layout with the right element count.
            let values = values.reshape(shape)?;
            return Self::from_values(resolution, channels, values);
        }
        if !values.all_finite() {
            return Err(Error::NonFinite {
                what: "grid value".into(),
                location: "ModulationGrid::from_values".into(),
            });
        }
        Ok(Self {
            resolution,
            channels,
            values,
        })
    }

    fn check_layout(resolution: &[usize], channels: usize) -> Result<()> {
        if !(1..=2).contains(&resolution.len()) {
            return Err(Error::invalid(format!(
                "grid rank must be 1 or 2, got {}",
                resolution.len()
            )));
        }
        if let Some(&d) = resolution.iter().find(|&&d| d < 2) {
            return Err(Error::invalid(format!("grid resolution {d} < 2")));
        }
        if channels == 0 {
            return Err(Error::invalid("grid needs at least one channel"));
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.resolution.len()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn node_count(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn values(&self) -> &Tensor<T> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Tensor<T> {
        &mut self.values
    }

    /// Values as a `[nodes × channels]` table, the layout the interpolation
    /// op gathers from.
    pub fn table(&self) -> Tensor<T> {
        self.values
            .reshape(vec![self.node_count(), self.channels])
            .expect("grid layout")
    }

    pub fn cast<U: Real>(&self) -> ModulationGrid<U> {
        ModulationGrid {
            resolution: self.resolution.clone(),
            channels: self.channels,
            values: self.values.cast(),
        }
    }

    /// Interpolation weights for `coords` of shape `[N × rank]` (or `[N]` for
    /// rank 1).
    pub fn weights(&self, coords: &Tensor<T>) -> Result<InterpWeights<T>> {
        let rank = self.rank();
        let n = match (coords.shape(), rank) {
            ([n], 1) => *n,
            ([n, d], r) if *d == r => *n,
            _ => {
                return Err(Error::ShapeMismatch {
                    op: "grid query",
                    lhs: coords.shape().to_vec(),
                    rhs: self.resolution.clone(),
                })
            }
        };
        let per_query = 1 << rank;
        let mut index = Vec::with_capacity(n * per_query);
        let mut weight = Vec::with_capacity(n * per_query);
        let cd = coords.data();
        for q in 0..n {
            if rank == 1 {
                let (i, t) = axis_position(cd[q].f64(), self.resolution[0])?;
                index.extend([i as u32, (i + 1) as u32]);
                weight.extend([1.0 - t, t]);
            } else {
                let (i, tx) = axis_position(cd[2 * q].f64(), self.resolution[0])?;
                let (j, ty) = axis_position(cd[2 * q + 1].f64(), self.resolution[1])?;
                let d2 = self.resolution[1];
                let node = |a: usize, b: usize| (a * d2 + b) as u32;
                index.extend([node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1)]);
                weight.extend([(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty]);
            }
        }
        Ok(InterpWeights {
            queries: n,
            per_query,
            index: Arc::new(index),
            weight: Arc::new(weight),
            real: PhantomData,
        })
    }

    /// Interpolated values `[N × channels]` (no tape).
    pub fn interp(&self, coords: &Tensor<T>) -> Result<Tensor<T>> {
        let w = self.weights(coords)?;
        let tape = Tape::new();
        let table = tape.constant(self.table());
        Ok(w.apply(table)?.value())
    }
}

/// Sparse interpolation stencil: `per_query` (node, weight) pairs per query.
#[derive(Debug, Clone)]
pub struct InterpWeights<T: Real = f32> {
    queries: usize,
    per_query: usize,
    index: Arc<Vec<u32>>,
    weight: Arc<Vec<f64>>,
    real: PhantomData<T>,
}

impl<T: Real> InterpWeights<T> {
    pub fn queries(&self) -> usize {
        self.queries
    }

    /// Touched nodes and their weights for query `q`, zero weights dropped.
    pub fn stencil(&self, q: usize) -> Vec<(usize, T)> {
        let lo = q * self.per_query;
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.per_query);
        for j in lo..lo + self.per_query {
            let (node, w) = (self.index[j] as usize, self.weight[j]);
            if w == 0.0 {
                continue;
            }
            match out.iter_mut().find(|(n, _)| *n == node) {
                Some(entry) => entry.1 += w,
                None => out.push((node, w)),
            }
        }
        out.into_iter().map(|(n, w)| (n, T::of(w))).collect()
    }

    /// Records the interpolation of `table` (`[nodes × k]`) on its tape.
    pub fn apply<'t>(&self, table: Var<'t, T>) -> Result<Var<'t, T>> {
        table.gather_weighted(Arc::clone(&self.index), Arc::clone(&self.weight), self.per_query)
    }
}

/// Cell index and fractional offset of `x` on an axis with `d` nodes.
fn axis_position(x: f64, d: usize) -> Result<(usize, f64)> {
    if !(-DOMAIN_TOLERANCE..=1.0 + DOMAIN_TOLERANCE).contains(&x) {
        return Err(Error::OutOfDomain { value: x });
    }
    let mut s = x.clamp(0.0, 1.0) * (d - 1) as f64;
    let nearest = s.round();
    if (s - nearest).abs() <= NODE_SNAP * (1.0 + s) {
        s = nearest;
    }
    let i = (s.floor() as usize).min(d - 2);
    // Offsets on a 2^-26 lattice keep every weight and bilinear product exact,
    // so constant grids reproduce their value bit for bit.
    let t = ((s - i as f64) * OFFSET_SCALE).round() / OFFSET_SCALE;
    Ok((i, t))
}

/// Linear interpolation of a rank-1 grid at `x` (`[N]` or `[N × 1]`).
pub fn interp1<T: Real>(grid: &ModulationGrid<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    if grid.rank() != 1 {
        return Err(Error::invalid("interp1 needs a rank-1 grid"));
    }
    grid.interp(x)
}

/// Bilinear interpolation of a rank-2 grid at `xy` (`[N × 2]`).
pub fn interp2<T: Real>(grid: &ModulationGrid<T>, xy: &Tensor<T>) -> Result<Tensor<T>> {
    if grid.rank() != 2 {
        return Err(Error::invalid("interp2 needs a rank-2 grid"));
    }
    grid.interp(xy)
}

/// Per query, the touched flat node indices and their interpolation weights.
/// These are exactly the gradients of the interpolated value with respect to
/// the node values.
pub fn grid_grad_weights<T: Real>(
    grid: &ModulationGrid<T>,
    coords: &Tensor<T>,
) -> Result<Vec<Vec<(usize, T)>>> {
    let w = grid.weights(coords)?;
    Ok((0..w.queries()).map(|q| w.stencil(q)).collect())
}
