//! Neural fields with coordinate-aware modulation.
//!
//! An MLP's intermediate features are standardized and then scaled and
//! shifted by scalars read, through linear/bilinear interpolation, from small
//! learnable grids indexed by the input coordinates. The crate contains
//! everything needed to train and analyse such models on a CPU: a tensor type
//! with reverse-mode autodiff, encodings and layers, the modulation grids and
//! layer, Adam with step decay, task harnesses and the diagnostic tools.

pub mod analysis;
pub mod cam;
pub mod cli;
pub mod error;
pub mod grid;
pub mod nn;
pub mod optim;
pub mod tasks;
pub mod tensor;

pub use error::{Error, Result};

// Training allocates and frees many multi-megabyte tensors per step; the
// system allocator returns them to the OS each time and pays page faults on
// every reuse.
#[global_allocator]
static ALLOCATOR: mimalloc::MiMalloc = mimalloc::MiMalloc;
pub use tensor::{Real, Tape, Tensor, Var};
