//! Configuration, checkpoints and the commands of the `camfield` binary.

pub mod checkpoint;
pub mod config;
pub mod run;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use config::{parse_config, ModelConfig, TaskKind, TrainConfig};
