//! Model assembly, training, evaluation and checkpoints.

mod checkpoint;
mod config;
mod eval;
mod model;
mod trainer;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, GCKP_MAGIC, GCKP_VERSION};
pub use config::{FilterOutput, HeadSpec, LayerSpec, ModelConfig};
pub use eval::{evaluate, write_confusion_csv, Evaluation};
pub use model::{build_model, Model};
pub use trainer::{train, write_epoch_log, EpochRecord, TrainingState};
