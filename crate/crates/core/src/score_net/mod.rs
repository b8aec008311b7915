//! Score estimation for prediction ensembles.

mod checkpoint;
mod network;
mod train;
mod whiten;

pub use checkpoint::{decode as decode_checkpoint, encode as encode_checkpoint};
pub use network::{Activation, ScoreNetwork};
pub use train::{dsm_loss, loss_gradient, train_score, AdamConfig, LrSchedule, TrainConfig};
pub use whiten::{whiten, Whitening, DEGENERATE_STD};
